"""Screening network: conv blocks C1..Cn and a dropout/linear head.

Every conv block is conv3x3 -> ReLU -> 2x2 max pool, except the last, which
ends in a global max pool. The head is (dropout -> linear -> ReLU) repeated,
with the final linear producing one logit.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import layers

DEFAULT_CHANNELS = (32, 64, 128, 256, 512, 1024)
DEFAULT_HIDDEN = (512, 512)
DEFAULT_DROPOUT = (0.3, 0.5, 0.5)
INPUT_CHANNELS = {"phase": 1, "amplitude": 1, "complex": 2}


@dataclass(eq=False)
class NetParams:
    conv: list      # [(weight (oc, ic, 3, 3), bias (oc,)), ...]
    linear: list    # [(weight (out, in), bias (out,)), ...]
    input_mode: str = "phase"

    def __post_init__(self):
        if self.input_mode not in INPUT_CHANNELS:
            raise ValueError(f"unknown input mode {self.input_mode!r}")
        ic = INPUT_CHANNELS[self.input_mode]
        for w, b in self.conv:
            if w.ndim != 4 or w.shape[1:] != (ic, 3, 3) or b.shape != (w.shape[0],):
                raise ValueError(f"conv layer shape {w.shape} breaks the channel plan (expected {ic} inputs)")
            ic = w.shape[0]
        fan = ic
        for w, b in self.linear:
            if w.ndim != 2 or w.shape[1] != fan or b.shape != (w.shape[0],):
                raise ValueError(f"linear layer shape {w.shape} does not follow {fan} features")
            fan = w.shape[0]
        if fan != 1:
            raise ValueError("the head must end in a single output")

    @property
    def channels(self):
        return tuple(w.shape[0] for w, _ in self.conv)

    @property
    def in_channels(self):
        return INPUT_CHANNELS[self.input_mode]

    def tensors(self):
        out = []
        for w, b in self.conv + self.linear:
            out += [w, b]
        return out

    @classmethod
    def from_tensors(cls, tensors, input_mode="phase"):
        conv, linear = [], []
        for w, b in zip(tensors[0::2], tensors[1::2]):
            (conv if w.ndim == 4 else linear).append((np.array(w, float), np.array(b, float)))
        return cls(conv, linear, input_mode)

    def copy(self):
        return NetParams.from_tensors([t.copy() for t in self.tensors()], self.input_mode)

    def zeros_like(self):
        return NetParams.from_tensors([np.zeros_like(t) for t in self.tensors()], self.input_mode)


def init_params(seed, input_mode="phase", channels=DEFAULT_CHANNELS, hidden=DEFAULT_HIDDEN) -> NetParams:
    """He-normal conv weights, Xavier-uniform linear weights, zero biases."""
    if input_mode not in INPUT_CHANNELS:
        raise ValueError(f"unknown input mode {input_mode!r}")
    rng = np.random.default_rng(seed)
    ic = INPUT_CHANNELS[input_mode]
    conv = []
    for oc in channels:
        std = np.sqrt(2.0 / (ic * 9))
        conv.append((rng.normal(0.0, std, size=(oc, ic, 3, 3)), np.zeros(oc)))
        ic = oc
    linear = []
    fan = ic
    for out in tuple(hidden) + (1,):
        lim = np.sqrt(6.0 / (fan + out))
        linear.append((rng.uniform(-lim, lim, size=(out, fan)), np.zeros(out)))
        fan = out
    return NetParams(conv, linear, input_mode)


@dataclass(eq=False)
class Cache:
    """Forward intermediates needed by :func:`backward` and the saliency maps."""

    conv_in_shapes: list = field(default_factory=list)
    cols: list = field(default_factory=list)
    relu_masks: list = field(default_factory=list)
    pool_args: list = field(default_factory=list)
    block_out: list = field(default_factory=list)   # output of each conv block
    last_map: np.ndarray = None                      # post-ReLU map before the global pool
    head_in: list = field(default_factory=list)      # input of each linear layer (after dropout)
    drop_masks: list = field(default_factory=list)
    head_relu: list = field(default_factory=list)
    logits: np.ndarray = None
    probs: np.ndarray = None
    shapes: list = field(default_factory=list)       # activation shapes per block output
    consumed: bool = False


def _as_batch(images, params):
    x = np.asarray(images, dtype=np.float64)
    if x.ndim == 2:
        x = x[None, None]
    elif x.ndim == 3:
        x = x[None]
    if x.ndim != 4 or x.shape[1] != params.in_channels:
        raise ValueError(f"input shape {x.shape} does not match {params.input_mode} mode "
                         f"({params.in_channels} channel(s))")
    n_pool = len(params.conv) - 1
    if x.shape[2] % (1 << n_pool) or x.shape[3] % (1 << n_pool):
        raise ValueError(f"spatial size {x.shape[2:]} is not divisible by 2^{n_pool}")
    return x


def forward_pass(params: NetParams, images, mode="eval", dropout_seed=None,
                 dropout_rates=DEFAULT_DROPOUT, keep_cols=True):
    """Return (probabilities (B,), Cache). ``images`` is (B, C, H, W) or (C, H, W)."""
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    x = _as_batch(images, params).transpose(1, 0, 2, 3)
    cache = Cache()
    nconv = len(params.conv)
    for i, (w, b) in enumerate(params.conv):
        cache.conv_in_shapes.append(x.shape)
        z, cols = layers.conv_forward(x, w, b)
        cache.cols.append(cols if keep_cols else None)
        mask = z > 0
        a = z * mask
        cache.relu_masks.append(mask)
        if i < nconv - 1:
            x, arg = layers.kernels.maxpool2(a)
        else:
            cache.last_map = a
            x, arg = layers.global_max_forward(a)
        cache.pool_args.append(arg)
        cache.block_out.append(x)
        cache.shapes.append(x.shape)
    h = x.T  # (B, C)
    rng = np.random.default_rng(dropout_seed) if mode == "train" else None
    rates = tuple(dropout_rates) + (0.0,) * (len(params.linear) - len(dropout_rates))
    nlin = len(params.linear)
    for j, (w, b) in enumerate(params.linear):
        m = layers.dropout_mask(rng, h.shape, rates[j])
        cache.drop_masks.append(m)
        if m is not None:
            h = h * m
        cache.head_in.append(h)
        z = h @ w.T + b
        if j < nlin - 1:
            mask = z > 0
            cache.head_relu.append(mask)
            h = z * mask
        else:
            h = z
    cache.logits = h[:, 0]
    cache.probs = layers.sigmoid(cache.logits)
    return cache.probs, cache


def _backward(params, cache, dlogit, guided=False, stop_block=None, param_grads=True):
    """Reverse pass from d(loss)/d(logit).

    With ``stop_block=k`` the pass ends at the output of conv block k
    (0-based) and returns its gradient. ``guided`` zeroes negative backward
    signals at every ReLU on the way.
    """
    grads_lin = []
    g = np.asarray(dlogit, dtype=np.float64)[:, None]
    nlin = len(params.linear)
    for j in range(nlin - 1, -1, -1):
        w, _ = params.linear[j]
        if j < nlin - 1:
            g = g * cache.head_relu[j]
            if guided:
                g = np.maximum(g, 0.0)
        if param_grads:
            grads_lin.append((g.T @ cache.head_in[j], g.sum(axis=0)))
        g = g @ w
        if cache.drop_masks[j] is not None:
            g = g * cache.drop_masks[j]
    grads_lin.reverse()
    g = g.T  # (C, B)
    grads_conv = []
    nconv = len(params.conv)
    for i in range(nconv - 1, -1, -1):
        if stop_block is not None and i == stop_block:
            return None, g
        pre_shape = cache.relu_masks[i].shape
        if i == nconv - 1:
            g = layers.global_max_backward(g, cache.pool_args[i], pre_shape)
        else:
            g = layers.kernels.maxpool2_back(g, cache.pool_args[i])
        g = g * cache.relu_masks[i]
        if guided:
            g = np.maximum(g, 0.0)
        w, _ = params.conv[i]
        need_dx = i > 0 or stop_block is not None
        if param_grads:
            if cache.cols[i] is None:
                raise ValueError("forward cache was built without im2col buffers")
            g_in, dw, db = layers.conv_backward(g, cache.cols[i], w, cache.conv_in_shapes[i], need_dx)
            grads_conv.append((dw, db))
        else:
            oc = w.shape[0]
            g_in = layers.col2im(w.reshape(oc, -1).T @ g.reshape(oc, -1), cache.conv_in_shapes[i])
        g = g_in
    grads_conv.reverse()
    if stop_block is not None:
        return None, g
    return NetParams(grads_conv, grads_lin, params.input_mode), g


def backward(params: NetParams, cache: Cache, y):
    """Gradients of the batch-mean BCE with respect to every parameter.

    Sigmoid and BCE are fused: d(loss)/d(logit) = (p - y) / B.
    """
    if cache is None or cache.probs is None:
        raise ValueError("backward needs the cache of a forward_pass")
    if cache.consumed:
        raise ValueError("forward cache already consumed; run forward_pass again")
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if y.shape != cache.probs.shape:
        raise ValueError(f"labels {y.shape} do not match batch {cache.probs.shape}")
    dlogit = (cache.probs - y) / y.size
    grads, _ = _backward(params, cache, dlogit)
    cache.consumed = True
    return grads


def classify(params: NetParams, image, threshold=0.5):
    """Return ('noisy' | 'clean', probability) for one network input."""
    p, _ = forward_pass(params, image, mode="eval", keep_cols=False)
    prob = float(p[0])
    return ("noisy" if prob > threshold else "clean"), prob
