"""CAM, guided backpropagation and their product.

CAM weights each channel of the last conv block's map by the gradient of
the logit with respect to that channel's pooled value (the head is not a
single linear layer, so the classic CAM weights do not exist here).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .net.model import _backward, forward_pass

GUIDED_BLOCK = 1  # output of C2


@dataclass(frozen=True, eq=False)
class SaliencyMap:
    values: np.ndarray
    raw: np.ndarray
    degenerate: bool = False  # raw map was constant (e.g. zero gradients)


def normalize_minmax(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    lo, hi = a.min(), a.max()
    if hi - lo <= 0:
        return np.zeros_like(a)
    return (a - lo) / (hi - lo)


def bilinear_upsample(m, target) -> np.ndarray:
    """Align-corners bilinear interpolation of a 2D map to ``target`` = (H, W)."""
    m = np.asarray(m, dtype=np.float64)
    h, w = m.shape
    H, W = target
    if H < h or W < w:
        raise ValueError(f"cannot upsample {m.shape} to smaller {target}")
    ys = np.linspace(0.0, h - 1.0, H) if H > 1 else np.zeros(1)
    xs = np.linspace(0.0, w - 1.0, W) if W > 1 else np.zeros(1)
    y0 = np.minimum(np.floor(ys).astype(int), max(h - 2, 0))
    x0 = np.minimum(np.floor(xs).astype(int), max(w - 2, 0))
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0)[:, None]
    wx = (xs - x0)[None, :]
    top = (1 - wx) * m[np.ix_(y0, x0)] + wx * m[np.ix_(y0, x1)]
    bot = (1 - wx) * m[np.ix_(y1, x0)] + wx * m[np.ix_(y1, x1)]
    return (1 - wy) * top + wy * bot


def _single(image):
    x = np.asarray(image, dtype=np.float64)
    if x.ndim == 2:
        x = x[None]
    return x


def cam_weights(params, image) -> np.ndarray:
    """d(logit)/d(pooled channel) of the last conv block, eval mode."""
    _, cache = forward_pass(params, _single(image), mode="eval", keep_cols=False)
    _, g = _backward(params, cache, np.ones(1), stop_block=len(params.conv) - 1, param_grads=False)
    return g[:, 0]


def cam_map(params, image) -> SaliencyMap:
    x = _single(image)
    _, cache = forward_pass(params, x, mode="eval", keep_cols=False)
    _, g = _backward(params, cache, np.ones(1), stop_block=len(params.conv) - 1, param_grads=False)
    maps = cache.last_map[:, 0]                      # (C, h, w)
    raw = np.maximum(np.tensordot(g[:, 0], maps, axes=1), 0.0)
    up = bilinear_upsample(raw, x.shape[1:])
    degenerate = bool(raw.max() - raw.min() <= 0)
    return SaliencyMap(normalize_minmax(up), raw, degenerate)


def guided_backprop(params, image, block=GUIDED_BLOCK) -> SaliencyMap:
    if not 0 <= block < len(params.conv) - 1:
        raise ValueError(f"guided backprop needs a block below the last of {len(params.conv)}, got {block}")
    x = _single(image)
    _, cache = forward_pass(params, x, mode="eval", keep_cols=False)
    _, g = _backward(params, cache, np.ones(1), guided=True, stop_block=block, param_grads=False)
    raw = np.abs(g[:, 0]).max(axis=0)               # channelwise max |signal|
    up = bilinear_upsample(raw, x.shape[1:])
    return SaliencyMap(normalize_minmax(up), raw, bool(raw.max() - raw.min() <= 0))


def grad_cam(cam, guided, normalize=True):
    """Pointwise product of two equally shaped maps, min-max normalised by default."""
    a = np.asarray(getattr(cam, "values", cam), dtype=np.float64)
    b = np.asarray(getattr(guided, "values", guided), dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    prod = a * b
    return normalize_minmax(prod) if normalize else prod
