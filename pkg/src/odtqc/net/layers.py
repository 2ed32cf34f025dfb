"""Layer primitives with explicit backward passes.

Batched activations use a channel-major (C, B, H, W) layout so that a 3x3
convolution is a single (OC, C*9) @ (C*9, B*H*W) matrix product.
"""
import numpy as np

from .. import kernels


def im2col(x):
    """(C, B, H, W) -> (C*9, B*H*W) patches of a zero-padded 3x3 window."""
    c, b, h, w = x.shape
    xp = np.zeros((c, b, h + 2, w + 2))
    xp[:, :, 1:-1, 1:-1] = x
    cols = np.empty((c, 3, 3, b, h, w))
    for dy in range(3):
        for dx in range(3):
            cols[:, dy, dx] = xp[:, :, dy:dy + h, dx:dx + w]
    return cols.reshape(c * 9, b * h * w)


def col2im(cols, shape):
    c, b, h, w = shape
    cols = cols.reshape(c, 3, 3, b, h, w)
    dxp = np.zeros((c, b, h + 2, w + 2))
    for dy in range(3):
        for dx in range(3):
            dxp[:, :, dy:dy + h, dx:dx + w] += cols[:, dy, dx]
    return dxp[:, :, 1:-1, 1:-1]


def conv_forward(x, weight, bias):
    """3x3, stride 1, zero-pad 1 cross-correlation. Returns (out, cols)."""
    c, b, h, w = x.shape
    oc = weight.shape[0]
    if weight.shape != (oc, c, 3, 3) or bias.shape != (oc,):
        raise ValueError(f"conv weights {weight.shape}/{bias.shape} do not fit input with {c} channels")
    cols = im2col(x)
    out = weight.reshape(oc, c * 9) @ cols
    out += bias[:, None]
    return out.reshape(oc, b, h, w), cols


def conv_backward(dout, cols, weight, in_shape, need_dx=True):
    oc = weight.shape[0]
    d2 = dout.reshape(oc, -1)
    dw = (d2 @ cols.T).reshape(weight.shape)
    db = d2.sum(axis=1)
    dx = col2im(weight.reshape(oc, -1).T @ d2, in_shape) if need_dx else None
    return dx, dw, db


def conv2d(x, weight, bias):
    """Single-image convolution: (c, h, w) -> (oc, h, w)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ValueError(f"conv2d expects (c, h, w), got {x.shape}")
    out, _ = conv_forward(x[:, None], np.asarray(weight, float), np.asarray(bias, float))
    return out[:, 0]


def max_pool2(x):
    """2x2 max pooling of a (c, h, w) or (C, B, H, W) array. Returns (out, argmax)."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 3
    if single:
        x = x[:, None]
    if x.shape[-1] % 2 or x.shape[-2] % 2:
        raise ValueError(f"max_pool2 needs even spatial dims, got {x.shape[-2:]}")
    out, arg = kernels.maxpool2(x)
    if single:
        return out[:, 0], arg[:, 0]
    return out, arg


def adaptive_max_pool_1(x):
    """Global spatial max per channel: (c, h, w) -> (c,)."""
    x = np.asarray(x, dtype=np.float64)
    return x.reshape(x.shape[0], -1).max(axis=1)


def global_max_forward(x):
    c, b, h, w = x.shape
    flat = x.reshape(c, b, h * w)
    arg = np.argmax(flat, axis=-1)
    return np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0], arg


def global_max_backward(dout, arg, shape):
    c, b, h, w = shape
    d = np.zeros((c, b, h * w))
    np.put_along_axis(d, arg[..., None], dout[..., None], axis=-1)
    return d.reshape(shape)


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out


P_CLAMP = 1e-12


def bce_loss(p, y):
    """Binary cross-entropy, averaged over a batch."""
    p = np.clip(np.asarray(p, dtype=np.float64), P_CLAMP, 1 - P_CLAMP)
    y = np.asarray(y, dtype=np.float64)
    return float(np.mean(-(y * np.log(p) + (1 - y) * np.log1p(-p))))


def dropout_mask(rng, shape, rate):
    if rate <= 0 or rng is None:
        return None
    return (rng.random(shape) >= rate) / (1.0 - rate)
