"""Independent reference computations shared by several test modules."""
import numpy as np

from odtqc.field import freq_axis
from odtqc.net.layers import bce_loss
from odtqc.net.model import backward, forward_pass, init_params

MINI_CHANNELS = (8, 16)
MINI_HIDDEN = (12, 6)


def mini_draw(seed, size=16):
    """Random miniature net (zero biases replaced by noise), input and label."""
    rng = np.random.default_rng(seed)
    params = init_params(seed, "phase", channels=MINI_CHANNELS, hidden=MINI_HIDDEN)
    for t in params.tensors():
        if t.ndim == 1:
            t[:] = rng.normal(0, 0.1, t.shape)
    x = rng.normal(size=(1, 1, size, size))
    y = np.array([float(rng.integers(0, 2))])
    return params, x, y


def loss_of(params, x, y):
    p, _ = forward_pass(params, x, mode="eval", keep_cols=False)
    return bce_loss(p, y)


def numeric_grads(params, x, y, h=1e-5):
    """Central differences of the full loss for every parameter element."""
    out = []
    for t in params.tensors():
        flat = t.reshape(-1)
        n = np.empty(flat.size)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + h
            lp = loss_of(params, x, y)
            flat[i] = old - h
            lm = loss_of(params, x, y)
            flat[i] = old
            n[i] = (lp - lm) / (2 * h)
        out.append(n.reshape(t.shape))
    return out


def gradient_errors(params, x, y, h=1e-5, floor=1e-4):
    """(worst per-tensor norm-wise relative error, worst element error with a denominator floor)."""
    _, cache = forward_pass(params, x, mode="eval")
    grads = backward(params, cache, y).tensors()
    tensor_err, elem_err = 0.0, 0.0
    for a, n in zip(grads, numeric_grads(params, x, y, h)):
        scale = max(np.linalg.norm(a), np.linalg.norm(n))
        if scale > 0:
            tensor_err = max(tensor_err, np.linalg.norm(a - n) / scale)
        elem = np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        elem_err = max(elem_err, float(elem.max()))
    return tensor_err, elem_err


def loop_conv(x, w, b):
    """Six nested loops over a zero-padded input."""
    c, h, wd = x.shape
    oc = w.shape[0]
    out = np.zeros((oc, h, wd))
    for o in range(oc):
        for i in range(h):
            for j in range(wd):
                acc = b[o]
                for ci in range(c):
                    for di in range(3):
                        for dj in range(3):
                            ii, jj = i + di - 1, j + dj - 1
                            if 0 <= ii < h and 0 <= jj < wd:
                                acc += w[o, ci, di, dj] * x[ci, ii, jj]
                out[o, i, j] = acc
    return out


def loop_pool(x):
    c, h, w = x.shape
    return np.array([[[max(x[k, 2 * i, 2 * j], x[k, 2 * i, 2 * j + 1], x[k, 2 * i + 1, 2 * j], x[k, 2 * i + 1, 2 * j + 1])
                       for j in range(w // 2)] for i in range(h // 2)] for k in range(c)])


def band_limit(u, radius, pitch=0.16):
    """Zero every spectral component outside ``radius`` (rad/um)."""
    n = u.shape[0]
    U = np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(u)))
    kx, ky = np.meshgrid(freq_axis(n, pitch), freq_axis(n, pitch))
    U[kx ** 2 + ky ** 2 > radius ** 2] = 0
    return np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(U)))


def random_band_field(seed, radius_bins=8, n=128, pitch=0.16):
    rng = np.random.default_rng(seed)
    dk = 2 * np.pi / (n * pitch)
    u = band_limit(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)), radius_bins * dk, pitch)
    return 1 + 0.4 * u / np.abs(u).max()


def smooth_fields(seed, count=100, n=48):
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:n, 0:n] / n
    for _ in range(count):
        c = rng.normal(size=6) * 15
        yield c[0] * x + c[1] * y + c[2] * x * y + c[3] * np.sin(3 * x + c[4]) + c[5] * y ** 2
