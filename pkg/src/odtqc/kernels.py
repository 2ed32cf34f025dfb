"""Hot inner loops with a numba path and a pure Python/numpy fallback.

Every public function here dispatches on :data:`odtqc._jit.USE_NUMBA`. The
``*_py`` and ``*_nb`` variants are exported for tests and the benchmark;
both must return identical arrays.
"""
import heapq
import math

import numpy as np

from ._jit import USE_NUMBA, njit

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# quality-guided flood-fill unwrapping

def _unwrap_loop(wrapped, quality, seed):
    h, w = wrapped.shape
    n = h * w
    wf = wrapped.ravel()
    qf = quality.ravel()
    out = np.empty(n)
    done = np.zeros(n, dtype=np.bool_)
    # binary min-heap on (-quality, index)
    hk = np.empty(n)
    hi = np.empty(n, dtype=np.int64)
    size = 0
    out[seed] = wf[seed]
    done[seed] = True
    cur = seed
    while True:
        r = cur // w
        c = cur - r * w
        for d in range(4):
            if d == 0:
                if r == 0:
                    continue
                nb = cur - w
            elif d == 1:
                if r == h - 1:
                    continue
                nb = cur + w
            elif d == 2:
                if c == 0:
                    continue
                nb = cur - 1
            else:
                if c == w - 1:
                    continue
                nb = cur + 1
            if done[nb]:
                continue
            k = math.floor((out[cur] - wf[nb]) / TWO_PI + 0.5)
            out[nb] = wf[nb] + TWO_PI * k
            done[nb] = True
            # sift up
            key = -qf[nb]
            pos = size
            size += 1
            while pos > 0:
                parent = (pos - 1) // 2
                if hk[parent] < key or (hk[parent] == key and hi[parent] < nb):
                    break
                hk[pos] = hk[parent]
                hi[pos] = hi[parent]
                pos = parent
            hk[pos] = key
            hi[pos] = nb
        if size == 0:
            break
        cur = hi[0]
        size -= 1
        lk = hk[size]
        li = hi[size]
        pos = 0
        while True:
            child = 2 * pos + 1
            if child >= size:
                break
            if child + 1 < size and (
                hk[child + 1] < hk[child] or (hk[child + 1] == hk[child] and hi[child + 1] < hi[child])
            ):
                child += 1
            if lk < hk[child] or (lk == hk[child] and li < hi[child]):
                break
            hk[pos] = hk[child]
            hi[pos] = hi[child]
            pos = child
        hk[pos] = lk
        hi[pos] = li
    return out.reshape(h, w)


unwrap_flood_nb = njit(_unwrap_loop)


def unwrap_flood_py(wrapped, quality, seed):
    h, w = wrapped.shape
    wf = wrapped.ravel().tolist()
    qf = quality.ravel().tolist()
    out = [0.0] * (h * w)
    done = bytearray(h * w)
    out[seed] = wf[seed]
    done[seed] = 1
    heap = []
    cur = seed
    while True:
        r, c = divmod(cur, w)
        for nb, ok in ((cur - w, r > 0), (cur + w, r < h - 1), (cur - 1, c > 0), (cur + 1, c < w - 1)):
            if not ok or done[nb]:
                continue
            k = math.floor((out[cur] - wf[nb]) / TWO_PI + 0.5)
            out[nb] = wf[nb] + TWO_PI * k
            done[nb] = 1
            heapq.heappush(heap, (-qf[nb], nb))
        if not heap:
            break
        cur = heapq.heappop(heap)[1]
    return np.asarray(out).reshape(h, w)


def unwrap_flood(wrapped, quality, seed):
    """Grow from ``seed`` (flat index) in descending ``quality`` order."""
    wrapped = np.ascontiguousarray(wrapped, dtype=np.float64)
    quality = np.ascontiguousarray(quality, dtype=np.float64)
    if USE_NUMBA:
        return unwrap_flood_nb(wrapped, quality, np.int64(seed))
    return unwrap_flood_py(wrapped, quality, int(seed))


# ---------------------------------------------------------------------------
# Ewald-cap deposition into a flat accumulator

def _deposit_loop(acc, hits, index, values):
    for j in range(index.shape[0]):
        acc[index[j]] += values[j]
        hits[index[j]] += 1


deposit_nb = njit(_deposit_loop)


def deposit_py(acc, hits, index, values):
    np.add.at(acc, index, values)
    np.add.at(hits, index, 1)


def deposit(acc, hits, index, values):
    """Add ``values`` at flat ``index`` positions of ``acc`` and count hits (in place)."""
    if USE_NUMBA:
        deposit_nb(acc, hits, np.ascontiguousarray(index, dtype=np.int64),
                   np.ascontiguousarray(values, dtype=np.complex128))
    else:
        deposit_py(acc, hits, index, values)


# ---------------------------------------------------------------------------
# 2x2 max pooling over the last two axes of a (C, B, H, W) array

def _maxpool_loop(x):
    c_, b_, h, w = x.shape
    h2 = h // 2
    w2 = w // 2
    out = np.empty((c_, b_, h2, w2))
    arg = np.empty((c_, b_, h2, w2), dtype=np.int8)
    for c in range(c_):
        for b in range(b_):
            for i in range(h2):
                for j in range(w2):
                    best = x[c, b, 2 * i, 2 * j]
                    a = 0
                    v = x[c, b, 2 * i, 2 * j + 1]
                    if v > best:
                        best = v
                        a = 1
                    v = x[c, b, 2 * i + 1, 2 * j]
                    if v > best:
                        best = v
                        a = 2
                    v = x[c, b, 2 * i + 1, 2 * j + 1]
                    if v > best:
                        best = v
                        a = 3
                    out[c, b, i, j] = best
                    arg[c, b, i, j] = a
    return out, arg


def _maxpool_back_loop(grad, arg):
    c_, b_, h2, w2 = grad.shape
    dx = np.zeros((c_, b_, 2 * h2, 2 * w2))
    for c in range(c_):
        for b in range(b_):
            for i in range(h2):
                for j in range(w2):
                    a = arg[c, b, i, j]
                    dx[c, b, 2 * i + a // 2, 2 * j + a % 2] = grad[c, b, i, j]
    return dx


maxpool2_nb = njit(_maxpool_loop)
maxpool2_back_nb = njit(_maxpool_back_loop)


def _blocks(x):
    c_, b_, h, w = x.shape
    return x.reshape(c_, b_, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(c_, b_, h // 2, w // 2, 4)


def maxpool2_py(x):
    blk = _blocks(x)
    arg = np.argmax(blk, axis=-1).astype(np.int8)
    out = np.take_along_axis(blk, arg[..., None].astype(np.intp), axis=-1)[..., 0]
    return out, arg


def maxpool2_back_py(grad, arg):
    c_, b_, h2, w2 = grad.shape
    blk = np.zeros((c_, b_, h2, w2, 4))
    np.put_along_axis(blk, arg[..., None].astype(np.intp), grad[..., None], axis=-1)
    return blk.reshape(c_, b_, h2, w2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(c_, b_, 2 * h2, 2 * w2)


def maxpool2(x):
    """Return (pooled, argmax-in-block) with ties resolved to the first element."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if USE_NUMBA:
        return maxpool2_nb(x)
    return maxpool2_py(x)


def maxpool2_back(grad, arg):
    grad = np.ascontiguousarray(grad, dtype=np.float64)
    if USE_NUMBA:
        return maxpool2_back_nb(grad, np.ascontiguousarray(arg))
    return maxpool2_back_py(grad, arg)


# ---------------------------------------------------------------------------
# bilinear resampling with edge clamping, shared coordinates for all channels

def _bilinear_loop(img, yy, xx):
    c_, h, w = img.shape
    out = np.empty((c_, yy.shape[0], yy.shape[1]))
    for i in range(yy.shape[0]):
        for j in range(yy.shape[1]):
            y = min(max(yy[i, j], 0.0), h - 1.0)
            x = min(max(xx[i, j], 0.0), w - 1.0)
            y0 = int(math.floor(y))
            x0 = int(math.floor(x))
            y1 = min(y0 + 1, h - 1)
            x1 = min(x0 + 1, w - 1)
            wy = y - y0
            wx = x - x0
            for c in range(c_):
                top = (1.0 - wx) * img[c, y0, x0] + wx * img[c, y0, x1]
                bot = (1.0 - wx) * img[c, y1, x0] + wx * img[c, y1, x1]
                out[c, i, j] = (1.0 - wy) * top + wy * bot
    return out


bilinear_sample_nb = njit(_bilinear_loop)


def bilinear_sample_py(img, yy, xx):
    h, w = img.shape[1:]
    y = np.clip(yy, 0.0, h - 1.0)
    x = np.clip(xx, 0.0, w - 1.0)
    y0 = np.floor(y).astype(np.intp)
    x0 = np.floor(x).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = y - y0
    wx = x - x0
    top = (1.0 - wx) * img[:, y0, x0] + wx * img[:, y0, x1]
    bot = (1.0 - wx) * img[:, y1, x0] + wx * img[:, y1, x1]
    return (1.0 - wy) * top + wy * bot


def bilinear_sample(img, yy, xx):
    """Sample ``img[c]`` at fractional (row, col) positions ``yy, xx``."""
    img = np.ascontiguousarray(img, dtype=np.float64)
    yy = np.ascontiguousarray(yy, dtype=np.float64)
    xx = np.ascontiguousarray(xx, dtype=np.float64)
    if USE_NUMBA:
        return bilinear_sample_nb(img, yy, xx)
    return bilinear_sample_py(img, yy, xx)
