"""The numba and pure-Python kernels must agree bit for bit."""
import math

import numpy as np
import pytest

from odtqc import kernels
from odtqc._jit import HAVE_NUMBA

needs_numba = pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")


@needs_numba
@pytest.mark.parametrize("seed", range(5))
def test_unwrap_paths_agree(seed):
    rng = np.random.default_rng(seed)
    w = rng.uniform(-math.pi, math.pi, size=(17, 23))
    q = rng.random((17, 23))
    q[3, 4] = q[3, 5]  # ties broken by index in both heaps
    s = int(np.argmax(q))
    np.testing.assert_array_equal(kernels.unwrap_flood_nb(w, q, s), kernels.unwrap_flood_py(w, q, s))


@needs_numba
def test_deposit_paths_agree():
    rng = np.random.default_rng(0)
    idx = rng.integers(0, 50, 400)
    vals = rng.normal(size=400) + 1j * rng.normal(size=400)
    a1, h1 = np.zeros(50, complex), np.zeros(50, np.int64)
    a2, h2 = np.zeros(50, complex), np.zeros(50, np.int64)
    kernels.deposit_nb(a1, h1, idx, vals)
    kernels.deposit_py(a2, h2, idx, vals)
    np.testing.assert_array_equal(h1, h2)
    np.testing.assert_array_equal(h1, np.bincount(idx, minlength=50))
    np.testing.assert_allclose(a1, a2, rtol=1e-14, atol=1e-14)


@needs_numba
def test_maxpool_paths_agree_with_ties():
    rng = np.random.default_rng(1)
    x = rng.integers(0, 3, size=(3, 2, 8, 6)).astype(float)
    o1, g1 = kernels.maxpool2_nb(x)
    o2, g2 = kernels.maxpool2_py(x)
    np.testing.assert_array_equal(o1, o2)
    np.testing.assert_array_equal(g1, g2)
    grad = rng.normal(size=o1.shape)
    np.testing.assert_array_equal(kernels.maxpool2_back_nb(grad, g1), kernels.maxpool2_back_py(grad, g2))


def test_maxpool_first_element_wins_ties():
    x = np.ones((1, 1, 2, 2))
    out, arg = kernels.maxpool2(x)
    assert out[0, 0, 0, 0] == 1 and arg[0, 0, 0, 0] == 0
    dx = kernels.maxpool2_back(np.full((1, 1, 1, 1), 5.0), arg)
    np.testing.assert_array_equal(dx[0, 0], [[5, 0], [0, 0]])


@needs_numba
def test_bilinear_paths_agree():
    rng = np.random.default_rng(2)
    img = rng.normal(size=(2, 9, 11))
    yy = rng.uniform(-2, 11, size=(9, 11))
    xx = rng.uniform(-2, 13, size=(9, 11))
    np.testing.assert_allclose(kernels.bilinear_sample_nb(img, yy, xx),
                               kernels.bilinear_sample_py(img, yy, xx), rtol=0, atol=1e-14)


def test_bilinear_identity_and_midpoint():
    img = np.arange(12, dtype=float).reshape(1, 3, 4)
    yy, xx = np.mgrid[0:3, 0:4].astype(float)
    np.testing.assert_array_equal(kernels.bilinear_sample(img, yy, xx), img)
    mid = kernels.bilinear_sample(img, np.array([[0.5]]), np.array([[1.5]]))
    assert mid[0, 0, 0] == pytest.approx((1 + 2 + 5 + 6) / 4)
