"""Elastic deformation for training-time augmentation."""
import numpy as np
from scipy.ndimage import gaussian_filter

from .. import kernels


def elastic_transform(image, alpha=8.0, sigma=4.0, seed=0):
    """Warp a (C, H, W) image with one smoothed random displacement field.

    Displacements are uniform in (-1, 1) per pixel, Gaussian-smoothed with
    standard deviation ``sigma`` and scaled by ``alpha`` (pixels). Sampling
    is bilinear with edge clamping, so output values stay within the input
    range.
    """
    if alpha < 0 or not sigma > 0:
        raise ValueError("need alpha >= 0 and sigma > 0")
    img = np.asarray(image, dtype=np.float64)
    squeeze = img.ndim == 2
    if squeeze:
        img = img[None]
    if alpha == 0:
        out = img.copy()
        return out[0] if squeeze else out
    rng = np.random.default_rng(seed)
    h, w = img.shape[1:]
    dy = gaussian_filter(rng.uniform(-1.0, 1.0, size=(h, w)), sigma, mode="reflect") * alpha
    dx = gaussian_filter(rng.uniform(-1.0, 1.0, size=(h, w)), sigma, mode="reflect") * alpha
    yy, xx = np.mgrid[0:h, 0:w]
    out = kernels.bilinear_sample(img, yy + dy, xx + dx)
    return out[0] if squeeze else out
