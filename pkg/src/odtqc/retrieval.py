"""Off-axis field retrieval, background normalisation and phase unwrapping."""
from __future__ import annotations

import math

import numpy as np

from . import kernels
from .field import ComplexField2D, PhaseImage, RealImage, freq_axis, wrap_values


def retrieve_field(hologram: RealImage, carrier, crop_radius: float) -> ComplexField2D:
    """Demodulate the sideband at ``+carrier`` (Fourier-transform fringe analysis).

    The sideband at +q holds conj(u) * R for a reference R exp(i q.r), so the
    demodulated result is conjugated to return u * R. The carrier is snapped
    to the nearest frequency bin.
    """
    v = np.asarray(hologram.values, dtype=np.float64)
    h, w = v.shape
    qx, qy = carrier
    if crop_radius <= 0 or crop_radius > math.hypot(qx, qy):
        raise ValueError("crop_radius must be positive and not exceed |carrier| (the circle would include DC)")
    p = hologram.pixel_pitch
    kx = freq_axis(w, p)
    ky = freq_axis(h, p)
    dkx, dky = kx[1] - kx[0], ky[1] - ky[0]
    if (qx - crop_radius < kx[0] or qx + crop_radius > kx[-1]
            or qy - crop_radius < ky[0] or qy + crop_radius > ky[-1]):
        raise ValueError("sideband crop circle exceeds the spectrum bounds")
    S = np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(v)))
    KX, KY = np.meshgrid(kx, ky)
    sel = (KX - qx) ** 2 + (KY - qy) ** 2 <= crop_radius ** 2
    sx = int(round(qx / dkx))
    sy = int(round(qy / dky))
    rows, cols = np.nonzero(sel)
    out = np.zeros((h, w), dtype=np.complex128)
    out[rows - sy, cols - sx] = S[rows, cols]
    u = np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(out)))
    return ComplexField2D(np.conj(u), p)


def normalize_background(sample: ComplexField2D, background: ComplexField2D) -> ComplexField2D:
    if sample.values.shape != background.values.shape:
        raise ValueError(f"shape mismatch: {sample.values.shape} vs {background.values.shape}")
    amp = np.abs(background.values)
    bad = np.argwhere(amp < 1e-6)
    if bad.size:
        r, c = bad[0]
        raise ValueError(f"background amplitude below 1e-6 at pixel (row={r}, col={c})")
    return sample.with_values(sample.values / background.values)


def phase_smoothness(wrapped: np.ndarray) -> np.ndarray:
    """Quality map: negated mean squared wrapped difference to the 4-neighbours."""
    h, w = wrapped.shape
    acc = np.zeros((h, w))
    cnt = np.zeros((h, w))
    dy = wrap_values(np.diff(wrapped, axis=0)) ** 2
    dx = wrap_values(np.diff(wrapped, axis=1)) ** 2
    acc[1:, :] += dy
    acc[:-1, :] += dy
    acc[:, 1:] += dx
    acc[:, :-1] += dx
    cnt[1:, :] += 1
    cnt[:-1, :] += 1
    cnt[:, 1:] += 1
    cnt[:, :-1] += 1
    return -acc / np.maximum(cnt, 1)


def unwrap_phase(wrapped: PhaseImage, quality=None) -> PhaseImage:
    """Quality-guided flood-fill unwrapping.

    The seed is the highest-quality pixel and keeps its wrapped value, which
    fixes the otherwise free global 2*pi offset.
    """
    v = np.asarray(wrapped.values, dtype=np.float64)
    if np.any(v <= -math.pi) or np.any(v > math.pi):
        raise ValueError("wrapped phase must lie in (-pi, pi]")
    if quality is None:
        q = phase_smoothness(v)
    else:
        q = np.asarray(getattr(quality, "values", quality), dtype=np.float64)
        if q.shape != v.shape:
            raise ValueError("quality map shape differs from the phase image")
    seed = int(np.argmax(q))
    return PhaseImage(kernels.unwrap_flood(v, q, seed), wrapped.pixel_pitch)
