"""Fourier-peak screening baseline.

A field is scored by the largest log10 spectral magnitude outside a disk
around the illumination frequency; a high score means strong
high-frequency content (fringes, phase breaks) and marks the field noisy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .field import ComplexField2D, fft2

PRESET_THRESHOLD = 3.306
LOG_EPS = 1e-12


@dataclass(frozen=True)
class RuleConfig:
    mask_radius: float
    mask_center: tuple = (0.0, 0.0)
    threshold: float = PRESET_THRESHOLD

    def __post_init__(self):
        if not self.mask_radius > 0:
            raise ValueError("mask_radius must be positive")
        if not math.isfinite(self.threshold):
            raise ValueError("threshold must be finite")

    @classmethod
    def default(cls, optics, threshold=PRESET_THRESHOLD, center=(0.0, 0.0)):
        """Half the detection-pupil radius, centred on DC of a background-normalised field."""
        return cls(0.5 * optics.pupil_radius, tuple(center), threshold)


def rule_score(field: ComplexField2D, config: RuleConfig) -> float:
    spec = fft2(field)
    kx, ky = spec.frequencies()
    cx, cy = config.mask_center
    outside = (kx - cx) ** 2 + (ky - cy) ** 2 > config.mask_radius ** 2
    if not outside.any():
        raise ValueError("high-pass mask covers the whole spectrum")
    return float(np.log10(np.abs(spec.values[outside]) + LOG_EPS).max())


def rule_classify(field: ComplexField2D, config: RuleConfig) -> str:
    return "noisy" if rule_score(field, config) > config.threshold else "clean"


def calibrate_threshold(scores, labels) -> float:
    """Threshold maximising balanced accuracy of ``score > t``; midpoints between sorted scores.

    Ties go to the lowest threshold.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.array([l == "noisy" if isinstance(l, str) else bool(l) for l in labels])
    if y.all() or not y.any():
        raise ValueError("calibration needs both clean and noisy scores")
    u = np.unique(s)
    cands = np.concatenate([[u[0] - 1.0], (u[:-1] + u[1:]) / 2, [u[-1] + 1.0]])
    pos, neg = y.sum(), (~y).sum()
    best_t, best = cands[0], -1.0
    for t in cands:
        pred = s > t
        bal = 0.5 * ((pred & y).sum() / pos + (~pred & ~y).sum() / neg)
        if bal > best:
            best, best_t = bal, float(t)
    return best_t
