"""Complex fields, phase images and their discrete Fourier transforms."""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np


class DimensionError(ValueError):
    """Raised for grid sizes the transforms do not support."""


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


def is_pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


@dataclass(frozen=True, eq=False)
class ComplexField2D:
    """Complex amplitude on a regular grid; ``values`` has shape (height, width)."""

    values: np.ndarray
    pixel_pitch: float = 0.16

    def __post_init__(self):
        v = _frozen(self.values, np.complex128)
        if v.ndim != 2 or v.size == 0:
            raise ValueError(f"field values must be a non-empty 2D array, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        if not self.pixel_pitch > 0:
            raise ValueError(f"pixel_pitch must be positive, got {self.pixel_pitch}")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "pixel_pitch", float(self.pixel_pitch))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def amplitude(self) -> np.ndarray:
        return np.abs(self.values)

    @property
    def phase(self) -> np.ndarray:
        return np.angle(self.values)

    def with_values(self, values) -> "ComplexField2D":
        return ComplexField2D(values, self.pixel_pitch)


@dataclass(frozen=True, eq=False)
class RealImage:
    """Real-valued image (intensity, phase, saliency) on a regular grid."""

    values: np.ndarray
    pixel_pitch: float = 0.16

    def __post_init__(self):
        v = _frozen(self.values, np.float64)
        if v.ndim != 2 or v.size == 0:
            raise ValueError(f"image values must be a non-empty 2D array, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("image contains non-finite values")
        if not self.pixel_pitch > 0:
            raise ValueError(f"pixel_pitch must be positive, got {self.pixel_pitch}")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "pixel_pitch", float(self.pixel_pitch))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


class PhaseImage(RealImage):
    """Phase in radians. Wrapped images have every value in (-pi, pi]."""

    @property
    def is_wrapped(self) -> bool:
        v = self.values
        return bool(np.all(v > -math.pi) and np.all(v <= math.pi))


@dataclass(frozen=True, eq=False)
class Spectrum2D:
    """DC-centred unitary spectrum. ``freq_pitch`` is (x, y) in rad/um per bin."""

    values: np.ndarray
    freq_pitch: tuple = dc_field(default=(1.0, 1.0))

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, np.complex128))
        fx, fy = self.freq_pitch
        object.__setattr__(self, "freq_pitch", (float(fx), float(fy)))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def frequencies(self):
        """Return (kx, ky) coordinate grids matching ``values``."""
        return freq_grid(self.height, self.width, spacing=self.freq_pitch)


def freq_axis(n: int, pixel_pitch: float) -> np.ndarray:
    """Angular frequencies of a DC-centred axis of ``n`` bins."""
    return (np.arange(n) - n // 2) * (2 * math.pi / (n * pixel_pitch))


def freq_grid(height: int, width: int, pixel_pitch: float | None = None, spacing=None):
    if spacing is None:
        kx = freq_axis(width, pixel_pitch)
        ky = freq_axis(height, pixel_pitch)
    else:
        kx = (np.arange(width) - width // 2) * spacing[0]
        ky = (np.arange(height) - height // 2) * spacing[1]
    return np.meshgrid(kx, ky)


def space_grid(height: int, width: int, pixel_pitch: float):
    """Pixel-centre coordinates (x, y) in um with the origin at index n//2."""
    x = (np.arange(width) - width // 2) * pixel_pitch
    y = (np.arange(height) - height // 2) * pixel_pitch
    return np.meshgrid(x, y)


def _check_pow2(shape):
    for n in shape:
        if not is_pow2(n):
            raise DimensionError(f"grid dimension {n} is not a power of two (shape {tuple(shape)})")


def fft2(obj, direction: str = "forward"):
    """Unitary 2D DFT.

    ``forward`` maps a ComplexField2D to a DC-centred Spectrum2D; ``inverse``
    maps a Spectrum2D back to a ComplexField2D.
    """
    if direction == "forward":
        if not isinstance(obj, ComplexField2D):
            raise TypeError("forward fft2 expects a ComplexField2D")
        _check_pow2(obj.values.shape)
        h, w = obj.values.shape
        s = np.fft.fftshift(np.fft.fft2(obj.values, norm="ortho"))
        p = obj.pixel_pitch
        return Spectrum2D(s, (2 * math.pi / (w * p), 2 * math.pi / (h * p)))
    if direction == "inverse":
        if not isinstance(obj, Spectrum2D):
            raise TypeError("inverse fft2 expects a Spectrum2D")
        _check_pow2(obj.values.shape)
        h, w = obj.values.shape
        u = np.fft.ifft2(np.fft.ifftshift(obj.values), norm="ortho")
        return ComplexField2D(u, 2 * math.pi / (w * obj.freq_pitch[0]))
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def wrap_values(x):
    """Map real values into (-pi, pi] (array or scalar)."""
    x = np.asarray(x, dtype=np.float64)
    w = x - 2 * math.pi * np.ceil((x - math.pi) / (2 * math.pi))
    # rounding at the interval ends
    w = np.where(w <= -math.pi, w + 2 * math.pi, w)
    w = np.where(w > math.pi, w - 2 * math.pi, w)
    return w


def wrap_phase(phase: PhaseImage) -> PhaseImage:
    if not np.all(np.isfinite(phase.values)):
        raise ValueError("phase contains non-finite values")
    return PhaseImage(wrap_values(phase.values), phase.pixel_pitch)


def center_crop(image, size: int):
    """Centred ``size`` x ``size`` window of a field or image."""
    h, w = image.values.shape
    if size < 1 or size > min(h, w):
        raise ValueError(f"crop size {size} does not fit a {h}x{w} image")
    if (h - size) % 2 or (w - size) % 2:
        raise ValueError(f"crop size {size} and image {h}x{w} differ in parity")
    r0 = (h - size) // 2
    c0 = (w - size) // 2
    return type(image)(image.values[r0:r0 + size, c0:c0 + size], image.pixel_pitch)
