"""Fourier-diffraction reconstruction and the background-noise metric."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import kernels
from .field import ComplexField2D, PhaseImage, wrap_values
from .forward import OpticsConfig, RIVolume, WaveVector, cft2, ewald_map
from .retrieval import unwrap_phase

MIN_AMPLITUDE = 1e-6


@dataclass(eq=False)
class SpectrumAccumulator:
    """Running sums of object-spectrum samples on a (nz, ny, nx) grid."""

    shape: tuple
    voxel_pitch: float
    grid: np.ndarray = None
    hit_count: np.ndarray = None
    skipped: int = 0

    def __post_init__(self):
        self.shape = tuple(int(n) for n in self.shape)
        if self.grid is None:
            self.grid = np.zeros(self.shape, dtype=np.complex128)
        if self.hit_count is None:
            self.hit_count = np.zeros(self.shape, dtype=np.int64)

    @property
    def filled(self) -> np.ndarray:
        return self.hit_count > 0

    def mean_spectrum(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=np.complex128)
        f = self.filled
        out[f] = self.grid[f] / self.hit_count[f]
        return out


def rytov_transform(field: ComplexField2D) -> ComplexField2D:
    """ln|u| + i * unwrapped arg(u), unwrapping guided by amplitude."""
    amp = np.abs(field.values)
    if np.any(amp < MIN_AMPLITUDE):
        warnings.warn(f"{int(np.sum(amp < MIN_AMPLITUDE))} pixels below amplitude {MIN_AMPLITUDE}; clamped",
                      RuntimeWarning, stacklevel=2)
        amp = np.maximum(amp, MIN_AMPLITUDE)
    wrapped = PhaseImage(wrap_values(np.angle(field.values)), field.pixel_pitch)
    phase = unwrap_phase(wrapped, quality=amp).values
    return field.with_values(np.log(amp) + 1j * phase)


def map_to_ewald(u_r: ComplexField2D, k_in: WaveVector, acc: SpectrumAccumulator,
                 config: OpticsConfig) -> SpectrumAccumulator:
    """Deposit F(K) = -2i kz_s U_R(p) at the nearest voxel of each cap point."""
    nz, ny, nx = acc.shape
    if u_r.values.shape != (ny, nx):
        raise ValueError(f"field grid {u_r.values.shape} does not match accumulator {(ny, nx)}")
    em = ewald_map(acc.shape, acc.voxel_pitch, k_in, config)
    U = cft2(u_r.values, acc.voxel_pitch)
    vals = (2 * em.kz / 1j) * U[em.mask]
    kernels.deposit(acc.grid.reshape(-1), acc.hit_count.reshape(-1), em.flat_index, vals)
    acc.skipped += em.skipped
    return acc


def potential_to_index(acc: SpectrumAccumulator, wavelength: float, n_medium: float) -> RIVolume:
    d = acc.voxel_pitch
    F = np.fft.fftshift(np.fft.ifftn(np.fft.ifftshift(acc.mean_spectrum()))) / d ** 3
    k0 = 2 * math.pi / wavelength
    n2 = n_medium ** 2 + F.real / k0 ** 2
    return RIVolume(np.sqrt(np.maximum(n2, 1.0)), d, n_medium)


def reconstruct_tomogram(fields, k_ins, config: OpticsConfig, nz: int = 64,
                         angle_indices=None, return_accumulator=False):
    """Unregularised Rytov reconstruction; unfilled voxels (missing cone) stay zero.

    ``angle_indices`` fixes the accumulation order so the result does not
    depend on the order fields are passed in.
    """
    fields = list(fields)
    k_ins = list(k_ins)
    if not fields:
        raise ValueError("reconstruction needs at least one field")
    if len(fields) != len(k_ins):
        raise ValueError("fields and k_ins differ in length")
    order = range(len(fields))
    if angle_indices is not None:
        order = sorted(order, key=lambda i: angle_indices[i])
    ny, nx = fields[0].values.shape
    acc = SpectrumAccumulator((nz, ny, nx), fields[0].pixel_pitch)
    for i in order:
        if fields[i].values.shape != (ny, nx):
            raise ValueError("inconsistent field grids")
        map_to_ewald(rytov_transform(fields[i]), k_ins[i], acc, config)
    vol = potential_to_index(acc, config.wavelength, config.n_medium)
    return (vol, acc) if return_accumulator else vol


def background_sd(volume: RIVolume, region) -> float:
    """Population SD of RI inside the box (z0, z1, y0, y1, x0, x1), half-open."""
    z0, z1, y0, y1, x0, x1 = (int(v) for v in region)
    nz, ny, nx = volume.shape
    if not (0 <= z0 < z1 <= nz and 0 <= y0 < y1 <= ny and 0 <= x0 < x1 <= nx):
        raise ValueError(f"region {region} is empty or outside the {volume.shape} volume")
    box = volume.values[z0:z1, y0:y1, x0:x1]
    if box.size < 2:
        raise ValueError("region must contain at least two voxels")
    return float(np.std(box))
