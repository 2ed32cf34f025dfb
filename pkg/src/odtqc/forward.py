"""Synthetic specimens, angle-scanned acquisition and field defects.

The forward model is the first-order Rytov approximation evaluated on the
reconstruction grid: every detector frequency inside the pupil reads the
scattering-potential spectrum at the nearest voxel of its Ewald-cap point,
so :mod:`odtqc.recon` can invert it exactly on the sampled support.

Spectra use continuous-transform scaling (``dx**3 * DFT`` in 3D,
``dx**2 * DFT`` in 2D) with the spatial origin at index ``n // 2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import ndimage

from .field import ComplexField2D, RealImage, space_grid, wrap_values

# label thresholds for the clean / noisy split
FRINGE_LABEL_MIN = 0.05
BROKEN_LABEL_MIN = 0.02


@dataclass(frozen=True)
class OpticsConfig:
    wavelength: float = 0.532
    n_medium: float = 1.337
    na_illumination: float = 0.7
    na_detection: float = 0.8
    detector_pixels: int = 256
    pixel_pitch: float = 0.16
    num_angles: int = 71

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ValueError(f"wavelength must be positive, got {self.wavelength}")
        if not 0 < self.na_illumination <= self.na_detection < self.n_medium:
            raise ValueError(
                "need 0 < na_illumination <= na_detection < n_medium, got "
                f"{self.na_illumination}, {self.na_detection}, {self.n_medium}")
        if self.num_angles < 1:
            raise ValueError("num_angles must be >= 1")
        if self.detector_pixels < 1 or not self.pixel_pitch > 0:
            raise ValueError("detector grid must be non-empty with positive pitch")

    @property
    def k0(self) -> float:
        return 2 * math.pi / self.wavelength

    @property
    def k_medium(self) -> float:
        return self.k0 * self.n_medium

    @property
    def pupil_radius(self) -> float:
        """Detection cutoff in rad/um."""
        return self.k0 * self.na_detection

    @property
    def illumination_radius(self) -> float:
        return self.k0 * self.na_illumination


@dataclass(frozen=True)
class WaveVector:
    kx: float
    ky: float
    kz: float

    @classmethod
    def from_transverse(cls, kx, ky, k_medium):
        kt2 = kx * kx + ky * ky
        if kt2 >= k_medium * k_medium:
            raise ValueError("transverse wave vector is evanescent")
        return cls(float(kx), float(ky), math.sqrt(k_medium * k_medium - kt2))

    def as_list(self):
        return [self.kx, self.ky, self.kz]


@dataclass(frozen=True, eq=False)
class RIVolume:
    """Refractive index on a (nz, ny, nx) grid, z-major."""

    values: np.ndarray
    voxel_pitch: float
    n_medium: float

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.ndim != 3:
            raise ValueError(f"volume must be 3D, got shape {v.shape}")
        if not np.all(np.isfinite(v)) or np.any(v < 1.0):
            raise ValueError("volume values must be finite and >= 1")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True)
class NoiseSpec:
    kind: str
    fringe_amplitude: float = 0.0
    fringe_freq: tuple = (0.0, 0.0)
    fringe_phase: float = 0.0
    broken_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("fringe", "broken"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if not 0 <= self.fringe_amplitude <= 2:
            raise ValueError("fringe_amplitude must lie in [0, 2]")
        if not 0 <= self.broken_fraction <= 1:
            raise ValueError("broken_fraction must lie in [0, 1]")

    @property
    def is_noisy(self) -> bool:
        if self.kind == "fringe":
            return self.fringe_amplitude >= FRINGE_LABEL_MIN
        return self.broken_fraction >= BROKEN_LABEL_MIN


# ---------------------------------------------------------------------------
# phantoms

@dataclass(frozen=True)
class BeadSpec:
    radius: float
    offset: tuple = (0.0, 0.0, 0.0)  # (x, y, z) in um


@dataclass(frozen=True)
class RodSpec:
    """Spherocylinder of total ``length`` lying in the xy-plane."""

    length: float
    radius: float
    angle: float = 0.0  # in-plane orientation, radians from +x
    offset: tuple = (0.0, 0.0, 0.0)


def _coords(shape, pitch):
    nz, ny, nx = shape
    z = (np.arange(nz) - nz // 2) * pitch
    y = (np.arange(ny) - ny // 2) * pitch
    x = (np.arange(nx) - nx // 2) * pitch
    return np.meshgrid(z, y, x, indexing="ij")


def _check_bounds(lo, hi, shape, pitch):
    # lo/hi are (x, y, z) extents of the shape
    for axis, n in zip(range(3), (shape[2], shape[1], shape[0])):
        cmin = -(n // 2) * pitch
        cmax = (n - 1 - n // 2) * pitch
        if lo[axis] < cmin or hi[axis] > cmax:
            raise ValueError(f"phantom extends beyond the {shape} grid at pitch {pitch}")


def phantom_mask(spec, shape, voxel_pitch) -> np.ndarray:
    z, y, x = _coords(shape, voxel_pitch)
    ox, oy, oz = spec.offset
    if isinstance(spec, BeadSpec):
        r = spec.radius
        if r < 0:
            raise ValueError("bead radius must be non-negative")
        _check_bounds((ox - r, oy - r, oz - r), (ox + r, oy + r, oz + r), shape, voxel_pitch)
        return (x - ox) ** 2 + (y - oy) ** 2 + (z - oz) ** 2 < r * r
    if isinstance(spec, RodSpec):
        r = spec.radius
        half = max(spec.length / 2 - r, 0.0)
        ux, uy = math.cos(spec.angle), math.sin(spec.angle)
        ex, ey = abs(ux) * half + r, abs(uy) * half + r
        _check_bounds((ox - ex, oy - ey, oz - r), (ox + ex, oy + ey, oz + r), shape, voxel_pitch)
        dx, dy, dz = x - ox, y - oy, z - oz
        t = np.clip(dx * ux + dy * uy, -half, half)
        return (dx - t * ux) ** 2 + (dy - t * uy) ** 2 + dz ** 2 < r * r
    raise TypeError(f"unsupported phantom spec {type(spec).__name__}")


def make_phantom(spec, shape, voxel_pitch, n_medium=1.337, delta_n=0.02) -> RIVolume:
    """Homogeneous bead or rod of index ``n_medium + delta_n`` in a (nz, ny, nx) grid."""
    if not 0 < delta_n <= 0.1:
        raise ValueError(f"delta_n must lie in (0, 0.1], got {delta_n}")
    mask = phantom_mask(spec, shape, voxel_pitch)
    return RIVolume(np.where(mask, n_medium + delta_n, n_medium), voxel_pitch, n_medium)


# ---------------------------------------------------------------------------
# illumination and the Ewald mapping shared with reconstruction

def illumination_set(config: OpticsConfig) -> list:
    """Normal incidence followed by ``num_angles - 1`` directions on one cone."""
    km = config.k_medium
    out = [WaveVector(0.0, 0.0, km)]
    m = config.num_angles - 1
    kt = config.illumination_radius
    for j in range(m):
        phi = 2 * math.pi * j / m
        out.append(WaveVector.from_transverse(kt * math.cos(phi), kt * math.sin(phi), km))
    return out


@dataclass(frozen=True, eq=False)
class EwaldMap:
    """Where each in-pupil 2D bin of one illumination lands in the 3D spectrum."""

    mask: np.ndarray       # (ny, nx) bins that deposit
    flat_index: np.ndarray  # flat 3D index for each True bin of ``mask``, row-major order
    kz: np.ndarray          # scattered-wave kz for the same bins
    skipped: int = 0        # in-pupil bins falling outside the grid's axial range


def ewald_map(shape, pitch, k_in: WaveVector, config: OpticsConfig) -> EwaldMap:
    """Nearest-voxel Ewald cap for a background-normalised field.

    Bin ``p`` of the normalised field corresponds to a scattered wave with
    transverse vector ``p + k_in``; its object frequency is
    ``K = (p, kz_s - kz_in)`` so only the axial coordinate is snapped.
    """
    nz, ny, nx = shape
    px = (np.arange(nx) - nx // 2) * (2 * math.pi / (nx * pitch))
    py = (np.arange(ny) - ny // 2) * (2 * math.pi / (ny * pitch))
    PX, PY = np.meshgrid(px, py)
    ksx = PX + k_in.kx
    ksy = PY + k_in.ky
    kt2 = ksx ** 2 + ksy ** 2
    pupil = kt2 <= config.pupil_radius ** 2
    km2 = config.k_medium ** 2
    if np.any(kt2[pupil] >= km2):
        raise RuntimeError("evanescent frequency inside the detection pupil")
    kz_s = np.sqrt(np.where(pupil, km2 - kt2, 1.0))
    dkz = 2 * math.pi / (nz * pitch)
    iz = np.rint((kz_s - k_in.kz) / dkz).astype(np.int64) + nz // 2
    inside = (iz >= 0) & (iz < nz)
    mask = pupil & inside
    iy, ix = np.nonzero(mask)
    flat = (iz[mask] * ny + iy) * nx + ix
    return EwaldMap(mask, flat, kz_s[mask], int(np.count_nonzero(pupil & ~inside)))


def scattering_spectrum(volume: RIVolume, wavelength: float) -> np.ndarray:
    """Continuous-FT estimate of F = k0^2 (n^2 - n_m^2), DC-centred, shape (nz, ny, nx)."""
    k0 = 2 * math.pi / wavelength
    pot = k0 ** 2 * (volume.values ** 2 - volume.n_medium ** 2)
    d = volume.voxel_pitch
    return np.fft.fftshift(np.fft.fftn(np.fft.ifftshift(pot))) * d ** 3


def cft2(u, pitch):
    return np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(u))) * pitch ** 2


def icft2(U, pitch):
    return np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(U))) / pitch ** 2


def rytov_field(phantom: RIVolume, k_in: WaveVector, config: OpticsConfig, spectrum=None) -> np.ndarray:
    """Complex Rytov phase u_R = ln(u / u_background) for one illumination."""
    nz, ny, nx = phantom.shape
    if nx != config.detector_pixels or ny != config.detector_pixels:
        raise ValueError(f"phantom transverse grid {ny}x{nx} does not match the "
                         f"{config.detector_pixels}-pixel detector")
    if not math.isclose(phantom.voxel_pitch, config.pixel_pitch, rel_tol=1e-12):
        raise ValueError("phantom voxel pitch must equal the detector pixel pitch")
    if not math.isclose(phantom.n_medium, config.n_medium, rel_tol=1e-12):
        raise ValueError("phantom and optics disagree on n_medium")
    if np.max(np.abs(phantom.values - phantom.n_medium)) > 0.1 + 1e-12:
        raise ValueError("phantom is not weakly scattering (|delta_n| > 0.1)")
    if spectrum is None:
        spectrum = scattering_spectrum(phantom, config.wavelength)
    em = ewald_map(phantom.shape, phantom.voxel_pitch, k_in, config)
    U = np.zeros((ny, nx), dtype=np.complex128)
    U[em.mask] = (1j / (2 * em.kz)) * spectrum.ravel()[em.flat_index]
    return icft2(U, phantom.voxel_pitch)


def simulate_field(phantom: RIVolume, k_in: WaveVector, config: OpticsConfig, spectrum=None) -> ComplexField2D:
    """Background-normalised detector field ``exp(u_R)``.

    ``spectrum`` may carry a precomputed :func:`scattering_spectrum` when many
    angles are simulated for the same phantom.
    """
    u_r = rytov_field(phantom, k_in, config, spectrum)
    return ComplexField2D(np.exp(u_r), phantom.voxel_pitch)


# ---------------------------------------------------------------------------
# holograms and defects

def synthesize_hologram(field: ComplexField2D, carrier, ref_amplitude=1.0) -> RealImage:
    """Off-axis intensity |u + R exp(i q.r)|^2."""
    qx, qy = carrier
    nyq = math.pi / field.pixel_pitch
    if math.hypot(qx, qy) > (2 / 3) * nyq * (1 + 1e-12):
        raise ValueError(f"carrier |q|={math.hypot(qx, qy):.4g} exceeds 2/3 of Nyquist ({nyq:.4g})")
    x, y = space_grid(field.height, field.width, field.pixel_pitch)
    total = field.values + ref_amplitude * np.exp(1j * (qx * x + qy * y))
    return RealImage(np.abs(total) ** 2, field.pixel_pitch)


def inject_fringe_noise(field: ComplexField2D, spec: NoiseSpec) -> ComplexField2D:
    if spec.kind != "fringe":
        raise ValueError("inject_fringe_noise needs a fringe NoiseSpec")
    if spec.fringe_amplitude == 0:
        return field
    x, y = space_grid(field.height, field.width, field.pixel_pitch)
    qx, qy = spec.fringe_freq
    parasite = spec.fringe_amplitude * np.exp(1j * (qx * x + qy * y + spec.fringe_phase))
    return field.with_values(field.values + parasite)


def broken_region(shape, fraction, rng) -> np.ndarray:
    """Irregular blob covering round(fraction * pixels) pixels.

    The blob is the top quantile of smoothed periodic white noise, so its edge
    meanders instead of concentrating on one spectral line.
    """
    h, w = shape
    count = int(round(fraction * h * w))
    g = ndimage.gaussian_filter(rng.normal(size=(h, w)), 0.09 * min(h, w), mode="wrap")
    order = np.argsort(-g.ravel(), kind="stable")
    mask = np.zeros(h * w, dtype=bool)
    mask[order[:count]] = True
    return mask.reshape(h, w)


def inject_broken_phase(field: ComplexField2D, spec: NoiseSpec) -> ComplexField2D:
    """Replace a seeded region with random phase and attenuated amplitude.

    2*pi fault lines at the region edge have no field-level signature; they
    appear once the phase is unwrapped.
    """
    if spec.kind != "broken":
        raise ValueError("inject_broken_phase needs a broken NoiseSpec")
    if spec.broken_fraction == 0:
        return field
    rng = np.random.default_rng(spec.seed)
    mask = broken_region(field.values.shape, spec.broken_fraction, rng)
    factor = rng.uniform(0.0, 0.2)
    phase = wrap_values(rng.uniform(-math.pi, math.pi, size=int(mask.sum())))
    v = field.values.copy()
    v[mask] = np.abs(v[mask]) * factor * np.exp(1j * phase)
    return field.with_values(v)


def apply_noise(field: ComplexField2D, spec: NoiseSpec | None) -> ComplexField2D:
    if spec is None:
        return field
    if spec.kind == "fringe":
        return inject_fringe_noise(field, spec)
    return inject_broken_phase(field, spec)
