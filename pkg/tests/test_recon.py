import math
import warnings

import numpy as np
import pytest

from odtqc.field import ComplexField2D
from odtqc.forward import (BeadSpec, NoiseSpec, OpticsConfig, RIVolume, ewald_map, illumination_set,
                           inject_fringe_noise, make_phantom, rytov_field, scattering_spectrum, simulate_field)
from odtqc.recon import (SpectrumAccumulator, background_sd, map_to_ewald, reconstruct_tomogram,
                         rytov_transform)

CFG = OpticsConfig(detector_pixels=64, num_angles=9)
SHAPE = (64, 64, 64)


@pytest.fixture(scope="module")
def bead():
    vol = make_phantom(BeadSpec(1.5, (0.3, -0.2, 0.1)), SHAPE, CFG.pixel_pitch, CFG.n_medium, 0.02)
    return vol, scattering_spectrum(vol, CFG.wavelength)


def test_rytov_trivial_cases():
    assert not rytov_transform(ComplexField2D(np.ones((8, 8)))).values.any()
    c = np.exp(0.1 + 0.2j)
    out = rytov_transform(ComplexField2D(np.full((8, 8), c))).values
    assert np.abs(out - (0.1 + 0.2j)).max() < 1e-15


def test_rytov_clamps_with_warning():
    v = np.ones((4, 4), complex)
    v[1, 1] = 0
    with pytest.warns(RuntimeWarning, match="clamped"):
        out = rytov_transform(ComplexField2D(v)).values
    assert out[1, 1].real == pytest.approx(math.log(1e-6))


def test_rytov_inverts_simulation(bead):
    vol, spec = bead
    for k in illumination_set(CFG)[:3]:
        ur = rytov_field(vol, k, CFG, spec)
        back = rytov_transform(simulate_field(vol, k, CFG, spec)).values
        # the unwrapper may add a global 2*pi*k to the imaginary part
        d = back - ur
        shift = 2 * math.pi * round(d.imag.mean() / (2 * math.pi))
        assert np.abs(d - 1j * shift).max() < 1e-6


def test_zero_deposit_counts_cap():
    acc = SpectrumAccumulator(SHAPE, CFG.pixel_pitch)
    k = illumination_set(CFG)[3]
    map_to_ewald(ComplexField2D(np.zeros((64, 64)), CFG.pixel_pitch), k, acc, CFG)
    assert not acc.grid.any()
    em = ewald_map(SHAPE, CFG.pixel_pitch, k, CFG)
    assert acc.hit_count.sum() == em.mask.sum() > 0


def test_normal_incidence_cap_touches_origin():
    acc = SpectrumAccumulator(SHAPE, CFG.pixel_pitch)
    map_to_ewald(ComplexField2D(np.zeros((64, 64)), CFG.pixel_pitch), illumination_set(CFG)[0], acc, CFG)
    assert acc.hit_count[32, 32, 32] == 1


def test_map_rejects_wrong_grid():
    acc = SpectrumAccumulator(SHAPE, CFG.pixel_pitch)
    with pytest.raises(ValueError):
        map_to_ewald(ComplexField2D(np.zeros((32, 32))), illumination_set(CFG)[0], acc, CFG)


def test_single_angle_round_trip(bead):
    vol, spec = bead
    acc = SpectrumAccumulator(SHAPE, CFG.pixel_pitch)
    k = illumination_set(CFG)[5]
    map_to_ewald(rytov_transform(simulate_field(vol, k, CFG, spec)), k, acc, CFG)
    f = acc.filled
    rel = np.abs(acc.grid[f] - spec[f]) / np.abs(spec).max()
    assert rel.max() < 1e-10


def test_all_angle_round_trip_and_masked_volume(bead):
    vol, spec = bead
    ks = illumination_set(CFG)
    fields = [simulate_field(vol, k, CFG, spec) for k in ks]
    rec, acc = reconstruct_tomogram(fields, ks, CFG, nz=64, return_accumulator=True)
    f = acc.filled
    m = acc.mean_spectrum()
    assert np.abs(m[f] - spec[f]).max() / np.abs(spec).max() < 1e-10
    # support-masked phantom in real space
    masked = np.where(f, spec, 0)
    d = CFG.pixel_pitch
    pot = np.fft.fftshift(np.fft.ifftn(np.fft.ifftshift(masked))).real / d ** 3
    k0 = 2 * math.pi / CFG.wavelength
    expected = np.sqrt(np.maximum(CFG.n_medium ** 2 + pot / k0 ** 2, 1.0))
    assert np.abs(rec.values - expected).max() < 1e-9
    assert np.all(rec.values >= 1.0)


def test_zero_phantom_gives_medium():
    vol = RIVolume(np.full((16, 64, 64), CFG.n_medium), CFG.pixel_pitch, CFG.n_medium)
    ks = illumination_set(CFG)
    rec = reconstruct_tomogram([simulate_field(vol, k, CFG) for k in ks], ks, CFG, nz=16)
    assert np.abs(rec.values - CFG.n_medium).max() < 1e-12


def test_permutation_invariance_and_monotone_support(bead):
    vol, spec = bead
    ks = illumination_set(CFG)
    fields = [simulate_field(vol, k, CFG, spec) for k in ks]
    idx = list(range(len(ks)))
    a = reconstruct_tomogram(fields, ks, CFG, nz=32, angle_indices=idx)
    perm = np.random.default_rng(0).permutation(len(ks))
    b = reconstruct_tomogram([fields[i] for i in perm], [ks[i] for i in perm], CFG, nz=32,
                             angle_indices=[idx[i] for i in perm])
    np.testing.assert_array_equal(a.values, b.values)
    acc = SpectrumAccumulator((32, 64, 64), CFG.pixel_pitch)
    prev = acc.hit_count.copy()
    for f, k in zip(fields, ks):
        map_to_ewald(rytov_transform(f), k, acc, CFG)
        assert np.all(acc.hit_count >= prev)
        prev = acc.hit_count.copy()


def test_reconstruct_errors():
    with pytest.raises(ValueError):
        reconstruct_tomogram([], [], CFG)
    with pytest.raises(ValueError):
        reconstruct_tomogram([ComplexField2D(np.ones((64, 64)))], [], CFG)


def test_fringes_raise_background_sd(bead):
    vol, spec = bead
    ks = illumination_set(CFG)
    fields = [simulate_field(vol, k, CFG, spec) for k in ks]
    dk = 2 * math.pi / (64 * CFG.pixel_pitch)
    noisy = [inject_fringe_noise(f, NoiseSpec("fringe", 0.6, (9 * dk, 4 * dk), seed=1)) if i % 3 == 1 else f
             for i, f in enumerate(fields)]
    region = (2, 10, 2, 14, 2, 14)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        sd_all = background_sd(reconstruct_tomogram(noisy, ks, CFG, nz=64), region)
    keep = [i for i in range(len(ks)) if i % 3 != 1]
    sd_clean = background_sd(reconstruct_tomogram([fields[i] for i in keep], [ks[i] for i in keep], CFG, nz=64),
                             region)
    assert sd_clean < sd_all


def test_background_sd_examples():
    assert background_sd(RIVolume(np.full((4, 4, 4), 1.34), 0.1, 1.33), (0, 4, 0, 4, 0, 4)) == 0
    v = np.full((2, 2, 2), 1.336)
    v[1] = 1.338
    assert background_sd(RIVolume(v, 0.1, 1.33), (0, 2, 0, 1, 0, 1)) == pytest.approx(0.001, abs=1e-15)
    with pytest.raises(ValueError):
        background_sd(RIVolume(v, 0.1, 1.33), (0, 1, 0, 1, 0, 1))
    with pytest.raises(ValueError):
        background_sd(RIVolume(v, 0.1, 1.33), (0, 3, 0, 1, 0, 1))


def test_reported_background_ratio_fixture():
    present, rater, rule = 0.91e-3, 0.90e-3, 1.60e-3
    assert present / rule == pytest.approx(0.569, abs=1e-3)
    assert rater < present < rule
