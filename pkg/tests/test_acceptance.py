"""The ten acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line, printed at the end of the pytest run
(and immediately with ``-s``). #6, #7 and #9 share one trained network.
"""
import math
import subprocess
import sys
import time
import warnings
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE
from oracles import band_limit, gradient_errors, mini_draw, random_band_field, smooth_fields
from odtqc.dataset import NoiseRanges, generate_dataset, load_field, sample_noise
from odtqc.field import ComplexField2D, PhaseImage, wrap_phase, wrap_values
from odtqc.forward import (BeadSpec, OpticsConfig, apply_noise, illumination_set, make_phantom,
                           scattering_spectrum, simulate_field, synthesize_hologram)
from odtqc.net.metrics import evaluate_metrics
from odtqc.net.model import forward_pass, init_params
from odtqc.net.train import TrainConfig, field_to_input, load_inputs, predict, train_arrays
from odtqc.recon import background_sd, reconstruct_tomogram
from odtqc.retrieval import normalize_background, retrieve_field, unwrap_phase
from odtqc.rule import RuleConfig, calibrate_threshold, rule_score
from odtqc.saliency import cam_map, grad_cam, guided_backprop

ROOT = Path(__file__).resolve().parents[1]
FULL_OPTICS = OpticsConfig(detector_pixels=128)
TRAIN_EPOCHS = 8


def record(number, title, passed, detail):
    ACCEPTANCE.append((number, title, bool(passed), detail))
    print(f"\n{'PASS' if passed else 'FAIL'} #{number} {title}: {detail}")
    assert passed, detail


def test_01_gradient_correctness():
    t0 = time.perf_counter()
    worst_tensor, worst_elem = 0.0, 0.0
    for seed in range(10):
        params, x, y = mini_draw(seed)
        t, e = gradient_errors(params, x, y, h=1e-5)
        worst_tensor, worst_elem = max(worst_tensor, t), max(worst_elem, e)
    dt = time.perf_counter() - t0
    record(1, "gradient correctness", worst_tensor < 1e-6 and dt < 60,
           f"worst per-tensor relative error {worst_tensor:.2e} (< 1e-6), "
           f"element-wise with 1e-4 floor {worst_elem:.2e}, {dt:.1f} s")


def test_02_architecture_arithmetic():
    _, cache = forward_pass(init_params(0), np.zeros((1, 128, 128)), keep_cols=False)
    sizes = [int(np.prod(s[:1] + s[2:])) for s in cache.shapes]
    want = [32 * 64 ** 2, 64 * 32 ** 2, 128 * 16 ** 2, 256 * 8 ** 2, 512 * 4 ** 2, 1024]
    record(2, "architecture arithmetic", sizes == want, f"block outputs {sizes}")


def test_03_forward_inverse_exactness():
    t0 = time.perf_counter()
    shape = (128, 128, 128)
    vol = make_phantom(BeadSpec(2.0, (0.4, -0.3, 0.2)), shape, FULL_OPTICS.pixel_pitch, FULL_OPTICS.n_medium, 0.03)
    spec = scattering_spectrum(vol, FULL_OPTICS.wavelength)
    ks = illumination_set(FULL_OPTICS)
    fields = [simulate_field(vol, k, FULL_OPTICS, spec) for k in ks]
    _, acc = reconstruct_tomogram(fields, ks, FULL_OPTICS, nz=128, return_accumulator=True)
    f = acc.filled
    err = float(np.abs(acc.mean_spectrum()[f] - spec[f]).max() / np.abs(spec).max())
    dt = time.perf_counter() - t0
    record(3, "forward/inverse exactness", err <= 1e-10 and dt < 120,
           f"{len(ks)} angles, {int(f.sum())} filled voxels, max relative error {err:.2e} (<= 1e-10), {dt:.1f} s")


def test_04_metric_arithmetic():
    truths = ["clean"] * 22 + ["noisy"] * 23
    preds = ["clean"] * 16 + ["noisy"] * 6 + ["noisy"] * 22 + ["clean"]
    m = evaluate_metrics(preds, truths)
    got = (100 * m.accuracy, 100 * m.specificity, 100 * m.sensitivity)
    want = (84.44, 72.72, 95.65)
    ok = all(abs(g - w) <= 0.01 for g, w in zip(got, want))
    record(4, "metric arithmetic", ok and [round(g, 2) for g in got] == [84.44, 72.73, 95.65],
           "accuracy {:.4f}%, specificity {:.4f}%, sensitivity {:.4f}%".format(*got))


def test_05_screening_benefit():
    t0 = time.perf_counter()
    cfg = FULL_OPTICS
    nz = 64
    vol = make_phantom(BeadSpec(2.0, (0.3, -0.2, 0.0)), (nz, 128, 128), cfg.pixel_pitch, cfg.n_medium, 0.03)
    spec = scattering_spectrum(vol, cfg.wavelength)
    ks = illumination_set(cfg)
    rng = np.random.default_rng(2024)
    noisy_idx = set(rng.choice(len(ks), 17, replace=False).tolist())
    ranges = NoiseRanges(fringe_amplitude=(0.5, 1.5))
    fields, amps = [], []
    for i, k in enumerate(ks):
        f = simulate_field(vol, k, cfg, spec)
        if i in noisy_idx:
            noise = sample_noise("fringe", np.random.default_rng([2024, i]), cfg, ranges, i)
            amps.append(noise.fringe_amplitude)
            f = apply_noise(f, noise)
        fields.append(f)
    region = (nz // 4, nz - nz // 4, 0, 16, 0, 16)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        sd_all = background_sd(reconstruct_tomogram(fields, ks, cfg, nz=nz), region)
    keep = [i for i in range(len(ks)) if i not in noisy_idx]
    sd_clean = background_sd(reconstruct_tomogram([fields[i] for i in keep], [ks[i] for i in keep], cfg, nz=nz),
                             region)
    ratio = sd_clean / sd_all
    dt = time.perf_counter() - t0
    record(5, "screening benefit", len(keep) == 54 and min(amps) >= 0.5 and ratio <= 0.75 and dt < 300,
           f"{len(keep)} clean + {len(amps)} fringe fields; background SD {sd_clean:.3e} vs {sd_all:.3e}, "
           f"ratio {ratio:.4f} (<= 0.75), {dt:.1f} s")


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    """1,500 fields: 1,000 for training, 500 held out; rule and network scored on the same test set."""
    t0 = time.perf_counter()
    out = tmp_path_factory.mktemp("accept")
    recs = generate_dataset(out, FULL_OPTICS, 1500, {"fringe": 0.25, "broken": 0.25}, True, seed=11,
                            train_fraction=2 / 3, nz=32)
    recs = [dict(r, path=str(out / r["path"])) for r in recs]
    tr = [r for r in recs if r["split"] == "train"]
    te = [r for r in recs if r["split"] == "test"]
    xtr, ytr = load_inputs(tr)
    xte, yte = load_inputs(te)
    res = train_arrays(xtr, ytr, TrainConfig(epochs=TRAIN_EPOCHS, seed=5))
    prob = predict(res.params, xte)
    rc = RuleConfig.default(FULL_OPTICS)
    threshold = calibrate_threshold([rule_score(load_field(r), rc) for r in tr], [r["label"] for r in tr])
    rule_scores = np.array([rule_score(load_field(r), rc) for r in te])
    return {"train": tr, "test": te, "y": yte, "result": res, "prob": prob, "threshold": threshold,
            "rule_scores": rule_scores, "seconds": time.perf_counter() - t0}


def test_06_classifier_accuracy(trained):
    m = evaluate_metrics(trained["prob"] > 0.5, trained["y"] > 0.5)
    res = trained["result"]
    ok = (len(trained["train"]) == 1000 and len(trained["test"]) == 500 and m.accuracy >= 0.9
          and len(res.log) <= 20 and trained["seconds"] <= 3600)
    record(6, "classifier accuracy", ok,
           f"test accuracy {m.accuracy:.4f} (>= 0.90) on {len(trained['test'])} fields after {len(res.log)} epochs "
           f"(best epoch {res.best_epoch}); specificity {m.specificity:.4f}, sensitivity {m.sensitivity:.4f}; "
           f"{trained['seconds'] / 60:.1f} min")


def test_07_net_beats_rule(trained):
    te, s, t = trained["test"], trained["rule_scores"], trained["threshold"]
    truth = trained["y"] > 0.5
    rule = evaluate_metrics(s > t, truth)
    net = evaluate_metrics(trained["prob"] > 0.5, truth)
    sens = {kind: float(np.mean([sc > t for sc, r in zip(s, te) if r["kind"] == kind])) for kind in ("fringe", "broken")}
    ok = net.accuracy > rule.accuracy and sens["broken"] < sens["fringe"]
    record(7, "net beats rule", ok,
           f"net accuracy {net.accuracy:.4f} vs rule {rule.accuracy:.4f} (threshold {t:.4f}); rule sensitivity "
           f"broken {sens['broken']:.4f} < fringe {sens['fringe']:.4f}; rule specificity {rule.specificity:.4f}")


def test_08_retrieval_and_unwrapping():
    t0 = time.perf_counter()
    n, p = 128, 0.16
    dk = 2 * math.pi / (n * p)
    q = (30 * dk, 30 * dk)
    # random band-limited fields, then the simulated bead field under a narrow pupil
    errs = []
    for seed in range(5):
        u = random_band_field(seed)
        got = retrieve_field(synthesize_hologram(ComplexField2D(u, p), q, 1.0), q, 10 * dk).values
        errs.append(np.abs(got - u).max() / np.abs(u).max())
    cfg = OpticsConfig(detector_pixels=n, na_illumination=0.2, na_detection=0.25, num_angles=5)
    vol = make_phantom(BeadSpec(1.5, (0.5, -0.3, 0.0)), (32, n, n), p, 1.337, 0.01)
    r = cfg.pupil_radius
    empty = retrieve_field(synthesize_hologram(ComplexField2D(np.ones((n, n)), p), q, 1.0), q, r)
    for k in illumination_set(cfg):
        u = simulate_field(vol, k, cfg).values
        got = normalize_background(retrieve_field(synthesize_hologram(ComplexField2D(u, p), q, 1.0), q, r), empty)
        ref = band_limit(u, r)
        errs.append(np.abs(got.values - ref).max() / np.abs(ref).max())
    field_err = float(max(errs))

    # wrap(unwrap(x)) against x over 100 smooth fields, bit for bit
    worst_ulps, exact_fields, pix_bad, pix_total = 0.0, 0, 0, 0
    for phi in smooth_fields(5):
        w = wrap_phase(PhaseImage(phi)).values
        out = unwrap_phase(PhaseImage(w)).values
        back = wrap_phase(PhaseImage(out)).values
        d = np.abs(back - w)
        exact_fields += not d.any()
        pix_bad += int(np.count_nonzero(d))
        pix_total += d.size
        worst_ulps = max(worst_ulps, d.max() / (np.finfo(float).eps * max(1.0, np.abs(out).max())))

    y, x = np.mgrid[0:64, 0:64]
    ramp = 0.9 * math.pi * x + 0.3 * y
    off = unwrap_phase(PhaseImage(wrap_values(ramp))).values - ramp
    ramp_err = float(np.abs(off - 2 * math.pi * round(off[0, 0] / (2 * math.pi))).max())
    dt = time.perf_counter() - t0
    ok = field_err < 1e-3 and exact_fields == 100 and ramp_err < 1e-9 and dt < 60
    record(8, "retrieval and unwrapping round trips", ok,
           f"in-band field error {field_err:.2e} (< 1e-3); wrap(unwrap(x)) == x bit for bit on {exact_fields}/100 "
           f"fields ({pix_bad}/{pix_total} pixels differ, worst {worst_ulps:.2f} eps x |unwrapped|, the rounding "
           f"of adding 2*pi*k); ramp error {ramp_err:.2e} (< 1e-9); {dt:.1f} s")


def test_09_saliency_contracts(trained):
    t0 = time.perf_counter()
    params = trained["result"].params
    # align-corners upsampling puts the 4x4 CAM nodes at multiples of 127/3 px; the bead sits on one
    row, col = 42, 85
    n, p = 128, FULL_OPTICS.pixel_pitch
    off = ((col - n // 2) * p, (row - n // 2) * p, 0.0)
    vol = make_phantom(BeadSpec(2.0, off), (32, n, n), p, FULL_OPTICS.n_medium, 0.03)
    x = field_to_input(simulate_field(vol, illumination_set(FULL_OPTICS)[0], FULL_OPTICS))
    cam, gb = cam_map(params, x), guided_backprop(params, x)
    product_exact = np.array_equal(grad_cam(cam, gb, normalize=False), cam.values * gb.values)
    maps = (cam.values, gb.values, grad_cam(cam, gb))
    ranges_ok = all(m.shape == (128, 128) and m.min() >= 0 and m.max() <= 1 for m in maps)
    i, j = np.unravel_index(np.argmax(cam.values), cam.values.shape)
    dist = float(math.hypot(i - row, j - col))
    dt = time.perf_counter() - t0
    record(9, "saliency contracts", product_exact and ranges_ok and dist <= 16 and dt < 60,
           f"product exact {product_exact}; maps 128x128 in [0,1] {ranges_ok}; CAM argmax ({i}, {j}) is "
           f"{dist:.1f} px from the bead at ({row}, {col}) (<= 16); {dt:.1f} s")


def test_10_pipeline_determinism(tmp_path):
    outs = []
    for k in range(2):
        o = tmp_path / f"run{k}"
        cmd = [sys.executable, "-m", "odtqc.cli", "pipeline", "--config", str(ROOT / "configs" / "demo.cfg"),
               "--seed", "7", "--out", str(o)]
        proc = subprocess.run(cmd, capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outs.append(o)
    names = sorted(q.relative_to(outs[0]).as_posix() for q in outs[0].rglob("*") if q.is_file())
    same_set = names == sorted(q.relative_to(outs[1]).as_posix() for q in outs[1].rglob("*") if q.is_file())
    differing = [nm for nm in names if (outs[0] / nm).read_bytes() != (outs[1] / nm).read_bytes()]
    kinds = {Path(nm).suffix for nm in names}
    ok = same_set and not differing and {".jsonl", ".qcn", ".riv", ".json", ".csv"} <= kinds
    record(10, "pipeline determinism", ok,
           f"{len(names)} files compared byte for byte, {len(differing)} differ; types {sorted(kinds)}")
