"""Labelled synthetic datasets: OFC1 fields plus a JSON-lines manifest."""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io
from .forward import (BeadSpec, NoiseSpec, OpticsConfig, RIVolume, RodSpec, apply_noise, illumination_set,
                      make_phantom, scattering_spectrum, simulate_field)

MANIFEST_NAME = "manifest.jsonl"


@dataclass(frozen=True)
class NoiseRanges:
    fringe_amplitude: tuple = (0.3, 1.5)
    fringe_radius: tuple = (0.55, 0.95)   # |q| as a fraction of the pupil radius
    broken_fraction: tuple = (0.1, 0.5)


def record_seed(master_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([int(master_seed), int(index)]).generate_state(1)[0])


def random_phantom(rng, nz_extent: float, fov: float = 20.48):
    """A cluster of 4 to 10 beads and rods scattered around the optical axis.

    Returns a list of (shape_spec, delta_n). Dense clusters give clean fields
    real high-frequency content, as cells and bacterial colonies do. Sizes
    shrink on grids too small for the default 2 um bead.
    """
    s = min(1.0, (min(nz_extent, fov) / 2 - 0.3) / 2.0)
    if s <= 0:
        raise ValueError("grid too small for a random phantom")
    oz_max = max(0.0, min(0.5, nz_extent / 2 - 0.2 - 2.0 * s))
    oxy = max(0.0, min(5.5, 0.45 * fov - 2.2 * s))
    parts = []
    for _ in range(int(rng.integers(4, 11))):
        offset = (rng.uniform(-oxy, oxy), rng.uniform(-oxy, oxy), rng.uniform(-oz_max, oz_max))
        if rng.random() < 0.5:
            shape = BeadSpec(s * rng.uniform(0.4, 1.8), offset)
        else:
            shape = RodSpec(s * rng.uniform(1.5, 4.0), s * rng.uniform(0.35, 0.6), rng.uniform(0, math.pi), offset)
        parts.append((shape, float(rng.uniform(0.03, 0.1))))
    return parts


def build_phantom(parts, shape, voxel_pitch, n_medium=1.337) -> RIVolume:
    """Union of shapes; where shapes overlap the larger index wins."""
    if not parts:
        raise ValueError("a phantom needs at least one shape")
    values = None
    for spec, dn in parts:
        v = make_phantom(spec, shape, voxel_pitch, n_medium, dn).values
        values = v if values is None else np.maximum(values, v)
    return RIVolume(values, voxel_pitch, n_medium)


def sample_noise(kind, rng, config: OpticsConfig, ranges: NoiseRanges, seed: int):
    if kind == "clean":
        return None
    if kind == "fringe":
        a = rng.uniform(*ranges.fringe_amplitude)
        rad = rng.uniform(*ranges.fringe_radius) * config.pupil_radius
        ang = rng.uniform(0, 2 * math.pi)
        dk = 2 * math.pi / (config.detector_pixels * config.pixel_pitch)
        q = (round(rad * math.cos(ang) / dk) * dk, round(rad * math.sin(ang) / dk) * dk)
        return NoiseSpec("fringe", fringe_amplitude=float(a), fringe_freq=q,
                         fringe_phase=float(rng.uniform(0, 2 * math.pi)), seed=seed)
    return NoiseSpec("broken", broken_fraction=float(rng.uniform(*ranges.broken_fraction)), seed=seed)


def kind_counts(count, noise_mix, balance):
    f = float(noise_mix.get("fringe", 0.0))
    b = float(noise_mix.get("broken", 0.0))
    if f < 0 or b < 0 or f + b > 1 + 1e-12:
        raise ValueError(f"noise fractions must be non-negative and sum to <= 1, got {noise_mix}")
    if count < 2:
        raise ValueError("count must be at least 2")
    if balance:
        if f + b == 0:
            raise ValueError("cannot balance a dataset without noisy fields")
        noisy = count // 2
        nf = int(round(noisy * f / (f + b)))
        return {"clean": noisy, "fringe": nf, "broken": noisy - nf}
    nf = int(round(count * f))
    nb = int(round(count * b))
    return {"clean": count - nf - nb, "fringe": nf, "broken": nb}


def split_labels(labels, train_fraction, seed):
    """Per-label seeded shuffle; the first round(n * train_fraction) of each label train."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x5EED]))
    split = ["test"] * len(labels)
    for lab in ("clean", "noisy"):
        idx = np.array([i for i, l in enumerate(labels) if l == lab], dtype=np.int64)
        rng.shuffle(idx)
        for i in idx[: int(round(len(idx) * train_fraction))]:
            split[i] = "train"
    return split


def generate_dataset(out_dir, config: OpticsConfig, count: int, noise_mix=None, balance=True,
                     seed: int = 0, phantom_specs=None, train_fraction=0.75, nz=64,
                     ranges: NoiseRanges = NoiseRanges(), threads: int = 1):
    """Simulate ``count`` labelled fields and write them with a manifest.

    Records are grouped into tomograms of ``config.num_angles`` fields; record
    ``i`` uses phantom ``i // num_angles`` and angle ``i % num_angles``.
    ``phantom_specs`` is a list of (shape_spec, delta_n) used cyclically;
    by default phantoms are random clusters. Returns the manifest records.
    """
    noise_mix = {"fringe": 0.25, "broken": 0.25} if noise_mix is None else noise_mix
    counts = kind_counts(count, noise_mix, balance)
    total = sum(counts.values())
    kinds = np.array(["clean"] * counts["clean"] + ["fringe"] * counts["fringe"] + ["broken"] * counts["broken"])
    kinds = kinds[np.random.default_rng(np.random.SeedSequence([int(seed), 0xC1A55])).permutation(total)]
    labels = ["clean" if k == "clean" else "noisy" for k in kinds]
    split = split_labels(labels, train_fraction, seed)

    out_dir = Path(out_dir)
    (out_dir / "fields").mkdir(parents=True, exist_ok=True)
    angles = illumination_set(config)
    na = config.num_angles
    n_phantoms = -(-total // na)
    shape = (nz, config.detector_pixels, config.detector_pixels)

    def phantom_for(j):
        if phantom_specs:
            parts = [phantom_specs[j % len(phantom_specs)]]
        else:
            parts = random_phantom(np.random.default_rng(np.random.SeedSequence([int(seed), 1, j])),
                                   nz * config.pixel_pitch, config.detector_pixels * config.pixel_pitch)
        return build_phantom(parts, shape, config.pixel_pitch, config.n_medium)

    def build(j):
        vol = phantom_for(j)
        spec3 = scattering_spectrum(vol, config.wavelength)
        recs = []
        for i in range(j * na, min(total, (j + 1) * na)):
            a = i % na
            rs = record_seed(seed, i)
            noise = sample_noise(str(kinds[i]), np.random.default_rng(rs), config, ranges, rs)
            if noise is not None and not noise.is_noisy:
                raise AssertionError("sampled noise below the labelling threshold")
            fld = apply_noise(simulate_field(vol, angles[a], config, spec3), noise)
            rel = f"fields/{i:06d}.ofc"
            try:
                io.write_field(out_dir / rel, fld)
            except OSError as exc:
                raise OSError(f"cannot write {out_dir / rel}: {exc}") from exc
            recs.append({
                "path": rel,
                "label": labels[i],
                "kind": str(kinds[i]),
                "fringe_amplitude": noise.fringe_amplitude if noise else 0.0,
                "fringe_freq": list(noise.fringe_freq) if noise else [0.0, 0.0],
                "broken_fraction": noise.broken_fraction if noise else 0.0,
                "angle_index": a,
                "k_in": angles[a].as_list(),
                "phantom": j,
                "seed": rs,
                "split": split[i],
            })
        return recs

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            groups = list(ex.map(build, range(n_phantoms)))
    else:
        groups = [build(j) for j in range(n_phantoms)]
    records = [r for g in groups for r in g]
    write_manifest(out_dir / MANIFEST_NAME, records)
    return records


def write_manifest(path, records):
    lines = [json.dumps(r, sort_keys=True) for r in records]
    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write manifest {path}: {exc}") from exc


def read_manifest(path):
    """Return records with ``path`` resolved against the manifest's directory."""
    path = Path(path)
    base = path.parent
    out = []
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{n}: invalid JSON ({exc})") from exc
            rec["path"] = str(base / rec["path"])
            out.append(rec)
    return out


def load_field(record):
    try:
        return io.read_field(record["path"])
    except OSError as exc:
        raise OSError(f"cannot read field {record['path']}: {exc}") from exc
