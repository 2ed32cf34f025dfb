"""Command-line entry point: ``odtqc <subcommand> [options]``.

Exit codes: 0 success, 1 invalid arguments or configuration, 2 I/O failure.
Configuration files hold ``key = value`` lines with dotted section names
(``optics.num_angles = 71``); command-line flags override them.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from ._jit import set_threads
from .dataset import MANIFEST_NAME, NoiseRanges, generate_dataset, load_field, read_manifest
from .field import ComplexField2D, PhaseImage, RealImage
from .forward import OpticsConfig, WaveVector, synthesize_hologram
from .net.model import classify
from .net.train import TrainConfig, evaluate, field_to_input, train, write_log
from .recon import background_sd, reconstruct_tomogram
from .retrieval import normalize_background, retrieve_field
from .rule import RuleConfig, calibrate_threshold, rule_score
from .net.metrics import evaluate_metrics

log = logging.getLogger("odtqc")


class UsageError(Exception):
    """Bad arguments or configuration (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


# ---------------------------------------------------------------------------
# configuration

CONFIG_KEYS = {
    "seed": int,
    "threads": int,
    "data.count": int, "data.fringe": float, "data.broken": float, "data.balance": bool,
    "data.nz": int, "data.train_fraction": float,
    "data.fringe_amplitude": "floats", "data.fringe_radius": "floats", "data.broken_fraction": "floats",
    "rule.mask_radius": float, "rule.mask_center": "floats", "rule.threshold": float, "rule.calibrate": bool,
    "train.epochs": int, "train.batch_size": int, "train.learning_rate": float,
    "train.input_mode": str, "train.channels": "ints", "train.hidden": "ints",
    "train.augment": bool, "train.elastic_alpha": float, "train.elastic_sigma": float,
    "train.validation_fraction": float, "train.dropout_rates": "floats",
    "recon.nz": int, "recon.phantom": int, "recon.region": "ints",
}
_OPTICS_TYPES = {"wavelength": float, "n_medium": float, "na_illumination": float, "na_detection": float,
                 "detector_pixels": int, "pixel_pitch": float, "num_angles": int}
CONFIG_KEYS.update({f"optics.{k}": t for k, t in _OPTICS_TYPES.items()})


def _convert(key, raw, kind):
    try:
        if kind is bool:
            low = raw.lower()
            if low not in ("true", "false", "yes", "no", "1", "0"):
                raise ValueError
            return low in ("true", "yes", "1")
        if kind == "floats":
            return tuple(float(v) for v in raw.split(","))
        if kind == "ints":
            return tuple(int(v) for v in raw.split(","))
        return kind(raw)
    except ValueError:
        raise UsageError(f"config key {key!r}: cannot parse {raw!r}") from None


def parse_config(text, source="<config>"):
    """Parse ``key = value`` lines; '#' starts a comment. Returns a flat dict."""
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{source}:{n}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise UsageError(f"{source}:{n}: unknown key {key!r}")
        out[key] = _convert(key, raw, CONFIG_KEYS[key])
    return out


def load_config(path):
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path))


def optics_from(cfg, args=None):
    kw = {k.split(".", 1)[1]: v for k, v in cfg.items() if k.startswith("optics.")}
    for name in ("detector_pixels", "num_angles"):
        v = getattr(args, name, None) if args is not None else None
        if v is not None:
            kw[name] = v
    return OpticsConfig(**kw)


def train_config_from(cfg, seed, args=None):
    kw = {"seed": seed}
    for key, value in cfg.items():
        if key.startswith("train."):
            kw[key.split(".", 1)[1]] = value
    if args is not None:
        for name in ("epochs", "batch_size", "learning_rate", "input_mode"):
            v = getattr(args, name, None)
            if v is not None:
                kw[name] = v
        if getattr(args, "no_augment", False):
            kw["augment"] = False
    return TrainConfig(**kw)


def _threads(args, cfg):
    n = getattr(args, "threads", None) or cfg.get("threads") or os.environ.get("ODTQC_THREADS")
    if n is None:
        return os.cpu_count() or 1
    try:
        n = int(n)
    except ValueError:
        raise UsageError(f"invalid thread count {n!r}") from None
    if n < 1:
        raise UsageError("thread count must be >= 1")
    return n


def _seed(args, cfg):
    seed = args.seed if getattr(args, "seed", None) is not None else cfg.get("seed")
    if seed is None:
        raise UsageError("a seed is required (--seed or 'seed = N' in the config)")
    return int(seed)


def _pair(text, what):
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"{what} must be 'x,y', got {text!r}") from None
    return a, b


# ---------------------------------------------------------------------------
# small helpers

def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def save_png(path, image, lo=None, hi=None):
    """Linear 8-bit grayscale export; returns the (min, max) mapped to 0 and 255."""
    from PIL import Image

    a = np.asarray(image, dtype=np.float64)
    lo = float(a.min()) if lo is None else lo
    hi = float(a.max()) if hi is None else hi
    scaled = np.zeros_like(a) if hi <= lo else (a - lo) / (hi - lo)
    Image.fromarray(np.round(np.clip(scaled, 0, 1) * 255).astype(np.uint8), mode="L").save(path)
    return lo, hi


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def default_carrier(config: OpticsConfig):
    """Diagonal carrier on a grid bin, just inside 2/3 of Nyquist."""
    n, p = config.detector_pixels, config.pixel_pitch
    dk = 2 * math.pi / (n * p)
    bins = math.floor((n / 3) / math.sqrt(2))
    return bins * dk, bins * dk


def _manifest_base(path):
    return Path(path).resolve().parent


def _rel(path, base):
    return os.path.relpath(Path(path).resolve(), base)


def _records(path, split=None):
    try:
        recs = read_manifest(path)
    except OSError as exc:
        raise OSError(f"cannot read manifest {path}: {exc}") from exc
    if split:
        recs = [r for r in recs if r.get("split") == split]
    if not recs:
        raise UsageError(f"no records in {path}" + (f" with split={split}" if split else ""))
    return recs


# ---------------------------------------------------------------------------
# subcommands

def cmd_simulate(args, cfg):
    seed = _seed(args, cfg)
    optics = optics_from(cfg, args)
    count = args.count if args.count is not None else cfg.get("data.count", 284)
    mix = {"fringe": args.fringe if args.fringe is not None else cfg.get("data.fringe", 0.25),
           "broken": args.broken if args.broken is not None else cfg.get("data.broken", 0.25)}
    ranges = NoiseRanges(**{k: cfg[f"data.{k}"] for k in ("fringe_amplitude", "fringe_radius", "broken_fraction")
                            if f"data.{k}" in cfg})
    balance = cfg.get("data.balance", True) and not args.no_balance
    recs = generate_dataset(args.out, optics, count, mix, balance, seed,
                            train_fraction=cfg.get("data.train_fraction", 0.75),
                            nz=args.nz or cfg.get("data.nz", 64), ranges=ranges, threads=_threads(args, cfg))
    if args.holograms:
        carrier = default_carrier(optics)
        hdir = Path(args.out) / "holograms"
        hdir.mkdir(exist_ok=True)
        n = optics.detector_pixels
        io.write_image(hdir / "background.oph",
                       synthesize_hologram(ComplexField2D(np.ones((n, n)), optics.pixel_pitch), carrier))
        for r in recs:
            f = io.read_field(Path(args.out) / r["path"])
            io.write_image(hdir / (Path(r["path"]).stem + ".oph"), synthesize_hologram(f, carrier))
    print(f"wrote {len(recs)} fields to {args.out}")
    return 0


def cmd_retrieve(args, cfg):
    optics = optics_from(cfg)
    carrier = _pair(args.carrier, "--carrier") if args.carrier else default_carrier(optics)
    radius = args.crop_radius if args.crop_radius is not None else optics.pupil_radius
    bg = None
    if args.background:
        bg = retrieve_field(io.read_image(args.background, RealImage), carrier, radius)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for h in args.holograms:
        u = retrieve_field(io.read_image(h, RealImage), carrier, radius)
        if bg is not None:
            u = normalize_background(u, bg)
        io.write_field(out_dir / (Path(h).stem + ".ofc"), u)
    print(f"retrieved {len(args.holograms)} field(s) into {out_dir}")
    return 0


def _rule_config(args, cfg, optics):
    rc = RuleConfig.default(optics)
    radius = args.mask_radius if args.mask_radius is not None else cfg.get("rule.mask_radius", rc.mask_radius)
    center = _pair(args.mask_center, "--mask-center") if args.mask_center else cfg.get("rule.mask_center", (0.0, 0.0))
    threshold = args.threshold if args.threshold is not None else cfg.get("rule.threshold", rc.threshold)
    return RuleConfig(radius, tuple(center), threshold)


def screen_rows(records, base, scorer):
    rows = []
    for r in records:
        score, decision = scorer(load_field(r))
        rows.append((_rel(r["path"], base), score, decision))
    return rows


def write_scores(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "score", "decision"])
        for p, s, d in rows:
            w.writerow([p, repr(float(s)), d])


def cmd_screen(args, cfg):
    if args.rule == (args.model is not None):
        raise UsageError("screen needs exactly one of --rule or --model")
    optics = optics_from(cfg)
    base = _manifest_base(args.manifest)
    recs = _records(args.manifest, args.split)
    if args.rule:
        rc = _rule_config(args, cfg, optics)
        if args.calibrate or cfg.get("rule.calibrate", False):
            cal = _records(args.manifest, "train")
            t = calibrate_threshold([rule_score(load_field(r), rc) for r in cal], [r["label"] for r in cal])
            rc = replace(rc, threshold=t)
            print(f"calibrated threshold {t:.6f}")

        def scorer(f):
            s = rule_score(f, rc)
            return s, ("noisy" if s > rc.threshold else "clean")
    else:
        params = io.read_params(args.model)
        thr = args.threshold if args.threshold is not None else 0.5

        def scorer(f):
            label, p = classify(params, field_to_input(f, params.input_mode), thr)
            return p, label
    rows = screen_rows(recs, base, scorer)
    write_scores(args.out, rows)
    print(f"screened {len(rows)} fields: {sum(d == 'noisy' for _, _, d in rows)} noisy")
    return 0


def cmd_train(args, cfg):
    seed = _seed(args, cfg)
    tc = train_config_from(cfg, seed, args)
    result = train(args.manifest, tc, progress=lambda row: print(
        f"epoch {row['epoch']}: loss {row['train_loss']:.4f} train {row['train_acc']:.3f} val {row['val_acc']:.3f}"))
    io.write_params(args.out, result.params)
    if args.log:
        write_log(args.log, result.log)
    print(f"best epoch {result.best_epoch}; model written to {args.out}")
    return 0


def cmd_evaluate(args, cfg):
    params = io.read_params(args.model)
    recs = _records(args.manifest, args.split)
    m, probs = evaluate(params, recs, args.threshold)
    report = {"count": len(recs), **{k: (None if isinstance(v, float) and math.isnan(v) else v)
                                     for k, v in m.as_dict().items()}}
    if args.out:
        write_json(args.out, report)
    print(f"accuracy {m.accuracy:.4f} specificity {m.specificity:.4f} sensitivity {m.sensitivity:.4f}")
    return 0


def _select_fields(recs, phantom):
    if phantom is not None and any("phantom" in r for r in recs):
        recs = [r for r in recs if r.get("phantom") == phantom]
    if not recs:
        raise UsageError(f"no fields for phantom {phantom}")
    return recs


def reconstruct_records(recs, optics, nz):
    fields = [load_field(r) for r in recs]
    ks = [WaveVector(*r["k_in"]) for r in recs]
    idx = [r.get("angle_index", i) for i, r in enumerate(recs)]
    return reconstruct_tomogram(fields, ks, optics, nz=nz, angle_indices=idx)


def default_region(shape):
    nz, ny, nx = shape
    return (nz // 4, nz - nz // 4, 0, max(2, ny // 8), 0, max(2, nx // 8))


def cmd_reconstruct(args, cfg):
    optics = optics_from(cfg)
    recs = _select_fields(_records(args.manifest), args.phantom if args.phantom is not None
                          else cfg.get("recon.phantom", 0))
    if args.scores:
        base = _manifest_base(args.manifest)
        with open(args.scores, newline="") as fh:
            keep = {row["path"] for row in csv.DictReader(fh) if row["decision"] == "clean"}
        recs = [r for r in recs if _rel(r["path"], base) in keep]
        if not recs:
            raise UsageError("no clean fields left after screening")
    nz = args.nz or cfg.get("recon.nz", 64)
    vol = reconstruct_records(recs, optics, nz)
    io.write_volume(args.out, vol)
    region = tuple(cfg.get("recon.region", default_region(vol.shape)))
    sd = background_sd(vol, region)
    print(f"{len(recs)} fields; RI min {vol.values.min():.6f} max {vol.values.max():.6f}; background SD {sd:.3e}")
    if args.png:
        lo, hi = save_png(args.png, vol.values[vol.shape[0] // 2])
        print(f"slice PNG {args.png}: gray 0 = {lo:.6f}, 255 = {hi:.6f}")
    return 0


def cmd_saliency(args, cfg):
    from .saliency import GUIDED_BLOCK, cam_map, grad_cam, guided_backprop

    params = io.read_params(args.model)
    x = field_to_input(io.read_field(args.field), params.input_mode)
    block = min(GUIDED_BLOCK, len(params.conv) - 2)  # shallow models stop earlier
    if args.method == "cam":
        m = cam_map(params, x)
        vals, flag = m.values, m.degenerate
    elif args.method == "guidedbp":
        m = guided_backprop(params, x, block)
        vals, flag = m.values, m.degenerate
    else:
        c, g = cam_map(params, x), guided_backprop(params, x, block)
        vals, flag = grad_cam(c, g), c.degenerate or g.degenerate
    prefix = Path(args.out)
    io.write_image(prefix.with_suffix(".oph"), PhaseImage(vals))
    save_png(prefix.with_suffix(".png"), vals, 0.0, 1.0)
    if flag:
        print("warning: zero-gradient map", file=sys.stderr)
    print(f"{args.method} map written to {prefix.with_suffix('.oph')} and .png")
    return 0


def cmd_pipeline(args, cfg):
    """simulate -> screen (rule and net) -> evaluate -> reconstruct -> summary.json"""
    seed = _seed(args, cfg)
    out = Path(args.out)
    optics = optics_from(cfg)
    data = out / "data"
    count = cfg.get("data.count", 4 * optics.num_angles)
    ranges = NoiseRanges(**{k: cfg[f"data.{k}"] for k in ("fringe_amplitude", "fringe_radius", "broken_fraction")
                            if f"data.{k}" in cfg})
    generate_dataset(data, optics, count, {"fringe": cfg.get("data.fringe", 0.25), "broken": cfg.get("data.broken", 0.25)},
                     cfg.get("data.balance", True), seed, train_fraction=cfg.get("data.train_fraction", 0.75),
                     nz=cfg.get("data.nz", 64), ranges=ranges, threads=_threads(args, cfg))
    manifest = data / MANIFEST_NAME
    recs = read_manifest(manifest)
    base = _manifest_base(manifest)
    tr = [r for r in recs if r["split"] == "train"]
    te = [r for r in recs if r["split"] == "test"]
    truth = [r["label"] for r in te]

    # rule baseline, threshold calibrated on the training split
    rc = RuleConfig.default(optics)
    rc = RuleConfig(cfg.get("rule.mask_radius", rc.mask_radius), tuple(cfg.get("rule.mask_center", (0.0, 0.0))),
                    cfg.get("rule.threshold", rc.threshold))
    if cfg.get("rule.calibrate", True):
        rc = replace(rc, threshold=calibrate_threshold([rule_score(load_field(r), rc) for r in tr],
                                                       [r["label"] for r in tr]))
    rule_rows = screen_rows(recs, base, lambda f: (lambda s: (s, "noisy" if s > rc.threshold else "clean"))(
        rule_score(f, rc)))
    write_scores(out / "rule_scores.csv", rule_rows)
    rule_dec = {p: d for p, _, d in rule_rows}
    rule_m = evaluate_metrics([rule_dec[_rel(r["path"], base)] for r in te], truth)

    # network
    tc = train_config_from(cfg, seed)
    result = train(tr, tc)
    io.write_params(out / "model.qcn", result.params)
    write_log(out / "train_log.csv", result.log)
    net_m, probs = evaluate(result.params, recs, tc.decision_threshold)
    net_dec = {_rel(r["path"], base): ("noisy" if p > tc.decision_threshold else "clean") for r, p in zip(recs, probs)}
    write_scores(out / "net_scores.csv", [(_rel(r["path"], base), p, net_dec[_rel(r["path"], base)])
                                          for r, p in zip(recs, probs)])
    net_test = evaluate_metrics([net_dec[_rel(r["path"], base)] for r in te], truth)

    # reconstructions of one tomogram under each screening
    phantom = cfg.get("recon.phantom", 0)
    group = _select_fields(recs, phantom)
    nz = cfg.get("recon.nz", cfg.get("data.nz", 64))
    sds = {}
    for name, keep in (("all", lambda r: True),
                       ("truth", lambda r: r["label"] == "clean"),
                       ("rule", lambda r: rule_dec[_rel(r["path"], base)] == "clean"),
                       ("net", lambda r: net_dec[_rel(r["path"], base)] == "clean")):
        sel = [r for r in group if keep(r)]
        if not sel:
            sds[name] = {"fields": 0, "background_sd": None}
            continue
        vol = reconstruct_records(sel, optics, nz)
        io.write_volume(out / f"volume_{name}.riv", vol)
        region = tuple(cfg.get("recon.region", default_region(vol.shape)))
        sds[name] = {"fields": len(sel), "background_sd": background_sd(vol, region)}

    def clean(d):
        return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in d.items()}

    inventory = sorted(p for p in out.rglob("*") if p.is_file() and p.name != "summary.json")
    summary = {
        "seed": seed,
        "records": {"total": len(recs), "train": len(tr), "test": len(te)},
        "rule": {"threshold": rc.threshold, "mask_radius": rc.mask_radius, "test": clean(rule_m.as_dict())},
        "net": {"best_epoch": result.best_epoch, "steps": result.steps, "test": clean(net_test.as_dict())},
        "reconstruction": {"phantom": phantom, **sds},
        "files": [{"path": p.relative_to(out).as_posix(), "sha256": sha256(p)} for p in inventory],
    }
    write_json(out / "summary.json", summary)
    print(f"rule accuracy {rule_m.accuracy:.4f}, net accuracy {net_test.accuracy:.4f}; summary in {out / 'summary.json'}")
    return 0


# ---------------------------------------------------------------------------

def build_parser():
    p = _Parser(prog="odtqc", description="Quality control for optical diffraction tomography fields.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, seed=False):
        sp.add_argument("--config", help="key = value configuration file")
        sp.add_argument("--threads", type=int, help="worker cap (env ODTQC_THREADS)")
        if seed:
            sp.add_argument("--seed", type=int)
        return sp

    s = common(sub.add_parser("simulate", help="simulate a labelled field dataset"), seed=True)
    s.add_argument("--out", required=True)
    s.add_argument("--count", type=int)
    s.add_argument("--fringe", type=float)
    s.add_argument("--broken", type=float)
    s.add_argument("--no-balance", action="store_true")
    s.add_argument("--nz", type=int)
    s.add_argument("--detector-pixels", dest="detector_pixels", type=int)
    s.add_argument("--num-angles", dest="num_angles", type=int)
    s.add_argument("--holograms", action="store_true", help="also write off-axis holograms")

    s = common(sub.add_parser("retrieve", help="demodulate off-axis holograms"))
    s.add_argument("holograms", nargs="+")
    s.add_argument("--background")
    s.add_argument("--carrier", help="qx,qy in rad/um")
    s.add_argument("--crop-radius", dest="crop_radius", type=float)
    s.add_argument("--out", required=True, help="output directory")

    s = common(sub.add_parser("screen", help="score fields with the rule or a trained model"))
    s.add_argument("--manifest", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--rule", action="store_true")
    s.add_argument("--model")
    s.add_argument("--threshold", "--rule-threshold", dest="threshold", type=float)
    s.add_argument("--mask-radius", dest="mask_radius", type=float)
    s.add_argument("--mask-center", dest="mask_center")
    s.add_argument("--calibrate", action="store_true", help="fit the rule threshold on the train split")
    s.add_argument("--split")

    s = common(sub.add_parser("train", help="train the screening network"), seed=True)
    s.add_argument("--manifest", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--log")
    s.add_argument("--epochs", type=int)
    s.add_argument("--batch-size", dest="batch_size", type=int)
    s.add_argument("--learning-rate", dest="learning_rate", type=float)
    s.add_argument("--input-mode", dest="input_mode", choices=("phase", "amplitude", "complex"))
    s.add_argument("--no-augment", dest="no_augment", action="store_true")

    s = common(sub.add_parser("evaluate", help="metrics of a model on a manifest split"))
    s.add_argument("--model", required=True)
    s.add_argument("--manifest", required=True)
    s.add_argument("--split", default="test")
    s.add_argument("--threshold", type=float, default=0.5)
    s.add_argument("--out")

    s = common(sub.add_parser("reconstruct", help="reconstruct an RI volume"))
    s.add_argument("--manifest", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--scores", help="screening CSV; only 'clean' fields are used")
    s.add_argument("--phantom", type=int)
    s.add_argument("--nz", type=int)
    s.add_argument("--png", help="axial slice export")

    s = common(sub.add_parser("saliency", help="CAM / guided BP / Grad-CAM maps"))
    s.add_argument("--model", required=True)
    s.add_argument("--field", required=True)
    s.add_argument("--method", choices=("cam", "guidedbp", "gradcam"), default="gradcam")
    s.add_argument("--out", required=True, help="output prefix (.oph and .png)")

    s = common(sub.add_parser("pipeline", help="simulate, screen, train, reconstruct and report"), seed=True)
    s.add_argument("--out", required=True)
    return p


COMMANDS = {"simulate": cmd_simulate, "retrieve": cmd_retrieve, "screen": cmd_screen, "train": cmd_train,
            "evaluate": cmd_evaluate, "reconstruct": cmd_reconstruct, "saliency": cmd_saliency,
            "pipeline": cmd_pipeline}


def run(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        if not argv:
            raise UsageError(parser.format_help())
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_help())
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        cfg = load_config(args.config)
        set_threads(_threads(args, cfg))
        return COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(str(exc).rstrip(), file=sys.stderr)
        return 1
    except (OSError, io.FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
