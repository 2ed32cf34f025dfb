"""Mini-batch training, network inputs and evaluation helpers."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..field import ComplexField2D, PhaseImage, center_crop, wrap_values
from ..retrieval import unwrap_phase
from .augment import elastic_transform
from .layers import bce_loss
from .metrics import evaluate_metrics
from .model import DEFAULT_CHANNELS, DEFAULT_HIDDEN, forward_pass, backward, init_params
from .optim import AdamState, adam_step

log = logging.getLogger(__name__)

INPUT_SIZE = 128


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 16
    learning_rate: float = 1e-4
    betas: tuple = (0.9, 0.999)
    epsilon: float = 1e-8
    dropout_rates: tuple = (0.3, 0.5, 0.5)
    decision_threshold: float = 0.5
    elastic_alpha: float = 8.0
    elastic_sigma: float = 4.0
    augment: bool = True
    seed: int = 0
    validation_fraction: float = 0.1
    input_mode: str = "phase"
    channels: tuple = DEFAULT_CHANNELS
    hidden: tuple = DEFAULT_HIDDEN

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0 < self.decision_threshold < 1:
            raise ValueError("decision_threshold must lie in (0, 1)")
        if any(not 0 <= r < 1 for r in self.dropout_rates):
            raise ValueError("dropout rates must lie in [0, 1)")
        if not 0 <= self.validation_fraction < 1:
            raise ValueError("validation_fraction must lie in [0, 1)")


def field_to_input(field: ComplexField2D, mode="phase", size=INPUT_SIZE) -> np.ndarray:
    """Centre-crop and convert a field to a (C, size, size) network input.

    phase: amplitude-guided unwrapped phase in radians; amplitude: |u|;
    complex: [amplitude, phase]. No normalisation is applied.
    """
    f = center_crop(field, size) if field.values.shape != (size, size) else field
    amp = np.abs(f.values)
    if mode == "amplitude":
        return amp[None]
    ph = unwrap_phase(PhaseImage(wrap_values(np.angle(f.values)), f.pixel_pitch), quality=amp).values
    if mode == "phase":
        return ph[None]
    if mode == "complex":
        return np.stack([amp, ph])
    raise ValueError(f"unknown input mode {mode!r}")


def _seed(*parts) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def predict(params, inputs, batch_size=32) -> np.ndarray:
    """Eval-mode probabilities for an (N, C, H, W) stack."""
    out = []
    for s in range(0, len(inputs), batch_size):
        p, _ = forward_pass(params, inputs[s:s + batch_size], mode="eval", keep_cols=False)
        out.append(p)
    return np.concatenate(out) if out else np.zeros(0)


@dataclass
class TrainResult:
    params: object
    log: list = field(default_factory=list)
    best_epoch: int = 0
    steps: int = 0


def train_arrays(x, y, config: TrainConfig, params=None, progress=None) -> TrainResult:
    """Train on inputs ``x`` (N, C, H, W) with 0/1 labels ``y``.

    ``validation_fraction`` of the samples is held out; the returned
    parameters come from the epoch with the best validation accuracy
    (the last epoch when there is no validation set).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(np.unique(y)) < 2:
        raise ValueError("training data must contain both classes")
    n = len(y)
    perm = np.random.default_rng(_seed(config.seed, 1)).permutation(n)
    n_val = int(round(n * config.validation_fraction))
    val_idx = np.sort(perm[:n_val])
    tr_idx = np.sort(perm[n_val:])
    if params is None:
        params = init_params(config.seed, config.input_mode, config.channels, config.hidden)
    state = AdamState.fresh(params)
    result = TrainResult(params.copy())
    best = -1.0
    for epoch in range(1, config.epochs + 1):
        order = tr_idx[np.random.default_rng(_seed(config.seed, 2, epoch)).permutation(len(tr_idx))]
        losses, correct = [], 0
        for s in range(0, len(order), config.batch_size):
            bi = order[s:s + config.batch_size]
            if config.augment:
                xb = np.stack([elastic_transform(x[i], config.elastic_alpha, config.elastic_sigma,
                                                 _seed(config.seed, 3, epoch, i)) for i in bi])
            else:
                xb = x[bi]
            p, cache = forward_pass(params, xb, mode="train", dropout_seed=_seed(config.seed, 4, epoch, s),
                                    dropout_rates=config.dropout_rates)
            losses.append(bce_loss(p, y[bi]) * len(bi))
            correct += int(np.sum((p > config.decision_threshold) == (y[bi] > 0.5)))
            grads = backward(params, cache, y[bi])
            del cache
            adam_step(params, grads, state, config.learning_rate, config.betas, config.epsilon)
            result.steps += 1
        if n_val:
            pv = predict(params, x[val_idx])
            val_acc = float(np.mean((pv > config.decision_threshold) == (y[val_idx] > 0.5)))
        else:
            val_acc = math.nan
        row = {"epoch": epoch, "train_loss": sum(losses) / len(tr_idx),
               "train_acc": correct / len(tr_idx), "val_acc": val_acc}
        result.log.append(row)
        log.info("epoch %d loss %.4f train %.4f val %.4f", epoch, row["train_loss"], row["train_acc"], val_acc)
        if progress:
            progress(row)
        score = val_acc if n_val else epoch
        if score > best:
            best = score
            result.params = params.copy()
            result.best_epoch = epoch
    return result


def load_inputs(records, mode="phase"):
    from ..dataset import load_field

    x = np.stack([field_to_input(load_field(r), mode) for r in records])
    y = np.array([1.0 if r["label"] == "noisy" else 0.0 for r in records])
    return x, y


def train(manifest, config: TrainConfig, progress=None) -> TrainResult:
    """Train on the ``split == 'train'`` records of a manifest (path or record list)."""
    from ..dataset import read_manifest

    records = read_manifest(manifest) if isinstance(manifest, (str, Path)) else list(manifest)
    if any("split" not in r for r in records):
        raise ValueError("manifest records need a 'split' field")
    tr = [r for r in records if r["split"] == "train"]
    if len({r["label"] for r in tr}) < 2:
        raise ValueError("training split must contain both clean and noisy fields")
    x, y = load_inputs(tr, config.input_mode)
    return train_arrays(x, y, config, progress=progress)


def write_log(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "train_loss", "train_acc", "val_acc"])
        for r in rows:
            w.writerow([r["epoch"], repr(float(r["train_loss"])), repr(float(r["train_acc"])), repr(float(r["val_acc"]))])


def evaluate(params, records, threshold=0.5, mode=None):
    """Classify manifest records; returns (Metrics, probabilities)."""
    x, y = load_inputs(records, mode or params.input_mode)
    p = predict(params, x)
    return evaluate_metrics(p > threshold, y > 0.5), p
