"""Confusion counts and rates with noisy as the positive class."""
import math
from dataclasses import dataclass, asdict


@dataclass(frozen=True)
class Metrics:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self):
        return self.tp + self.tn + self.fp + self.fn

    @property
    def accuracy(self):
        return (self.tp + self.tn) / self.total if self.total else math.nan

    @property
    def specificity(self):
        n = self.tn + self.fp
        return self.tn / n if n else math.nan

    @property
    def sensitivity(self):
        n = self.tp + self.fn
        return self.tp / n if n else math.nan

    @property
    def balanced_accuracy(self):
        return 0.5 * (self.specificity + self.sensitivity)

    def as_dict(self):
        d = asdict(self)
        d.update(accuracy=self.accuracy, specificity=self.specificity, sensitivity=self.sensitivity)
        return d


def _is_noisy(label):
    if isinstance(label, str):
        if label not in ("clean", "noisy"):
            raise ValueError(f"unknown label {label!r}")
        return label == "noisy"
    return bool(label)


def evaluate_metrics(predictions, truths) -> Metrics:
    """Labels are 'clean'/'noisy' strings or 0/1 (1 = noisy)."""
    predictions = list(predictions)
    truths = list(truths)
    if len(predictions) != len(truths):
        raise ValueError("predictions and truths differ in length")
    tp = tn = fp = fn = 0
    for p, t in zip(predictions, truths):
        p, t = _is_noisy(p), _is_noisy(t)
        if t:
            tp += p
            fn += not p
        else:
            fp += p
            tn += not p
    return Metrics(tp, tn, fp, fn)
