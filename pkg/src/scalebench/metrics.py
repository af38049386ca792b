"""Predictive-performance metrics.

Column names in ``results.csv`` are exactly the keys of :data:`METRICS`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset_io import Task


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total


def _pair(y_true, y_pred, min_len: int = 1) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(y_true)
    b = np.asarray(y_pred)
    if a.shape != b.shape or a.ndim != 1:
        raise MetricError(f"y_true and y_pred must be 1-D with equal length, got {a.shape} and {b.shape}")
    if a.size < min_len:
        raise MetricError(f"need at least {min_len} value(s), got {a.size}")
    return a, b


def confusion_counts(y_true, y_pred, positive: int = 1) -> ConfusionCounts:
    a, b = _pair(y_true, y_pred)
    t = a == positive
    p = b == positive
    return ConfusionCounts(
        tp=int(np.sum(t & p)),
        tn=int(np.sum(~t & ~p)),
        fp=int(np.sum(~t & p)),
        fn=int(np.sum(t & ~p)),
    )


def accuracy(y_true, y_pred) -> float:
    """Exact-match rate; for two classes this is (TP + TN) / (TP + TN + FP + FN)."""
    a, b = _pair(y_true, y_pred)
    return float(np.mean(a == b))


def mae(y_true, y_pred) -> float:
    a, b = _pair(y_true, y_pred)
    return float(np.mean(np.abs(a.astype(np.float64) - b)))


def mse(y_true, y_pred) -> float:
    a, b = _pair(y_true, y_pred)
    diff = a.astype(np.float64) - b
    return float(np.mean(diff * diff))


def r2(y_true, y_pred) -> float:
    """Coefficient of determination, ``1 - SS_res / SS_tot``.

    Raises :class:`MetricError` for a constant target, where the ratio is undefined.
    """
    a, b = _pair(y_true, y_pred, min_len=2)
    a = a.astype(np.float64)
    ss_tot = float(np.sum((a - a.mean()) ** 2))
    if ss_tot == 0.0:
        raise MetricError("undefined R² for constant target")
    ss_res = float(np.sum((a - b) ** 2))
    return 1.0 - ss_res / ss_tot


METRICS = {"accuracy": accuracy, "mae": mae, "mse": mse, "r2": r2}
CLASSIFICATION_METRICS = ("accuracy",)
REGRESSION_METRICS = ("mae", "mse", "r2")
# True where a larger value is better
HIGHER_IS_BETTER = {"accuracy": True, "mae": False, "mse": False, "r2": True}


def metrics_for(task: Task) -> tuple[str, ...]:
    return CLASSIFICATION_METRICS if Task(task) is Task.CLASSIFICATION else REGRESSION_METRICS


def evaluate(task: Task, y_true, y_pred) -> dict[str, float]:
    return {name: METRICS[name](y_true, y_pred) for name in metrics_for(task)}
