from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from ..dataset_io import Task


class ModelKind(str, Enum):
    KNN = "KNN"
    LINREG = "LinReg"
    LOGREG = "LogReg"
    GNB = "GaussianNB"
    CART = "CART"
    RF = "RF"
    MLP = "MLP"


ALL_MODELS: tuple[ModelKind, ...] = tuple(ModelKind)

TASKS: dict[ModelKind, frozenset[Task]] = {
    ModelKind.KNN: frozenset(Task),
    ModelKind.LINREG: frozenset({Task.REGRESSION}),
    ModelKind.LOGREG: frozenset({Task.CLASSIFICATION}),
    ModelKind.GNB: frozenset({Task.CLASSIFICATION}),
    ModelKind.CART: frozenset(Task),
    ModelKind.RF: frozenset(Task),
    ModelKind.MLP: frozenset(Task),
}

DEFAULTS: dict[ModelKind, dict[str, Any]] = {
    ModelKind.KNN: {"k": 5},
    ModelKind.LINREG: {},
    ModelKind.LOGREG: {"learning_rate": 0.1, "max_iter": 1000, "tol": 1e-6},
    ModelKind.GNB: {"var_smoothing": 1e-9},
    ModelKind.CART: {"min_samples_split": 2, "max_depth": None},
    ModelKind.RF: {
        "n_trees": 100,
        "bootstrap": True,
        "max_features": "auto",
        "min_samples_split": 2,
        "max_depth": None,
    },
    ModelKind.MLP: {
        "hidden": 100,
        "learning_rate": 0.001,
        "beta1": 0.9,
        "beta2": 0.999,
        "epsilon": 1e-8,
        "epochs": 200,
        "batch_size": 200,
    },
}

# well-known learners this package deliberately does not provide
NOT_IMPLEMENTED = {
    "svm", "svc", "svr", "tabnet", "lightgbm", "lgbm", "catboost", "xgboost",
    "adaboost", "ada", "gbt", "gradientboosting", "gradient_boosting", "gb",
}

_ALIASES = {
    "knn": ModelKind.KNN,
    "linreg": ModelKind.LINREG,
    "linear": ModelKind.LINREG,
    "linearregression": ModelKind.LINREG,
    "logreg": ModelKind.LOGREG,
    "lr": ModelKind.LOGREG,
    "logisticregression": ModelKind.LOGREG,
    "gaussiannb": ModelKind.GNB,
    "nb": ModelKind.GNB,
    "naivebayes": ModelKind.GNB,
    "cart": ModelKind.CART,
    "dt": ModelKind.CART,
    "decisiontree": ModelKind.CART,
    "rf": ModelKind.RF,
    "randomforest": ModelKind.RF,
    "mlp": ModelKind.MLP,
}


class ModelError(ValueError):
    pass


class ModelNotImplemented(ModelError):
    pass


class TrainingError(RuntimeError):
    """Training diverged (e.g. non-finite loss); recorded as a failed cell."""


def parse_model_kind(name: str | ModelKind) -> ModelKind:
    if isinstance(name, ModelKind):
        return name
    key = str(name).strip().lower().replace("-", "").replace(" ", "")
    if key in _ALIASES:
        return _ALIASES[key]
    if key in NOT_IMPLEMENTED or key.replace("_", "") in NOT_IMPLEMENTED:
        raise ModelNotImplemented(f"model not implemented: {name} (supported: {', '.join(m.value for m in ALL_MODELS)})")
    raise ModelError(f"unknown model {name!r} (supported: {', '.join(m.value for m in ALL_MODELS)})")


@dataclass(frozen=True)
class ModelSpec:
    kind: ModelKind
    task: Task
    params: dict[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", parse_model_kind(self.kind))
        object.__setattr__(self, "task", Task(self.task))
        if self.task not in TASKS[self.kind]:
            raise ModelError(f"{self.kind.value} does not support {self.task.value}")
        unknown = set(self.params) - set(DEFAULTS[self.kind])
        if unknown:
            raise ModelError(f"unknown {self.kind.value} hyperparameters: {sorted(unknown)}")
        merged = {**DEFAULTS[self.kind], **self.params}
        _validate(self.kind, merged)
        object.__setattr__(self, "params", merged)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind.value, "task": self.task.value, "seed": self.seed, "params": dict(self.params)}


def _validate(kind: ModelKind, p: dict[str, Any]) -> None:
    def positive(name, integer=False):
        v = p[name]
        if integer and (not isinstance(v, (int, np.integer)) or isinstance(v, bool)):
            raise ModelError(f"{kind.value}.{name} must be an integer, got {v!r}")
        if not v > 0:
            raise ModelError(f"{kind.value}.{name} must be positive, got {v!r}")

    if kind is ModelKind.KNN:
        positive("k", integer=True)
    elif kind is ModelKind.LOGREG:
        positive("learning_rate")
        positive("max_iter", integer=True)
        if p["tol"] < 0:
            raise ModelError("LogReg.tol must be non-negative")
    elif kind is ModelKind.GNB:
        if p["var_smoothing"] < 0:
            raise ModelError("GaussianNB.var_smoothing must be non-negative")
    elif kind in (ModelKind.CART, ModelKind.RF):
        if p["min_samples_split"] < 2:
            raise ModelError(f"{kind.value}.min_samples_split must be >= 2")
        if p["max_depth"] is not None:
            positive("max_depth", integer=True)
        if kind is ModelKind.RF:
            positive("n_trees", integer=True)
            mf = p["max_features"]
            if mf not in ("auto", None) and not (isinstance(mf, int) and mf >= 1):
                raise ModelError("RF.max_features must be 'auto', null or a positive integer")
    elif kind is ModelKind.MLP:
        positive("hidden", integer=True)
        positive("learning_rate")
        positive("epochs", integer=True)
        positive("batch_size", integer=True)
        positive("epsilon")
        for b in ("beta1", "beta2"):
            if not 0 <= p[b] < 1:
                raise ModelError(f"MLP.{b} must lie in [0, 1)")


@dataclass
class TrainedModel:
    """A fitted learner plus the metadata echoed into the run manifest."""

    spec: ModelSpec
    estimator: Any
    n_features: int
    n_classes: int = 0
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def kind(self) -> ModelKind:
        return self.spec.kind

    def parameters(self) -> dict[str, Any]:
        return self.estimator.parameters() if hasattr(self.estimator, "parameters") else {}
