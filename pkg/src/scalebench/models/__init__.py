"""From-scratch learners behind one ``train`` / ``predict`` surface."""

from __future__ import annotations

import numpy as np

from ..dataset_io import Dataset, Task
from .base import (
    ALL_MODELS,
    DEFAULTS,
    TASKS,
    ModelError,
    ModelKind,
    ModelNotImplemented,
    ModelSpec,
    TrainedModel,
    TrainingError,
    parse_model_kind,
)
from .knn import KNearestNeighbors
from .linear import LinearRegression, LogisticRegression
from .mlp import MLP
from .naive_bayes import GaussianNaiveBayes
from .tree import DecisionTree, RandomForest


def _xy(train):
    # a Dataset, or an (X, y) / (X, y, n_classes) tuple
    if isinstance(train, Dataset):
        n_classes = train.n_classes if train.task is Task.CLASSIFICATION else 0
        return train.X, train.y, n_classes
    X, y, *rest = train
    return np.asarray(X, dtype=np.float64), np.asarray(y), (rest[0] if rest else 0)


def _check(spec: ModelSpec, kind: ModelKind) -> None:
    if spec.kind is not kind:
        raise ModelError(f"spec is for {spec.kind.value}, not {kind.value}")


def _n_classes(spec: ModelSpec, y: np.ndarray, n_classes: int) -> int:
    if spec.task is not Task.CLASSIFICATION:
        return 0
    return n_classes or int(np.max(y)) + 1


def train_knn(spec: ModelSpec, train) -> TrainedModel:
    _check(spec, ModelKind.KNN)
    X, y, c = _xy(train)
    classification = spec.task is Task.CLASSIFICATION
    c = _n_classes(spec, y, c)
    est = KNearestNeighbors(spec.params["k"], classification=classification).fit(X, y, c)
    return TrainedModel(spec, est, X.shape[1], c)


def train_linreg(spec: ModelSpec, train) -> TrainedModel:
    _check(spec, ModelKind.LINREG)
    X, y, _ = _xy(train)
    est = LinearRegression().fit(X, y)
    return TrainedModel(spec, est, X.shape[1], 0, {"rank": est.rank_})


def train_logreg(spec: ModelSpec, train) -> TrainedModel:
    _check(spec, ModelKind.LOGREG)
    X, y, c = _xy(train)
    c = max(_n_classes(spec, y, c), 2)
    p = spec.params
    est = LogisticRegression(p["learning_rate"], p["max_iter"], p["tol"]).fit(X, y, c)
    return TrainedModel(spec, est, X.shape[1], c, {"iterations": est.n_iter_, "final_loss": est.final_loss_})


def train_gnb(spec: ModelSpec, train) -> TrainedModel:
    _check(spec, ModelKind.GNB)
    X, y, c = _xy(train)
    c = _n_classes(spec, y, c)
    est = GaussianNaiveBayes(spec.params["var_smoothing"]).fit(X, y, c)
    return TrainedModel(spec, est, X.shape[1], c)


def train_cart(spec: ModelSpec, train) -> TrainedModel:
    _check(spec, ModelKind.CART)
    X, y, c = _xy(train)
    c = _n_classes(spec, y, c)
    p = spec.params
    est = DecisionTree(
        classification=spec.task is Task.CLASSIFICATION,
        min_samples_split=p["min_samples_split"],
        max_depth=p["max_depth"],
    ).fit(X, y, c)
    return TrainedModel(spec, est, X.shape[1], c, {"node_count": est.node_count, "depth": est.depth})


def train_rf(spec: ModelSpec, train) -> TrainedModel:
    _check(spec, ModelKind.RF)
    X, y, c = _xy(train)
    c = _n_classes(spec, y, c)
    p = spec.params
    est = RandomForest(
        classification=spec.task is Task.CLASSIFICATION,
        n_trees=p["n_trees"],
        bootstrap=p["bootstrap"],
        max_features=p["max_features"],
        min_samples_split=p["min_samples_split"],
        max_depth=p["max_depth"],
        seed=spec.seed,
    ).fit(X, y, c)
    return TrainedModel(spec, est, X.shape[1], c, {"max_features": est.max_features_})


def train_mlp(spec: ModelSpec, train) -> TrainedModel:
    _check(spec, ModelKind.MLP)
    X, y, c = _xy(train)
    c = _n_classes(spec, y, c)
    est = MLP(classification=spec.task is Task.CLASSIFICATION, seed=spec.seed, **spec.params).fit(X, y, c)
    return TrainedModel(
        spec, est, X.shape[1], c, {"epochs": est.n_iter_, "final_loss": est.loss_history_[-1]}
    )


TRAINERS = {
    ModelKind.KNN: train_knn,
    ModelKind.LINREG: train_linreg,
    ModelKind.LOGREG: train_logreg,
    ModelKind.GNB: train_gnb,
    ModelKind.CART: train_cart,
    ModelKind.RF: train_rf,
    ModelKind.MLP: train_mlp,
}


def train(spec: ModelSpec, train_data) -> TrainedModel:
    return TRAINERS[spec.kind](spec, train_data)


def _check_dims(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ModelError(f"{model.kind.value} was trained on {model.n_features} features, got shape {X.shape}")
    return X


def predict(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    """Class indices (classification) or real values (regression) for each row of ``X``."""
    return model.estimator.predict(_check_dims(model, X))


def predict_proba(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    if model.spec.task is not Task.CLASSIFICATION:
        raise ModelError("probabilities are only defined for classification models")
    return model.estimator.predict_proba(_check_dims(model, X))


def compatible_models(task: Task, kinds=ALL_MODELS) -> list[ModelKind]:
    return [k for k in kinds if Task(task) in TASKS[k]]


__all__ = [
    "ALL_MODELS",
    "DEFAULTS",
    "ModelError",
    "ModelKind",
    "ModelNotImplemented",
    "ModelSpec",
    "TrainedModel",
    "TrainingError",
    "compatible_models",
    "parse_model_kind",
    "predict",
    "predict_proba",
    "train",
    "train_cart",
    "train_gnb",
    "train_knn",
    "train_linreg",
    "train_logreg",
    "train_mlp",
    "train_rf",
]
