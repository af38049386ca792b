"""One-hidden-layer perceptron trained with Adam.

Layout: ``X -> relu(X @ W1 + b1) -> H @ W2 + b2``. Classification uses a
softmax output with mean cross-entropy; regression uses an identity output
with mean ``0.5 * (y_hat - y)**2``.

Initial weights are uniform on ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]`` drawn
from :class:`~scalebench.rng.SplitMix64` in the order W1 (row-major), b1,
W2, b2. Each epoch visits the rows in a fresh seeded permutation.
"""

from __future__ import annotations

import math

import numpy as np

from ..rng import SplitMix64
from .base import TrainingError

PARAM_NAMES = ("W1", "b1", "W2", "b2")


def init_params(n_in: int, n_hidden: int, n_out: int, rng: SplitMix64) -> dict[str, np.ndarray]:
    b_in = 1.0 / math.sqrt(n_in)
    b_hid = 1.0 / math.sqrt(n_hidden)
    return {
        "W1": rng.uniform(-b_in, b_in, n_in * n_hidden).reshape(n_in, n_hidden),
        "b1": rng.uniform(-b_in, b_in, n_hidden),
        "W2": rng.uniform(-b_hid, b_hid, n_hidden * n_out).reshape(n_hidden, n_out),
        "b2": rng.uniform(-b_hid, b_hid, n_out),
    }


def forward(params: dict[str, np.ndarray], X: np.ndarray, classification: bool):
    Z1 = X @ params["W1"] + params["b1"]
    H = np.maximum(Z1, 0.0)
    out = H @ params["W2"] + params["b2"]
    if classification:
        out = out - out.max(axis=1, keepdims=True)
        e = np.exp(out)
        out = e / e.sum(axis=1, keepdims=True)
    return Z1, H, out


def loss_and_grad(
    params: dict[str, np.ndarray], X: np.ndarray, Y: np.ndarray, classification: bool
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean batch loss and its gradient with respect to every parameter.

    ``Y`` is one-hot (m x C) for classification and a column (m x 1) otherwise.
    """
    m = X.shape[0]
    Z1, H, out = forward(params, X, classification)
    if classification:
        loss = float(-np.sum(Y * np.log(np.clip(out, 1e-300, None))) / m)
    else:
        loss = float(0.5 * np.sum((out - Y) ** 2) / m)
    # both heads share the same output-layer error term
    delta2 = (out - Y) / m
    grads = {"W2": H.T @ delta2, "b2": delta2.sum(axis=0)}
    delta1 = (delta2 @ params["W2"].T) * (Z1 > 0)
    grads["W1"] = X.T @ delta1
    grads["b1"] = delta1.sum(axis=0)
    return loss, grads


class MLP:
    def __init__(
        self,
        classification: bool = True,
        hidden: int = 100,
        learning_rate: float = 0.001,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
        epochs: int = 200,
        batch_size: int = 200,
        seed: int = 0,
    ):
        self.classification = classification
        self.hidden = hidden
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed

    def _targets(self, y: np.ndarray) -> np.ndarray:
        if self.classification:
            return np.eye(self.n_outputs_)[np.asarray(y, dtype=np.int64)]
        return np.asarray(y, dtype=np.float64).reshape(-1, 1)

    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: int = 0) -> "MLP":
        X = np.asarray(X, dtype=np.float64)
        n, d = X.shape
        self.n_outputs_ = (n_classes or int(np.max(y)) + 1) if self.classification else 1
        Y = self._targets(y)
        rng = SplitMix64(self.seed)
        params = init_params(d, self.hidden, self.n_outputs_, rng)
        m1 = {k: np.zeros_like(v) for k, v in params.items()}
        m2 = {k: np.zeros_like(v) for k, v in params.items()}
        batch = min(self.batch_size, n)
        step = 0
        self.loss_history_ = []
        for epoch in range(self.epochs):
            order = rng.permutation(n)
            total = 0.0
            for start in range(0, n, batch):
                rows = order[start : start + batch]
                loss, grads = loss_and_grad(params, X[rows], Y[rows], self.classification)
                if not math.isfinite(loss):
                    raise TrainingError(f"MLP loss became non-finite in epoch {epoch + 1}")
                total += loss * rows.size
                step += 1
                c1 = 1.0 - self.beta1**step
                c2 = 1.0 - self.beta2**step
                for k in PARAM_NAMES:
                    g = grads[k]
                    m1[k] = self.beta1 * m1[k] + (1.0 - self.beta1) * g
                    m2[k] = self.beta2 * m2[k] + (1.0 - self.beta2) * g * g
                    params[k] -= self.learning_rate * (m1[k] / c1) / (np.sqrt(m2[k] / c2) + self.epsilon)
            self.loss_history_.append(total / n)
        if not all(np.isfinite(v).all() for v in params.values()):
            raise TrainingError("MLP weights diverged")
        self.params_ = params
        self.n_iter_ = self.epochs
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return forward(self.params_, np.asarray(X, dtype=np.float64), True)[2]

    def predict(self, X: np.ndarray) -> np.ndarray:
        out = forward(self.params_, np.asarray(X, dtype=np.float64), self.classification)[2]
        if self.classification:
            return np.argmax(out, axis=1)
        return out[:, 0]

    def parameters(self) -> dict:
        return {
            "hidden": self.hidden,
            "epochs": self.n_iter_,
            "final_loss": self.loss_history_[-1] if self.loss_history_ else None,
            "n_weights": int(sum(v.size for v in self.params_.values())),
        }
