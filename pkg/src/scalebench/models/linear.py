from __future__ import annotations

import numpy as np

from .base import TrainingError


class LinearRegression:
    """Ordinary least squares with an unpenalized intercept.

    Solved on centred data with an SVD least-squares solve, which yields the
    minimum-norm coefficient vector when columns are collinear.
    """

    def fit(self, X: np.ndarray, y: np.ndarray) -> "LinearRegression":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        x_mean = X.mean(axis=0)
        y_mean = y.mean()
        coef, _, rank, _ = np.linalg.lstsq(X - x_mean, y - y_mean, rcond=None)
        self.coef_ = coef
        self.intercept_ = float(y_mean - x_mean @ coef)
        self.rank_ = int(rank)
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.coef_ + self.intercept_

    def parameters(self) -> dict:
        return {"coef": self.coef_.tolist(), "intercept": self.intercept_, "rank": self.rank_}


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out


class LogisticRegression:
    """Unregularized logistic regression by full-batch gradient descent.

    Two classes use a single sigmoid output, more use a softmax. Weights start
    at zero and the loop stops once the mean cross-entropy changes by less
    than ``tol`` between iterations, or after ``max_iter`` steps.
    """

    def __init__(self, learning_rate: float = 0.1, max_iter: int = 1000, tol: float = 1e-6):
        self.learning_rate = learning_rate
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: int) -> "LogisticRegression":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        n, d = X.shape
        self.n_classes_ = n_classes
        self.binary_ = n_classes <= 2
        outputs = 1 if self.binary_ else n_classes
        W = np.zeros((d, outputs))
        b = np.zeros(outputs)
        Y = y[:, None].astype(np.float64) if self.binary_ else np.eye(n_classes)[y]
        prev = np.inf
        self.loss_history_ = []
        it = 0
        for it in range(1, self.max_iter + 1):
            loss, G = self._loss_grad(X, Y, W, b)
            if not np.isfinite(loss):
                raise TrainingError(f"logistic regression loss became non-finite at iteration {it}")
            self.loss_history_.append(loss)
            W -= self.learning_rate * (X.T @ G) / n
            b -= self.learning_rate * G.mean(axis=0)
            if abs(prev - loss) < self.tol:
                break
            prev = loss
        self.coef_, self.intercept_ = W, b
        self.n_iter_ = it
        self.final_loss_ = float(self._loss_grad(X, Y, W, b)[0])
        if not np.isfinite(self.final_loss_) or not np.isfinite(W).all():
            raise TrainingError("logistic regression weights diverged")
        return self

    def _loss_grad(self, X, Y, W, b) -> tuple[float, np.ndarray]:
        Z = X @ W + b
        if self.binary_:
            loss = float(np.mean(np.logaddexp(0.0, Z) - Y * Z))
            return loss, _sigmoid(Z) - Y
        zmax = Z.max(axis=1, keepdims=True)
        lse = zmax[:, 0] + np.log(np.exp(Z - zmax).sum(axis=1))
        loss = float(np.mean(lse - (Z * Y).sum(axis=1)))
        return loss, _softmax(Z) - Y

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.coef_ + self.intercept_

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        Z = self.decision_function(X)
        if self.binary_:
            p = _sigmoid(Z[:, 0])
            return np.column_stack([1.0 - p, p])
        return _softmax(Z)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)

    def parameters(self) -> dict:
        return {
            "coef": self.coef_.tolist(),
            "intercept": self.intercept_.tolist(),
            "n_iter": self.n_iter_,
            "final_loss": self.final_loss_,
        }
