from __future__ import annotations

import numpy as np


class GaussianNaiveBayes:
    """Gaussian naive Bayes with class priors from label frequencies.

    Every per-class variance is inflated by ``var_smoothing`` times the largest
    feature variance of the training matrix, so single-sample classes and
    constant features stay well defined.
    """

    def __init__(self, var_smoothing: float = 1e-9):
        self.var_smoothing = var_smoothing

    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: int) -> "GaussianNaiveBayes":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        d = X.shape[1]
        floor = self.var_smoothing * float(X.var(axis=0).max())
        if floor == 0.0:
            # every feature constant: any positive floor keeps densities finite
            floor = self.var_smoothing or 1e-9
        self.theta_ = np.zeros((n_classes, d))
        self.var_ = np.ones((n_classes, d))
        self.class_count_ = np.bincount(y, minlength=n_classes).astype(np.float64)
        for c in range(n_classes):
            rows = X[y == c]
            if rows.shape[0]:
                self.theta_[c] = rows.mean(axis=0)
                self.var_[c] = rows.var(axis=0)
        self.var_ = self.var_ + floor
        self.epsilon_ = floor
        with np.errstate(divide="ignore"):
            self.log_prior_ = np.log(self.class_count_ / self.class_count_.sum())
        return self

    def joint_log_likelihood(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        out = np.empty((X.shape[0], self.theta_.shape[0]))
        for c in range(self.theta_.shape[0]):
            norm = -0.5 * np.sum(np.log(2.0 * np.pi * self.var_[c]))
            quad = -0.5 * np.sum((X - self.theta_[c]) ** 2 / self.var_[c], axis=1)
            out[:, c] = self.log_prior_[c] + norm + quad
        return out

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        jll = self.joint_log_likelihood(X)
        jll -= jll.max(axis=1, keepdims=True)
        p = np.exp(jll)
        return p / p.sum(axis=1, keepdims=True)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.joint_log_likelihood(X), axis=1)

    def parameters(self) -> dict:
        return {
            "theta": self.theta_.tolist(),
            "var": self.var_.tolist(),
            "class_prior": np.exp(self.log_prior_).tolist(),
        }
