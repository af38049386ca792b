"""k-nearest neighbours with Euclidean distance.

Neighbour ties go to the lower training-row index, vote ties to the lower
class index, so predictions are fully deterministic.
"""

from __future__ import annotations

import numpy as np

from .base import ModelError

_CHUNK = 256


class KNearestNeighbors:
    def __init__(self, k: int = 5, classification: bool = True):
        self.k = k
        self.classification = classification

    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: int = 0) -> "KNearestNeighbors":
        if self.k < 1:
            raise ModelError(f"k must be >= 1, got {self.k}")
        if self.k > X.shape[0]:
            raise ModelError(f"k={self.k} exceeds the {X.shape[0]} training rows")
        self.X_ = np.array(X, dtype=np.float64)
        self.y_ = np.array(y)
        self.n_classes_ = n_classes or (int(self.y_.max()) + 1 if self.classification else 0)
        return self

    def neighbors(self, X: np.ndarray) -> np.ndarray:
        """Indices of the k nearest training rows for each row of ``X``, nearest first."""
        X = np.asarray(X, dtype=np.float64)
        out = np.empty((X.shape[0], self.k), dtype=np.int64)
        for start in range(0, X.shape[0], _CHUNK):
            block = X[start : start + _CHUNK]
            diff = block[:, None, :] - self.X_[None, :, :]
            dist = np.einsum("ijk,ijk->ij", diff, diff)
            out[start : start + _CHUNK] = np.argsort(dist, axis=1, kind="stable")[:, : self.k]
        return out

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        idx = self.neighbors(X)
        labels = self.y_[idx].astype(np.int64)
        proba = np.zeros((idx.shape[0], self.n_classes_))
        for c in range(self.n_classes_):
            proba[:, c] = np.sum(labels == c, axis=1)
        return proba / self.k

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self.classification:
            # argmax returns the first maximum, i.e. the lowest class index
            return np.argmax(self.predict_proba(X), axis=1)
        idx = self.neighbors(X)
        return self.y_[idx].astype(np.float64).mean(axis=1)

    def parameters(self) -> dict:
        return {"k": self.k, "n_stored_rows": int(self.X_.shape[0])}
