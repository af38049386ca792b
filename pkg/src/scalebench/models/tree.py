"""Binary decision trees (CART) and bagged forests.

Splits are chosen by Gini impurity (classification) or squared-error
reduction (regression). Candidate thresholds are midpoints between
consecutive distinct sorted values and the split search is order-based, so a
fitted tree depends on feature values only through their ordering: any
strictly increasing per-feature map leaves the partitions unchanged.

Tie-break among equally good splits: lowest feature index, then lowest
threshold. A node is split whenever it is impure and some feature varies in
it, even if the best split has zero gain (needed for XOR-like data).
"""

from __future__ import annotations

import math

import numpy as np

from ..rng import SplitMix64

LEAF = -1


class DecisionTree:
    def __init__(
        self,
        classification: bool = True,
        min_samples_split: int = 2,
        max_depth: int | None = None,
        max_features: int | None = None,
        rng: SplitMix64 | None = None,
    ):
        self.classification = classification
        self.min_samples_split = min_samples_split
        self.max_depth = max_depth
        self.max_features = max_features
        self.rng = rng

    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: int = 0, sample: np.ndarray | None = None):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        if sample is not None:
            X, y = X[sample], y[sample]
        self.n_features_ = X.shape[1]
        if self.classification:
            self.n_classes_ = n_classes or int(y.max()) + 1
            y = y.astype(np.int64)
            self._onehot = np.eye(self.n_classes_)
        else:
            y = y.astype(np.float64)
        self._X, self._y = X, y
        feature, threshold, left, right, value = [], [], [], [], []

        def new_node(rows):
            feature.append(LEAF)
            threshold.append(0.0)
            left.append(LEAF)
            right.append(LEAF)
            if self.classification:
                counts = np.bincount(y[rows], minlength=self.n_classes_).astype(np.float64)
                value.append(counts / counts.sum())
            else:
                value.append(np.array([y[rows].sum() / rows.size]))
            return len(feature) - 1

        root = new_node(np.arange(X.shape[0]))
        stack = [(root, np.arange(X.shape[0]), 0)]
        while stack:
            node, rows, depth = stack.pop()
            if rows.size < self.min_samples_split or self._is_pure(rows):
                continue
            if self.max_depth is not None and depth >= self.max_depth:
                continue
            best = self._best_split(rows)
            if best is None:
                continue
            f, thr = best
            go_left = X[rows, f] <= thr
            lrows, rrows = rows[go_left], rows[~go_left]
            feature[node] = f
            threshold[node] = thr
            left[node] = new_node(lrows)
            right[node] = new_node(rrows)
            # right pushed first so the left subtree is built (and numbered) first
            stack.append((right[node], rrows, depth + 1))
            stack.append((left[node], lrows, depth + 1))

        self.feature_ = np.array(feature, dtype=np.int64)
        self.threshold_ = np.array(threshold, dtype=np.float64)
        self.left_ = np.array(left, dtype=np.int64)
        self.right_ = np.array(right, dtype=np.int64)
        self.value_ = np.vstack(value)
        del self._X, self._y
        if self.classification:
            del self._onehot
        return self

    def _is_pure(self, rows: np.ndarray) -> bool:
        ys = self._y[rows]
        return bool(np.all(ys == ys[0]))

    def _candidate_features(self) -> tuple[list[int], list[int]]:
        d = self.n_features_
        if self.max_features is None or self.max_features >= d:
            return list(range(d)), []
        perm = self.rng.permutation(d).tolist()
        k = self.max_features
        return sorted(perm[:k]), perm[k:]

    def _best_split(self, rows: np.ndarray):
        primary, reserve = self._candidate_features()
        best = self._search(rows, primary)
        # like common implementations, keep drawing features until one can split
        for f in reserve:
            if best is not None:
                break
            best = self._search(rows, [f])
        return best

    def _search(self, rows: np.ndarray, features: list[int]):
        n = rows.size
        xs = self._X[rows][:, features]
        order = np.argsort(xs, axis=0, kind="stable")
        xs = np.take_along_axis(xs, order, axis=0)
        valid = xs[:-1] < xs[1:]
        if not valid.any():
            return None
        ys = self._y[rows][order]
        n_left = np.arange(1, n, dtype=np.float64)[:, None]
        n_right = n - n_left
        if self.classification:
            cum = np.cumsum(self._onehot[ys], axis=0)
            left_c = cum[:-1]
            right_c = cum[-1] - left_c
            # n_l * gini_l + n_r * gini_r, one column per feature
            cost = (n_left - (left_c**2).sum(axis=2) / n_left) + (
                n_right - (right_c**2).sum(axis=2) / n_right
            )
        else:
            yc = ys - ys[:, 0].sum() / n
            s1 = np.cumsum(yc, axis=0)
            s2 = np.cumsum(yc * yc, axis=0)
            left_s, left_s2 = s1[:-1], s2[:-1]
            right_s, right_s2 = s1[-1] - left_s, s2[-1] - left_s2
            cost = (left_s2 - left_s**2 / n_left) + (right_s2 - right_s**2 / n_right)
        cost = np.where(valid, cost, np.inf)
        # feature-major flattening: the first minimum is the lowest feature, then lowest threshold
        flat = int(np.argmin(cost.T))
        j, i = divmod(flat, n - 1)
        lo, hi = xs[i, j], xs[i + 1, j]
        thr = 0.5 * (lo + hi)
        if thr >= hi:  # adjacent floats: keep the left value on the left
            thr = lo
        return features[j], float(thr)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row of ``X``."""
        X = np.asarray(X, dtype=np.float64)
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature_[node] != LEAF
        while active.any():
            rows = np.flatnonzero(active)
            cur = node[rows]
            go_left = X[rows, self.feature_[cur]] <= self.threshold_[cur]
            node[rows] = np.where(go_left, self.left_[cur], self.right_[cur])
            active = self.feature_[node] != LEAF
        return node

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.value_[self.apply(X)]

    def predict(self, X: np.ndarray) -> np.ndarray:
        leaves = self.apply(X)
        if self.classification:
            return np.argmax(self.value_[leaves], axis=1)
        return self.value_[leaves, 0]

    @property
    def node_count(self) -> int:
        return int(self.feature_.size)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.node_count, dtype=np.int64)
        for i in range(self.node_count):
            if self.feature_[i] != LEAF:
                depth[self.left_[i]] = depth[self.right_[i]] = depth[i] + 1
        return int(depth.max())

    def parameters(self) -> dict:
        return {
            "node_count": self.node_count,
            "depth": self.depth,
            "n_leaves": int(np.sum(self.feature_ == LEAF)),
        }


class RandomForest:
    """Bagged decision trees with per-node feature subsampling.

    ``max_features='auto'`` means ``ceil(sqrt(d))`` for classification and
    ``ceil(d / 3)`` for regression; ``None`` disables subsampling. All
    randomness comes from one :class:`SplitMix64` stream consumed tree by tree.
    """

    def __init__(
        self,
        classification: bool = True,
        n_trees: int = 100,
        bootstrap: bool = True,
        max_features: int | str | None = "auto",
        min_samples_split: int = 2,
        max_depth: int | None = None,
        seed: int = 0,
    ):
        self.classification = classification
        self.n_trees = n_trees
        self.bootstrap = bootstrap
        self.max_features = max_features
        self.min_samples_split = min_samples_split
        self.max_depth = max_depth
        self.seed = seed

    def _resolve_max_features(self, d: int) -> int | None:
        mf = self.max_features
        if mf is None:
            return None
        if mf == "auto":
            mf = math.ceil(math.sqrt(d)) if self.classification else math.ceil(d / 3)
        return None if mf >= d else int(mf)

    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: int = 0) -> "RandomForest":
        X = np.asarray(X, dtype=np.float64)
        n, d = X.shape
        self.n_classes_ = (n_classes or int(np.max(y)) + 1) if self.classification else 0
        rng = SplitMix64(self.seed)
        mf = self._resolve_max_features(d)
        self.max_features_ = mf if mf is not None else d
        self.trees_ = []
        for _ in range(self.n_trees):
            sample = rng.integers(n, n) if self.bootstrap else None
            tree = DecisionTree(
                classification=self.classification,
                min_samples_split=self.min_samples_split,
                max_depth=self.max_depth,
                max_features=mf,
                rng=rng,
            )
            tree.fit(X, y, n_classes=self.n_classes_, sample=sample)
            tree.rng = None
            self.trees_.append(tree)
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Fraction of trees voting for each class."""
        votes = np.stack([t.predict(X) for t in self.trees_])
        proba = np.zeros((votes.shape[1], self.n_classes_))
        for c in range(self.n_classes_):
            proba[:, c] = np.sum(votes == c, axis=0)
        return proba / len(self.trees_)

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self.classification:
            return np.argmax(self.predict_proba(X), axis=1)
        return np.mean([t.predict(X) for t in self.trees_], axis=0)

    def parameters(self) -> dict:
        return {
            "n_trees": len(self.trees_),
            "max_features": self.max_features_,
            "total_nodes": int(sum(t.node_count for t in self.trees_)),
        }
