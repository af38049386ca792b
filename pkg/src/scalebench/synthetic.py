"""Seeded synthetic tabular datasets with deliberately unequal feature scales.

Used for the bundled fixtures and for property checks; numpy's PCG64 is
fine here because the generated files, not the generator, are what runs
are reproduced from.
"""

from __future__ import annotations

import numpy as np

from .dataset_io import Dataset, Task


def make_classification(
    n: int = 200,
    d: int = 8,
    n_classes: int = 3,
    n_informative: int = 3,
    scales=None,
    separation: float = 1.5,
    seed: int = 0,
    name: str = "synthetic_classification",
) -> Dataset:
    """Gaussian class clusters on the first ``n_informative`` features, noise elsewhere.

    Column ``j`` is multiplied by ``scales[j]`` (default: powers of ten cycling
    0..3) and shifted to a positive range, so raw magnitudes differ by orders
    of magnitude.
    """
    rng = np.random.default_rng(seed)
    if scales is None:
        scales = [10.0 ** (j % 4) for j in range(d)]
    scales = np.asarray(scales, dtype=np.float64)
    y = np.arange(n) % n_classes
    rng.shuffle(y)
    centers = rng.normal(scale=separation, size=(n_classes, n_informative))
    X = rng.normal(size=(n, d))
    X[:, :n_informative] += centers[y]
    X = X * scales + 3.0 * scales
    return Dataset(
        name=name,
        feature_names=tuple(f"f{j}" for j in range(d)),
        X=X,
        y=y.astype(np.int64),
        task=Task.CLASSIFICATION,
        classes=tuple(f"c{c}" for c in range(n_classes)),
    )


def make_regression(
    n: int = 200,
    d: int = 8,
    n_informative: int = 3,
    scales=None,
    noise: float = 0.1,
    seed: int = 0,
    name: str = "synthetic_regression",
) -> Dataset:
    """Linear target on standardized informative features plus a mild nonlinearity."""
    rng = np.random.default_rng(seed)
    if scales is None:
        scales = [10.0 ** (j % 4) for j in range(d)]
    scales = np.asarray(scales, dtype=np.float64)
    Z = rng.normal(size=(n, d))
    w = rng.uniform(1.0, 3.0, size=n_informative) * rng.choice([-1, 1], size=n_informative)
    y = Z[:, :n_informative] @ w + np.sin(2 * Z[:, 0]) + noise * rng.normal(size=n)
    X = Z * scales + 3.0 * scales
    return Dataset(
        name=name,
        feature_names=tuple(f"f{j}" for j in range(d)),
        X=X,
        y=y,
        task=Task.REGRESSION,
    )
