"""Loading, cleaning and splitting of tabular datasets.

The split is the leakage boundary: every downstream statistic (scaler fits,
model training) only ever sees ``SplitPair.train``.
"""

from __future__ import annotations

import csv
import logging
import math
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .rng import SplitMix64

logger = logging.getLogger(__name__)


class Task(str, Enum):
    CLASSIFICATION = "classification"
    REGRESSION = "regression"


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    name: str
    feature_names: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray
    task: Task
    # original label values, index = encoded class (classification only)
    classes: tuple[str, ...] = ()
    target_name: str = "target"
    dropped_rows: int = 0

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def take(self, rows: np.ndarray) -> "Dataset":
        return replace(self, X=self.X[rows].copy(), y=self.y[rows].copy())


@dataclass(frozen=True)
class SplitPair:
    train: Dataset
    test: Dataset
    seed: int
    ratio: float
    train_index: np.ndarray = field(repr=False)
    test_index: np.ndarray = field(repr=False)


def encode_labels(values: Iterable[object]) -> tuple[np.ndarray, tuple[str, ...]]:
    """Map labels to 0..C-1 in order of first occurrence."""
    mapping: dict[str, int] = {}
    codes = []
    for v in values:
        key = _label_key(v)
        if key not in mapping:
            mapping[key] = len(mapping)
        codes.append(mapping[key])
    return np.asarray(codes, dtype=np.int64), tuple(mapping)


def _label_key(v: object) -> str:
    # 1 and 1.0 denote the same class
    if isinstance(v, (float, np.floating)) and float(v).is_integer():
        return str(int(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def sanitize_name(name: str) -> str:
    """Lower-case and collapse every run of non-alphanumerics into ``_``.

    >>> sanitize_name("Area (mm^2)")
    'area_mm_2'
    """
    out = re.sub(r"[^0-9a-z]+", "_", name.strip().lower())
    return out.strip("_") or "col"


def _parse_float(text: str, sentinels: frozenset[float]) -> float:
    value = float(text)
    if value in sentinels:
        return math.nan
    return value


def load_csv(
    path: str | Path,
    target_column: str,
    task: Task | str,
    missing_sentinels: Sequence[float] = (),
    name: str | None = None,
) -> Dataset:
    """Read a header-first, comma-separated UTF-8 file into a :class:`Dataset`.

    Blank cells are rejected. Values listed in ``missing_sentinels`` (and
    literal ``nan``) become NaN and are dropped later by :func:`clean_dataset`.
    Classification targets are label-encoded in first-occurrence order.
    """
    task = Task(task)
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset file not found: {path}")
    sentinels = frozenset(float(s) for s in missing_sentinels)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if target_column not in header:
            raise DatasetError(f"{path}: target column {target_column!r} not in header")
        t_idx = header.index(target_column)
        feat_idx = [i for i in range(len(header)) if i != t_idx]
        rows: list[list[float]] = []
        targets: list[str] = []
        for r, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DatasetError(f"{path}: row {r} has {len(row)} fields, expected {len(header)}")
            values = []
            for c in feat_idx:
                cell = row[c].strip()
                if cell == "":
                    raise DatasetError(f"missing value at row {r}, column {header[c]}")
                try:
                    values.append(_parse_float(cell, sentinels))
                except ValueError:
                    raise DatasetError(
                        f"non-numeric value {cell!r} at row {r}, column {header[c]}"
                    ) from None
            tcell = row[t_idx].strip()
            if tcell == "":
                raise DatasetError(f"missing value at row {r}, column {target_column}")
            rows.append(values)
            targets.append(tcell)
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    X = np.asarray(rows, dtype=np.float64).reshape(len(rows), len(feat_idx))
    if task is Task.CLASSIFICATION:
        y, classes = encode_labels(targets)
    else:
        try:
            y = np.array([_parse_float(t, sentinels) for t in targets], dtype=np.float64)
        except ValueError as exc:
            raise DatasetError(f"{path}: non-numeric regression target ({exc})") from None
        classes = ()
    return Dataset(
        name=name or path.stem,
        feature_names=tuple(header[i] for i in feat_idx),
        X=X,
        y=y,
        task=task,
        classes=classes,
        target_name=target_column,
    )


def clean_dataset(raw: Dataset) -> Dataset:
    """Sanitize column names, drop rows with missing cells, re-encode labels.

    Idempotent: cleaning an already clean dataset returns an equal dataset.
    """
    names = tuple(sanitize_name(n) for n in raw.feature_names)
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise DatasetError(f"duplicate column names after sanitizing: {dupes}")
    y = np.asarray(raw.y)
    if raw.task is Task.REGRESSION:
        y_bad = ~np.isfinite(y.astype(np.float64))
    else:
        y_bad = np.zeros(len(y), dtype=bool)
    keep = ~(np.isnan(raw.X).any(axis=1) | y_bad)
    dropped = int((~keep).sum())
    if dropped:
        logger.info("%s: dropped %d row(s) with missing values", raw.name, dropped)
    if not keep.any():
        raise DatasetError(f"{raw.name}: every row has a missing value")
    X = raw.X[keep]
    y = y[keep]
    classes = raw.classes
    if raw.task is Task.CLASSIFICATION:
        labels = [raw.classes[int(c)] for c in y] if raw.classes else list(y)
        y, classes = encode_labels(labels)
    else:
        y = y.astype(np.float64)
    if X.shape[0] < 2 or X.shape[1] < 1:
        raise DatasetError(f"{raw.name}: need n >= 2 rows and d >= 1 features")
    return Dataset(
        name=sanitize_name(raw.name),
        feature_names=names,
        X=np.ascontiguousarray(X, dtype=np.float64),
        y=y,
        task=raw.task,
        classes=classes,
        target_name=sanitize_name(raw.target_name),
        dropped_rows=raw.dropped_rows + dropped,
    )


def split_train_test(ds: Dataset, ratio: float = 0.7, seed: int = 42) -> SplitPair:
    """Shuffle rows with :class:`~scalebench.rng.SplitMix64` and cut at ``round(ratio * n)``.

    No stratification. Works on raw, unscaled data.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"split ratio must lie in (0, 1), got {ratio}")
    n = ds.n
    n_train = int(round(ratio * n))
    if n_train < 1 or n - n_train < 1:
        raise ValueError(f"cannot split {n} rows with ratio {ratio}: one side would be empty")
    perm = SplitMix64(seed).permutation(n)
    tr, te = perm[:n_train], perm[n_train:]
    return SplitPair(
        train=ds.take(tr),
        test=ds.take(te),
        seed=seed,
        ratio=ratio,
        train_index=tr,
        test_index=te,
    )


def write_csv(ds: Dataset, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*ds.feature_names, ds.target_name])
        for row, target in zip(ds.X, ds.y):
            if ds.task is Task.CLASSIFICATION:
                t = ds.classes[int(target)]
            else:
                t = repr(float(target))
            w.writerow([repr(float(v)) for v in row] + [t])


def save_split(split: SplitPair, out_dir: str | Path) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = split.train.name
    train_path = out_dir / f"{name}_train.csv"
    test_path = out_dir / f"{name}_test.csv"
    write_csv(split.train, train_path)
    write_csv(split.test, test_path)
    return train_path, test_path
