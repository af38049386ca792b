"""Benchmark sweep over the dataset x model x scaler grid.

For every dataset the raw rows are cleaned and split once; every
(model, scaler) cell then fits its scaler on the training split only,
transforms both splits, trains, predicts and scores. Cells are independent
and may run in worker processes; records are sorted before persistence so
the output does not depend on execution order.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .dataset_io import SplitPair, Task, clean_dataset, load_csv, save_split, split_train_test
from .metrics import METRICS, MetricError, metrics_for
from .models import (
    ALL_MODELS,
    ModelError,
    ModelKind,
    ModelSpec,
    TrainingError,
    compatible_models,
    parse_model_kind,
    predict,
    train,
)
from .rng import derive_seed
from .scaling import ALL_SCALERS, FittedScaler, ScalerKind, array_digest, fit_scaler, summarize, transform

logger = logging.getLogger(__name__)

RESULT_COLUMNS = (
    "dataset", "model", "scaler", "task",
    "accuracy", "mae", "mse", "r2",
    "train_time_ms", "inference_time_ms", "scaler_fit_time_ms",
    "memory_kb", "seed", "status",
)
TIME_COLUMNS = ("train_time_ms", "inference_time_ms", "scaler_fit_time_ms")


class ConfigError(ValueError):
    pass


class LeakageError(AssertionError):
    pass


@dataclass(frozen=True)
class DatasetConfig:
    name: str
    path: Path
    target: str
    task: Task
    missing_sentinels: tuple[float, ...] = ()


@dataclass(frozen=True)
class ModelEntry:
    kind: ModelKind
    params: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class RunConfig:
    datasets: tuple[DatasetConfig, ...]
    models: tuple[ModelEntry, ...]
    scalers: tuple[ScalerKind, ...] = ALL_SCALERS
    seed: int = 42
    ratio: float = 0.7
    output_dir: Path = Path("results")
    jobs: int = 1
    qt_output: str = "uniform"

    def __post_init__(self):
        if not self.datasets:
            raise ConfigError("config needs at least one dataset")
        if not self.models:
            raise ConfigError("config needs at least one model")
        if not self.scalers:
            raise ConfigError("config needs at least one scaler")
        if not 0.0 < self.ratio < 1.0:
            raise ConfigError(f"ratio must lie in (0, 1), got {self.ratio}")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.qt_output not in ("uniform", "normal"):
            raise ConfigError("qt_output must be 'uniform' or 'normal'")
        names = [d.name for d in self.datasets]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate dataset names: {names}")
        if len({s for s in self.scalers}) != len(self.scalers):
            raise ConfigError("duplicate scalers in config")
        if len({m.kind for m in self.models}) != len(self.models):
            raise ConfigError("duplicate models in config")

    @classmethod
    def from_dict(cls, doc: dict[str, Any], base_dir: str | Path = ".") -> "RunConfig":
        base = Path(base_dir)
        known = {"datasets", "models", "scalers", "seed", "ratio", "output_dir", "jobs", "qt_output"}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            datasets = []
            for entry in doc.get("datasets", []):
                path = Path(entry["path"])
                datasets.append(
                    DatasetConfig(
                        name=entry.get("name") or path.stem,
                        path=path if path.is_absolute() else base / path,
                        target=entry["target"],
                        task=Task(entry["task"]),
                        missing_sentinels=tuple(float(v) for v in entry.get("missing_sentinels", ())),
                    )
                )
            models = []
            for entry in doc.get("models", [m.value for m in ALL_MODELS]):
                if isinstance(entry, str):
                    models.append(ModelEntry(parse_model_kind(entry)))
                else:
                    models.append(ModelEntry(parse_model_kind(entry["kind"]), dict(entry.get("params", {}))))
            scalers = tuple(ScalerKind(s) for s in doc.get("scalers", [s.value for s in ALL_SCALERS]))
            out = Path(doc.get("output_dir", "results"))
            return cls(
                datasets=tuple(datasets),
                models=tuple(models),
                scalers=scalers,
                seed=int(doc.get("seed", 42)),
                ratio=float(doc.get("ratio", 0.7)),
                output_dir=out if out.is_absolute() else base / out,
                jobs=int(doc.get("jobs", 1)),
                qt_output=doc.get("qt_output", "uniform"),
            )
        except ModelError as exc:
            raise ConfigError(str(exc)) from exc
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid config: {exc!r}") from exc

    @classmethod
    def from_json(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls.from_dict(doc, base_dir=path.parent)

    def to_dict(self) -> dict[str, Any]:
        return {
            "datasets": [
                {
                    "name": d.name,
                    "path": str(d.path),
                    "target": d.target,
                    "task": d.task.value,
                    "missing_sentinels": list(d.missing_sentinels),
                }
                for d in self.datasets
            ],
            "models": [{"kind": m.kind.value, "params": m.params} for m in self.models],
            "scalers": [s.value for s in self.scalers],
            "seed": self.seed,
            "ratio": self.ratio,
            "output_dir": str(self.output_dir),
            "jobs": self.jobs,
            "qt_output": self.qt_output,
        }


@dataclass
class RunRecord:
    dataset: str
    model: str
    scaler: str
    task: str
    metrics: dict[str, float | None]
    train_time_ms: float
    inference_time_ms: float
    scaler_fit_time_ms: float
    memory_kb: float
    seed: int
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def row(self) -> dict[str, str]:
        out = {
            "dataset": self.dataset,
            "model": self.model,
            "scaler": self.scaler,
            "task": self.task,
            "memory_kb": repr(float(self.memory_kb)),
            "seed": str(self.seed),
            "status": self.status,
        }
        for name in METRICS:
            v = self.metrics.get(name)
            out[name] = "" if v is None else repr(float(v))
        for name in TIME_COLUMNS:
            out[name] = f"{getattr(self, name):.4f}"
        return out


@dataclass
class CellResult:
    record: RunRecord
    scaler: dict[str, Any]
    model: dict[str, Any]
    warnings: list[str]


def measure_time(phase: Callable[[], Any]) -> tuple[Any, float]:
    """Run ``phase`` and return ``(result, wall-clock milliseconds)``."""
    start = time.perf_counter_ns()
    result = phase()
    return result, (time.perf_counter_ns() - start) / 1e6


def measure_memory(scaler: FittedScaler, transformed_train: np.ndarray, transformed_test: np.ndarray) -> float:
    """Deterministic memory cost of the scaling step in kB.

    Stored statistics plus the two transformed copies at 8 bytes per element.
    The identity scaler makes no copies and stores nothing, hence 0.
    """
    if scaler.kind is ScalerKind.NO:
        return 0.0
    n_bytes = scaler.stat_bytes + 8 * (np.asarray(transformed_train).size + np.asarray(transformed_test).size)
    return n_bytes / 1024.0


def cell_seed(global_seed: int, dataset: str, model: ModelKind | str) -> int:
    # the scaler is left out on purpose: every scaler of a (dataset, model) pair
    # sees the same model randomness, so scaler effects are not confounded with it
    return derive_seed(global_seed, dataset, ModelKind(model).value)


def run_cell(
    dataset: str,
    task: Task,
    train_X: np.ndarray,
    train_y: np.ndarray,
    test_X: np.ndarray,
    test_y: np.ndarray,
    n_classes: int,
    model: ModelKind,
    params: dict[str, Any],
    scaler_kind: ScalerKind,
    seed: int,
    qt_output: str = "uniform",
) -> CellResult:
    """Execute one grid cell. Training failures come back as ``failed`` records."""
    warnings: list[str] = []
    scaler, fit_ms = measure_time(lambda: fit_scaler(scaler_kind, train_X, output_distribution=qt_output))
    # leakage guard: the statistics must come from exactly the training rows
    if scaler.fit_row_count != train_X.shape[0] or scaler.fit_digest != array_digest(train_X):
        raise LeakageError(f"{dataset}/{scaler_kind.value}: scaler was not fitted on the training split")
    warnings.extend(f"{dataset}: {w}" for w in scaler.warnings)
    Xtr = transform(scaler, train_X)
    Xte = transform(scaler, test_X)
    memory_kb = measure_memory(scaler, Xtr, Xte)
    metrics: dict[str, float | None] = {name: None for name in METRICS}
    status = "ok"
    model_doc: dict[str, Any] = {}
    train_ms = infer_ms = 0.0
    try:
        spec = ModelSpec(model, task, params, seed)
        model_doc = spec.to_dict()
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            trained, train_ms = measure_time(lambda: train(spec, (Xtr, train_y, n_classes)))
            y_pred, infer_ms = measure_time(lambda: predict(trained, Xte))
        model_doc["metadata"] = _jsonable(trained.metadata)
        if not np.all(np.isfinite(np.asarray(y_pred, dtype=np.float64))):
            raise TrainingError("non-finite predictions")
        for name in metrics_for(task):
            try:
                metrics[name] = METRICS[name](test_y, y_pred)
            except MetricError as exc:
                warnings.append(f"{dataset}/{model.value}/{scaler_kind.value}: {name} skipped ({exc})")
    except (TrainingError, ModelError, FloatingPointError, np.linalg.LinAlgError) as exc:
        status = f"failed: {exc}"
        logger.warning("%s/%s/%s failed: %s", dataset, model.value, scaler_kind.value, exc)
    record = RunRecord(
        dataset=dataset,
        model=model.value,
        scaler=scaler_kind.value,
        task=task.value,
        metrics=metrics,
        train_time_ms=train_ms,
        inference_time_ms=infer_ms,
        scaler_fit_time_ms=fit_ms,
        memory_kb=memory_kb,
        seed=seed,
        status=status,
    )
    return CellResult(record, summarize(scaler, max_values=None), model_doc, warnings)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _cell_args(split: SplitPair, model: ModelEntry, scaler: ScalerKind, config: RunConfig):
    tr, te = split.train, split.test
    n_classes = tr.n_classes if tr.task is Task.CLASSIFICATION else 0
    return (
        tr.name, tr.task, tr.X, tr.y, te.X, te.y, n_classes,
        model.kind, model.params, scaler,
        cell_seed(config.seed, tr.name, model.kind), config.qt_output,
    )


def prepare_datasets(config: RunConfig) -> list[SplitPair]:
    splits = []
    for dc in config.datasets:
        raw = load_csv(dc.path, dc.target, dc.task, dc.missing_sentinels, name=dc.name)
        ds = clean_dataset(raw)
        splits.append(split_train_test(ds, config.ratio, config.seed))
    return splits


@dataclass
class RunResult:
    records: list[RunRecord]
    manifest: dict[str, Any]
    splits: list[SplitPair]


def run_experiment(config: RunConfig, jobs: int | None = None) -> RunResult:
    """Run every compatible (dataset, model, scaler) cell of ``config``."""
    started = datetime.now(timezone.utc)
    jobs = jobs or config.jobs
    # model hyperparameters are validated up front so a bad config does no work
    try:
        for m in config.models:
            for task in Task:
                if m.kind in compatible_models(task):
                    ModelSpec(m.kind, task, m.params)
    except ModelError as exc:
        raise ConfigError(str(exc)) from exc
    splits = prepare_datasets(config)

    cells = []
    for split in splits:
        for m in config.models:
            if m.kind not in compatible_models(split.train.task):
                continue
            for s in config.scalers:
                cells.append(_cell_args(split, m, s, config))

    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_cell, *zip(*cells)))
    else:
        results = [run_cell(*args) for args in cells]

    ds_order = {s.train.name: i for i, s in enumerate(splits)}
    m_order = {m.value: i for i, m in enumerate(ALL_MODELS)}
    s_order = {s.value: i for i, s in enumerate(ALL_SCALERS)}
    results.sort(key=lambda r: (ds_order[r.record.dataset], m_order[r.record.model], s_order[r.record.scaler]))
    records = [r.record for r in results]
    manifest = build_manifest(config, splits, results, started)
    return RunResult(records, manifest, splits)


def build_manifest(config: RunConfig, splits: list[SplitPair], results: list[CellResult], started) -> dict[str, Any]:
    scalers: dict[str, dict[str, Any]] = {}
    models: dict[str, dict[str, Any]] = {}
    cells = []
    warnings: list[str] = []
    for r in results:
        rec = r.record
        scalers.setdefault(rec.dataset, {}).setdefault(rec.scaler, r.scaler)
        if r.model:
            models.setdefault(rec.dataset, {}).setdefault(
                rec.model, {k: r.model[k] for k in ("kind", "task", "seed", "params")}
            )
        cells.append(
            {"dataset": rec.dataset, "model": rec.model, "scaler": rec.scaler, "status": rec.status,
             "model_metadata": r.model.get("metadata", {})}
        )
        for w in r.warnings:
            if w not in warnings:
                warnings.append(w)
    failed = [c for c in cells if c["status"] != "ok"]
    return {
        "tool": "scalebench",
        "version": __version__,
        "started_at": started.isoformat(),
        "finished_at": datetime.now(timezone.utc).isoformat(),
        "config": config.to_dict(),
        "seed": config.seed,
        "ratio": config.ratio,
        "datasets": {
            s.train.name: {
                "task": s.train.task.value,
                "n_rows": int(s.train.n + s.test.n),
                "n_train": int(s.train.n),
                "n_test": int(s.test.n),
                "n_features": int(s.train.d),
                "feature_names": list(s.train.feature_names),
                "classes": list(s.train.classes),
                "dropped_rows": int(s.train.dropped_rows),
                "train_index": s.train_index.tolist(),
                "test_index": s.test_index.tolist(),
            }
            for s in splits
        },
        "models": models,
        "scalers": scalers,
        "n_records": len(results),
        "n_failed": len(failed),
        "failed_cells": failed,
        "cells": cells,
        "warnings": warnings,
    }


def write_results_csv(records: list[RunRecord], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS, lineterminator="\n")
        w.writeheader()
        for rec in records:
            w.writerow(rec.row())


def read_results_csv(path: str | Path) -> list[RunRecord]:
    records = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(RESULT_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            records.append(
                RunRecord(
                    dataset=row["dataset"],
                    model=row["model"],
                    scaler=row["scaler"],
                    task=row["task"],
                    metrics={m: (float(row[m]) if row[m] != "" else None) for m in METRICS},
                    train_time_ms=float(row["train_time_ms"] or 0),
                    inference_time_ms=float(row["inference_time_ms"] or 0),
                    scaler_fit_time_ms=float(row["scaler_fit_time_ms"] or 0),
                    memory_kb=float(row["memory_kb"] or 0),
                    seed=int(row["seed"] or 0),
                    status=row["status"],
                )
            )
    return records


def persist(result: RunResult, out_dir: str | Path) -> dict[str, Path]:
    """Write ``results.csv``, ``manifest.json`` and the split CSVs under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"results": out / "results.csv", "manifest": out / "manifest.json"}
    write_results_csv(result.records, paths["results"])
    paths["manifest"].write_text(json.dumps(result.manifest, indent=2, sort_keys=False) + "\n", encoding="utf-8")
    for split in result.splits:
        tr, te = save_split(split, out / "splits")
        paths[f"{split.train.name}_train"] = tr
        paths[f"{split.train.name}_test"] = te
    return paths


def strip_times(path: str | Path) -> list[dict[str, str]]:
    """Rows of a results file without the wall-clock columns (for reproducibility checks)."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return [{k: v for k, v in row.items() if k not in TIME_COLUMNS} for row in csv.DictReader(fh)]


__all__ = [
    "CellResult",
    "ConfigError",
    "DatasetConfig",
    "LeakageError",
    "ModelEntry",
    "RESULT_COLUMNS",
    "RunConfig",
    "RunRecord",
    "RunResult",
    "cell_seed",
    "measure_memory",
    "measure_time",
    "persist",
    "read_results_csv",
    "run_cell",
    "run_experiment",
    "strip_times",
    "write_results_csv",
]
