import json
import math

import numpy as np
import pytest

from scalebench.dataset_io import Dataset, Task, write_csv
from scalebench.models import ModelKind
from scalebench.runner import (
    RESULT_COLUMNS,
    ConfigError,
    RunConfig,
    cell_seed,
    measure_memory,
    measure_time,
    persist,
    read_results_csv,
    run_cell,
    run_experiment,
    strip_times,
)
from scalebench.scaling import ScalerKind, fit_scaler, transform
from scalebench.synthetic import make_classification, make_regression

FAST = {"RF": {"n_trees": 5}, "MLP": {"epochs": 5}, "LogReg": {"max_iter": 50}}


def _write(ds: Dataset, path):
    write_csv(ds, path)
    return path


def _config(tmp_path, datasets, models=("KNN", "LogReg", "GaussianNB", "CART", "RF", "MLP", "LinReg"), scalers=None, **kw):
    doc = {
        "datasets": datasets,
        "models": [{"kind": m, "params": FAST.get(m, {})} for m in models],
        "seed": 42,
        "output_dir": str(tmp_path / "out"),
        **kw,
    }
    if scalers is not None:
        doc["scalers"] = scalers
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(doc))
    return RunConfig.from_json(p)


@pytest.fixture
def two_datasets(tmp_path):
    c = _write(make_classification(60, 4, 3, seed=1, name="cls"), tmp_path / "cls.csv")
    r = _write(make_regression(60, 4, seed=2, name="reg"), tmp_path / "reg.csv")
    return [
        {"name": "cls", "path": str(c), "target": "target", "task": "classification"},
        {"name": "reg", "path": "reg.csv", "target": "target", "task": "regression"},
    ]


def test_grid_counts(tmp_path, two_datasets):
    cfg = _config(tmp_path, two_datasets[:1])
    res = run_experiment(cfg)
    assert len(res.records) == 6 * 13 == 78
    cfg = _config(tmp_path, two_datasets)
    res = run_experiment(cfg)
    assert len(res.records) == (6 + 5) * 13
    keys = [(r.dataset, r.model, r.scaler) for r in res.records]
    assert len(set(keys)) == len(keys)
    assert all(r.ok for r in res.records)
    assert res.manifest["n_records"] == len(keys) and res.manifest["n_failed"] == 0
    # regression rows leave accuracy blank, classification rows leave regression metrics blank
    for r in res.records:
        if r.task == "classification":
            assert r.metrics["accuracy"] is not None and r.metrics["mse"] is None
        else:
            assert r.metrics["accuracy"] is None and r.metrics["r2"] is not None


def test_manifest_contents(tmp_path, two_datasets):
    res = run_experiment(_config(tmp_path, two_datasets, models=("CART",), scalers=["NO", "ZSN"]))
    m = res.manifest
    assert m["seed"] == 42 and m["config"]["seed"] == 42
    assert m["tool"] == "scalebench" and "version" in m and "started_at" in m
    info = m["datasets"]["cls"]
    assert info["n_train"] == 42 and info["n_test"] == 18
    assert sorted(info["train_index"] + info["test_index"]) == list(range(60))
    assert m["models"]["cls"]["CART"]["params"]["min_samples_split"] == 2
    # scaler statistics in the manifest come from the training rows only
    split = res.splits[0]
    mu = np.array(m["scalers"]["cls"]["ZSN"]["stats"]["mean"])
    assert np.array_equal(mu, split.train.X.mean(axis=0))
    full = np.vstack([split.train.X, split.test.X]).mean(axis=0)
    assert not np.allclose(mu, full)


def test_same_seed_reproducible_and_parallel_equals_serial(tmp_path, two_datasets):
    cfg = _config(tmp_path, two_datasets, models=("KNN", "RF", "MLP"), scalers=["NO", "MM", "QT"])
    a = persist(run_experiment(cfg, jobs=1), tmp_path / "a")
    b = persist(run_experiment(cfg, jobs=1), tmp_path / "b")
    c = persist(run_experiment(cfg, jobs=2), tmp_path / "c")
    assert strip_times(a["results"]) == strip_times(b["results"]) == strip_times(c["results"])


def test_persist_files(tmp_path, two_datasets):
    res = run_experiment(_config(tmp_path, two_datasets, models=("KNN",), scalers=["NO", "MM"]))
    paths = persist(res, tmp_path / "o")
    header = paths["results"].read_text().splitlines()[0]
    assert header == ",".join(RESULT_COLUMNS)
    assert header == "dataset,model,scaler,task,accuracy,mae,mse,r2,train_time_ms,inference_time_ms,scaler_fit_time_ms,memory_kb,seed,status"
    assert (tmp_path / "o" / "splits" / "cls_train.csv").exists()
    assert json.loads(paths["manifest"].read_text())["n_records"] == 4
    first = paths["results"].read_bytes()
    persist(res, tmp_path / "o")
    assert paths["results"].read_bytes() == first
    back = read_results_csv(paths["results"])
    assert [r.row() for r in back] == [r.row() for r in res.records]


def test_failed_cell_does_not_abort(tmp_path):
    X = np.array([[1e300 * ((-1) ** i) * (1 + i % 5)] for i in range(30)])
    y = np.arange(30) % 2
    ds = Dataset("huge", ("x",), X, y, Task.CLASSIFICATION, classes=("a", "b"))
    _write(ds, tmp_path / "huge.csv")
    cfg = _config(
        tmp_path, [{"path": "huge.csv", "target": "target", "task": "classification"}],
        models=("LogReg",), scalers=["NO", "MM"],
    )
    res = run_experiment(cfg)
    status = {r.scaler: r.status for r in res.records}
    assert status["MM"] == "ok"
    assert status["NO"].startswith("failed:")
    assert res.manifest["n_failed"] == 1
    assert res.manifest["failed_cells"][0]["scaler"] == "NO"


@pytest.mark.parametrize(
    "doc, match",
    [
        ({"datasets": [], "models": ["KNN"]}, "dataset"),
        ({"datasets": [{"path": "a.csv", "target": "t", "task": "regression"}], "models": ["xgboost"]}, "model not implemented: xgboost"),
        ({"datasets": [{"path": "a.csv", "target": "t", "task": "regression"}], "ratio": 1.5}, "ratio"),
        ({"datasets": [{"path": "a.csv", "target": "t", "task": "regression"}], "scalers": ["ZZ"]}, "invalid"),
        ({"datasets": [{"path": "a.csv", "target": "t", "task": "nonsense"}]}, "invalid"),
        ({"datasets": [{"path": "a.csv", "task": "regression"}]}, "invalid"),
        ({"datasets": [{"path": "a.csv", "target": "t", "task": "regression"}], "bogus": 1}, "unknown config keys"),
        ({"datasets": [{"path": "a.csv", "target": "t", "task": "regression"}], "models": ["KNN", "knn"]}, "duplicate"),
        ({"datasets": [{"path": "a.csv", "target": "t", "task": "regression"}], "jobs": 0}, "jobs"),
    ],
)
def test_config_errors(doc, match):
    with pytest.raises(ConfigError, match=match):
        RunConfig.from_dict(doc)


def test_bad_hyperparameters_abort_before_work(tmp_path, two_datasets):
    doc = {"datasets": two_datasets, "models": [{"kind": "KNN", "params": {"k": 0}}]}
    # the failure must come from validation, not from loading or training
    with pytest.raises(ConfigError, match="KNN.k"):
        run_experiment(RunConfig.from_dict(doc, tmp_path))


def test_memory_accounting():
    rng = np.random.default_rng(0)
    tr, te = rng.normal(size=(100, 10)), rng.normal(size=(30, 10))
    s = fit_scaler("ZSN", tr)
    kb = measure_memory(s, transform(s, tr), transform(s, te))
    assert kb == (2 * 10 * 8 + 130 * 10 * 8) / 1024 == 10.3125
    no = fit_scaler("NO", tr)
    assert measure_memory(no, transform(no, tr), transform(no, te)) == 0.0
    qt, mm = fit_scaler("QT", tr), fit_scaler("MM", tr)
    assert measure_memory(qt, tr, te) > measure_memory(mm, tr, te)


def test_measure_time():
    out, ms = measure_time(lambda: 7)
    assert out == 7 and ms >= 0


def test_cell_seed_independent_of_scaler_and_order():
    assert cell_seed(42, "rice", "KNN") == cell_seed(42, "rice", ModelKind.KNN)
    assert cell_seed(42, "rice", "KNN") != cell_seed(42, "energy", "KNN")


def test_run_cell_leakage_hook_sees_only_train(monkeypatch):
    import scalebench.runner as runner_mod

    seen = []
    real = runner_mod.fit_scaler

    def spy(kind, X, **kw):
        seen.append(np.array(X, copy=True))
        return real(kind, X, **kw)

    monkeypatch.setattr(runner_mod, "fit_scaler", spy)
    rng = np.random.default_rng(1)
    trX, teX = rng.normal(size=(20, 3)), rng.normal(size=(8, 3))
    teX[0, 0] = 1e9
    res = run_cell("d", Task.CLASSIFICATION, trX, np.arange(20) % 2, teX, np.arange(8) % 2, 2,
                   ModelKind.KNN, {}, ScalerKind.MM, 0)
    assert res.record.ok
    assert len(seen) == 1 and np.array_equal(seen[0], trX)
    assert res.scaler["stats"]["max"] == trX.max(axis=0).tolist()


def test_leakage_guard_trips_on_wrong_fit(monkeypatch):
    import scalebench.runner as runner_mod
    from scalebench.runner import LeakageError

    real = runner_mod.fit_scaler
    monkeypatch.setattr(runner_mod, "fit_scaler", lambda kind, X, **kw: real(kind, np.vstack([X, X[:1]]), **kw))
    rng = np.random.default_rng(2)
    with pytest.raises(LeakageError):
        run_cell("d", Task.REGRESSION, rng.normal(size=(10, 2)), rng.normal(size=10), rng.normal(size=(4, 2)),
                 rng.normal(size=4), 0, ModelKind.KNN, {}, ScalerKind.ZSN, 0)


def test_r2_on_constant_test_target_is_warning_not_failure():
    rng = np.random.default_rng(3)
    res = run_cell("d", Task.REGRESSION, rng.normal(size=(10, 2)), rng.normal(size=10), rng.normal(size=(4, 2)),
                   np.ones(4), 0, ModelKind.KNN, {"k": 3}, ScalerKind.NO, 0)
    assert res.record.ok and res.record.metrics["r2"] is None and res.record.metrics["mse"] is not None
    assert any("r2 skipped" in w for w in res.warnings)


def test_qt_output_normal_flows_through(tmp_path, two_datasets):
    cfg = _config(tmp_path, two_datasets[:1], models=("KNN",), scalers=["QT"], qt_output="normal")
    res = run_experiment(cfg)
    assert res.manifest["scalers"]["cls"]["QT"]["output_distribution"] == "normal"
