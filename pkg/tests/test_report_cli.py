import math
import random
import shutil

import numpy as np
import pytest

from scalebench.cli import main
from scalebench.report import (
    HEADER,
    SignificanceRow,
    aggregate_significance,
    bar_chart_svg,
    best_scalers,
    emit_report,
    format_rows,
)
from scalebench.runner import RunRecord, write_results_csv
from scalebench.scaling import ALL_SCALERS
from scalebench.stats import TestOutcome

SCALERS = [s.value for s in ALL_SCALERS]


def rec(dataset, model, scaler, value, metric="accuracy", task="classification", status="ok"):
    metrics = {m: None for m in ("accuracy", "mae", "mse", "r2")}
    metrics[metric] = value
    return RunRecord(dataset, model, scaler, task, metrics, 1.0, 0.5, 0.1, 0.0, 7, status)


def constant_records(model="CART", n_datasets=3):
    return [rec(f"d{i}", model, s, 0.8 + i / 100) for i in range(n_datasets) for s in SCALERS]


def test_identical_metrics_give_degenerate_no_no():
    rows = aggregate_significance(constant_records(), "accuracy")
    assert len(rows) == 1
    r = rows[0]
    assert r.wilcoxon.p_value == 1.0 and r.friedman.p_value == 1.0
    assert r.line() == "CART & 0.0000 & 1.0000 & No & 0.0000 & 1.0000 & No"


def test_dominating_scaler_friedman():
    records = []
    for i in range(8):
        records += [rec(f"d{i}", "KNN", "NO", 0.5), rec(f"d{i}", "KNN", "MM", 0.9), rec(f"d{i}", "KNN", "ZSN", 0.7)]
    (row,) = aggregate_significance(records, "accuracy")
    assert row.friedman.statistic == pytest.approx(16.0)
    assert row.friedman.p_value == pytest.approx(math.exp(-8), rel=1e-10)
    assert row.friedman.verdict == "Yes"
    # all 16 pairs favour the scaled side: exact two-sided p = 2 / 2**16
    assert row.wilcoxon.p_value == pytest.approx(2 / 2**16)


def test_row_field_order_and_header():
    assert HEADER == ("Model", "Wilcoxon stat", "Wilcoxon p", "Wilcoxon sig.", "Friedman stat", "Friedman p", "Friedman sig.")
    w = TestOutcome("wilcoxon", 12.0, 0.0001, 0.01, True, 10)
    f = TestOutcome("friedman", 44.95794, 0.00001, 0.01, True, 5)
    assert SignificanceRow("SVM", "accuracy", w, f).line() == "SVM & 12.0000 & 0.0001 & Yes & 44.9579 & 0.0000 & Yes"
    lr_w = TestOutcome("wilcoxon", 1927.5, 0.3228, 0.01, False, 90)
    lr = SignificanceRow("LR", "accuracy", lr_w, f).line()
    assert lr == "LR & 1927.5000 & 0.3228 & No & 44.9579 & 0.0000 & Yes"


def test_friedman_skipped_with_fewer_than_three_scalers():
    records = [rec(f"d{i}", "KNN", s, 0.5 + i / 10 + (s == "MM") / 5) for i in range(4) for s in ("NO", "MM")]
    (row,) = aggregate_significance(records, "accuracy")
    assert row.friedman is None and any("Friedman skipped" in n for n in row.notes)
    assert "n/a & n/a & n/a" in row.line()


def test_incomplete_datasets_dropped_from_friedman():
    records = constant_records("RF", 3)
    records = [r for r in records if not (r.dataset == "d2" and r.scaler == "QT")]
    (row,) = aggregate_significance(records, "accuracy")
    assert row.friedman.n_effective == 2
    assert any("2 of 3" in n for n in row.notes)


def test_order_independent():
    rng = np.random.default_rng(0)
    records = [rec(f"d{i}", m, s, float(rng.uniform())) for i in range(5) for m in ("KNN", "RF") for s in SCALERS]
    a = [r.line() for r in aggregate_significance(records, "accuracy")]
    shuffled = records[:]
    random.Random(3).shuffle(shuffled)
    assert [r.line() for r in aggregate_significance(shuffled, "accuracy")] == a


def test_failed_and_inapplicable_cells_ignored():
    records = constant_records("KNN", 2)
    records[1] = rec("d0", "KNN", "MM", 0.1, status="failed: x")
    (row,) = aggregate_significance(records, "accuracy")
    # the failed value is not used: d0 is incomplete, leaving one block
    assert row.friedman is None and any("1 complete" in n for n in row.notes)
    assert row.wilcoxon.n_effective == 0
    assert aggregate_significance(records, "mse") == []
    with pytest.raises(ValueError):
        aggregate_significance(records, "f1")


def test_best_scalers():
    records = [rec("d0", "KNN", "NO", 0.5), rec("d0", "KNN", "MM", 0.9), rec("d0", "KNN", "ZSN", 0.9)]
    assert best_scalers(records, "accuracy") == [("d0", "KNN", "MM", 0.9, 0.5)]
    mse_rec = [rec("r", "LinReg", s, v, "mse", "regression") for s, v in (("NO", 3.0), ("RS", 1.0))]
    assert best_scalers(mse_rec, "mse")[0][2] == "RS"


def _synthetic_results(tmp_path):
    rng = np.random.default_rng(1)
    records = []
    for i in range(6):
        for s in SCALERS:
            records.append(rec(f"c{i}", "KNN", s, 0.5 + SCALERS.index(s) / 50 + rng.uniform() / 1000))
            records.append(rec(f"c{i}", "CART", s, 0.7))
            records.append(rec(f"r{i}", "LinReg", s, 1.0 + rng.uniform(), "mse", "regression"))
    path = tmp_path / "results.csv"
    write_results_csv(records, path)
    return records, path


def test_emit_report_sections(tmp_path):
    records, _ = _synthetic_results(tmp_path)
    rows = {m: aggregate_significance(records, m) for m in ("accuracy", "mse")}
    out = emit_report(rows, records, tmp_path / "r" / "report.md")
    text = out.read_text(encoding="utf-8")
    assert "## Classification significance" in text and "## Regression significance" in text
    assert text.index("## Classification") < text.index("## Regression")
    assert "| KNN |" in text and "## Best scaler per dataset" in text
    assert "Figures" not in text and not (tmp_path / "r" / "svg").exists()
    with pytest.raises(ValueError):
        emit_report({}, records, tmp_path / "x.md")


def test_report_row_count_matches_models(tmp_path):
    records = [rec(f"d{i}", f"M{j}", s, 0.5 + j / 100 + i / 10) for i in range(3) for j in range(12) for s in SCALERS]
    rows = {"accuracy": aggregate_significance(records, "accuracy")}
    text = emit_report(rows, records, tmp_path / "r.md").read_text()
    section = text.split("### accuracy")[1].split("##")[0]
    assert sum(1 for line in section.splitlines() if line.startswith("| M") and not line.startswith("| Model")) == 12


def test_svg_is_well_formed(tmp_path):
    import xml.etree.ElementTree as ET

    svg = bar_chart_svg("t <&>", ["NO", "MM"], [0.5, -0.25], "acc")
    root = ET.fromstring(svg.split("\n", 1)[1])
    assert root.tag.endswith("svg") and root.attrib["version"] == "1.1"
    assert len([e for e in root.iter() if e.tag.endswith("rect")]) == 3


# ---- CLI ----

def test_cli_stats_known_pvalues(tmp_path, capsys):
    _, path = _synthetic_results(tmp_path)
    assert main(["stats", "--input", str(path), "--metric", "accuracy", "--csv", str(tmp_path / "s.csv")]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert out[0] == "Model & Wilcoxon stat & Wilcoxon p & Wilcoxon sig. & Friedman stat & Friedman p & Friedman sig."
    assert out[2] == "CART & 0.0000 & 1.0000 & No & 0.0000 & 1.0000 & No"
    knn = out[1].split(" & ")
    assert knn[0] == "KNN" and knn[3] == "Yes" and knn[6] == "Yes"
    # verdicts recompute from the full-precision CSV
    import csv

    for row in csv.DictReader(open(tmp_path / "s.csv")):
        for t in ("wilcoxon", "friedman"):
            assert row[f"{t}_sig"] == ("Yes" if float(row[f"{t}_p"]) < 0.01 else "No")


def test_cli_stats_alpha_flag(tmp_path, capsys):
    _, path = _synthetic_results(tmp_path)
    assert main(["stats", "--input", str(path), "--metric", "accuracy", "--alpha", "1e-30"]) == 0
    assert "Yes" not in capsys.readouterr().out


def test_cli_stats_independent_of_row_order(tmp_path, capsys):
    _, path = _synthetic_results(tmp_path)
    lines = path.read_text().splitlines()
    body = lines[1:]
    random.Random(0).shuffle(body)
    other = tmp_path / "shuffled.csv"
    other.write_text("\n".join([lines[0]] + body) + "\n")
    main(["stats", "--input", str(path), "--metric", "mse"])
    a = capsys.readouterr().out
    main(["stats", "--input", str(other), "--metric", "mse"])
    assert capsys.readouterr().out == a


def test_cli_report_does_not_touch_results(tmp_path):
    _, path = _synthetic_results(tmp_path)
    before = path.read_bytes()
    assert main(["report", "--input", str(path), "--out", str(tmp_path / "rep.md"), "--svg", str(tmp_path / "svg")]) == 0
    assert path.read_bytes() == before
    assert (tmp_path / "svg" / "accuracy_KNN.svg").exists()
    assert "svg/accuracy_KNN.svg" in (tmp_path / "rep.md").read_text()


@pytest.mark.parametrize(
    "argv",
    [[], ["frobnicate"], ["stats", "--input", "x.csv"], ["stats", "--input", "x", "--metric", "f1"],
     ["run"], ["run", "-c", "x.json", "--bogus"], ["stats", "--input", "x", "--metric", "mse", "--alpha", "2"]],
)
def test_cli_usage_errors_exit_1(argv, capsys):
    assert main(argv) == 1
    assert "usage:" in capsys.readouterr().err


def test_cli_io_error_exit_2(tmp_path, capsys):
    assert main(["stats", "--input", str(tmp_path / "none.csv"), "--metric", "mse"]) == 2
    assert main(["run", "-c", str(tmp_path / "none.json")]) == 2


def test_cli_config_errors_exit_1(tmp_path, capsys, fixtures_dir):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"datasets": [{"path": "x.csv", "target": "t", "task": "regression"}], "models": ["xgboost"]}')
    assert main(["run", "-c", str(cfg)]) == 1
    assert "model not implemented: xgboost" in capsys.readouterr().err
    cfg.write_text("{not json")
    assert main(["run", "-c", str(cfg)]) == 1


def test_cli_run_small(tmp_path, fixtures_dir, capsys):
    for f in ("rice_like.csv", "energy_like.csv"):
        shutil.copy(fixtures_dir / f, tmp_path / f)
    cfg = tmp_path / "c.json"
    cfg.write_text(
        '{"datasets": [{"path": "rice_like.csv", "target": "Class", "task": "classification"},'
        ' {"path": "energy_like.csv", "target": "Output", "task": "regression"}],'
        ' "models": ["KNN", "CART"], "scalers": ["NO", "MM", "ZSN"]}'
    )
    assert main(["run", "-c", str(cfg), "--out", str(tmp_path / "o"), "--qt-output", "normal"]) == 0
    assert (tmp_path / "o" / "results.csv").exists()
    assert "12 records (0 failed)" in capsys.readouterr().out


def test_cli_help_and_version(capsys):
    assert main(["--help"]) == 0
    assert main(["--version"]) == 0
