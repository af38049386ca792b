"""Significance tables, Markdown reports and SVG bar charts from ``results.csv``."""

from __future__ import annotations

import csv
import html
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .metrics import CLASSIFICATION_METRICS, HIGHER_IS_BETTER, METRICS, REGRESSION_METRICS
from .models import ALL_MODELS
from .runner import RunRecord
from .scaling import ALL_SCALERS
from .stats import TestOutcome, friedman, wilcoxon_signed_rank

HEADER = (
    "Model", "Wilcoxon stat", "Wilcoxon p", "Wilcoxon sig.",
    "Friedman stat", "Friedman p", "Friedman sig.",
)
NA = "n/a"


@dataclass
class SignificanceRow:
    model: str
    metric: str
    wilcoxon: TestOutcome | None
    friedman: TestOutcome | None
    notes: list[str] = field(default_factory=list)

    def cells(self) -> tuple[str, ...]:
        """Display cells in table order: statistic, p and verdict for each test, 4 decimals."""
        out = [self.model]
        for t in (self.wilcoxon, self.friedman):
            if t is None:
                out += [NA, NA, NA]
            else:
                out += [f"{t.statistic:.4f}", f"{t.p_value:.4f}", t.verdict]
        return tuple(out)

    def line(self) -> str:
        return " & ".join(self.cells())

    def csv_row(self) -> dict[str, str]:
        row = {"model": self.model, "metric": self.metric}
        for name, t in (("wilcoxon", self.wilcoxon), ("friedman", self.friedman)):
            row[f"{name}_stat"] = "" if t is None else repr(t.statistic)
            row[f"{name}_p"] = "" if t is None else repr(t.p_value)
            row[f"{name}_sig"] = NA if t is None else t.verdict
            row[f"{name}_n"] = "" if t is None else str(t.n_effective)
        row["alpha"] = repr((self.wilcoxon or self.friedman).alpha) if (self.wilcoxon or self.friedman) else ""
        row["notes"] = "; ".join(self.notes)
        return row


CSV_COLUMNS = (
    "model", "metric",
    "wilcoxon_stat", "wilcoxon_p", "wilcoxon_sig", "wilcoxon_n",
    "friedman_stat", "friedman_p", "friedman_sig", "friedman_n",
    "alpha", "notes",
)


def _model_order(name: str) -> tuple[int, str]:
    known = [m.value for m in ALL_MODELS]
    return (known.index(name), "") if name in known else (len(known), name)


def _scaler_order(name: str) -> tuple[int, str]:
    known = [s.value for s in ALL_SCALERS]
    return (known.index(name), "") if name in known else (len(known), name)


def metric_table(records: Iterable[RunRecord], metric: str) -> dict[str, dict[str, dict[str, float]]]:
    """``{model: {dataset: {scaler: value}}}`` over successful cells that report ``metric``."""
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; choose from {', '.join(METRICS)}")
    table: dict[str, dict[str, dict[str, float]]] = defaultdict(lambda: defaultdict(dict))
    for r in records:
        v = r.metrics.get(metric)
        if r.ok and v is not None:
            table[r.model][r.dataset][r.scaler] = float(v)
    return table


def aggregate_significance(
    records: Iterable[RunRecord], metric: str, baseline: str = "NO", alpha: float = 0.01
) -> list[SignificanceRow]:
    """One row per model: Wilcoxon of every scaled cell against the same dataset's
    baseline cell, and Friedman across all scalers with datasets as blocks."""
    records = list(records)
    table = metric_table(records, metric)
    rows = []
    for model in sorted(table, key=_model_order):
        per_ds = table[model]
        notes: list[str] = []
        scaled, base = [], []
        for ds in sorted(per_ds):
            cells = per_ds[ds]
            if baseline not in cells:
                notes.append(f"{ds}: no {baseline} cell")
                continue
            for s in sorted(cells, key=_scaler_order):
                if s != baseline:
                    scaled.append(cells[s])
                    base.append(cells[baseline])
        w = wilcoxon_signed_rank(scaled, base, alpha) if scaled else None
        if w is None:
            notes.append("Wilcoxon skipped: no scaled/baseline pairs")

        scalers = sorted({s for cells in per_ds.values() for s in cells}, key=_scaler_order)
        blocks = [ds for ds in sorted(per_ds) if all(s in per_ds[ds] for s in scalers)]
        f = None
        if len(scalers) < 3:
            notes.append(f"Friedman skipped: {len(scalers)} scaler(s), need 3")
        elif len(blocks) < 2:
            notes.append(f"Friedman skipped: {len(blocks)} complete dataset(s), need 2")
        else:
            if len(blocks) < len(per_ds):
                notes.append(f"Friedman used {len(blocks)} of {len(per_ds)} datasets (others incomplete)")
            f = friedman([[per_ds[ds][s] for s in scalers] for ds in blocks], alpha)
        rows.append(SignificanceRow(model, metric, w, f, notes))
    return rows


def write_significance_csv(rows: list[SignificanceRow], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow(row.csv_row())


def format_rows(rows: list[SignificanceRow]) -> str:
    lines = [" & ".join(HEADER)]
    lines += [row.line() for row in rows]
    return "\n".join(lines)


def _md_table(header: Iterable[str], body: Iterable[Iterable[str]]) -> list[str]:
    header = list(header)
    out = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    out += ["| " + " | ".join(str(c) for c in row) + " |" for row in body]
    return out


def _fmt(v: float | None) -> str:
    return NA if v is None else f"{v:.4f}"


def best_scalers(records: list[RunRecord], metric: str) -> list[tuple[str, str, str, float, float | None]]:
    """(dataset, model, best scaler, its value, baseline value) for every dataset/model pair."""
    table = metric_table(records, metric)
    sign = 1.0 if HIGHER_IS_BETTER[metric] else -1.0
    out = []
    for model in sorted(table, key=_model_order):
        for ds in sorted(table[model]):
            cells = table[model][ds]
            # first scaler in canonical order wins ties
            best = max(sorted(cells, key=_scaler_order), key=lambda s: sign * cells[s])
            out.append((ds, model, best, cells[best], cells.get("NO")))
    return out


def bar_chart_svg(title: str, labels: list[str], values: list[float], ylabel: str = "") -> str:
    """Minimal SVG 1.1 vertical bar chart."""
    width, height = 640, 360
    left, right, top, bottom = 70, 20, 40, 60
    plot_w, plot_h = width - left - right, height - top - bottom
    vals = np.asarray(values, dtype=np.float64)
    lo = min(0.0, float(vals.min())) if vals.size else 0.0
    hi = max(0.0, float(vals.max())) if vals.size else 1.0
    if hi == lo:
        hi = lo + 1.0
    def ypix(v: float) -> float:
        return top + plot_h * (hi - v) / (hi - lo)
    slot = plot_w / max(len(values), 1)
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-family="sans-serif" '
        f'font-size="15">{html.escape(title)}</text>',
        f'<line x1="{left}" y1="{ypix(0):.1f}" x2="{width - right}" y2="{ypix(0):.1f}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="black"/>',
    ]
    for tick in np.linspace(lo, hi, 5):
        y = ypix(tick)
        parts.append(
            f'<text x="{left - 6}" y="{y + 4:.1f}" text-anchor="end" font-family="sans-serif" '
            f'font-size="10">{tick:.3g}</text>'
        )
    for i, (label, v) in enumerate(zip(labels, vals)):
        x = left + i * slot + slot * 0.15
        y0, y1 = sorted((ypix(0.0), ypix(v)))
        parts.append(
            f'<rect x="{x:.1f}" y="{y0:.1f}" width="{slot * 0.7:.1f}" height="{y1 - y0:.1f}" '
            f'fill="#4878a8"><title>{html.escape(label)}: {v:.4f}</title></rect>'
        )
        parts.append(
            f'<text x="{x + slot * 0.35:.1f}" y="{top + plot_h + 16}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10">{html.escape(label)}</text>'
        )
    if ylabel:
        parts.append(
            f'<text x="16" y="{top + plot_h / 2:.1f}" transform="rotate(-90 16 {top + plot_h / 2:.1f})" '
            f'text-anchor="middle" font-family="sans-serif" font-size="11">{html.escape(ylabel)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_svgs(records: list[RunRecord], svg_dir: str | Path) -> list[Path]:
    """One chart per (metric, model): the metric averaged over datasets, per scaler."""
    svg_dir = Path(svg_dir)
    svg_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for metric in METRICS:
        table = metric_table(records, metric)
        for model in sorted(table, key=_model_order):
            by_scaler: dict[str, list[float]] = defaultdict(list)
            for cells in table[model].values():
                for s, v in cells.items():
                    by_scaler[s].append(v)
            labels = sorted(by_scaler, key=_scaler_order)
            means = [float(np.mean(by_scaler[s])) for s in labels]
            path = svg_dir / f"{metric}_{model}.svg"
            path.write_text(
                bar_chart_svg(f"{model}: mean {metric} by scaler", labels, means, metric), encoding="utf-8"
            )
            written.append(path)
    return written


def emit_report(
    rows: dict[str, list[SignificanceRow]],
    records: list[RunRecord],
    out_path: str | Path,
    svg_dir: str | Path | None = None,
    alpha: float = 0.01,
    baseline: str = "NO",
) -> Path:
    """Write the Markdown report (and SVG charts when ``svg_dir`` is given).

    ``rows`` maps metric name to its significance rows. Classification and
    regression metrics get separate sections.
    """
    if not any(rows.values()):
        raise ValueError("nothing to report: no significance rows")
    out_path = Path(out_path)
    datasets = sorted({r.dataset for r in records})
    models = sorted({r.model for r in records}, key=_model_order)
    scalers = sorted({r.scaler for r in records}, key=_scaler_order)
    lines = [
        "# Feature scaling benchmark report",
        "",
        f"- records: {len(records)} ({sum(not r.ok for r in records)} failed)",
        f"- datasets: {', '.join(datasets)}",
        f"- models: {', '.join(models)}",
        f"- scalers: {', '.join(scalers)}",
        f"- Wilcoxon baseline: {baseline}; significance level: {alpha}",
        "",
    ]
    for title, group in (("Classification", CLASSIFICATION_METRICS), ("Regression", REGRESSION_METRICS)):
        present = [m for m in group if rows.get(m)]
        if not present:
            continue
        lines += [f"## {title} significance", ""]
        for metric in present:
            lines += [f"### {metric}", ""]
            lines += _md_table(HEADER, [r.cells() for r in rows[metric]])
            notes = [f"- {r.model}: {n}" for r in rows[metric] for n in r.notes]
            if notes:
                lines += ["", "Notes:", ""] + notes
            lines.append("")

    lines += ["## Best scaler per dataset", ""]
    for metric in METRICS:
        best = best_scalers(records, metric)
        if not best:
            continue
        direction = "higher" if HIGHER_IS_BETTER[metric] else "lower"
        lines += [f"### {metric} ({direction} is better)", ""]
        lines += _md_table(
            ("Dataset", "Model", "Best scaler", metric, f"{baseline} {metric}"),
            [(d, m, s, _fmt(v), _fmt(b)) for d, m, s, v, b in best],
        )
        lines.append("")

    lines += ["## Resource usage by scaler (means over all cells)", ""]
    usage = []
    for s in scalers:
        cells = [r for r in records if r.scaler == s and r.ok]
        if cells:
            usage.append((
                s,
                _fmt(float(np.mean([r.scaler_fit_time_ms for r in cells]))),
                _fmt(float(np.mean([r.train_time_ms for r in cells]))),
                _fmt(float(np.mean([r.inference_time_ms for r in cells]))),
                _fmt(float(np.mean([r.memory_kb for r in cells]))),
            ))
    lines += _md_table(("Scaler", "Scaler fit ms", "Train ms", "Inference ms", "Memory kB"), usage)
    lines.append("")

    failed = [r for r in records if not r.ok]
    if failed:
        lines += ["## Failed cells", ""]
        lines += _md_table(("Dataset", "Model", "Scaler", "Status"), [(r.dataset, r.model, r.scaler, r.status) for r in failed])
        lines.append("")

    if svg_dir is not None:
        paths = write_svgs(records, svg_dir)
        lines += ["## Figures", ""]
        for p in paths:
            try:
                rel = p.relative_to(out_path.parent)
            except ValueError:
                rel = p
            lines.append(f"- [{p.stem}]({rel.as_posix()})")
        lines.append("")

    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text("\n".join(lines), encoding="utf-8")
    return out_path
