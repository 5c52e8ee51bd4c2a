"""Aggregation into summary tables and compression curves, plus file emission."""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from kgprobe.errors import KgprobeError
from kgprobe.metrics import ScoreRecord


class MissingConditionError(KgprobeError):
    """A configured contrast condition has no score records."""


@dataclass
class SummaryTable:
    columns: list[str]
    rows: list[dict[str, Any]]
    notes: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class CurveSeries:
    """One keep- or remove-series of mean semantic distance versus k."""

    model: str
    selector: str
    series: str  # "keep" | "remove"
    x: tuple[int, ...]
    y: tuple[float, ...]
    stderr: tuple[float, ...]
    gaps: tuple[int, ...]  # requested k values that had no scores

    def __post_init__(self):
        assert all(a < b for a, b in zip(self.x, self.x[1:])), "x must increase"
        assert all(math.isfinite(v) for v in self.y), "y must be finite"

    @property
    def label(self) -> str:
        return f"{self.model}/{self.selector}/{self.series}"


def _condition_mean(
    scores: Sequence[ScoreRecord], model: str, condition: str, metric: str
) -> float:
    values = [
        getattr(r, metric)
        for r in scores
        if r.model_name == model and r.condition == condition
        and getattr(r, metric) is not None
    ]
    if not values:
        raise MissingConditionError(
            f"no scores for model {model!r} under condition {condition!r}"
        )
    return float(np.mean(values))


def aggregate_summary(
    scores: Sequence[ScoreRecord],
    analysis_cfg: dict[str, Any],
    variance_ratios: Mapping[str, float] | None = None,
) -> SummaryTable:
    """Per-model deltas, variance ratio, and best-axis picks.

    Contrast deltas are differences of per-condition means of provided-graph
    metrics. Best-axis cells are the argmax over the configured axis
    conditions by the configured preference metric; ties break
    lexicographically on the axis label and are flagged with ``*``.
    """
    models = sorted({r.model_name for r in scores})
    contrasts = analysis_cfg.get("contrasts", [])
    axes = analysis_cfg.get("axes", {})
    preference = analysis_cfg.get("preference_metric", "trr")

    metric_names = [c["metric"] for c in contrasts]
    columns = ["model"]
    contrast_cols = []
    for c in contrasts:
        name = f"delta_{c['metric']}"
        if metric_names.count(c["metric"]) > 1:
            name = f"delta_{c['metric']}_{c['name']}"
        contrast_cols.append(name)
        columns.append(name)
    columns.append("variance_ratio")
    axis_cols = [f"best_{axis}" for axis in axes]
    columns.extend(axis_cols)
    columns.append("source")

    table = SummaryTable(columns=columns, rows=[])
    for model in models:
        row: dict[str, Any] = {"model": model, "source": "run"}
        for col, c in zip(contrast_cols, contrasts):
            left = _condition_mean(scores, model, c["left"], c["metric"])
            right = _condition_mean(scores, model, c["right"], c["metric"])
            row[col] = left - right
        rho = (variance_ratios or {}).get(model)
        row["variance_ratio"] = rho if rho is not None else ""
        for axis, labelled in axes.items():
            means = {
                label: _condition_mean(scores, model, condition, preference)
                for label, condition in labelled.items()
            }
            best = max(means.values())
            winners = sorted(label for label, v in means.items() if v == best)
            cell = winners[0]
            if len(winners) > 1:
                cell += "*"
                table.notes.append(
                    f"{model}: best_{axis} tie between {', '.join(winners)}; "
                    "lexicographic winner reported"
                )
            row[f"best_{axis}"] = cell
        table.rows.append(row)
    return table


def add_reference_rows(table: SummaryTable, paper_constants: dict[str, Any]) -> None:
    """Append user-supplied reference rows (e.g. published numbers) to a table."""
    for ref in paper_constants.get("summary_rows", []):
        row = {col: ref.get(col, "") for col in table.columns}
        row["source"] = ref.get("source", "reference")
        table.rows.append(row)


_TOPK_RE = re.compile(r"^(topk|rmtopk):(\w+):(\d+)$")


def sufficiency_curves(
    scores: Sequence[ScoreRecord],
    ks: Sequence[int],
    selectors: Sequence[str],
) -> list[CurveSeries]:
    """Build keep/remove semantic-distance curves from topk/rmtopk scores.

    y is the mean of ``d_sem_to_full`` over problems; requested k values
    with no matching scores are flagged as gaps rather than interpolated.
    """
    models = sorted({r.model_name for r in scores})
    buckets: dict[tuple[str, str, str, int], list[float]] = {}
    for r in scores:
        m = _TOPK_RE.match(r.condition)
        if not m or r.d_sem_to_full is None:
            continue
        series = "keep" if m.group(1) == "topk" else "remove"
        buckets.setdefault(
            (r.model_name, m.group(2), series, int(m.group(3))), []
        ).append(r.d_sem_to_full)

    curves = []
    for model in models:
        for selector in selectors:
            for series in ("keep", "remove"):
                xs, ys, errs, gaps = [], [], [], []
                for k in sorted(set(ks)):
                    values = buckets.get((model, selector, series, k))
                    if not values:
                        gaps.append(k)
                        continue
                    xs.append(k)
                    ys.append(float(np.mean(values)))
                    errs.append(
                        float(np.std(values, ddof=1) / math.sqrt(len(values)))
                        if len(values) > 1
                        else 0.0
                    )
                if xs:
                    curves.append(
                        CurveSeries(
                            model=model,
                            selector=selector,
                            series=series,
                            x=tuple(xs),
                            y=tuple(ys),
                            stderr=tuple(errs),
                            gaps=tuple(gaps),
                        )
                    )
    return curves


# ---------------------------------------------------------------------------
# Emission


def _format_cell(value: Any, fmt: str) -> str:
    if isinstance(value, float):
        return f"{value:.4f}" if fmt == "markdown" else repr(value)
    return str(value)


def _table_matrix(obj: SummaryTable | Sequence[CurveSeries]) -> tuple[list[str], list[list[Any]]]:
    if isinstance(obj, SummaryTable):
        return list(obj.columns), [
            [row.get(col, "") for col in obj.columns] for row in obj.rows
        ]
    columns = ["model", "selector", "series", "k", "mean_distance", "stderr"]
    rows = []
    for curve in sorted(obj, key=lambda c: (c.model, c.selector, c.series)):
        for k, y, err in zip(curve.x, curve.y, curve.stderr):
            rows.append([curve.model, curve.selector, curve.series, k, y, err])
    return columns, rows


def emit(
    obj: SummaryTable | Sequence[CurveSeries],
    fmt: str,
    path: str | Path,
) -> Path:
    """Write a table or curve set as markdown or CSV; deterministic bytes."""
    columns, rows = _table_matrix(obj)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_format_cell(v, "csv") for v in row])
    elif fmt == "markdown":
        lines = [
            "| " + " | ".join(columns) + " |",
            "| " + " | ".join("---" for _ in columns) + " |",
        ]
        for row in rows:
            lines.append("| " + " | ".join(_format_cell(v, "markdown") for v in row) + " |")
        if isinstance(obj, SummaryTable) and obj.notes:
            lines.append("")
            for note in obj.notes:
                lines.append(f"* {note}")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    else:
        raise ValueError(f"unknown emit format {fmt!r}")
    return path
