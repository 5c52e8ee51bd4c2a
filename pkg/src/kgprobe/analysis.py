"""Builds the statistical analysis rows from score and generation records."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np

from kgprobe.backends import GenerationRecord
from kgprobe.errors import DegenerateStatisticError
from kgprobe.metrics import ScoreRecord
from kgprobe.seeding import derive_seed
from kgprobe.stats import (
    SnrResult,
    bootstrap_ci,
    correct_pvalues,
    paired_permutation,
    variance_components,
    variance_ratio,
)


@dataclass(frozen=True)
class PairedSample:
    """Per-problem metric values under two conditions, aligned by problem id."""

    problem_ids: tuple[str, ...]
    left: tuple[float, ...]
    right: tuple[float, ...]
    dropped: int

    @property
    def deltas(self) -> list[float]:
        return [l - r for l, r in zip(self.left, self.right)]

    @classmethod
    def from_maps(
        cls, left: Mapping[str, float], right: Mapping[str, float]
    ) -> "PairedSample":
        shared = sorted(set(left) & set(right))
        dropped = len(set(left) | set(right)) - len(shared)
        return cls(
            problem_ids=tuple(shared),
            left=tuple(left[p] for p in shared),
            right=tuple(right[p] for p in shared),
            dropped=dropped,
        )


def _metric_value(rec: ScoreRecord, metric: str) -> float | None:
    value = getattr(rec, metric)
    return value


def problem_means(
    scores: Sequence[ScoreRecord], model: str, condition: str, metric: str
) -> dict[str, float]:
    """Mean metric per problem for one (model, condition) cell."""
    by_problem: dict[str, list[float]] = {}
    for rec in scores:
        if rec.model_name == model and rec.condition == condition:
            value = _metric_value(rec, metric)
            if value is not None:
                by_problem.setdefault(rec.problem_id, []).append(value)
    return {p: float(np.mean(v)) for p, v in by_problem.items()}


def analyze_scores(
    scores: Sequence[ScoreRecord],
    generations: Sequence[GenerationRecord] | None,
    analysis_cfg: dict[str, Any],
    embedder=None,
    *,
    resamples: int = 10_000,
    seed: int = 0,
    ci_level: float = 0.95,
    correction: str = "holm",
) -> list[dict[str, Any]]:
    """Run every configured contrast plus the variance summaries.

    Returns JSON-ready rows (kind: contrast | variance_ratio | snr |
    variance_components). Contrast rows carry permutation p-values,
    bootstrap CIs, and corrected p-values across the contrast family.
    """
    models = sorted({r.model_name for r in scores})
    rows: list[dict[str, Any]] = []
    contrast_rows: list[dict[str, Any]] = []
    for model in models:
        for contrast in analysis_cfg.get("contrasts", []):
            metric = contrast["metric"]
            left = problem_means(scores, model, contrast["left"], metric)
            right = problem_means(scores, model, contrast["right"], metric)
            pairs = PairedSample.from_maps(left, right)
            if len(pairs.problem_ids) < 2:
                raise DegenerateStatisticError(
                    f"contrast {contrast['name']!r} for model {model!r} has "
                    f"{len(pairs.problem_ids)} paired problems "
                    f"(conditions {contrast['left']!r} vs {contrast['right']!r})"
                )
            contrast_seed = derive_seed(seed, model, contrast["name"])
            perm = paired_permutation(pairs.deltas, resamples=resamples, seed=contrast_seed)
            ci = bootstrap_ci(
                pairs.deltas, resamples=resamples, level=ci_level, seed=contrast_seed
            )
            if not (ci[0] <= perm.delta <= ci[1]):
                raise DegenerateStatisticError(
                    f"bootstrap CI {ci} does not bracket delta {perm.delta}"
                )
            contrast_rows.append(
                {
                    "kind": "contrast",
                    "model": model,
                    "contrast": contrast["name"],
                    "metric": metric,
                    "left": contrast["left"],
                    "right": contrast["right"],
                    "delta": perm.delta,
                    "p_value": perm.p_value,
                    "ci_lo": ci[0],
                    "ci_hi": ci[1],
                    "ci_level": ci_level,
                    "n": perm.n,
                    "dropped": pairs.dropped,
                    "method": perm.method,
                    "resamples": perm.resamples,
                    "seed": contrast_seed,
                }
            )
    if contrast_rows and correction != "none":
        adjusted = correct_pvalues([r["p_value"] for r in contrast_rows], correction)
        for row, adj in zip(contrast_rows, adjusted):
            row["p_adjusted"] = adj
            row["correction"] = correction
    rows.extend(contrast_rows)

    if generations is not None and embedder is not None:
        rows.extend(_variance_ratio_rows(generations, models, embedder))
    rows.extend(_snr_rows(scores, models))
    rows.extend(_variance_component_rows(scores, models))
    return rows


def _variance_ratio_rows(generations, models, embedder) -> list[dict[str, Any]]:
    rows = []
    for model in models:
        outputs = {
            (g.problem_id, g.condition): g.hypothesis
            for g in generations
            if g.model_name == model and g.sample_index == 0
        }
        n_problems = len({pid for pid, _ in outputs})
        n_conditions = len({c for _, c in outputs})
        if n_problems < 2 or n_conditions < 2:
            continue
        try:
            rho = variance_ratio(outputs, embedder)
        except (ValueError, DegenerateStatisticError):
            continue
        rows.append(
            {
                "kind": "variance_ratio",
                "model": model,
                "value": rho,
                "n_problems": n_problems,
                "n_conditions": n_conditions,
            }
        )
    return rows


def sampling_snr_from_records(scores: Sequence[ScoreRecord]) -> SnrResult:
    """SNR over repeated samples: per-condition mean TRR range vs the mean
    per-(problem, condition) sampling standard deviation."""
    by_condition: dict[str, list[float]] = {}
    by_cell: dict[tuple[str, str], list[float]] = {}
    for rec in scores:
        by_condition.setdefault(rec.condition, []).append(rec.trr)
        by_cell.setdefault((rec.problem_id, rec.condition), []).append(rec.trr)
    if not any(len(v) >= 2 for v in by_cell.values()):
        raise ValueError("sampling SNR requires repeated samples")
    means = {c: float(np.mean(v)) for c, v in by_condition.items()}
    stds = [
        float(np.std(v, ddof=1)) for _, v in sorted(by_cell.items()) if len(v) >= 2
    ]
    between = max(means.values()) - min(means.values())
    within = float(np.mean(stds))
    snr = math.inf if within == 0.0 else between / within
    return SnrResult(between_range=between, within_std=within, snr=snr)


def _snr_rows(scores, models) -> list[dict[str, Any]]:
    rows = []
    for model in models:
        subset = [r for r in scores if r.model_name == model]
        try:
            result = sampling_snr_from_records(subset)
        except ValueError:
            continue
        rows.append(
            {
                "kind": "snr",
                "model": model,
                "between_range": result.between_range,
                "within_std": result.within_std,
                "snr": None if result.infinite else result.snr,
                "infinite": result.infinite,
            }
        )
    return rows


def _variance_component_rows(scores, models) -> list[dict[str, Any]]:
    conditions = sorted({r.condition for r in scores})
    if len(models) < 2 or len(conditions) < 2:
        return []
    rows = []
    for metric in ("trr", "rfs", "ktc"):
        cells: dict[tuple[str, str, str], float] = {}
        samples: dict[tuple[str, str, str], list[float]] = {}
        for rec in scores:
            value = _metric_value(rec, metric)
            if value is not None:
                samples.setdefault(
                    (rec.model_name, rec.condition, rec.problem_id), []
                ).append(value)
        for key, vals in samples.items():
            cells[key] = float(np.mean(vals))
        try:
            vc = variance_components(cells)
        except ValueError:
            continue
        rows.append(
            {
                "kind": "variance_components",
                "metric": metric,
                "model_share": vc.model_share,
                "condition_share": vc.condition_share,
                "residual_share": vc.residual_share,
                "n_problems": vc.n_problems,
                "dropped_problems": vc.dropped_problems,
                "degenerate": vc.degenerate,
            }
        )
    return rows
