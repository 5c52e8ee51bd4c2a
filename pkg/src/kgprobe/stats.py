"""Resampling statistics: paired permutation tests, bootstrap CIs,
multiple-testing corrections, and the variance summaries.

Everything is seed-deterministic. The permutation test switches to exact
enumeration of all sign patterns whenever 2^n fits inside the resample
budget; results are invariant to the order of the input pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from kgprobe.errors import DegenerateStatisticError
from kgprobe.embedding import semantic_distance


@dataclass(frozen=True)
class PermutationResult:
    delta: float
    p_value: float
    n: int
    method: str  # "exact" | "mc"
    resamples: int
    seed: int


def paired_permutation(
    deltas: Sequence[float],
    resamples: int = 10_000,
    seed: int = 0,
    method: str = "auto",
) -> PermutationResult:
    """Two-sided sign-flip test on per-problem paired differences.

    The statistic is the mean paired difference. Monte Carlo p-values use
    add-one smoothing: (1 + #{|stat*| >= |stat|}) / (1 + resamples); the
    exact path enumerates all 2^n sign patterns (chosen automatically when
    2^n <= resamples, which also makes p exact rather than smoothed).
    """
    d = np.sort(np.asarray(deltas, dtype=float))  # order-invariant by construction
    n = d.size
    if n < 2:
        raise ValueError(f"paired_permutation requires n >= 2, got {n}")
    if method not in ("auto", "exact", "mc"):
        raise ValueError(f"unknown method {method!r}")
    observed = float(d.mean())
    use_exact = method == "exact" or (method == "auto" and 2**n <= resamples)
    if use_exact:
        patterns = ((np.arange(2**n)[:, None] >> np.arange(n)) & 1) * 2 - 1
        stats = patterns @ d / n
        p = float(np.count_nonzero(np.abs(stats) >= abs(observed)) / 2**n)
        return PermutationResult(observed, p, n, "exact", 2**n, seed)
    rng = np.random.default_rng(seed)
    signs = rng.integers(0, 2, size=(resamples, n)) * 2 - 1
    stats = signs @ d / n
    hits = int(np.count_nonzero(np.abs(stats) >= abs(observed)))
    p = (1 + hits) / (1 + resamples)
    return PermutationResult(observed, p, n, "mc", resamples, seed)


def bootstrap_ci(
    values: Sequence[float],
    resamples: int = 10_000,
    level: float = 0.95,
    seed: int = 0,
) -> tuple[float, float]:
    """Percentile bootstrap interval for the mean of problem-level values."""
    data = np.sort(np.asarray(values, dtype=float))
    n = data.size
    if n < 2:
        raise ValueError(f"bootstrap_ci requires n >= 2, got {n}")
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level}")
    if data[0] == data[-1]:  # constant sample: exactly degenerate interval
        return float(data[0]), float(data[0])
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=(resamples, n))
    means = data[idx].mean(axis=1)
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(means, [alpha, 1.0 - alpha])
    return float(lo), float(hi)


def correct_pvalues(pvals: Sequence[float], method: str) -> list[float]:
    """Holm step-down or Benjamini-Hochberg step-up adjusted p-values."""
    p = np.asarray(pvals, dtype=float)
    if p.size == 0:
        return []
    if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
        raise ValueError("p-values must lie in [0, 1]")
    n = p.size
    order = np.argsort(p, kind="stable")
    ranked = p[order]
    adjusted = np.empty(n)
    if method == "holm":
        running = 0.0
        for i in range(n):
            running = max(running, (n - i) * ranked[i])
            adjusted[i] = min(1.0, running)
    elif method == "bh":
        running = 1.0
        for i in range(n - 1, -1, -1):
            running = min(running, n / (i + 1) * ranked[i])
            adjusted[i] = min(1.0, running)
    else:
        raise ValueError(f"unknown correction method {method!r}")
    out = np.empty(n)
    out[order] = adjusted
    return [float(x) for x in out]


def variance_ratio(
    outputs: Mapping[tuple[str, str], str],
    provider,
) -> float:
    """Intra-problem vs inter-problem mean semantic distance.

    ``outputs`` maps (problem_id, condition) to generated text. The
    numerator averages distances between condition pairs within a problem;
    the denominator averages distances across distinct problem pairs over
    all condition combinations (including equal condition labels).
    """
    by_problem: dict[str, list[tuple[str, str]]] = {}
    for (pid, cond), text in outputs.items():
        by_problem.setdefault(pid, []).append((cond, text))
    problems = sorted(by_problem)
    if len(problems) < 2 or any(len(by_problem[p]) < 2 for p in problems):
        raise ValueError("variance_ratio needs >= 2 problems with >= 2 conditions each")
    for pid in problems:
        by_problem[pid].sort()

    within: list[float] = []
    for pid in problems:
        entries = by_problem[pid]
        for i in range(len(entries)):
            for j in range(i + 1, len(entries)):
                within.append(semantic_distance(entries[i][1], entries[j][1], provider))
    between: list[float] = []
    for a in range(len(problems)):
        for b in range(a + 1, len(problems)):
            for _, ta in by_problem[problems[a]]:
                for _, tb in by_problem[problems[b]]:
                    between.append(semantic_distance(ta, tb, provider))
    denom = float(np.mean(between))
    if denom == 0.0:
        raise DegenerateStatisticError(
            "all outputs are identical across problems; variance ratio undefined"
        )
    return float(np.mean(within)) / denom


@dataclass(frozen=True)
class SnrResult:
    between_range: float
    within_std: float
    snr: float  # math.inf marks the zero-within-variance case

    @property
    def infinite(self) -> bool:
        return math.isinf(self.snr)


def sampling_snr(trr_by_condition: Mapping[str, Sequence[float]]) -> SnrResult:
    """Between-condition mean range over mean within-condition sample std.

    ``trr_by_condition`` maps a condition tag to repeated-sample TRR values.
    Within-condition standard deviations use ddof=1. Conditions with a
    single sample contribute no within-variance; at least one condition
    must have >= 2 samples.
    """
    if not trr_by_condition:
        raise ValueError("sampling_snr requires at least one condition")
    if not any(len(v) >= 2 for v in trr_by_condition.values()):
        raise ValueError("sampling_snr requires repeated samples for >= 1 condition")
    means = []
    stds = []
    for cond in sorted(trr_by_condition):
        samples = np.asarray(trr_by_condition[cond], dtype=float)
        means.append(float(samples.mean()))
        if samples.size >= 2:
            stds.append(float(samples.std(ddof=1)))
    between = max(means) - min(means)
    within = float(np.mean(stds))
    snr = math.inf if within == 0.0 else between / within
    return SnrResult(between_range=between, within_std=within, snr=snr)


@dataclass(frozen=True)
class VarianceComponents:
    model_share: float
    condition_share: float
    residual_share: float
    n_problems: int
    dropped_problems: int
    degenerate: bool  # true when total sum of squares is zero


def variance_components(
    scores: Mapping[tuple[str, str, str], float],
) -> VarianceComponents:
    """Two-factor fixed-effect sum-of-squares decomposition.

    ``scores`` maps (model, condition, problem_id) to a metric value.
    Problems missing any (model, condition) cell are dropped (and counted);
    the decomposition runs on the per-cell means over the surviving
    problems. Shares are SS(factor) / SS(total).
    """
    models = sorted({m for m, _, _ in scores})
    conditions = sorted({c for _, c, _ in scores})
    if len(models) < 2 or len(conditions) < 2:
        raise ValueError("variance_components needs >= 2 levels per factor")
    problems = sorted({p for _, _, p in scores})
    complete = [
        p
        for p in problems
        if all((m, c, p) in scores for m in models for c in conditions)
    ]
    dropped = len(problems) - len(complete)
    if not complete:
        raise ValueError("no problem has a complete (model x condition) score grid")

    cell = np.array(
        [
            [np.mean([scores[(m, c, p)] for p in complete]) for c in conditions]
            for m in models
        ]
    )
    grand = cell.mean()
    ss_total = float(((cell - grand) ** 2).sum())
    if ss_total == 0.0:
        return VarianceComponents(0.0, 0.0, 0.0, len(complete), dropped, True)
    ss_model = float(len(conditions) * ((cell.mean(axis=1) - grand) ** 2).sum())
    ss_condition = float(len(models) * ((cell.mean(axis=0) - grand) ** 2).sum())
    residual = max(0.0, ss_total - ss_model - ss_condition)
    return VarianceComponents(
        model_share=ss_model / ss_total,
        condition_share=ss_condition / ss_total,
        residual_share=residual / ss_total,
        n_problems=len(complete),
        dropped_problems=dropped,
        degenerate=False,
    )
