import math
import random

import numpy as np
import pytest

from kgprobe.embedding import EmbeddingVector
from kgprobe.errors import DegenerateStatisticError
from kgprobe.stats import (
    bootstrap_ci,
    correct_pvalues,
    paired_permutation,
    sampling_snr,
    variance_components,
    variance_ratio,
)

from oracles import enumerate_sign_patterns


# -- paired permutation --------------------------------------------------------


def test_all_zero_deltas_gives_p_one():
    result = paired_permutation([0.0] * 8)
    assert result.p_value >= 0.999


def test_five_positive_ones_exact_p():
    result = paired_permutation([1.0] * 5)
    assert result.method == "exact"
    assert result.p_value == 0.0625  # 2 / 32
    assert result.delta == 1.0


def test_exact_path_matches_combinatorial_oracle():
    rng = random.Random(4)
    deltas = [rng.uniform(-1, 1) for _ in range(9)]
    result = paired_permutation(deltas)
    stats = enumerate_sign_patterns(deltas)
    observed = sum(deltas) / len(deltas)
    oracle_p = sum(1 for s in stats if abs(s) >= abs(observed)) / len(stats)
    assert result.method == "exact"
    assert result.p_value == pytest.approx(oracle_p, abs=1e-15)


@pytest.mark.parametrize("n", [4, 8, 12])
def test_monte_carlo_agrees_with_exact_within_band(n):
    rng = random.Random(n)
    deltas = [rng.gauss(0.2, 1.0) for _ in range(n)]
    exact = paired_permutation(deltas, method="exact")
    mc = paired_permutation(deltas, resamples=10_000, seed=123, method="mc")
    band = 3 * math.sqrt(exact.p_value * (1 - exact.p_value) / 10_000)
    assert abs(mc.p_value - exact.p_value) <= band + 1e-4  # +1e-4 for add-one smoothing


def test_permutation_invariant_to_pair_order():
    deltas = [0.3, -0.1, 0.7, 0.2, -0.5, 0.9, 0.11, -0.2, 0.05, 0.4, 0.6, -0.33, 0.21]
    shuffled = list(deltas)
    random.Random(0).shuffle(shuffled)
    a = paired_permutation(deltas, resamples=2_000, seed=5, method="mc")
    b = paired_permutation(shuffled, resamples=2_000, seed=5, method="mc")
    assert a.p_value == b.p_value
    assert a.delta == pytest.approx(b.delta)


def test_permutation_requires_two_pairs():
    with pytest.raises(ValueError):
        paired_permutation([1.0])


# -- bootstrap -------------------------------------------------------------------


def test_bootstrap_constant_sample_degenerate_interval():
    lo, hi = bootstrap_ci([0.42] * 10)
    assert (lo, hi) == (0.42, 0.42)


def test_bootstrap_deterministic_under_seed():
    values = list(np.random.default_rng(1).normal(0.3, 0.1, size=40))
    assert bootstrap_ci(values, seed=9) == bootstrap_ci(values, seed=9)
    assert bootstrap_ci(values, seed=9) != bootstrap_ci(values, seed=10)


def test_bootstrap_interval_widens_with_level():
    values = list(np.random.default_rng(2).normal(0.0, 1.0, size=60))
    widths = []
    for level in (0.5, 0.8, 0.9, 0.95, 0.99):
        lo, hi = bootstrap_ci(values, resamples=4_000, level=level, seed=3)
        widths.append(hi - lo)
    assert widths == sorted(widths)


def test_bootstrap_requires_two_values():
    with pytest.raises(ValueError):
        bootstrap_ci([1.0])


# -- corrections -----------------------------------------------------------------


def test_single_pvalue_unchanged():
    assert correct_pvalues([0.03], "holm") == [0.03]
    assert correct_pvalues([0.03], "bh") == [0.03]


def test_holm_hand_example():
    assert correct_pvalues([0.01, 0.04], "holm") == [0.02, 0.04]


def test_bh_hand_example():
    assert correct_pvalues([0.01, 0.04], "bh") == [0.02, 0.04]


def test_holm_dominates_raw_and_bh_preserves_ranking():
    rng = np.random.default_rng(7)
    pvals = list(rng.uniform(0, 1, size=25))
    holm = correct_pvalues(pvals, "holm")
    assert all(h >= p for h, p in zip(holm, pvals))
    bh = correct_pvalues(pvals, "bh")
    for i in range(len(pvals)):  # smaller raw p never gets a larger adjusted p
        for j in range(len(pvals)):
            if pvals[i] <= pvals[j]:
                assert bh[i] <= bh[j]


def test_corrections_reject_bad_input():
    with pytest.raises(ValueError):
        correct_pvalues([0.5, 1.5], "holm")
    with pytest.raises(ValueError):
        correct_pvalues([0.5], "bonferroni")


# -- variance ratio ----------------------------------------------------------------


class VectorProvider:
    provider_id = "stub-vectors"

    def __init__(self, table):
        self.table = table

    def embed(self, text):
        return EmbeddingVector(np.asarray(self.table[text], dtype=float), self.provider_id)


def _planted_outputs(within_cos=0.8, between_cos=0.2, problems=3, conditions=2):
    """Exact-geometry vectors: cos within a problem = within_cos, across = between_cos."""
    dim = 1 + problems + problems * conditions
    table = {}
    outputs = {}
    idx = 1
    shared = math.sqrt(between_cos)
    problem_w = math.sqrt(within_cos - between_cos)
    unique_w = math.sqrt(1.0 - within_cos)
    for p in range(problems):
        for c in range(conditions):
            vec = np.zeros(dim)
            vec[0] = shared
            vec[1 + p] = problem_w
            vec[1 + problems + p * conditions + c] = unique_w
            text = f"problem {p} condition {c}"
            table[text] = vec
            outputs[(f"p{p}", f"c{c}")] = text
    return outputs, VectorProvider(table)


def test_variance_ratio_planted_quarter():
    outputs, provider = _planted_outputs()
    assert variance_ratio(outputs, provider) == pytest.approx(0.25, abs=1e-12)


def test_variance_ratio_zero_when_within_identical():
    outputs = {
        ("p1", "c1"): "alpha beta",
        ("p1", "c2"): "alpha beta",
        ("p2", "c1"): "gamma delta",
        ("p2", "c2"): "gamma delta",
    }
    from kgprobe.embedding import FallbackEmbedder

    assert variance_ratio(outputs, FallbackEmbedder()) == 0.0


def test_variance_ratio_degenerate_denominator():
    outputs = {
        ("p1", "c1"): "same words",
        ("p1", "c2"): "same words",
        ("p2", "c1"): "same words",
        ("p2", "c2"): "same words",
    }
    from kgprobe.embedding import FallbackEmbedder

    with pytest.raises(DegenerateStatisticError):
        variance_ratio(outputs, FallbackEmbedder())


def test_variance_ratio_preconditions():
    from kgprobe.embedding import FallbackEmbedder

    with pytest.raises(ValueError):
        variance_ratio({("p1", "c1"): "a", ("p1", "c2"): "b"}, FallbackEmbedder())


# -- sampling SNR -------------------------------------------------------------------


def test_snr_infinite_marker_when_no_within_variance():
    result = sampling_snr({"a": [0.0, 0.0], "b": [0.9, 0.9]})
    assert result.infinite
    assert result.between_range == pytest.approx(0.9)


def test_snr_planted_fixture_matches_published_arithmetic():
    d = 0.0504 / math.sqrt(2)  # two-sample std (ddof=1) comes out at 0.0504
    fixture = {
        "low": [0.05 - d, 0.05 + d],
        "high": [0.96 - d, 0.96 + d],
    }
    result = sampling_snr(fixture)
    assert result.between_range == pytest.approx(0.91, abs=1e-12)
    assert result.within_std == pytest.approx(0.0504, abs=1e-12)
    assert result.snr == pytest.approx(18.06, abs=0.01)


def test_snr_requires_repeated_samples():
    with pytest.raises(ValueError):
        sampling_snr({"a": [0.5], "b": [0.7]})


# -- variance components -------------------------------------------------------------


def _grid(model_effends, cond_effects, problems=3):
    scores = {}
    for m, me in model_effends.items():
        for c, ce in cond_effects.items():
            for p in range(problems):
                scores[(m, c, f"p{p}")] = 0.5 + me + ce
    return scores


def test_variance_components_model_only():
    scores = _grid({"m1": -0.2, "m2": 0.2}, {"c1": 0.0, "c2": 0.0})
    vc = variance_components(scores)
    assert vc.model_share == pytest.approx(1.0)
    assert vc.condition_share == pytest.approx(0.0)
    assert not vc.degenerate


def test_variance_components_constant_scores_marked_degenerate():
    scores = _grid({"m1": 0.0, "m2": 0.0}, {"c1": 0.0, "c2": 0.0})
    vc = variance_components(scores)
    assert vc.degenerate
    assert (vc.model_share, vc.condition_share, vc.residual_share) == (0.0, 0.0, 0.0)


def test_variance_components_planted_three_to_one():
    b = 0.1
    a = math.sqrt(3) * b
    scores = _grid({"m1": -a, "m2": a}, {"c1": -b, "c2": b})
    vc = variance_components(scores)
    assert vc.model_share == pytest.approx(0.75, abs=1e-9)
    assert vc.condition_share == pytest.approx(0.25, abs=1e-9)
    assert vc.residual_share == pytest.approx(0.0, abs=1e-9)


def test_variance_components_drops_incomplete_problems():
    scores = _grid({"m1": -0.1, "m2": 0.1}, {"c1": -0.1, "c2": 0.1})
    del scores[("m1", "c1", "p0")]
    vc = variance_components(scores)
    assert vc.n_problems == 2
    assert vc.dropped_problems == 1
