import itertools

import numpy as np
import pytest
from scipy import stats as sps

from chorus.core.errors import LengthMismatch, TooFewSamples
from chorus.evaluation import paired_t_test, wilcoxon_signed_rank
from chorus.evaluation.stats import student_t_two_sided


def _brute_force_p(d):
    d = np.asarray(d, dtype=np.float64)
    d = d[d != 0]
    ranks = sps.rankdata(np.abs(d))
    observed = ranks[d > 0].sum()
    totals = [sum(r for r, s in zip(ranks, signs) if s) for signs in itertools.product([0, 1], repeat=d.size)]
    lower = np.mean([t <= observed + 1e-9 for t in totals])
    upper = np.mean([t >= observed - 1e-9 for t in totals])
    return min(1.0, 2 * min(lower, upper))


def test_paired_t_example():
    result = paired_t_test([1, 2, 3, 4, 5], [0, 0, 0, 0, 0])
    assert result.statistic == pytest.approx(4.2426, abs=1e-4)
    assert result.p_value == pytest.approx(0.0132, abs=5e-4)
    assert result.n == 5


def test_paired_t_matches_scipy():
    rng = np.random.default_rng(0)
    a, b = rng.normal(0.8, 0.05, 10), rng.normal(0.75, 0.05, 10)
    expected = sps.ttest_rel(a, b)
    result = paired_t_test(a, b)
    assert result.statistic == pytest.approx(expected.statistic, rel=1e-10)
    assert result.p_value == pytest.approx(expected.pvalue, rel=1e-8)


def test_paired_t_is_antisymmetric():
    a, b = [0.9, 0.8, 0.85, 0.7], [0.7, 0.75, 0.8, 0.72]
    forward, backward = paired_t_test(a, b), paired_t_test(b, a)
    assert forward.statistic == pytest.approx(-backward.statistic)
    assert forward.p_value == pytest.approx(backward.p_value)


def test_paired_t_edge_cases():
    same = paired_t_test([0.5, 0.6, 0.7], [0.5, 0.6, 0.7])
    assert (same.degenerate, same.p_value, same.statistic) == (True, 1.0, 0.0)
    constant = paired_t_test([1.0, 2.0, 3.0], [0.0, 1.0, 2.0])
    assert constant.statistic == np.inf
    assert constant.p_value == 0.0
    with pytest.raises(TooFewSamples):
        paired_t_test([1.0], [0.0])
    with pytest.raises(LengthMismatch):
        paired_t_test([1.0, 2.0], [0.0])
    assert student_t_two_sided(0.0, 4) == pytest.approx(1.0)


def test_wilcoxon_all_positive_five():
    result = wilcoxon_signed_rank([1, 2, 3, 4, 5], [0, 0, 0, 0, 0])
    assert result.statistic == 15.0
    assert result.p_value == pytest.approx(0.0625)


def test_wilcoxon_degenerate_and_zero_dropping():
    same = wilcoxon_signed_rank([0.3, 0.4], [0.3, 0.4])
    assert same.degenerate is True
    assert same.p_value == 1.0
    result = wilcoxon_signed_rank([1, 2, 3, 4, 5, 6], [0, 0, 0, 0, 0, 6])
    assert result.zeros_dropped == 1
    assert result.n == 5


def test_wilcoxon_sign_flip_keeps_p():
    d = [0.3, -0.1, 0.25, 0.4, -0.05, 0.2, 0.15]
    forward = wilcoxon_signed_rank(d, [0] * 7)
    flipped = wilcoxon_signed_rank([-x for x in d], [0] * 7)
    assert forward.p_value == pytest.approx(flipped.p_value)
    assert forward.statistic + flipped.statistic == pytest.approx(7 * 8 / 2)


@pytest.mark.parametrize(
    "d",
    [
        [0.1, -0.2, 0.2, 0.3, 0.3, -0.05, 0.4, 0.1],
        [1, 1, 1, -1, 2, 2, -3, 4],
        [0.5, 0.4, -0.3, 0.2, 0.1, 0.6, 0.7, -0.8, 0.9],
    ],
)
def test_wilcoxon_exact_matches_enumeration(d):
    result = wilcoxon_signed_rank(d, [0] * len(d))
    assert result.p_value == pytest.approx(_brute_force_p(d), abs=1e-12)


def test_wilcoxon_normal_approximation_matches_scipy():
    rng = np.random.default_rng(7)
    d = rng.normal(0.05, 0.1, 40)
    result = wilcoxon_signed_rank(d, np.zeros(40))
    expected = sps.wilcoxon(d, method="approx", correction=True)
    assert result.n == 40
    assert result.p_value == pytest.approx(expected.pvalue, rel=1e-6)
