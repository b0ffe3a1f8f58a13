"""Paired significance tests for comparing two models fold by fold."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy.special import betainc
from scipy.stats import norm, rankdata

from chorus.core.errors import LengthMismatch, TooFewSamples

EXACT_WILCOXON_MAX_N = 20


@dataclass
class SignificanceResult:
    method: str  # "paired_t" | "wilcoxon"
    statistic: float
    p_value: float
    n: int
    degenerate: bool = False
    zeros_dropped: int = 0

    def to_json(self) -> dict:
        return asdict(self)


def _differences(a: Sequence[float], b: Sequence[float]) -> np.ndarray:
    if len(a) != len(b):
        raise LengthMismatch(f"paired samples differ in length: {len(a)} vs {len(b)}")
    return np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)


def student_t_two_sided(t: float, df: int) -> float:
    """Two-sided tail probability of Student's t via the regularized incomplete beta."""
    if np.isinf(t):
        return 0.0
    return float(min(1.0, betainc(df / 2.0, 0.5, df / (df + t * t))))


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> SignificanceResult:
    d = _differences(a, b)
    n = int(d.size)
    if n < 2:
        raise TooFewSamples(f"paired t-test needs at least 2 pairs, got {n}")
    if np.all(d == 0):
        return SignificanceResult("paired_t", 0.0, 1.0, n, degenerate=True)
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    t = float(np.sign(mean) * np.inf) if sd == 0 else mean / (sd / np.sqrt(n))
    return SignificanceResult("paired_t", t, student_t_two_sided(t, n - 1), n)


def _exact_rank_sum_counts(doubled_ranks: Sequence[int]) -> np.ndarray:
    """Number of sign assignments giving each value of 2*W+ (counting over all 2^n)."""
    total = int(sum(doubled_ranks))
    counts = np.zeros(total + 1, dtype=object)
    counts[0] = 1
    for r in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted
    return counts


def _exact_p(w_plus: float, ranks: np.ndarray) -> float:
    doubled = [int(round(2 * r)) for r in ranks]
    counts = _exact_rank_sum_counts(doubled)
    w2 = int(round(2 * w_plus))
    n_assignments = 2 ** len(doubled)
    lower = sum(counts[: w2 + 1])
    upper = sum(counts[w2:])
    return float(min(1.0, 2 * min(lower, upper) / n_assignments))


def _normal_p(w_plus: float, ranks: np.ndarray, abs_d: np.ndarray) -> Tuple[float, float]:
    n = ranks.size
    mean = n * (n + 1) / 4.0
    _, tie_sizes = np.unique(abs_d, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(tie_sizes**3 - tie_sizes)) / 48.0
    z = max(abs(w_plus - mean) - 0.5, 0.0) / np.sqrt(var)
    return float(min(1.0, 2.0 * norm.sf(z))), float(z)


def wilcoxon_signed_rank(a: Sequence[float], b: Sequence[float]) -> SignificanceResult:
    """Two-sided signed-rank test on W+; exact for n <= 20, normal approximation above.

    Zero differences are dropped and counted in the result.
    """
    d = _differences(a, b)
    nonzero = d[d != 0]
    dropped = int(d.size - nonzero.size)
    n = int(nonzero.size)
    if n == 0:
        return SignificanceResult("wilcoxon", 0.0, 1.0, 0, degenerate=True, zeros_dropped=dropped)
    abs_d = np.abs(nonzero)
    ranks = rankdata(abs_d, method="average")
    w_plus = float(ranks[nonzero > 0].sum())
    if n <= EXACT_WILCOXON_MAX_N:
        p = _exact_p(w_plus, ranks)
    else:
        p, _ = _normal_p(w_plus, ranks, abs_d)
    return SignificanceResult("wilcoxon", w_plus, p, n, zeros_dropped=dropped)
