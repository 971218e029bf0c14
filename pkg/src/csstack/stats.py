"""Comparing classifiers over datasets: ranks, Friedman, Nemenyi, Wilcoxon."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

# Critical values q_alpha (studentized range statistic / sqrt(2), infinite df)
# for k = 2..20. k <= 10 from Demsar (2006), Table 5; k = 11..20 from
# scipy.stats.studentized_range.ppf(1 - alpha, k, inf) / sqrt(2), rounded.
Q_ALPHA = {
    0.05: (1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164,
           3.219, 3.268, 3.313, 3.354, 3.391, 3.426, 3.458, 3.489, 3.517, 3.544),
    0.10: (1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920,
           2.978, 3.030, 3.077, 3.120, 3.159, 3.196, 3.230, 3.261, 3.291, 3.319),
}

EXACT_MAX_M = 12


class StatsError(ValueError):
    pass


@dataclass(frozen=True)
class TestOutcome:
    statistic: float
    p_value: float
    method: str
    params: dict = field(default_factory=dict)

    # not a pytest class despite the name
    __test__ = False

    def cell(self) -> str:
        """``"statistic (p)"`` with p rounded to two decimals."""
        return f"{self.statistic:.1f} ({round(self.p_value, 2)})"


@dataclass(frozen=True)
class RankTable:
    scores: np.ndarray
    ranks: np.ndarray
    classifiers: tuple
    datasets: tuple

    @property
    def mean_ranks(self) -> np.ndarray:
        return self.ranks.mean(axis=0)


def average_ranks(scores, lower_is_better: bool = True):
    """Row-wise fractional ranks (ties share the mean rank) and their column means."""
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] < 1 or s.shape[1] < 2:
        raise StatsError("need a datasets x classifiers matrix with >= 2 classifiers")
    if not np.isfinite(s).all():
        raise StatsError("scores must be finite")
    ranks = sps.rankdata(s if lower_is_better else -s, method="average", axis=1)
    return ranks, ranks.mean(axis=0)


def rank_table(scores, classifiers, datasets, lower_is_better=True) -> RankTable:
    ranks, _ = average_ranks(scores, lower_is_better)
    return RankTable(np.asarray(scores, dtype=np.float64), ranks, tuple(classifiers), tuple(datasets))


def friedman(ranks) -> TestOutcome:
    """Friedman chi-square on a rank matrix, plus the Iman-Davenport F variant."""
    r = np.asarray(ranks, dtype=np.float64)
    if r.ndim != 2:
        raise StatsError("rank matrix must be 2-D")
    n, k = r.shape
    if n < 2 or k < 2:
        raise StatsError(f"Friedman test needs n >= 2 and k >= 2, got n={n}, k={k}")
    R = r.mean(axis=0)
    chi2 = 12.0 * n / (k * (k + 1)) * (float(np.sum(R ** 2)) - k * (k + 1) ** 2 / 4.0)
    chi2 = max(chi2, 0.0)
    p = float(sps.chi2.sf(chi2, k - 1))
    denom = n * (k - 1) - chi2
    if denom > 0:
        ff = (n - 1) * chi2 / denom
        pf = float(sps.f.sf(ff, k - 1, (k - 1) * (n - 1)))
    else:
        ff, pf = math.inf, 0.0
    return TestOutcome(
        statistic=chi2,
        p_value=min(max(p, 0.0), 1.0),
        method="friedman",
        params={"k": k, "n": n, "df": k - 1, "iman_davenport_F": ff, "iman_davenport_p": pf},
    )


def nemenyi_cd(k: int, n: int, alpha: float = 0.05) -> float:
    """Nemenyi critical difference ``q_alpha * sqrt(k (k + 1) / (6 n))``."""
    table = Q_ALPHA.get(round(float(alpha), 2))
    if table is None:
        raise StatsError(f"unsupported alpha {alpha}; choose 0.05 or 0.10")
    if not 2 <= k <= 20:
        raise StatsError(f"unsupported k={k}; q table covers 2..20")
    if n < 1:
        raise StatsError("n must be >= 1")
    return table[k - 2] * math.sqrt(k * (k + 1) / (6.0 * n))


def pairwise_significant(mean_ranks, cd: float) -> np.ndarray:
    r = np.asarray(mean_ranks, dtype=np.float64)
    return np.abs(r[:, None] - r[None, :]) > cd


def signed_ranks(d):
    d = np.asarray(d, dtype=np.float64)
    d = d[d != 0]
    ranks = sps.rankdata(np.abs(d), method="average")
    return d, ranks


def wilcoxon_exact_p(ranks, w: float) -> float:
    """P(min(T+, T-) <= w) over all 2^m sign assignments of ``ranks``."""
    m = len(ranks)
    codes = np.arange(2 ** m, dtype=np.int64)
    signs = (codes[:, None] >> np.arange(m)) & 1
    t_plus = signs @ np.asarray(ranks, dtype=np.float64)
    t_minus = float(np.sum(ranks)) - t_plus
    count = int(np.count_nonzero(np.minimum(t_plus, t_minus) <= w))
    return count / 2 ** m


def wilcoxon_signed_rank(a, b) -> TestOutcome:
    """Two-sided Wilcoxon signed-rank test on paired scores.

    Zero differences are dropped. Exact enumeration for up to 12 non-zero
    differences, tie-corrected normal approximation beyond.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise StatsError("paired samples must be 1-D and of equal length")
    d, ranks = signed_ranks(a - b)
    m = len(d)
    if m == 0:
        raise StatsError("no signal: all differences are zero")
    if m < 3:
        raise StatsError(f"need >= 3 non-zero differences, got {m}")
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    w = min(w_plus, w_minus)
    if m <= EXACT_MAX_M:
        p = wilcoxon_exact_p(ranks, w)
        method = "wilcoxon-exact"
    else:
        mean = m * (m + 1) / 4.0
        _, tie_counts = np.unique(ranks, return_counts=True)
        var = m * (m + 1) * (2 * m + 1) / 24.0 - float(np.sum(tie_counts ** 3 - tie_counts)) / 48.0
        z = (w - mean) / math.sqrt(var)
        p = min(1.0, 2.0 * float(sps.norm.cdf(z)))
        method = "wilcoxon-normal"
    return TestOutcome(
        statistic=w,
        p_value=p,
        method=method,
        params={"m": m, "w_plus": w_plus, "w_minus": w_minus},
    )


def cliques(mean_ranks, cd: float) -> list[list[int]]:
    """Maximal groups (as index lists, best rank first) whose rank span is <= cd."""
    r = np.asarray(mean_ranks, dtype=np.float64)
    order = np.argsort(r, kind="stable")
    sr = r[order]
    out, last_end = [], -1
    for i in range(len(sr)):
        j = i
        while j + 1 < len(sr) and sr[j + 1] - sr[i] <= cd:
            j += 1
        if j > last_end:
            out.append([int(x) for x in order[i:j + 1]])
            last_end = j
    return out


def cd_diagram_data(mean_ranks, cd: float, classifiers=None) -> dict:
    """JSON-ready description of a critical-difference diagram."""
    r = np.asarray(mean_ranks, dtype=np.float64)
    if not np.isfinite(r).all():
        raise StatsError("mean ranks must be finite")
    names = list(classifiers) if classifiers is not None else [str(i) for i in range(len(r))]
    order = np.argsort(r, kind="stable")
    return {
        "classifiers": [names[i] for i in order],
        "mean_ranks": [float(r[i]) for i in order],
        "cd": float(cd),
        "cliques": [[names[i] for i in c] for c in cliques(r, cd)],
    }
