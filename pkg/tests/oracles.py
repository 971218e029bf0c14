"""Slow, obviously-correct reference implementations used by the tests."""

import itertools

import numpy as np
from scipy.stats import rankdata


def random_reasonable_costs(rng, n):
    c_tp = rng.uniform(0, 5, n)
    c_tn = rng.uniform(0, 5, n)
    c_fp = c_tn + rng.uniform(0.01, 20, n)
    c_fn = c_tp + rng.uniform(0.01, 20, n)
    return np.column_stack([c_tp, c_fp, c_fn, c_tn])


def argmin_label(p, c):
    """Label with the smaller expected cost; exact ties go to 0."""
    cost1 = p * c[0] + (1 - p) * c[1]
    cost0 = p * c[2] + (1 - p) * c[3]
    return 1 if cost1 < cost0 else 0


def wilcoxon_enumeration_p(d):
    """Two-sided exact p by listing all 2^m sign patterns."""
    d = np.asarray([x for x in d if x != 0], dtype=float)
    r = rankdata(np.abs(d))
    w_obs = min(r[d > 0].sum(), r[d < 0].sum())
    hits = 0
    for signs in itertools.product((0, 1), repeat=len(r)):
        tp = sum(ri for ri, s in zip(r, signs) if s)
        tm = r.sum() - tp
        hits += min(tp, tm) <= w_obs
    return hits / 2 ** len(r)


_GRID = np.round(np.arange(11) * 0.1, 10)


def monotone_grid_min_sse(targets, weights):
    """Smallest weighted SSE over every non-decreasing vector on the 0.1 grid."""
    n = len(targets)
    combos = np.array(list(itertools.combinations_with_replacement(range(11), n)))
    fits = _GRID[combos]
    t = np.asarray(targets, dtype=float)
    w = np.asarray(weights, dtype=float)
    return float((((fits - t) ** 2) * w).sum(axis=1).min())
