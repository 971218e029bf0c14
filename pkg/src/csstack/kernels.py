"""Hot inner loops: tree split search, tree traversal, k-NN scoring, PAVA.

Every kernel exists twice, as an ``@njit`` loop (``*_nb``) and as a numpy
implementation (``*_np``). The public wrappers dispatch on
``_accel.USE_NUMBA`` at call time. Both paths use the same summation order
so they agree bit-for-bit on split statistics and distances.
"""

import numpy as np

from . import _accel
from ._accel import njit

_QUERY_CHUNK = 1024


# --------------------------------------------------------------------------
# Gini split search
# --------------------------------------------------------------------------

@njit
def _best_split_nb(X, y, w, total_w, total_p, min_leaf):
    m, d = X.shape
    parent = total_p * (total_w - total_p) / total_w
    best = parent - 1e-12 * total_w
    best_f = -1
    best_i = -1
    best_order = np.empty(0, dtype=np.int64)
    for f in range(d):
        col = X[:, f]
        order = np.argsort(col, kind="mergesort")
        wl = 0.0
        pl = 0.0
        for i in range(m - 1):
            j = order[i]
            wl += w[j]
            pl += w[j] * y[j]
            if col[j] >= col[order[i + 1]]:
                continue
            wr = total_w - wl
            pr = total_p - pl
            if wl < min_leaf or wr < min_leaf:
                continue
            imp = pl * (wl - pl) / wl + pr * (wr - pr) / wr
            if imp < best:
                best = imp
                best_f = f
                best_i = i
                best_order = order
    if best_f < 0:
        return -1, 0.0, 0.0
    a = X[best_order[best_i], best_f]
    b = X[best_order[best_i + 1], best_f]
    return best_f, a, b


def _best_split_np(X, y, w, total_w, total_p, min_leaf):
    m, d = X.shape
    parent = total_p * (total_w - total_p) / total_w
    best = parent - 1e-12 * total_w
    best_f, a, b = -1, 0.0, 0.0
    wy = w * y
    for f in range(d):
        col = X[:, f]
        order = np.argsort(col, kind="stable")
        sc = col[order]
        wl = np.cumsum(w[order])[:-1]
        pl = np.cumsum(wy[order])[:-1]
        wr = total_w - wl
        pr = total_p - pl
        ok = (sc[:-1] < sc[1:]) & (wl >= min_leaf) & (wr >= min_leaf)
        if not ok.any():
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            imp = pl * (wl - pl) / wl + pr * (wr - pr) / wr
        imp = np.where(ok, imp, np.inf)
        i = int(np.argmin(imp))
        if imp[i] < best:
            best = imp[i]
            best_f, a, b = f, sc[i], sc[i + 1]
    return best_f, a, b


def best_split(X, y, w, min_leaf):
    """Best weighted-Gini binary split of the rows in ``X``.

    Returns ``(column, threshold)``; column is -1 when no split both respects
    ``min_leaf`` (a bound on the weight sum of each child) and lowers impurity.
    Rows go left when ``x <= threshold``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    total_w = float(np.sum(w))
    total_p = float(np.sum(w * y))
    if X.shape[0] < 2 or total_w <= 0.0:
        return -1, 0.0
    kernel = _best_split_nb if _accel.USE_NUMBA else _best_split_np
    f, a, b = kernel(X, y, w, total_w, total_p, float(min_leaf))
    if f < 0:
        return -1, 0.0
    t = 0.5 * (a + b)
    if not (a <= t < b):
        t = a
    return int(f), float(t)


# --------------------------------------------------------------------------
# Tree traversal
# --------------------------------------------------------------------------

@njit
def _tree_predict_nb(feature, threshold, left, right, value, X):
    n = X.shape[0]
    out = np.empty(n)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return out


def _tree_predict_np(feature, threshold, left, right, value, X):
    node = np.zeros(X.shape[0], dtype=np.int64)
    rows = np.arange(X.shape[0])
    active = feature[node] >= 0
    while active.any():
        f = feature[node]
        go_left = X[rows, np.where(active, f, 0)] <= threshold[node]
        nxt = np.where(go_left, left[node], right[node])
        node = np.where(active, nxt, node)
        active = feature[node] >= 0
    return value[node].astype(np.float64)


def tree_predict(feature, threshold, left, right, value, X):
    X = np.ascontiguousarray(X, dtype=np.float64)
    kernel = _tree_predict_nb if _accel.USE_NUMBA else _tree_predict_np
    return kernel(feature, threshold, left, right, value, X)


# --------------------------------------------------------------------------
# k nearest neighbours
# --------------------------------------------------------------------------

@njit
def _knn_scores_nb(Xtr, ytr, wtr, Xq, k):
    n, d = Xtr.shape
    q = Xq.shape[0]
    out = np.empty(q)
    dist = np.empty(n)
    for i in range(q):
        for j in range(n):
            s = 0.0
            for c in range(d):
                diff = Xq[i, c] - Xtr[j, c]
                s += diff * diff
            dist[j] = s
        order = np.argsort(dist, kind="mergesort")
        num = 0.0
        den = 0.0
        for r in range(k):
            j = order[r]
            num += wtr[j] * ytr[j]
            den += wtr[j]
        out[i] = num / den if den > 0.0 else 0.0
    return out


def _knn_scores_np(Xtr, ytr, wtr, Xq, k):
    n, d = Xtr.shape
    out = np.empty(Xq.shape[0])
    wy = wtr * ytr
    for start in range(0, Xq.shape[0], _QUERY_CHUNK):
        block = Xq[start:start + _QUERY_CHUNK]
        dist = np.zeros((block.shape[0], n))
        for c in range(d):
            diff = block[:, c, None] - Xtr[None, :, c]
            dist += diff * diff
        nn = np.argsort(dist, axis=1, kind="stable")[:, :k]
        # sequential sums keep parity with the compiled kernel
        num = np.zeros(block.shape[0])
        den = np.zeros(block.shape[0])
        for r in range(k):
            num += wy[nn[:, r]]
            den += wtr[nn[:, r]]
        with np.errstate(divide="ignore", invalid="ignore"):
            out[start:start + block.shape[0]] = np.where(den > 0, num / den, 0.0)
    return out


def knn_scores(Xtr, ytr, wtr, Xq, k):
    """Weighted positive fraction among the ``k`` nearest training rows.

    Distance ties go to the lower training row index.
    """
    Xtr = np.ascontiguousarray(Xtr, dtype=np.float64)
    Xq = np.ascontiguousarray(Xq, dtype=np.float64)
    ytr = np.ascontiguousarray(ytr, dtype=np.float64)
    wtr = np.ascontiguousarray(wtr, dtype=np.float64)
    k = min(int(k), Xtr.shape[0])
    kernel = _knn_scores_nb if _accel.USE_NUMBA else _knn_scores_np
    return kernel(Xtr, ytr, wtr, Xq, k)


# --------------------------------------------------------------------------
# Pool adjacent violators
# --------------------------------------------------------------------------

@njit
def _pava_nb(y, w):
    n = y.shape[0]
    val = np.empty(n)
    wt = np.empty(n)
    cnt = np.empty(n, dtype=np.int64)
    top = -1
    for i in range(n):
        top += 1
        val[top] = y[i]
        wt[top] = w[i]
        cnt[top] = 1
        while top > 0 and val[top - 1] > val[top]:
            tw = wt[top - 1] + wt[top]
            if tw > 0.0:
                val[top - 1] = (val[top - 1] * wt[top - 1] + val[top] * wt[top]) / tw
            else:
                val[top - 1] = 0.5 * (val[top - 1] + val[top])
            wt[top - 1] = tw
            cnt[top - 1] += cnt[top]
            top -= 1
    out = np.empty(n)
    pos = 0
    for b in range(top + 1):
        for _ in range(cnt[b]):
            out[pos] = val[b]
            pos += 1
    return out


def _pava_np(y, w):
    # PAVA has a sequential data dependency; the fallback is the same loop
    # run by the interpreter.
    if hasattr(_pava_nb, "py_func"):
        return _pava_nb.py_func(y, w)
    return _pava_nb(y, w)


def pava_sorted(y, w):
    """Weighted isotonic (non-decreasing) least-squares fit of ``y`` in order."""
    y = np.ascontiguousarray(y, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    kernel = _pava_nb if _accel.USE_NUMBA else _pava_np
    return kernel(y, w)
