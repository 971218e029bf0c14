"""CART (Gini), random forest and SAMME AdaBoost on depth-limited trees."""

from __future__ import annotations

import math

import numpy as np

from .. import kernels
from .base import LearnerError, Scorer, sigmoid


class TreeArrays:
    """Flat binary tree; ``feature == -1`` marks a leaf."""

    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=np.float64)

    def predict(self, X):
        return kernels.tree_predict(self.feature, self.threshold, self.left, self.right, self.value, X)

    @property
    def n_nodes(self):
        return len(self.feature)

    def to_dict(self):
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["feature"], d["threshold"], d["left"], d["right"], d["value"])


def grow_tree(X, y, w, max_depth, min_leaf, max_features=None, rng=None) -> TreeArrays:
    """Grow a weighted-Gini tree. ``min_leaf`` bounds child weight sums.

    With ``max_features`` set, each node searches a random subset of columns
    (drawn from ``rng``), as in a random forest.
    """
    n, d = X.shape
    feature, threshold, left, right, value = [], [], [], [], []

    def leaf_value(idx):
        ws = w[idx].sum()
        return float((w[idx] * y[idx]).sum() / ws) if ws > 0 else 0.0

    def build(idx, depth):
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(leaf_value(idx))
        v = value[node]
        if depth >= max_depth or v <= 0.0 or v >= 1.0 or w[idx].sum() < 2 * min_leaf:
            return node
        if max_features is not None and max_features < d:
            cols = np.sort(rng.choice(d, size=max_features, replace=False))
        else:
            cols = np.arange(d)
        f, t = kernels.best_split(X[np.ix_(idx, cols)], y[idx], w[idx], min_leaf)
        if f < 0:
            return node
        col = cols[f]
        go_left = X[idx, col] <= t
        feature[node] = int(col)
        threshold[node] = t
        left[node] = build(idx[go_left], depth + 1)
        right[node] = build(idx[~go_left], depth + 1)
        return node

    build(np.arange(n), 0)
    return TreeArrays(feature, threshold, left, right, value)


class DecisionTree(Scorer):
    algorithm = "DT"

    def __init__(self, tree: TreeArrays, n_features: int):
        self.tree = tree
        self.n_features = n_features

    @classmethod
    def fit(cls, X, y, w, params, seed):
        tree = grow_tree(X, y, w, params["max_depth"], params["min_leaf"])
        return cls(tree, X.shape[1])

    def _raw(self, X):
        return self.tree.predict(X)

    def to_dict(self):
        return {"tree": self.tree.to_dict()}

    @classmethod
    def from_dict(cls, d, n_features):
        return cls(TreeArrays.from_dict(d["tree"]), n_features)


class RandomForest(Scorer):
    algorithm = "RF"

    def __init__(self, trees, n_features):
        self.trees = list(trees)
        self.n_features = n_features

    @classmethod
    def fit(cls, X, y, w, params, seed):
        rng = np.random.default_rng(seed)
        n, d = X.shape
        max_features = max(1, int(math.sqrt(d)))
        trees = []
        for _ in range(params["n_estimators"]):
            counts = np.bincount(rng.integers(0, n, n), minlength=n)
            idx = np.flatnonzero(counts)
            bw = counts[idx] * w[idx]
            if bw.sum() <= 0:
                idx, bw = np.arange(n), w
            trees.append(
                grow_tree(X[idx], y[idx], bw, params["max_depth"], params["min_leaf"], max_features, rng)
            )
        return cls(trees, d)

    def _raw(self, X):
        total = np.zeros(X.shape[0])
        for t in self.trees:
            total += t.predict(X)
        return total / len(self.trees)

    def to_dict(self):
        return {"trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, d, n_features):
        return cls([TreeArrays.from_dict(t) for t in d["trees"]], n_features)


class AdaBoost(Scorer):
    """Binary SAMME; score is the logistic of the alpha-weighted vote margin."""

    algorithm = "Ada"

    def __init__(self, trees, alphas, n_features):
        self.trees = list(trees)
        self.alphas = np.asarray(alphas, dtype=np.float64)
        self.n_features = n_features

    @classmethod
    def fit(cls, X, y, w, params, seed):
        n = X.shape[0]
        sw = w / w.sum()
        trees, alphas = [], []
        for _ in range(params["n_estimators"]):
            # rescale to mean 1 so min_leaf keeps its per-row meaning
            tree = grow_tree(X, y, sw * n, params["max_depth"], params["min_leaf"])
            pred = (tree.predict(X) > 0.5).astype(np.float64)
            miss = pred != y
            err = float(sw[miss].sum())
            if err >= 0.5:
                break
            if err <= 1e-10:
                trees.append(tree)
                alphas.append(10.0)
                break
            alpha = math.log((1.0 - err) / err)
            trees.append(tree)
            alphas.append(alpha)
            sw = sw * np.exp(alpha * miss)
            sw /= sw.sum()
        if not trees:
            raise LearnerError("Ada: no weak learner better than chance")
        return cls(trees, alphas, X.shape[1])

    def margin(self, X):
        m = np.zeros(X.shape[0])
        for t, a in zip(self.trees, self.alphas):
            m += a * (2.0 * (t.predict(X) > 0.5) - 1.0)
        return m

    def _raw(self, X):
        return sigmoid(self.margin(X))

    def to_dict(self):
        return {"trees": [t.to_dict() for t in self.trees], "alphas": self.alphas.tolist()}

    @classmethod
    def from_dict(cls, d, n_features):
        return cls([TreeArrays.from_dict(t) for t in d["trees"]], d["alphas"], n_features)
