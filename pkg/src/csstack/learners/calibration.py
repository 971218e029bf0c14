"""Isotonic calibration via pool-adjacent-violators."""

from __future__ import annotations

import numpy as np

from .. import kernels
from .base import Scorer


class IsotonicStep:
    """Non-decreasing step function of the raw score.

    ``breaks[i]`` is the smallest raw score of block ``i``; a raw score takes
    the value of the last block whose break is <= it, and scores below the
    first break take the first value.
    """

    def __init__(self, breaks, values):
        self.breaks = np.asarray(breaks, dtype=np.float64)
        self.values = np.asarray(values, dtype=np.float64)

    def __call__(self, raw):
        raw = np.asarray(raw, dtype=np.float64)
        idx = np.searchsorted(self.breaks, raw, side="right") - 1
        return self.values[np.clip(idx, 0, len(self.values) - 1)]

    def to_dict(self):
        return {"breaks": self.breaks.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["breaks"], d["values"])


def pava(raw_scores, targets, weights=None) -> IsotonicStep:
    """Weighted isotonic regression of ``targets`` on ``raw_scores``.

    Inputs are sorted by raw score and tied scores pooled before the
    violators pass.
    """
    s = np.asarray(raw_scores, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    w = np.ones_like(s) if weights is None else np.asarray(weights, dtype=np.float64)
    if not (s.shape == t.shape == w.shape) or s.ndim != 1 or s.size == 0:
        raise ValueError("pava: inputs must be 1-D, equal length and non-empty")
    if (w < 0).any():
        raise ValueError("pava: weights must be non-negative")
    order = np.argsort(s, kind="stable")
    s, t, w = s[order], t[order], w[order]
    uniq, start = np.unique(s, return_index=True)
    gw = np.add.reduceat(w, start)
    gwt = np.add.reduceat(w * t, start)
    with np.errstate(divide="ignore", invalid="ignore"):
        gy = np.where(gw > 0, gwt / gw, np.add.reduceat(t, start) / np.diff(np.append(start, len(s))))
    fitted = np.clip(kernels.pava_sorted(gy, gw), 0.0, 1.0)
    keep = np.ones(len(fitted), dtype=bool)
    keep[1:] = fitted[1:] != fitted[:-1]
    return IsotonicStep(uniq[keep], fitted[keep])


class CalibratedScorer(Scorer):
    def __init__(self, inner: Scorer, step: IsotonicStep):
        self.inner = inner
        self.step = step
        self.algorithm = inner.algorithm
        self.n_features = inner.n_features
        self.converged = inner.converged

    def raw_scores(self, X):
        return self.inner.predict_proba(X)

    def _raw(self, X):
        return self.step(self.inner.predict_proba(X))

    def to_dict(self):
        return {"step": self.step.to_dict()}


def calibrate_isotonic(model: Scorer, features, labels, weights=None) -> CalibratedScorer:
    """Fit an isotonic map from ``model``'s scores on held-out rows to labels."""
    return CalibratedScorer(model, pava(model.predict_proba(features), labels, weights))
