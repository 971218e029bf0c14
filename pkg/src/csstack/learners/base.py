from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ALGORITHMS = ("DT", "KNN", "LR", "SVM", "Ada", "RF")

MODEL_FORMAT = "csstack.model"
MODEL_VERSION = 1

# Identical in every experiment; no per-dataset tuning.
DEFAULT_PARAMS = {
    "DT": {"max_depth": 8, "min_leaf": 5},
    "KNN": {"k": 11},
    "LR": {"l2": 1e-4, "max_iter": 500, "step": 0.1, "tol": 1e-5},
    "SVM": {"l2": 1e-4, "max_iter": 500, "step": 0.1, "tol": 1e-5},
    "Ada": {"n_estimators": 50, "max_depth": 1, "min_leaf": 1},
    "RF": {"n_estimators": 100, "max_depth": 8, "min_leaf": 1},
}


class LearnerError(RuntimeError):
    pass


@dataclass(frozen=True)
class LearnerSpec:
    algorithm: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        unknown = set(self.params) - set(DEFAULT_PARAMS[self.algorithm])
        if unknown:
            raise ValueError(f"{self.algorithm}: unknown hyperparameters {sorted(unknown)}")

    def __hash__(self):
        return hash((self.algorithm, tuple(sorted(self.params.items())), self.seed))

    @property
    def resolved(self) -> dict:
        return {**DEFAULT_PARAMS[self.algorithm], **self.params}

    def with_seed(self, seed: int) -> "LearnerSpec":
        return LearnerSpec(self.algorithm, dict(self.params), int(seed))


class Scorer:
    """Fitted model mapping feature rows to scores in [0, 1]."""

    algorithm: str = ""
    n_features: int = 0
    converged: bool = True

    def predict_proba(self, X) -> np.ndarray:
        X = self._check(X)
        return np.clip(self._raw(X), 0.0, 1.0)

    def _raw(self, X) -> np.ndarray:
        raise NotImplementedError

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise LearnerError(
                f"{self.algorithm}: expected {self.n_features} features, got shape {X.shape}"
            )
        return X

    def to_dict(self) -> dict:
        raise NotImplementedError


def check_training_data(X, y, sample_weight, allow_one_class=False):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] == 0:
        raise LearnerError("empty training data")
    if y.shape != (X.shape[0],):
        raise LearnerError(f"dimension mismatch: {X.shape[0]} rows vs {y.shape} labels")
    if X.shape[0] < 2:
        raise LearnerError("need at least 2 training instances")
    if not np.isfinite(X).all():
        raise LearnerError("non-finite feature value in training data")
    if not np.isin(y, (0, 1)).all():
        raise LearnerError("labels must be 0/1")
    if not allow_one_class and len(np.unique(y)) < 2:
        raise LearnerError("both classes must be present")
    if sample_weight is None:
        w = np.ones(X.shape[0])
    else:
        w = np.asarray(sample_weight, dtype=np.float64)
        if w.shape != y.shape:
            raise LearnerError("sample_weight length mismatch")
        if (w < 0).any() or not np.isfinite(w).all():
            raise LearnerError("sample weights must be finite and non-negative")
        if w.sum() <= 0:
            raise LearnerError("sample weights are all zero")
    return X, y.astype(np.float64), w


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out
