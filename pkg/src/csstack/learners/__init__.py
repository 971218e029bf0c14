"""Probabilistic base learners, isotonic calibration and model documents."""

from __future__ import annotations

import json

import numpy as np

from .base import (
    ALGORITHMS,
    DEFAULT_PARAMS,
    MODEL_FORMAT,
    MODEL_VERSION,
    LearnerError,
    LearnerSpec,
    Scorer,
)
from .calibration import CalibratedScorer, IsotonicStep, calibrate_isotonic, pava
from .knn import KNearest
from .linear import LinearSVM, LogisticRegression
from .tree import AdaBoost, DecisionTree, RandomForest
from .base import check_training_data

_CLASSES = {
    "DT": DecisionTree,
    "KNN": KNearest,
    "LR": LogisticRegression,
    "SVM": LinearSVM,
    "Ada": AdaBoost,
    "RF": RandomForest,
}

__all__ = [
    "ALGORITHMS",
    "DEFAULT_PARAMS",
    "CalibratedScorer",
    "IsotonicStep",
    "LearnerError",
    "LearnerSpec",
    "Scorer",
    "calibrate_isotonic",
    "model_from_dict",
    "model_to_dict",
    "pava",
    "score",
    "train",
]


def train(spec: LearnerSpec, X, y, sample_weight=None) -> Scorer:
    """Fit the learner described by ``spec``."""
    X, yf, w = check_training_data(X, y, sample_weight, allow_one_class=spec.algorithm == "KNN")
    return _CLASSES[spec.algorithm].fit(X, yf, w, spec.resolved, spec.seed)


def score(model: Scorer, x):
    """Score one feature vector (returns float) or a matrix (returns array)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return float(model.predict_proba(x.reshape(1, -1))[0])
    return model.predict_proba(x)


def model_to_dict(model: Scorer) -> dict:
    inner = model.inner if isinstance(model, CalibratedScorer) else model
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "algorithm": inner.algorithm,
        "n_features": inner.n_features,
        "params": inner.to_dict(),
    }
    if isinstance(model, CalibratedScorer):
        doc["calibration"] = model.step.to_dict()
    return doc


def model_from_dict(doc: dict) -> Scorer:
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError("not a csstack model document")
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model document version {doc.get('version')}")
    inner = _CLASSES[doc["algorithm"]].from_dict(doc["params"], doc["n_features"])
    if "calibration" in doc:
        return CalibratedScorer(inner, IsotonicStep.from_dict(doc["calibration"]))
    return inner


def dumps(model: Scorer) -> str:
    return json.dumps(model_to_dict(model))


def loads(text: str) -> Scorer:
    return model_from_dict(json.loads(text))
