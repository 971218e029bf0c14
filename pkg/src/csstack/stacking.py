"""Cost-sensitive stacking with MEC-weighted meta-features.

Setup types: 1 = cost-sensitive level-0 / cost-insensitive level-1,
2 = cost-insensitive level-0 / cost-sensitive level-1, 3 = both
cost-sensitive. Each type comes unweighted or with one of four weight
transforms of the level-0 validation cost-error, giving 15 setups.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

from .data import check_costs, stratified_kfold
from .decision import decide, mec_epsilon, transform_weight
from .learners import (
    CalibratedScorer,
    IsotonicStep,
    LearnerError,
    LearnerSpec,
    Scorer,
    model_from_dict,
    model_to_dict,
    pava,
    train,
)

# Table order: unit, exp, ln, sq, acc within each type.
SETUPS = tuple(
    (f"type-{t}" if kind == "unit" else f"type-{t}_{kind}", t, kind)
    for t in (1, 2, 3)
    for kind in ("unit", "exp", "ln", "sq", "acc")
)
SETUP_ALIASES = tuple(alias for alias, _, _ in SETUPS)
_BY_ALIAS = {alias: (t, kind) for alias, t, kind in SETUPS}

DEFAULT_LEVEL0 = ("DT", "KNN", "SVM", "LR")
DEFAULT_INNER_FOLDS = 4

STACKED_FORMAT = "csstack.stacked"
STACKED_VERSION = 1


class StackingError(RuntimeError):
    pass


def derive_seed(seed: int, *parts) -> int:
    """Stable child seed; string parts are hashed with crc32."""
    ints = [int(seed)] + [zlib.crc32(p.encode()) if isinstance(p, str) else int(p) for p in parts]
    return int(np.random.SeedSequence(ints).generate_state(1)[0])


def level0_cost_sensitive(setup_type: int) -> bool:
    return setup_type in (1, 3)


def level1_cost_sensitive(setup_type: int) -> bool:
    return setup_type in (2, 3)


@dataclass(frozen=True)
class StackingSpec:
    setup_type: int
    transform: str = "unit"
    level0: tuple = tuple(LearnerSpec(a) for a in DEFAULT_LEVEL0)
    level1: LearnerSpec = LearnerSpec("LR")
    inner_folds: int = DEFAULT_INNER_FOLDS

    def __post_init__(self):
        if not self.level0:
            raise ValueError("level0 must list at least one learner")
        if (self.setup_type, self.transform) not in {(t, k) for _, t, k in SETUPS}:
            raise ValueError(f"({self.setup_type}, {self.transform!r}) is not one of the 15 setups")
        if self.inner_folds < 2:
            raise ValueError("inner_folds must be >= 2")

    @property
    def alias(self) -> str:
        return self.setup_type_alias(self.setup_type, self.transform)

    @staticmethod
    def setup_type_alias(setup_type, transform):
        return f"type-{setup_type}" if transform == "unit" else f"type-{setup_type}_{transform}"

    @classmethod
    def from_alias(cls, alias: str, **kwargs) -> "StackingSpec":
        if alias not in _BY_ALIAS:
            raise ValueError(f"unknown setup alias {alias!r}; valid aliases: {', '.join(SETUP_ALIASES)}")
        t, kind = _BY_ALIAS[alias]
        return cls(setup_type=t, transform=kind, **kwargs)


def enumerate_setups(level0=None, level1: LearnerSpec | None = None, inner_folds=DEFAULT_INNER_FOLDS):
    """The 15 stacking setups in table order."""
    kwargs = {"inner_folds": inner_folds}
    if level0 is not None:
        kwargs["level0"] = tuple(level0)
    if level1 is not None:
        kwargs["level1"] = level1
    return [StackingSpec(setup_type=t, transform=kind, **kwargs) for _, t, kind in SETUPS]


# --------------------------------------------------------------------------
# Level-0 stage: out-of-fold scores, calibration, validation cost-errors
# --------------------------------------------------------------------------

@dataclass
class Level0Stage:
    """Everything level-1 training needs from the level-0 learners.

    ``oof_raw[i, j]`` comes from the learner-``j`` model that was trained on
    the inner folds not containing row ``i`` (``fold_of_row[i]``).
    """

    specs: tuple
    inner_plan: tuple
    fold_of_row: np.ndarray
    oof_raw: np.ndarray
    calibrators: list
    oof_prob: np.ndarray
    oof_decisions: np.ndarray
    epsilons: np.ndarray
    deployed: list
    nonconverged: set = field(default_factory=set)

    def member(self, algorithm: str) -> int:
        for j, s in enumerate(self.specs):
            if s.algorithm == algorithm:
                return j
        raise KeyError(algorithm)


def _fit(spec: LearnerSpec, X, y, seed, *tag):
    try:
        return train(spec.with_seed(derive_seed(seed, spec.algorithm, *tag)), X, y)
    except LearnerError as exc:
        raise StackingError(f"{spec.algorithm} failed ({'/'.join(map(str, tag)) or 'refit'}): {exc}") from exc


def fit_level0(specs, X, y, costs, inner_folds: int = DEFAULT_INNER_FOLDS, seed: int = 0) -> Level0Stage:
    """Inner stratified CV, isotonic calibration, MEC cost-errors and refits."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    costs = check_costs(costs)
    specs = tuple(specs)
    plan = stratified_kfold(y, inner_folds, derive_seed(seed, "inner-cv"))
    n, L = len(y), len(specs)
    oof_raw = np.empty((n, L))
    fold_of_row = np.empty(n, dtype=np.int64)
    nonconverged = set()
    for f, (tr, te) in enumerate(plan.pairs):
        fold_of_row[te] = f
        for j, spec in enumerate(specs):
            model = _fit(spec, X[tr], y[tr], seed, "inner", f)
            if not model.converged:
                nonconverged.add(spec.algorithm)
            oof_raw[te, j] = model.predict_proba(X[te])
    calibrators = [pava(oof_raw[:, j], y) for j in range(L)]
    oof_prob = np.column_stack([calibrators[j](oof_raw[:, j]) for j in range(L)])
    oof_decisions = np.column_stack([decide(oof_prob[:, j], costs) for j in range(L)])
    epsilons = np.array([mec_epsilon(oof_decisions[:, j], y, costs) for j in range(L)])
    deployed = []
    for j, spec in enumerate(specs):
        model = _fit(spec, X, y, seed)
        if not model.converged:
            nonconverged.add(spec.algorithm)
        deployed.append(CalibratedScorer(model, calibrators[j]))
    return Level0Stage(
        specs=specs,
        inner_plan=plan.pairs,
        fold_of_row=fold_of_row,
        oof_raw=oof_raw,
        calibrators=calibrators,
        oof_prob=oof_prob,
        oof_decisions=oof_decisions,
        epsilons=epsilons,
        deployed=deployed,
        nonconverged=nonconverged,
    )


def build_meta_features(level0_models, X, costs=None, level0_cost_sensitive: bool = True) -> np.ndarray:
    """Column j: DMECC decision (cost-sensitive level-0) or calibrated probability."""
    probs = np.column_stack([m.predict_proba(X) for m in level0_models])
    if not level0_cost_sensitive:
        return probs
    if costs is None:
        raise StackingError("instance costs are required for cost-sensitive level-0 outputs")
    costs = check_costs(costs)
    return np.column_stack([decide(probs[:, j], costs) for j in range(probs.shape[1])]).astype(np.float64)


def apply_weights(meta: np.ndarray, weights) -> np.ndarray:
    weights = np.asarray(weights, dtype=np.float64)
    if np.all(weights == 1.0):
        return meta
    return meta * weights[None, :]


# --------------------------------------------------------------------------
# Stacked model
# --------------------------------------------------------------------------

@dataclass
class StackedModel:
    setup_type: int
    transform: str
    level0: list
    weights: np.ndarray
    epsilons: np.ndarray
    level1: Scorer
    nonconverged: set = field(default_factory=set)

    @property
    def alias(self) -> str:
        return StackingSpec.setup_type_alias(self.setup_type, self.transform)

    def meta_features(self, X, costs=None) -> np.ndarray:
        meta = build_meta_features(self.level0, X, costs, level0_cost_sensitive(self.setup_type))
        return apply_weights(meta, self.weights)

    def level1_scores(self, X, costs=None) -> np.ndarray:
        return self.level1.predict_proba(self.meta_features(X, costs))

    def to_dict(self) -> dict:
        return {
            "format": STACKED_FORMAT,
            "version": STACKED_VERSION,
            "setup_type": self.setup_type,
            "transform": self.transform,
            "weights": self.weights.tolist(),
            "epsilons": self.epsilons.tolist(),
            "level0": [model_to_dict(m) for m in self.level0],
            "level1": model_to_dict(self.level1),
            "nonconverged": sorted(self.nonconverged),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "StackedModel":
        if doc.get("format") != STACKED_FORMAT or doc.get("version") != STACKED_VERSION:
            raise ValueError("not a supported stacked-model document")
        return cls(
            setup_type=doc["setup_type"],
            transform=doc["transform"],
            level0=[model_from_dict(d) for d in doc["level0"]],
            weights=np.asarray(doc["weights"], dtype=np.float64),
            epsilons=np.asarray(doc["epsilons"], dtype=np.float64),
            level1=model_from_dict(doc["level1"]),
            nonconverged=set(doc.get("nonconverged", [])),
        )


def train_stacking(spec: StackingSpec, X, y, costs, seed: int = 0, level0_stage: Level0Stage | None = None):
    """Fit a stacked ensemble on one training split.

    ``level0_stage`` lets several setups share the same level-0 work; it must
    have been produced by :func:`fit_level0` with ``spec.level0``,
    ``spec.inner_folds`` and the same ``seed``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    costs = check_costs(costs)
    stage = level0_stage or fit_level0(spec.level0, X, y, costs, spec.inner_folds, seed)
    if tuple(stage.specs) != tuple(spec.level0) or len(stage.fold_of_row) != len(y):
        raise StackingError("level-0 stage does not match this spec and training split")

    meta = stage.oof_decisions.astype(np.float64) if level0_cost_sensitive(spec.setup_type) else stage.oof_prob
    weights = np.array([transform_weight(e, spec.transform) for e in stage.epsilons])
    meta_w = apply_weights(meta, weights)
    if not np.isfinite(meta_w).all():
        raise StackingError(f"{spec.alias}: non-finite weighted meta-features")

    tag = f"level1-{spec.alias}"
    nonconverged = set(stage.nonconverged)
    level1 = _fit(spec.level1, meta_w, y, seed, tag)
    if not level1.converged:
        nonconverged.add(f"L1:{spec.level1.algorithm}")
    if level1_cost_sensitive(spec.setup_type):
        oof = np.empty(len(y))
        for f, (tr, te) in enumerate(stage.inner_plan):
            m = _fit(spec.level1, meta_w[tr], y[tr], seed, tag, f)
            oof[te] = m.predict_proba(meta_w[te])
        level1 = CalibratedScorer(level1, pava(oof, y))

    return StackedModel(
        setup_type=spec.setup_type,
        transform=spec.transform,
        level0=list(stage.deployed),
        weights=weights,
        epsilons=stage.epsilons.copy(),
        level1=level1,
        nonconverged=nonconverged,
    )


def predict_stacking(model: StackedModel, X, costs=None):
    """Final 0/1 decisions; thresholds level-1 at 0.5 (type 1) or by DMECC."""
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X.reshape(1, -1)
        costs = None if costs is None else np.asarray(costs, dtype=np.float64).reshape(1, 4)
    if costs is None:
        raise StackingError(f"{model.alias}: instance costs are required for prediction")
    costs = check_costs(costs)
    s = model.level1_scores(X, costs)
    if level1_cost_sensitive(model.setup_type):
        out = decide(s, costs)
    else:
        out = (s > 0.5).astype(np.int64)
    return int(out[0]) if single else out
