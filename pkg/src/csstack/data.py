"""Datasets with per-instance cost matrices, preprocessing and resampling."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
import pandas as pd

NUMERIC = "numeric"
CATEGORICAL = "categorical"

ROLES = (
    "feature_numeric",
    "feature_categorical",
    "label",
    "c_tp",
    "c_fp",
    "c_fn",
    "c_tn",
    "ignore",
)
COST_ROLES = ("c_tp", "c_fp", "c_fn", "c_tn")
NA_VALUES = ["", "NA"]

# category index reserved for missing categorical values
MISSING_CATEGORY = -1


class DataError(ValueError):
    pass


class CostError(DataError):
    pass


class InstanceCosts(NamedTuple):
    """Cost matrix of one instance: cost of TP, FP, FN and TN decisions."""

    c_tp: float
    c_fp: float
    c_fn: float
    c_tn: float


def as_cost_array(costs) -> np.ndarray:
    """Coerce one InstanceCosts or a sequence of them to an ``(n, 4)`` array.

    Column order is ``(c_tp, c_fp, c_fn, c_tn)``.
    """
    arr = np.asarray(costs, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, 4)
    if arr.ndim != 2 or arr.shape[1] != 4:
        raise CostError(f"cost array must have shape (n, 4), got {arr.shape}")
    return arr


def check_costs(costs) -> np.ndarray:
    """Validate finiteness, non-negativity and reasonableness row by row."""
    arr = as_cost_array(costs)
    bad = ~np.isfinite(arr).all(axis=1)
    if bad.any():
        raise CostError(f"non-finite cost at row {int(np.argmax(bad))}")
    bad = (arr < 0).any(axis=1)
    if bad.any():
        raise CostError(f"negative cost at row {int(np.argmax(bad))}")
    bad = ~((arr[:, 1] > arr[:, 3]) & (arr[:, 2] > arr[:, 0]))
    if bad.any():
        raise CostError(f"reasonableness violated at row {int(np.argmax(bad))}")
    return arr


@dataclass(frozen=True)
class Dataset:
    """Feature matrix, binary labels and one cost matrix per row.

    Numeric missing values are NaN. Categorical columns hold integer category
    codes (stored as floats), with ``MISSING_CATEGORY`` for missing entries.
    """

    name: str
    X: np.ndarray
    y: np.ndarray
    costs: np.ndarray
    columns: tuple[str, ...]
    kinds: tuple[str, ...]
    categories: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        n = self.X.shape[0]
        if self.y.shape != (n,):
            raise DataError("labels length does not match feature rows")
        if not np.isin(self.y, (0, 1)).all():
            raise DataError("labels must be 0/1")
        if self.costs.shape != (n, 4):
            raise DataError("costs length does not match feature rows")
        if len(self.columns) != self.X.shape[1] or len(self.kinds) != self.X.shape[1]:
            raise DataError("column metadata does not match feature columns")
        for a in (self.X, self.y, self.costs):
            a.setflags(write=False)

    @property
    def n_instances(self) -> int:
        return self.X.shape[0]

    @property
    def missing_mask(self) -> np.ndarray:
        return np.isnan(self.X)

    @property
    def prevalence(self) -> float:
        return float(self.y.mean()) if len(self.y) else float("nan")

    def subset(self, idx, name: str | None = None) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(
            name=name or self.name,
            X=self.X[idx].copy(),
            y=self.y[idx].copy(),
            costs=self.costs[idx].copy(),
            columns=self.columns,
            kinds=self.kinds,
            categories=self.categories,
        )


# --------------------------------------------------------------------------
# CSV ingestion
# --------------------------------------------------------------------------

def load_schema(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise DataError(f"schema file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        schema = json.load(fh)
    columns = schema.get("columns")
    if not isinstance(columns, dict) or not columns:
        raise DataError("schema needs a non-empty 'columns' mapping")
    for col, role in columns.items():
        if role not in ROLES:
            raise DataError(f"column {col!r}: unknown role {role!r}")
    return schema


def _parse_labels(raw: pd.Series) -> np.ndarray:
    out = np.empty(len(raw), dtype=np.int64)
    for i, v in enumerate(raw.tolist()):
        try:
            f = float(v)
        except (TypeError, ValueError):
            raise DataError(f"unparseable label {v!r} at row {i}") from None
        if f not in (0.0, 1.0):
            raise DataError(f"label not in {{0,1}} at row {i}: {v!r}")
        out[i] = int(f)
    return out


def _numeric_column(raw: pd.Series, col: str) -> np.ndarray:
    vals = pd.to_numeric(raw, errors="coerce").to_numpy(dtype=np.float64)
    bad = np.isnan(vals) & raw.notna().to_numpy()
    if bad.any():
        i = int(np.argmax(bad))
        raise DataError(f"column {col!r}: non-numeric value {raw.iloc[i]!r} at row {i}")
    return vals


def load_frame(path) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise DataError(f"data file not found: {path}")
    return pd.read_csv(
        path, dtype=str, keep_default_na=False, na_values=NA_VALUES, encoding="utf-8"
    )


def load_csv(path, schema, name: str | None = None) -> Dataset:
    """Read a CSV into a :class:`Dataset` according to ``schema``.

    ``schema`` is a dict (or a path to the JSON schema file) mapping column
    names to roles. Costs come either from the four cost columns or from a
    ``costgen`` directive.
    """
    if not isinstance(schema, dict):
        schema = load_schema(schema)
    frame = load_frame(path)
    roles = schema["columns"]
    missing = [c for c in roles if c not in frame.columns]
    if missing:
        raise DataError(f"columns named in schema but absent from CSV: {missing}")
    labels = [c for c, r in roles.items() if r == "label"]
    if len(labels) != 1:
        raise DataError("schema must name exactly one label column")
    y = _parse_labels(frame[labels[0]])

    cols, kinds, mats, categories = [], [], [], {}
    for col, role in roles.items():
        if role == "feature_numeric":
            mats.append(_numeric_column(frame[col], col))
            kinds.append(NUMERIC)
        elif role == "feature_categorical":
            raw = frame[col]
            levels = sorted(raw.dropna().unique().tolist())
            lookup = {v: i for i, v in enumerate(levels)}
            codes = np.array(
                [MISSING_CATEGORY if pd.isna(v) else lookup[v] for v in raw.tolist()],
                dtype=np.float64,
            )
            mats.append(codes)
            kinds.append(CATEGORICAL)
            categories[col] = levels
        else:
            continue
        cols.append(col)
    X = np.column_stack(mats) if mats else np.empty((len(frame), 0))

    cost_cols = {r: c for c, r in roles.items() if r in COST_ROLES}
    directive = schema.get("costgen")
    if len(cost_cols) == 4:
        costs = np.column_stack([_numeric_column(frame[cost_cols[r]], cost_cols[r]) for r in COST_ROLES])
    elif directive:
        from .costgen import costs_from_directive

        costs = costs_from_directive(directive, frame, y)
    elif cost_cols:
        raise DataError(f"incomplete cost columns {sorted(cost_cols)}; need all of {COST_ROLES}")
    else:
        raise DataError("no cost columns and no costgen directive")
    costs = check_costs(costs)

    return Dataset(
        name=name or schema.get("name") or Path(path).stem,
        X=X,
        y=y,
        costs=costs,
        columns=tuple(cols),
        kinds=tuple(kinds),
        categories=categories,
    )


# --------------------------------------------------------------------------
# Fold-fitted transforms
# --------------------------------------------------------------------------

def nearest_rank_quantile(sorted_values: np.ndarray, q: float) -> float:
    """Type-1 (nearest-rank) quantile of an ascending array."""
    n = len(sorted_values)
    rank = max(1, math.ceil(q * n))
    return float(sorted_values[rank - 1])


@dataclass(frozen=True)
class QuantileScaler:
    median: float
    q25: float
    q75: float
    column: str = ""

    @property
    def scale(self) -> float:
        iqr = self.q75 - self.q25
        return iqr if iqr > 0 else 1.0

    def apply(self, values):
        return (np.asarray(values, dtype=np.float64) - self.median) / self.scale


@dataclass(frozen=True)
class MedianImputer:
    median: float
    column: str = ""

    def apply(self, values):
        v = np.asarray(values, dtype=np.float64)
        return np.where(np.isnan(v), self.median, v)


@dataclass(frozen=True)
class WoEEncoder:
    woe: dict
    smoothing: float
    column: str = ""
    fallback: float = 0.0

    def apply(self, codes):
        codes = np.asarray(codes, dtype=np.float64)
        out = np.full(codes.shape, self.fallback)
        for c, v in self.woe.items():
            out[codes == c] = v
        return out


def _present(values, column):
    v = np.asarray(values, dtype=np.float64)
    v = v[~np.isnan(v)]
    if v.size == 0:
        raise DataError(f"column {column!r}: no non-missing training values")
    return v


def fit_quantile_scaler(values, column: str = "") -> QuantileScaler:
    v = np.sort(_present(values, column))
    return QuantileScaler(
        median=float(np.median(v)),
        q25=nearest_rank_quantile(v, 0.25),
        q75=nearest_rank_quantile(v, 0.75),
        column=column,
    )


def fit_median_impute(values, column: str = "") -> MedianImputer:
    return MedianImputer(median=float(np.median(_present(values, column))), column=column)


def fit_woe(codes, labels, smoothing: float = 0.5, column: str = "") -> WoEEncoder:
    """Weight-of-evidence per category, with pseudo-count ``smoothing``."""
    if smoothing < 0:
        raise DataError("smoothing must be >= 0")
    codes = np.asarray(codes, dtype=np.float64)
    labels = np.asarray(labels)
    pos_total = int((labels == 1).sum())
    neg_total = int((labels == 0).sum())
    if pos_total == 0 or neg_total == 0:
        raise DataError(f"column {column!r}: WoE undefined without both classes in training fold")
    s = float(smoothing)
    woe = {}
    for c in np.unique(codes):
        in_c = codes == c
        pos = float((labels[in_c] == 1).sum())
        neg = float((labels[in_c] == 0).sum())
        num = (pos + s) / (pos_total + 2 * s)
        den = (neg + s) / (neg_total + 2 * s)
        if num == 0 or den == 0:
            # pure category with s=0: clip to the largest finite evidence
            num = max(num, 0.5 / (pos_total + 1))
            den = max(den, 0.5 / (neg_total + 1))
        woe[float(c)] = math.log(num / den)
    return WoEEncoder(woe=woe, smoothing=s, column=column)


@dataclass(frozen=True)
class Preprocessor:
    """Per-column transforms fitted on one training fold."""

    steps: tuple

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        out = np.empty_like(X)
        for j, step in enumerate(self.steps):
            col = X[:, j]
            for t in step:
                col = t.apply(col)
            out[:, j] = col
        if not np.isfinite(out).all():
            raise DataError("non-finite value after preprocessing")
        return out


def fit_preprocessor(
    X, y, kinds: Sequence[str], columns: Sequence[str] | None = None, woe_smoothing: float = 0.5
) -> Preprocessor:
    """Fit median imputation + quantile scaling (numeric) and WoE (categorical)."""
    X = np.asarray(X, dtype=np.float64)
    columns = columns or [f"x{j}" for j in range(X.shape[1])]
    steps = []
    for j, kind in enumerate(kinds):
        col = X[:, j]
        if kind == NUMERIC:
            steps.append((fit_median_impute(col, columns[j]), fit_quantile_scaler(col, columns[j])))
        elif kind == CATEGORICAL:
            steps.append((fit_woe(col, y, woe_smoothing, columns[j]),))
        else:
            raise DataError(f"unknown column kind {kind!r}")
    return Preprocessor(tuple(steps))


# --------------------------------------------------------------------------
# Resampling
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FoldPlan:
    pairs: tuple
    seeds: tuple
    k: int
    repeats: int

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)


def _stratified_assignment(labels, k, seed) -> np.ndarray:
    labels = np.asarray(labels)
    for cls in (0, 1):
        count = int((labels == cls).sum())
        if 0 < count < k:
            raise DataError(f"class {cls} has {count} members, fewer than k={k}")
    if len(np.unique(labels)) < 2:
        raise DataError("stratified splitting needs both classes")
    rng = np.random.default_rng(seed)
    fold = np.empty(len(labels), dtype=np.int64)
    offset = 0
    for cls in (1, 0):
        idx = np.flatnonzero(labels == cls)
        idx = idx[rng.permutation(len(idx))]
        fold[idx] = (offset + np.arange(len(idx))) % k
        offset += len(idx)
    return fold


def stratified_kfold(labels, k: int, seed) -> FoldPlan:
    """One repeat of stratified k-fold CV; deterministic in ``seed``."""
    if k < 2:
        raise DataError("k must be >= 2")
    fold = _stratified_assignment(labels, k, seed)
    pairs = tuple(
        (np.flatnonzero(fold != f), np.flatnonzero(fold == f)) for f in range(k)
    )
    return FoldPlan(pairs=pairs, seeds=(seed,), k=k, repeats=1)


def repeated_stratified_plan(labels, k: int, seeds: Sequence[int]) -> FoldPlan:
    pairs = []
    for s in seeds:
        pairs.extend(stratified_kfold(labels, k, s).pairs)
    return FoldPlan(pairs=tuple(pairs), seeds=tuple(seeds), k=k, repeats=len(seeds))


def five_by_two_plan(dataset, seeds: Sequence[int]) -> FoldPlan:
    """Five repeats of stratified 2-fold CV, one seed per repeat."""
    if len(seeds) < 5:
        raise DataError(f"5x2 CV needs 5 seeds, got {len(seeds)}")
    labels = dataset.y if isinstance(dataset, Dataset) else dataset
    return repeated_stratified_plan(labels, 2, list(seeds)[:5])


def paired_plan(train_labels, test_labels, k: int, seeds: Sequence[int]) -> FoldPlan:
    """Folds for datasets shipped with a separate test file.

    Both files are split with the same seed; each pair takes its training
    part from the training file and its test part from the test file.
    """
    train_plan = repeated_stratified_plan(train_labels, k, seeds)
    test_plan = repeated_stratified_plan(test_labels, k, seeds)
    pairs = tuple((tr, te) for (tr, _), (_, te) in zip(train_plan.pairs, test_plan.pairs))
    return FoldPlan(pairs=pairs, seeds=tuple(seeds), k=k, repeats=len(seeds))


def subsample_partition(dataset: Dataset, parts: int = 5, seed=0) -> list[Dataset]:
    """Split rows uniformly at random into ``parts`` disjoint subsets."""
    if parts < 2:
        raise DataError("parts must be >= 2")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(dataset.n_instances)
    return [
        dataset.subset(np.sort(chunk), name=f"{dataset.name}#{i}")
        for i, chunk in enumerate(np.array_split(perm, parts))
    ]
