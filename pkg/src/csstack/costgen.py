"""Instance-dependent cost matrices for credit, bankruptcy and synthetic data.

Positive class = defaulter / bankrupt. Correct decisions cost nothing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import CostError, DataError, check_costs


@dataclass(frozen=True)
class CreditCostParams:
    lgd: float = 0.75
    # stand-in for year-2000 German lending rates; the paper gives no figures
    interest_rate_range: tuple = (0.06, 0.10)
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.lgd <= 1:
            raise ValueError("lgd must lie in (0, 1]")
        lo, hi = self.interest_rate_range
        if not 0 < lo <= hi < 1:
            raise ValueError("interest_rate_range must satisfy 0 < min <= max < 1")


def _sample_terms(loss, profit, labels):
    labels = np.asarray(labels)
    if labels.shape != loss.shape:
        raise DataError("labels must align with the cost inputs")
    n = len(labels)
    if n == 0 or labels.min() == labels.max():
        raise CostError("sample averages need both classes present")
    # prior-weighted class-conditional means: sum over the class / n
    avg_loss = float(loss[labels == 1].sum() / n)
    avg_profit = float(profit[labels == 0].sum() / n)
    return avg_loss, avg_profit


def _assemble(c_fp, c_fn):
    zeros = np.zeros_like(c_fn)
    return check_costs(np.column_stack([zeros, c_fp, c_fn, zeros]))


def credit_costs(credit_lines, labels, params: CreditCostParams = CreditCostParams(), rates=None):
    """Costs of the credit-scoring model.

    ``c_fn`` is the loss given default on the credit line. ``c_fp`` is the
    interest forgone on rejecting a good customer plus the sample's average
    expected loss and average expected profit. ``rates`` overrides the
    uniformly drawn interest rate per instance.
    """
    lines = np.asarray(credit_lines, dtype=np.float64)
    if (lines <= 0).any() or not np.isfinite(lines).all():
        raise CostError("credit lines must be positive and finite")
    if rates is None:
        rng = np.random.default_rng(params.seed)
        lo, hi = params.interest_rate_range
        rates = rng.uniform(lo, hi, size=len(lines))
    rates = np.broadcast_to(np.asarray(rates, dtype=np.float64), lines.shape)
    loss = params.lgd * lines
    profit = rates * lines
    avg_loss, avg_profit = _sample_terms(loss, profit, labels)
    return _assemble(profit + avg_loss + avg_profit, loss)


def bankruptcy_costs(usage_90d, annual_margin, labels):
    """Bankruptcy variant: the 90-day usage is lost in full on default."""
    usage = np.asarray(usage_90d, dtype=np.float64)
    margin = np.asarray(annual_margin, dtype=np.float64)
    if usage.shape != margin.shape:
        raise DataError("usage and margin vectors must align")
    if (usage < 0).any() or not np.isfinite(margin).all():
        raise CostError("usage must be >= 0 and margins finite")
    avg_loss, avg_profit = _sample_terms(usage, margin, labels)
    return _assemble(margin + avg_loss + avg_profit, usage)


def synthetic_uniform_costs(n: int, low: float = 1.0, high: float = 10.0, seed=0):
    """Independent ``c_fp, c_fn ~ Uniform[low, high]`` per instance."""
    if not 0 < low < high:
        raise ValueError("need 0 < low < high")
    rng = np.random.default_rng(seed)
    c_fp = rng.uniform(low, high, size=n)
    c_fn = rng.uniform(low, high, size=n)
    return _assemble(c_fp, c_fn)


def costs_from_directive(directive: dict, frame, labels):
    """Build costs for a loaded CSV frame from a schema ``costgen`` entry.

    Supported kinds: ``credit`` (needs ``credit_line``), ``bankruptcy``
    (needs ``usage_90d`` and ``annual_margin``) and ``uniform``.
    """
    kind = directive.get("kind")

    def column(key):
        name = directive.get(key)
        if name is None or name not in frame.columns:
            raise DataError(f"costgen {kind!r}: column for {key!r} missing ({name!r})")
        vals = np.asarray(frame[name].astype(float), dtype=np.float64)
        if np.isnan(vals).any():
            raise DataError(f"costgen {kind!r}: missing values in column {name!r}")
        return vals

    if kind == "credit":
        params = CreditCostParams(
            lgd=float(directive.get("lgd", 0.75)),
            interest_rate_range=tuple(directive.get("interest_rate_range", (0.06, 0.10))),
            seed=int(directive.get("seed", 0)),
        )
        return credit_costs(column("credit_line"), labels, params)
    if kind == "bankruptcy":
        return bankruptcy_costs(column("usage_90d"), column("annual_margin"), labels)
    if kind == "uniform":
        return synthetic_uniform_costs(
            len(labels),
            float(directive.get("low", 1.0)),
            float(directive.get("high", 10.0)),
            int(directive.get("seed", 0)),
        )
    raise DataError(f"unknown costgen kind {kind!r}")


def gaussian_dataset(
    n: int = 2000,
    d: int = 8,
    prevalence: float = 0.3,
    separation: float = 1.0,
    low: float = 1.0,
    high: float = 10.0,
    seed=0,
    name: str | None = None,
):
    """Two Gaussian classes with uniform per-instance error costs.

    Class-conditional features are ``N(0, I)`` for negatives and
    ``N(mu, I)`` for positives, where ``mu`` has ``separation`` in every
    coordinate divided by ``sqrt(d)``, so the class means sit ``separation``
    apart whatever ``d`` is.
    """
    from .data import NUMERIC, Dataset

    rng = np.random.default_rng(seed)
    n_pos = int(round(prevalence * n))
    y = np.zeros(n, dtype=np.int64)
    y[rng.permutation(n)[:n_pos]] = 1
    X = rng.normal(size=(n, d))
    X[y == 1] += separation / np.sqrt(d)
    costs = synthetic_uniform_costs(n, low, high, seed=rng.integers(2**32))
    return Dataset(
        name=name or f"gauss-{seed}",
        X=X,
        y=y,
        costs=costs,
        columns=tuple(f"x{j}" for j in range(d)),
        kinds=(NUMERIC,) * d,
    )
