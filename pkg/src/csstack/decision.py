"""Cost-sensitive decisions and MEC weights.

All functions accept a single :class:`~csstack.data.InstanceCosts` or an
``(n, 4)`` cost array ordered ``(c_tp, c_fp, c_fn, c_tn)``.
"""

import math

import numpy as np

from .data import CostError, as_cost_array, check_costs

EPS_FLOOR = 1e-6
EPS_CEIL = 1.0 - 1e-6

TRANSFORMS = ("unit", "acc", "exp", "ln", "sq")


def dmecc_threshold(costs):
    """Per-instance threshold ``(c_fp - c_tn) / (c_fp - c_tn + c_fn - c_tp)``.

    Returns a float for a single cost matrix, an array otherwise.
    """
    single = np.ndim(costs) == 1
    arr = check_costs(costs)
    neg = arr[:, 1] - arr[:, 3]
    t = neg / (neg + arr[:, 2] - arr[:, 0])
    return float(t[0]) if single else t


def decide(p, costs):
    """1 where the probability strictly exceeds the instance threshold."""
    t = dmecc_threshold(costs)
    p = np.asarray(p, dtype=np.float64)
    if np.any((p < 0) | (p > 1)):
        raise ValueError("probabilities must lie in [0, 1]")
    out = (p > t).astype(np.int64)
    return int(out) if out.ndim == 0 else out


def expected_cost(p, label, costs):
    """Expected cost of predicting ``label`` when P(y=1) = ``p``."""
    arr = as_cost_array(costs)
    p = np.asarray(p, dtype=np.float64)
    label = np.asarray(label)
    c_tp, c_fp, c_fn, c_tn = arr.T
    out = np.where(label == 1, p * c_tp + (1 - p) * c_fp, p * c_fn + (1 - p) * c_tn)
    if np.ndim(costs) == 1 and out.size == 1:
        return float(out.reshape(-1)[0])
    return out


def clamp_epsilon(eps):
    return float(min(max(eps, EPS_FLOOR), EPS_CEIL))


def mec_epsilon(decisions, truths, costs) -> float:
    """Validation cost-error, normalised by the cost of getting every row wrong.

    The numerator sums ``c_fp`` over false positives and ``c_fn`` over false
    negatives; the denominator sums ``c_fn`` over actual positives and
    ``c_fp`` over actual negatives. Clamped to ``[1e-6, 1 - 1e-6]``.
    """
    decisions = np.asarray(decisions)
    truths = np.asarray(truths)
    arr = as_cost_array(costs)
    if not (len(decisions) == len(truths) == len(arr)) or len(arr) == 0:
        raise ValueError("decisions, truths and costs must have equal non-zero length")
    fp = (truths == 0) & (decisions == 1)
    fn = (truths == 1) & (decisions == 0)
    err = arr[fp, 1].sum() + arr[fn, 2].sum()
    budget = np.where(truths == 1, arr[:, 2], arr[:, 1]).sum()
    if budget <= 0:
        raise CostError("mec_epsilon: total misclassification budget is zero")
    return clamp_epsilon(err / budget)


_EXP_KNEE = 700.0


def _soft_cap_exponent(x: float) -> float:
    # exp overflows float64 past ~709.78 (eps < ~1.4e-3). Above the knee the
    # exponent is squashed into (700, 709) so the weight stays finite and
    # still strictly decreasing in eps.
    if x <= _EXP_KNEE:
        return x
    excess = x - _EXP_KNEE
    return _EXP_KNEE + 9.0 * excess / (excess + 1e4)


def transform_weight(epsilon: float, kind: str) -> float:
    eps = clamp_epsilon(epsilon)
    odds = (1.0 - eps) / eps
    if kind == "unit":
        return 1.0
    if kind == "acc":
        return 1.0 - eps
    if kind == "exp":
        return math.exp(_soft_cap_exponent(odds))
    if kind == "ln":
        return math.log(odds)
    if kind == "sq":
        return odds * odds
    raise ValueError(f"unknown weight transform {kind!r}; expected one of {TRANSFORMS}")
