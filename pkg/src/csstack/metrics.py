"""Total misclassification cost and the savings score."""

from dataclasses import asdict, dataclass

import numpy as np

from .data import as_cost_array


class DegenerateBaseline(ValueError):
    pass


def _aligned(truths, decisions, costs):
    truths = np.asarray(truths)
    decisions = np.asarray(decisions)
    arr = as_cost_array(costs)
    if not (len(truths) == len(decisions) == len(arr)):
        raise ValueError(
            f"length mismatch: {len(truths)} truths, {len(decisions)} decisions, {len(arr)} costs"
        )
    return truths, decisions, arr


def cost_entries(truths, decisions, arr):
    """Cost matrix entry selected by each (truth, decision) pair."""
    return np.where(
        truths == 1,
        np.where(decisions == 1, arr[:, 0], arr[:, 2]),
        np.where(decisions == 1, arr[:, 1], arr[:, 3]),
    )


def total_cost(truths, decisions, costs) -> float:
    """Sum of the selected cost entries, correct decisions included."""
    truths, decisions, arr = _aligned(truths, decisions, costs)
    return float(cost_entries(truths, decisions, arr).sum())


def baseline_cost(truths, costs) -> float:
    """Cost of the cheaper of the all-negative and all-positive policies."""
    truths = np.asarray(truths)
    arr = as_cost_array(costs)
    if len(truths) == 0:
        raise ValueError("baseline_cost of an empty set")
    if len(truths) != len(arr):
        raise ValueError("length mismatch between truths and costs")
    all_neg = float(cost_entries(truths, np.zeros_like(truths), arr).sum())
    all_pos = float(cost_entries(truths, np.ones_like(truths), arr).sum())
    base = min(all_neg, all_pos)
    if base == 0:
        raise DegenerateBaseline("degenerate baseline: a naive policy has zero cost")
    return base


def savings(truths, decisions, costs) -> float:
    """``(baseline - total) / baseline``; unbounded on both sides."""
    base = baseline_cost(truths, costs)
    return (base - total_cost(truths, decisions, costs)) / base


@dataclass(frozen=True)
class EvalRecord:
    dataset: str
    classifier: str
    part: int
    repeat: int
    fold: int
    total_cost: float
    savings: float
    n_test: int
    nonconverged: str = ""

    FIELDS = (
        "dataset", "classifier", "part", "repeat", "fold",
        "total_cost", "savings", "n_test", "nonconverged",
    )

    @property
    def key(self):
        return (self.dataset, self.classifier, self.part, self.repeat, self.fold)

    def as_row(self) -> dict:
        row = asdict(self)
        row["total_cost"] = repr(float(self.total_cost))
        row["savings"] = repr(float(self.savings))
        return row


def evaluate(dataset, classifier, part, repeat, fold, truths, decisions, costs, nonconverged=""):
    return EvalRecord(
        dataset=dataset,
        classifier=classifier,
        part=int(part),
        repeat=int(repeat),
        fold=int(fold),
        total_cost=total_cost(truths, decisions, costs),
        savings=savings(truths, decisions, costs),
        n_test=len(truths),
        nonconverged=nonconverged,
    )
