import numpy as np
import pytest

from csstack.costgen import synthetic_uniform_costs
from csstack.decision import decide, mec_epsilon, transform_weight
from csstack.learners import LearnerSpec, Scorer, train
from csstack.stacking import (
    SETUP_ALIASES,
    StackedModel,
    StackingError,
    StackingSpec,
    apply_weights,
    build_meta_features,
    derive_seed,
    enumerate_setups,
    fit_level0,
    predict_stacking,
    train_stacking,
)

LEVEL0 = (LearnerSpec("DT"), LearnerSpec("KNN", {"k": 5}), LearnerSpec("LR", {"max_iter": 100}))


class Fixed(Scorer):
    """Scores every row with the same value."""

    algorithm = "fixed"

    def __init__(self, value, n_features=1):
        self.value = value
        self.n_features = n_features

    def _raw(self, X):
        return np.full(X.shape[0], self.value)


def problem(rng, n=200):
    y = (rng.uniform(size=n) < 0.35).astype(int)
    X = rng.normal(size=(n, 3)) + y[:, None]
    return X, y, synthetic_uniform_costs(n, seed=int(rng.integers(1000)))


def model_with(setup_type, level0_value, level1_value, weights=(1.0,)):
    return StackedModel(
        setup_type=setup_type,
        transform="unit",
        level0=[Fixed(level0_value)],
        weights=np.array(weights),
        epsilons=np.array([0.3]),
        level1=Fixed(level1_value),
    )


def test_enumeration_matches_table_order():
    specs = enumerate_setups()
    rows = [(s.setup_type, s.transform) for s in specs]
    assert len(set(rows)) == 15
    assert rows == [(t, k) for t in (1, 2, 3) for k in ("unit", "exp", "ln", "sq", "acc")]
    assert [i + 1 for i, s in enumerate(specs) if s.transform == "unit"] == [1, 6, 11]
    assert rows[10] == (3, "unit")
    assert [s.alias for s in specs] == list(SETUP_ALIASES)
    assert SETUP_ALIASES[:5] == ("type-1", "type-1_exp", "type-1_ln", "type-1_sq", "type-1_acc")


def test_unknown_alias_lists_valid_ones():
    with pytest.raises(ValueError, match="type-3_acc"):
        StackingSpec.from_alias("type-4")


def test_meta_feature_examples():
    X = np.zeros((1, 1))
    cs = build_meta_features([Fixed(0.3)], X, [(0, 2, 8, 0)], level0_cost_sensitive=True)
    assert cs.tolist() == [[1.0]]
    cis = build_meta_features([Fixed(0.3)], X, level0_cost_sensitive=False)
    assert cis.tolist() == [[0.3]]
    twin = build_meta_features([Fixed(0.7), Fixed(0.7)], np.zeros((4, 1)), [(0, 1, 1, 0)] * 4)
    np.testing.assert_array_equal(twin[:, 0], twin[:, 1])
    with pytest.raises(StackingError):
        build_meta_features([Fixed(0.3)], X, None, level0_cost_sensitive=True)


def test_predict_examples():
    x = np.zeros(1)
    assert predict_stacking(model_with(3, 0.1, 0.0), x, (0, 2, 8, 0)) == 0
    for costs in [(0, 2, 8, 0), (0, 8, 2, 0), (0, 1, 1, 0)]:
        assert predict_stacking(model_with(1, 0.1, 0.6), x, costs) == 1
    assert predict_stacking(model_with(2, 0.1, 0.3), x, (0, 2, 8, 0)) == 1
    with pytest.raises(StackingError):
        predict_stacking(model_with(2, 0.1, 0.3), x, None)


def test_out_of_fold_provenance(rng):
    X, y, costs = problem(rng)
    stage = fit_level0(LEVEL0, X, y, costs, inner_folds=4, seed=5)
    fold_rows = [set(te.tolist()) for _, te in stage.inner_plan]
    assert sorted(set().union(*fold_rows)) == list(range(len(y)))
    for f, (tr, te) in enumerate(stage.inner_plan):
        assert not set(tr.tolist()) & set(te.tolist())
        assert (stage.fold_of_row[te] == f).all()
    # rebuild the fold-f model from its training rows only and compare
    for j, spec in enumerate(LEVEL0):
        for f, (tr, te) in enumerate(stage.inner_plan):
            m = train(spec.with_seed(derive_seed(5, spec.algorithm, "inner", f)), X[tr], y[tr])
            np.testing.assert_array_equal(stage.oof_raw[te, j], m.predict_proba(X[te]))


def test_epsilons_come_from_oof_decisions(rng):
    X, y, costs = problem(rng)
    stage = fit_level0(LEVEL0, X, y, costs, seed=1)
    for j in range(len(LEVEL0)):
        d = decide(stage.oof_prob[:, j], costs)
        assert stage.epsilons[j] == mec_epsilon(d, y, costs)


def test_unit_transform_is_identity(rng):
    meta = rng.uniform(size=(20, 3))
    out = apply_weights(meta, [1.0, 1.0, 1.0])
    assert out.tobytes() == meta.tobytes()


@pytest.mark.parametrize("alias", ["type-1", "type-2_sq", "type-3_ln", "type-3_exp", "type-2_acc"])
def test_training_and_prediction_paths_agree(rng, alias):
    X, y, costs = problem(rng)
    spec = StackingSpec.from_alias(alias, level0=LEVEL0, level1=LearnerSpec("LR", {"max_iter": 100}))
    model = train_stacking(spec, X[:150], y[:150], costs[:150], seed=2)
    expected = np.array([transform_weight(e, spec.transform) for e in model.epsilons])
    np.testing.assert_array_equal(model.weights, expected)
    pred = predict_stacking(model, X[150:], costs[150:])
    assert set(np.unique(pred)) <= {0, 1}
    back = StackedModel.from_dict(model.to_dict())
    np.testing.assert_array_equal(predict_stacking(back, X[150:], costs[150:]), pred)
    # single-row prediction matches the batch path
    assert predict_stacking(model, X[150], costs[150]) == pred[0]


def test_shared_stage_matches_fresh_training(rng):
    X, y, costs = problem(rng)
    spec = StackingSpec.from_alias("type-3_sq", level0=LEVEL0)
    stage = fit_level0(LEVEL0, X, y, costs, spec.inner_folds, seed=9)
    a = train_stacking(spec, X, y, costs, seed=9, level0_stage=stage)
    b = train_stacking(spec, X, y, costs, seed=9)
    np.testing.assert_array_equal(predict_stacking(a, X, costs), predict_stacking(b, X, costs))
    with pytest.raises(StackingError):
        train_stacking(StackingSpec.from_alias("type-3", level0=LEVEL0[:2]), X, y, costs, level0_stage=stage)


def test_degenerate_ensemble_collapses_to_level0(rng):
    # x0 > 0 determines the label, so the level-0 DT decides perfectly
    n = 240
    X = rng.normal(size=(n, 2))
    X[np.abs(X[:, 0]) < 0.2, 0] += 0.5
    y = (X[:, 0] > 0).astype(int)
    costs = synthetic_uniform_costs(n, seed=4)
    level0 = (LearnerSpec("DT", {"max_depth": 2}),)
    spec = StackingSpec(3, "unit", level0=level0, level1=LearnerSpec("DT", {"max_depth": 1, "min_leaf": 1}))
    model = train_stacking(spec, X, y, costs, seed=3)
    single = decide(model.level0[0].predict_proba(X), costs)
    assert (single == y).all()
    np.testing.assert_array_equal(predict_stacking(model, X, costs), single)


@pytest.mark.parametrize("w", [1e-3, 0.5, 2.0, 17.0, 1e4])
def test_positive_weight_does_not_change_stump(rng, w):
    col = rng.normal(size=(150, 1))
    y = (col[:, 0] + rng.normal(scale=0.8, size=150) > 0).astype(int)
    stump = LearnerSpec("DT", {"max_depth": 1, "min_leaf": 1})
    base = train(stump, col, y).predict_proba(col)
    scaled = train(stump, col * w, y).predict_proba(col * w)
    np.testing.assert_array_equal(base, scaled)


def test_level0_failure_names_fold_and_learner(rng):
    X, y, costs = problem(rng, n=40)
    X[0, 0] = np.nan
    with pytest.raises(StackingError, match=r"LR failed \(inner/\d\): non-finite"):
        fit_level0((LearnerSpec("LR"),), X, y, costs, seed=0)
