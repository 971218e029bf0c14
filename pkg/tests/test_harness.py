import csv
import json

import numpy as np
import pytest

from csstack import cli, harness
from csstack.costgen import gaussian_dataset
from csstack.metrics import EvalRecord
from csstack.stacking import derive_seed

SEEDS = [3, 5, 7, 11, 13]


def small_config(tmp_path, **overrides):
    raw = {
        "name": "tiny",
        "datasets": [{"name": "g", "synthetic": {"n": 160, "d": 3, "seed": 1}}],
        "roster": {
            "single": {"algorithms": ["LR"], "modes": ["CS"]},
            "stacking": {"setups": ["type-3"], "level1": ["LR"], "level0": ["DT", "LR"], "inner_folds": 3},
        },
        "protocol": {"k": 2, "repeats": 5, "seeds": SEEDS},
        "hyperparameters": {"LR": {"max_iter": 60}, "DT": {"max_depth": 3}},
        "output_dir": str(tmp_path / "runs"),
    }
    raw.update(overrides)
    return raw


def write_config(tmp_path, raw, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(raw))
    return p


def results_bytes(directory):
    return (directory / harness.RESULTS_CSV).read_bytes()


# --- configuration ------------------------------------------------------------

def test_minimal_config_valid(tmp_path):
    cfg, errors = harness.validate_config(small_config(tmp_path))
    assert errors == []
    assert cfg.classifier_ids() == ["LR-CS", "type-3:LR"]


def test_config_errors_are_collected(tmp_path):
    raw = small_config(tmp_path)
    raw["protocol"] = {"k": 2, "repeats": 5, "seeds": [1, 2, 3, 4]}
    raw["roster"]["stacking"]["setups"] = ["type-4"]
    raw["datasets"].append({"name": "missing", "path": "nope.csv", "schema": "nope.json"})
    cfg, errors = harness.validate_config(raw)
    assert cfg is None
    text = "\n".join(errors)
    assert "$.protocol.seeds: seeds/repeats mismatch" in text
    assert "unknown setup alias 'type-4'" in text and "type-3_acc" in text
    assert "$.datasets[1].path: file not found" in text
    assert len(errors) >= 4


def test_config_all_setups_and_bad_alpha(tmp_path):
    raw = small_config(tmp_path)
    raw["roster"]["stacking"]["setups"] = "all"
    cfg, errors = harness.validate_config(raw)
    assert len(cfg.setups) == 15
    raw["alpha"] = [0.01]
    _, errors = harness.validate_config(raw)
    assert any(e.startswith("$.alpha") for e in errors)


# --- running ------------------------------------------------------------------

def test_grid_of_records(tmp_path):
    cfg, _ = harness.validate_config(small_config(tmp_path))
    store = harness.run_experiment(cfg, workers=1)
    assert len(store.records) == 20
    assert not store.failures
    assert {r.classifier for r in store.records.values()} == {"LR-CS", "type-3:LR"}
    assert {(r.repeat, r.fold) for r in store.records.values()} == {(r, f) for r in range(5) for f in range(2)}
    assert all(r.n_test == 80 for r in store.records.values())


def test_failure_is_isolated(tmp_path, monkeypatch):
    cfg, _ = harness.validate_config(small_config(tmp_path))
    bad_seed = derive_seed(SEEDS[1], 1, 0)  # fourth train/test pair
    real = harness.train_stacking

    def flaky(spec, X, y, costs, seed=0, **kw):
        if seed == bad_seed:
            raise RuntimeError("boom")
        return real(spec, X, y, costs, seed, **kw)

    monkeypatch.setattr(harness, "train_stacking", flaky)
    store = harness.run_experiment(cfg, workers=1)
    assert len(store.records) == 19
    assert store.failures == [{
        "dataset": "g", "classifier": "type-3:LR", "part": 0, "repeat": 1, "fold": 1,
        "error": "RuntimeError: boom",
    }]
    out = tmp_path / "out"
    store.write(out)
    back = harness.ResultsStore.read(out)
    assert back.failures == store.failures


def test_preprocessing_fitted_on_train_rows_only(tmp_path, monkeypatch):
    cfg, _ = harness.validate_config(small_config(tmp_path))
    cells, _, _ = harness.plan_cells(cfg)
    seen = []
    real = harness.fit_preprocessor

    def spy(X, *a, **kw):
        seen.append(np.array(X))
        return real(X, *a, **kw)

    monkeypatch.setattr(harness, "fit_preprocessor", spy)
    for cell in cells[:3]:
        seen.clear()
        harness.run_cell(cell, cfg)
        assert len(seen) == 1
        fitted_rows = {r.tobytes() for r in seen[0]}
        assert fitted_rows == {r.tobytes() for r in cell.train.X}
        assert not fitted_rows & {r.tobytes() for r in cell.test.X}


def test_rerun_is_byte_identical(tmp_path):
    cfg, _ = harness.validate_config(small_config(tmp_path))
    harness.run_experiment(cfg, workers=1).write(tmp_path / "a")
    harness.run_experiment(cfg, workers=1).write(tmp_path / "b")
    assert results_bytes(tmp_path / "a") == results_bytes(tmp_path / "b")


def test_parallel_run_matches_serial(tmp_path):
    cfg, _ = harness.validate_config(small_config(tmp_path))
    harness.run_experiment(cfg, workers=1).write(tmp_path / "a")
    harness.run_experiment(cfg, workers=2).write(tmp_path / "b")
    assert results_bytes(tmp_path / "a") == results_bytes(tmp_path / "b")


def test_resume_skips_completed(tmp_path, monkeypatch):
    cfg, _ = harness.validate_config(small_config(tmp_path))
    full = harness.run_experiment(cfg, workers=1)
    full.write(tmp_path / "full")
    keep = [r for r in full.sorted_records() if not (r.repeat == 4 and r.classifier == "type-3:LR")]
    partial = harness.ResultsStore(keep)
    calls = []
    real = harness.run_cell
    monkeypatch.setattr(harness, "run_cell", lambda cell, c: calls.append(cell.classifiers) or real(cell, c))
    resumed = harness.run_experiment(cfg, workers=1, store=partial)
    assert calls == [("type-3:LR",), ("type-3:LR",)]
    resumed.write(tmp_path / "resumed")
    assert results_bytes(tmp_path / "full") == results_bytes(tmp_path / "resumed")


def _csv_dataset(tmp_path, name, n, seed):
    ds = gaussian_dataset(n=n, d=2, seed=seed)
    p = tmp_path / f"{name}.csv"
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["a", "b", "y", "tp", "fp", "fn", "tn"])
        for x, y, c in zip(ds.X, ds.y, ds.costs):
            w.writerow([*x, y, *c])
    return p


def test_paired_test_file_and_subsampling(tmp_path):
    schema = tmp_path / "schema.json"
    schema.write_text(json.dumps({"columns": {
        "a": "feature_numeric", "b": "feature_numeric", "y": "label",
        "tp": "c_tp", "fp": "c_fp", "fn": "c_fn", "tn": "c_tn",
    }}))
    train = _csv_dataset(tmp_path, "train", 120, 1)
    test = _csv_dataset(tmp_path, "test", 60, 2)
    big = _csv_dataset(tmp_path, "big", 400, 3)
    raw = small_config(tmp_path, datasets=[
        {"name": "paired", "path": str(train), "schema": str(schema), "test_path": str(test)},
        {"name": "big", "path": str(big), "schema": str(schema)},
    ])
    raw["roster"] = {"single": {"algorithms": ["DT"], "modes": ["CS", "CiS"]}}
    raw["protocol"]["large_threshold"] = 300
    cfg, errors = harness.validate_config(raw)
    assert errors == []
    store = harness.run_experiment(cfg, workers=1)
    paired = [r for r in store.records.values() if r.dataset == "paired"]
    big = [r for r in store.records.values() if r.dataset == "big"]
    assert len(paired) == 20 and all(r.n_test == 30 for r in paired)
    assert not store.failures
    assert len(big) == 5 * 20 and {r.part for r in big} == set(range(5))
    assert all(r.n_test == 40 for r in big)


def test_bad_dataset_aborts_only_itself(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,y\n1,7\n")
    schema = tmp_path / "s.json"
    schema.write_text(json.dumps({"columns": {"a": "feature_numeric", "y": "label"}}))
    raw = small_config(tmp_path)
    raw["datasets"].append({"name": "bad", "path": str(bad), "schema": str(schema)})
    cfg, _ = harness.validate_config(raw)
    store = harness.run_experiment(cfg, workers=1)
    assert len(store.records) == 20
    assert store.metadata["dataset_load_failures"][0]["dataset"] == "bad"


# --- reporting ------------------------------------------------------------------

def synthetic_store(n_datasets=10):
    recs = []
    for d in range(n_datasets):
        for rep in range(5):
            for fold in range(2):
                for clf, cost in (("A", 5.0 + (d % 3)), ("B", 20.0 + d + rep), ("C", 10.0 + d)):
                    recs.append(EvalRecord(f"d{d:02d}", clf, 0, rep, fold, cost, 1 - cost / 40, 50))
    return harness.ResultsStore(recs)


def test_report_dominance_and_format(tmp_path):
    synthetic_store().write(tmp_path)
    summary = harness.report(tmp_path, alpha=0.05)
    assert summary["sections"]["all"]["status"] == "ok"
    with open(tmp_path / "report" / "ranks_all.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["dataset", "A", "B", "C"]
    assert rows[-1][:3] == ["mean_rank", "1.0000", "3.0000"]
    with open(tmp_path / "report" / "wilcoxon_all.csv") as fh:
        cells = {row[0]: row[1:] for row in csv.reader(fh)}
    assert cells["A"][1] == "0.0 (0.0)"
    cd = json.loads((tmp_path / "report" / "cd_all.json").read_text())
    assert cd["classifiers"][0] == "A"


def test_report_recomputable_from_csv(tmp_path):
    store = synthetic_store(4)
    store.write(tmp_path)
    harness.report(tmp_path)
    with open(tmp_path / harness.RESULTS_CSV) as fh:
        rows = list(csv.DictReader(fh))
    with open(tmp_path / "report" / "savings.csv") as fh:
        table = {r["dataset"]: r for r in csv.DictReader(fh)}
    for ds in table:
        for clf in ("A", "B", "C"):
            vals = [float(r["savings"]) for r in rows if r["dataset"] == ds and r["classifier"] == clf]
            assert len(vals) == 10
            assert float(table[ds][clf]) == pytest.approx(np.mean(vals), abs=1e-6)


def test_report_excludes_incomplete(tmp_path):
    store = synthetic_store(4)
    store.add_failure({"dataset": "d02", "classifier": "C", "part": 0, "repeat": 0, "fold": 0, "error": "x"})
    store.write(tmp_path)
    summary = harness.report(tmp_path)
    assert summary["excluded_incomplete"] == {"C": ["d02"]}
    with open(tmp_path / "report" / "ranks_all.csv") as fh:
        assert next(csv.reader(fh)) == ["dataset", "A", "B"]


def test_report_marks_sections_not_computed(tmp_path):
    synthetic_store(1).write(tmp_path)
    summary = harness.report(tmp_path)
    assert summary["sections"]["all"]["status"] == "not computed"


# --- command line ---------------------------------------------------------------

def test_cli_validate(tmp_path, capsys):
    good = write_config(tmp_path, small_config(tmp_path))
    assert cli.main(["validate", str(good)]) == cli.EXIT_OK
    bad = small_config(tmp_path)
    bad["protocol"]["seeds"] = [1]
    assert cli.main(["validate", str(write_config(tmp_path, bad, "bad.json"))]) == cli.EXIT_CONFIG
    assert "seeds/repeats mismatch" in capsys.readouterr().err


def test_cli_run_report_and_resume(tmp_path, capsys):
    cfg = write_config(tmp_path, small_config(tmp_path))
    assert cli.main(["run", str(cfg), "-q", "--workers", "1"]) == cli.EXIT_OK
    run_dirs = list((tmp_path / "runs").iterdir())
    assert len(run_dirs) == 1 and run_dirs[0].name.startswith("tiny-")
    assert cli.main(["run", str(cfg), "-q", "--resume"]) == cli.EXIT_OK
    assert "20 records present" in capsys.readouterr().out
    assert len(list((tmp_path / "runs").iterdir())) == 1
    assert cli.main(["report", str(run_dirs[0]), "--alpha", "0.10"]) == cli.EXIT_OK
    assert (run_dirs[0] / "report" / "report.json").exists()


def test_cli_partial_failure_exit_code(tmp_path, monkeypatch):
    cfg = write_config(tmp_path, small_config(tmp_path))

    def broken(*a, **kw):
        raise RuntimeError("nope")

    monkeypatch.setattr(harness, "train_stacking", broken)
    assert cli.main(["run", str(cfg), "-q", "--out", str(tmp_path / "o")]) == cli.EXIT_PARTIAL
    assert cli.main(["report", str(tmp_path / "missing")]) == cli.EXIT_FATAL


def test_cli_costgen(tmp_path):
    src = tmp_path / "c.csv"
    src.write_text("amount,y\n1000,1\n2000,0\n500,0\n")
    schema = tmp_path / "s.json"
    schema.write_text(json.dumps({
        "columns": {"amount": "feature_numeric", "y": "label"},
        "costgen": {"kind": "credit", "credit_line": "amount", "seed": 4},
    }))
    out = tmp_path / "with_costs.csv"
    assert cli.main(["costgen", str(schema), str(src), "-o", str(out)]) == cli.EXIT_OK
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert [float(r["c_fn"]) for r in rows] == [750.0, 1500.0, 375.0]
    assert all(float(r["c_tp"]) == 0 for r in rows)
