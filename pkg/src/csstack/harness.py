"""Experiment configuration, orchestration, results persistence and reports."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, _accel
from .costgen import gaussian_dataset
from .data import DataError, Dataset, fit_preprocessor, load_csv, load_schema, paired_plan
from .data import repeated_stratified_plan, subsample_partition
from .decision import decide
from .learners import ALGORITHMS, DEFAULT_PARAMS, LearnerSpec
from .metrics import EvalRecord, evaluate
from .stacking import (
    DEFAULT_INNER_FOLDS,
    DEFAULT_LEVEL0,
    SETUP_ALIASES,
    StackingSpec,
    derive_seed,
    fit_level0,
    predict_stacking,
    train_stacking,
)
from . import stats

log = logging.getLogger(__name__)

RESULTS_CSV = "results.csv"
FAILURES_CSV = "failures.csv"
METADATA_JSON = "metadata.json"
FAILURE_FIELDS = ("dataset", "classifier", "part", "repeat", "fold", "error")

DEFAULT_PROTOCOL = {
    "k": 2,
    "repeats": 5,
    "seeds": [0, 1, 2, 3, 4],
    "large_threshold": 100000,
    "parts": 5,
    "partition_seed": 0,
}
MODES = ("CS", "CiS")


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


# --------------------------------------------------------------------------
# Configuration
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DatasetEntry:
    name: str
    path: Path | None = None
    schema: Path | None = None
    test_path: Path | None = None
    costgen: dict | None = None
    synthetic: dict | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    datasets: tuple
    singles: tuple
    modes: tuple
    setups: tuple
    level1: tuple
    level0: tuple
    inner_folds: int
    protocol: dict
    hyperparameters: dict
    output_dir: Path
    alpha: tuple
    config_hash: str
    raw: dict = field(compare=False, default_factory=dict)

    def learner(self, algorithm: str) -> LearnerSpec:
        return LearnerSpec(algorithm, dict(self.hyperparameters.get(algorithm, {})))

    def classifier_ids(self) -> list[str]:
        ids = [single_id(a, m) for a in self.singles for m in self.modes]
        ids += [stacking_id(s, a) for s in self.setups for a in self.level1]
        return ids


def single_id(algorithm, mode):
    return f"{algorithm}-{mode}"


def stacking_id(alias, algorithm):
    return f"{alias}:{algorithm}"


def config_hash(raw: dict) -> str:
    return hashlib.sha256(json.dumps(raw, sort_keys=True).encode()).hexdigest()


def _check_algorithms(values, where, errors):
    if not isinstance(values, list):
        errors.append(f"{where}: expected a list of algorithms")
        return []
    bad = [v for v in values if v not in ALGORITHMS]
    if bad:
        errors.append(f"{where}: unknown algorithm(s) {bad}; valid: {', '.join(ALGORITHMS)}")
    return [v for v in values if v in ALGORITHMS]


def validate_config(source) -> tuple[ExperimentConfig | None, list[str]]:
    """Parse and check a JSON config, collecting every problem found.

    ``source`` is a path or an already-parsed dict (relative paths then
    resolve against the working directory).
    """
    errors: list[str] = []
    if isinstance(source, dict):
        raw, base = source, Path.cwd()
    else:
        path = Path(source)
        if not path.exists():
            return None, [f"$: config file not found: {path}"]
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            return None, [f"$: invalid JSON ({exc})"]
        base = path.resolve().parent
    if not isinstance(raw, dict):
        return None, ["$: config must be a JSON object"]

    def resolve(p):
        p = Path(p)
        return p if p.is_absolute() else base / p

    datasets = []
    entries = raw.get("datasets")
    if not isinstance(entries, list) or not entries:
        errors.append("$.datasets: need a non-empty list of datasets")
        entries = []
    seen = set()
    for i, e in enumerate(entries):
        where = f"$.datasets[{i}]"
        if not isinstance(e, dict):
            errors.append(f"{where}: expected an object")
            continue
        name = e.get("name")
        if not isinstance(name, str) or not name:
            errors.append(f"{where}.name: required string")
            name = f"dataset{i}"
        if name in seen:
            errors.append(f"{where}.name: duplicate dataset name {name!r}")
        seen.add(name)
        if "synthetic" in e:
            if not isinstance(e["synthetic"], dict):
                errors.append(f"{where}.synthetic: expected an object")
            datasets.append(DatasetEntry(name=name, synthetic=dict(e["synthetic"])))
            continue
        paths = {}
        for key in ("path", "schema", "test_path"):
            if key not in e:
                continue
            paths[key] = resolve(e[key])
            if not paths[key].exists():
                errors.append(f"{where}.{key}: file not found: {paths[key]}")
        for key in ("path", "schema"):
            if key not in e:
                errors.append(f"{where}.{key}: required")
        if "schema" in paths and paths["schema"].exists():
            try:
                load_schema(paths["schema"])
            except (DataError, json.JSONDecodeError) as exc:
                errors.append(f"{where}.schema: {exc}")
        costgen = e.get("costgen")
        if costgen is not None and not isinstance(costgen, dict):
            errors.append(f"{where}.costgen: expected an object")
        datasets.append(DatasetEntry(name=name, costgen=costgen, **paths))

    roster = raw.get("roster")
    if not isinstance(roster, dict):
        errors.append("$.roster: required object")
        roster = {}
    single = roster.get("single", {}) or {}
    singles = _check_algorithms(single.get("algorithms", []), "$.roster.single.algorithms", errors)
    modes = single.get("modes", ["CS"])
    if not isinstance(modes, list) or any(m not in MODES for m in modes):
        errors.append(f"$.roster.single.modes: each mode must be one of {MODES}")
        modes = [m for m in modes if m in MODES] if isinstance(modes, list) else []
    stack = roster.get("stacking", {}) or {}
    setups = stack.get("setups", [])
    if setups == "all":
        setups = list(SETUP_ALIASES)
    if not isinstance(setups, list):
        errors.append("$.roster.stacking.setups: expected a list or \"all\"")
        setups = []
    for j, s in enumerate(setups):
        if s not in SETUP_ALIASES:
            errors.append(
                f"$.roster.stacking.setups[{j}]: unknown setup alias {s!r}; "
                f"valid aliases: {', '.join(SETUP_ALIASES)}"
            )
    setups = [s for s in setups if s in SETUP_ALIASES]
    level1 = _check_algorithms(stack.get("level1", ["LR"] if setups else []), "$.roster.stacking.level1", errors)
    level0 = _check_algorithms(stack.get("level0", list(DEFAULT_LEVEL0)), "$.roster.stacking.level0", errors)
    if setups and not level0:
        errors.append("$.roster.stacking.level0: must not be empty")
    if setups and not level1:
        errors.append("$.roster.stacking.level1: must not be empty")
    inner_folds = stack.get("inner_folds", DEFAULT_INNER_FOLDS)
    if not isinstance(inner_folds, int) or inner_folds < 2:
        errors.append("$.roster.stacking.inner_folds: integer >= 2 required")
        inner_folds = DEFAULT_INNER_FOLDS
    if not (singles and modes) and not (setups and level1):
        errors.append("$.roster: roster is empty")

    protocol = {**DEFAULT_PROTOCOL, **(raw.get("protocol") or {})}
    if "protocol" in raw and "seeds" not in raw["protocol"]:
        protocol["seeds"] = list(range(protocol["repeats"]))
    for key in ("k", "repeats", "large_threshold", "parts"):
        if not isinstance(protocol[key], int) or protocol[key] < (1 if key == "repeats" else 2):
            errors.append(f"$.protocol.{key}: invalid value {protocol[key]!r}")
    seeds = protocol["seeds"]
    if not isinstance(seeds, list) or not all(isinstance(s, int) for s in seeds):
        errors.append("$.protocol.seeds: expected a list of integers")
    elif len(seeds) != protocol["repeats"]:
        errors.append(f"$.protocol.seeds: seeds/repeats mismatch ({len(seeds)} seeds, {protocol['repeats']} repeats)")

    hyper = raw.get("hyperparameters", {}) or {}
    if not isinstance(hyper, dict):
        errors.append("$.hyperparameters: expected an object")
        hyper = {}
    for alg, params in hyper.items():
        if alg not in ALGORITHMS:
            errors.append(f"$.hyperparameters.{alg}: unknown algorithm")
        elif not isinstance(params, dict) or set(params) - set(DEFAULT_PARAMS[alg]):
            errors.append(
                f"$.hyperparameters.{alg}: unknown parameter(s); valid: {sorted(DEFAULT_PARAMS[alg])}"
            )

    alpha = raw.get("alpha", [0.05, 0.10])
    alpha = alpha if isinstance(alpha, list) else [alpha]
    if any(round(float(a), 2) not in stats.Q_ALPHA for a in alpha):
        errors.append("$.alpha: supported levels are 0.05 and 0.10")

    if errors:
        return None, errors
    cfg = ExperimentConfig(
        name=str(raw.get("name", "experiment")),
        datasets=tuple(datasets),
        singles=tuple(singles),
        modes=tuple(modes),
        setups=tuple(setups),
        level1=tuple(level1),
        level0=tuple(level0),
        inner_folds=inner_folds,
        protocol=protocol,
        hyperparameters={k: dict(v) for k, v in hyper.items()},
        output_dir=resolve(raw.get("output_dir", "runs")),
        alpha=tuple(float(a) for a in alpha),
        config_hash=config_hash(raw),
        raw=raw,
    )
    return cfg, []


def load_config(source) -> ExperimentConfig:
    cfg, errors = validate_config(source)
    if errors:
        raise ConfigError(errors)
    return cfg


# --------------------------------------------------------------------------
# Results store
# --------------------------------------------------------------------------

class ResultsStore:
    """Append-only EvalRecords plus failure log and run metadata."""

    def __init__(self, records=(), failures=(), metadata=None):
        self.records: dict = {}
        self.failures: list = []
        self.metadata: dict = dict(metadata or {})
        for r in records:
            self.add(r)
        for f in failures:
            self.add_failure(f)

    def add(self, record: EvalRecord):
        if record.key in self.records:
            raise KeyError(f"duplicate result key {record.key}")
        self.records[record.key] = record

    def add_failure(self, failure: dict):
        self.failures.append({k: failure[k] for k in FAILURE_FIELDS})

    def completed(self) -> set:
        return set(self.records)

    def sorted_records(self) -> list:
        return [self.records[k] for k in sorted(self.records)]

    def write(self, directory):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        with open(directory / RESULTS_CSV, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=EvalRecord.FIELDS, lineterminator="\n")
            w.writeheader()
            for r in self.sorted_records():
                w.writerow(r.as_row())
        failures = sorted(self.failures, key=lambda f: tuple(str(f[k]) for k in FAILURE_FIELDS))
        with open(directory / FAILURES_CSV, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=FAILURE_FIELDS, lineterminator="\n")
            w.writeheader()
            w.writerows(failures)
        with open(directory / METADATA_JSON, "w", encoding="utf-8") as fh:
            json.dump(self.metadata, fh, indent=2, sort_keys=True, default=str)

    @classmethod
    def read(cls, directory) -> "ResultsStore":
        directory = Path(directory)
        records, failures, meta = [], [], {}
        with open(directory / RESULTS_CSV, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                records.append(EvalRecord(
                    dataset=row["dataset"],
                    classifier=row["classifier"],
                    part=int(row["part"]),
                    repeat=int(row["repeat"]),
                    fold=int(row["fold"]),
                    total_cost=float(row["total_cost"]),
                    savings=float(row["savings"]),
                    n_test=int(row["n_test"]),
                    nonconverged=row.get("nonconverged", "") or "",
                ))
        if (directory / FAILURES_CSV).exists():
            with open(directory / FAILURES_CSV, newline="", encoding="utf-8") as fh:
                failures = [
                    {**row, "part": int(row["part"]), "repeat": int(row["repeat"]), "fold": int(row["fold"])}
                    for row in csv.DictReader(fh)
                ]
        if (directory / METADATA_JSON).exists():
            with open(directory / METADATA_JSON, encoding="utf-8") as fh:
                meta = json.load(fh)
        return cls(records, failures, meta)


# --------------------------------------------------------------------------
# Running
# --------------------------------------------------------------------------

def load_entry(entry: DatasetEntry):
    """Return ``(dataset, test_dataset_or_None, info)`` for one config entry."""
    if entry.synthetic is not None:
        ds = gaussian_dataset(name=entry.name, **entry.synthetic)
        return ds, None, {"synthetic": entry.synthetic}
    schema = load_schema(entry.schema)
    if entry.costgen:
        schema = {**schema, "costgen": entry.costgen}
    ds = load_csv(entry.path, schema, name=entry.name)
    test = load_csv(entry.test_path, schema, name=entry.name) if entry.test_path else None
    return ds, test, {"costgen": schema.get("costgen")}


@dataclass
class Cell:
    """One (dataset part, repeat, fold) evaluation unit."""

    dataset: str
    part: int
    repeat: int
    fold: int
    train: Dataset
    test: Dataset
    classifiers: tuple
    seed: int


def _nonconverged_for(alg, stage):
    return alg if alg in stage.nonconverged else ""


def run_cell(cell: Cell, cfg: ExperimentConfig):
    """Train and evaluate every requested classifier on one train/test pair."""
    records, failures = [], []

    def fail(clf, exc):
        failures.append({
            "dataset": cell.dataset, "classifier": clf, "part": cell.part,
            "repeat": cell.repeat, "fold": cell.fold, "error": f"{type(exc).__name__}: {exc}",
        })

    try:
        pre = fit_preprocessor(cell.train.X, cell.train.y, cell.train.kinds, cell.train.columns)
        Xtr, Xte = pre.transform(cell.train.X), pre.transform(cell.test.X)
    except Exception as exc:  # noqa: BLE001 - isolate per cell
        for clf in cell.classifiers:
            fail(clf, exc)
        return records, failures
    ytr, ctr = cell.train.y, cell.train.costs
    yte, cte = cell.test.y, cell.test.costs

    def record(clf, decisions, nonconv=""):
        try:
            records.append(evaluate(cell.dataset, clf, cell.part, cell.repeat, cell.fold, yte, decisions, cte, nonconv))
        except Exception as exc:  # noqa: BLE001
            fail(clf, exc)

    stages = {}

    def stage_for(specs):
        key = tuple(specs)
        if key not in stages:
            try:
                stages[key] = fit_level0(specs, Xtr, ytr, ctr, cfg.inner_folds, cell.seed)
            except Exception as exc:  # noqa: BLE001
                stages[key] = exc
        if isinstance(stages[key], Exception):
            raise stages[key]
        return stages[key]

    level0 = tuple(cfg.learner(a) for a in cfg.level0)
    wanted = set(cell.classifiers)
    for alg in cfg.singles:
        ids = [single_id(alg, m) for m in cfg.modes if single_id(alg, m) in wanted]
        if not ids:
            continue
        try:
            if alg in cfg.level0 and cfg.setups:
                stage = stage_for(level0)
                j = stage.member(alg)
            else:
                stage = stage_for((cfg.learner(alg),))
                j = 0
            p = stage.deployed[j].predict_proba(Xte)
        except Exception as exc:  # noqa: BLE001
            for clf in ids:
                fail(clf, exc)
            continue
        for clf in ids:
            decisions = decide(p, cte) if clf.endswith("-CS") else (p > 0.5).astype(np.int64)
            record(clf, decisions, _nonconverged_for(alg, stage))

    for alias in cfg.setups:
        for alg in cfg.level1:
            clf = stacking_id(alias, alg)
            if clf not in wanted:
                continue
            try:
                stage = stage_for(level0)
                spec = StackingSpec.from_alias(
                    alias, level0=level0, level1=cfg.learner(alg), inner_folds=cfg.inner_folds
                )
                model = train_stacking(spec, Xtr, ytr, ctr, cell.seed, level0_stage=stage)
                decisions = predict_stacking(model, Xte, cte)
            except Exception as exc:  # noqa: BLE001
                fail(clf, exc)
                continue
            record(clf, decisions, ";".join(sorted(model.nonconverged)))
    return records, failures


def _run_cell_job(args):
    cell, cfg = args
    return run_cell(cell, cfg)


def plan_cells(cfg: ExperimentConfig, completed=frozenset()):
    """Yield cells still to run plus per-dataset info for the metadata."""
    cells, info, load_failures = [], {}, []
    all_ids = cfg.classifier_ids()
    proto = cfg.protocol
    for entry in cfg.datasets:
        try:
            ds, test, extra = load_entry(entry)
        except Exception as exc:  # noqa: BLE001 - abort this dataset only
            log.error("dataset %s failed to load: %s", entry.name, exc)
            load_failures.append({"dataset": entry.name, "error": f"{type(exc).__name__}: {exc}"})
            continue
        info[entry.name] = {
            "n_instances": ds.n_instances,
            "n_features": ds.X.shape[1],
            "prevalence": ds.prevalence,
            "mean_c_fp": float(ds.costs[:, 1].mean()),
            "mean_c_fn": float(ds.costs[:, 2].mean()),
            **extra,
        }
        if test is None and ds.n_instances > proto["large_threshold"]:
            parts = subsample_partition(ds, proto["parts"], proto["partition_seed"])
        else:
            parts = [ds]
        for p, part in enumerate(parts):
            try:
                if test is not None:
                    plan = paired_plan(part.y, test.y, proto["k"], proto["seeds"])
                else:
                    plan = repeated_stratified_plan(part.y, proto["k"], proto["seeds"])
            except DataError as exc:
                load_failures.append({"dataset": entry.name, "error": f"part {p}: {exc}"})
                continue
            for i, (tr, te) in enumerate(plan.pairs):
                repeat, fold = divmod(i, proto["k"])
                todo = tuple(
                    c for c in all_ids if (entry.name, c, p, repeat, fold) not in completed
                )
                if not todo:
                    continue
                cells.append(Cell(
                    dataset=entry.name,
                    part=p,
                    repeat=repeat,
                    fold=fold,
                    train=part.subset(tr),
                    test=(test if test is not None else part).subset(te),
                    classifiers=todo,
                    seed=derive_seed(proto["seeds"][repeat], fold, p),
                ))
    return cells, info, load_failures


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("CSSTACK_WORKERS", "1")))
    except ValueError:
        return 1


def run_experiment(cfg: ExperimentConfig, workers: int | None = None, store: ResultsStore | None = None,
                   progress=None) -> ResultsStore:
    """Run every pending (dataset, classifier, part, repeat, fold) cell."""
    store = store or ResultsStore()
    workers = workers or default_workers()
    started = time.time()
    cells, info, load_failures = plan_cells(cfg, store.completed())
    # failures from an earlier run are retried
    retry = {(c.dataset, c.part, c.repeat, c.fold) for c in cells}
    store.failures = [
        f for f in store.failures if (f["dataset"], f["part"], f["repeat"], f["fold"]) not in retry
    ]
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = pool.map(_run_cell_job, [(c, cfg) for c in cells])
            for n, (records, failures) in enumerate(outcomes, 1):
                _collect(store, records, failures)
                if progress:
                    progress(n, len(cells))
    else:
        for n, cell in enumerate(cells, 1):
            _collect(store, *run_cell(cell, cfg))
            if progress:
                progress(n, len(cells))
    nonconv = {}
    for r in store.records.values():
        if r.nonconverged:
            nonconv[r.classifier] = nonconv.get(r.classifier, 0) + 1
    store.metadata.update({
        "config_name": cfg.name,
        "config_hash": cfg.config_hash,
        "config": cfg.raw,
        "software_version": __version__,
        "kernel_backend": _accel.backend(),
        "datasets": info,
        "dataset_load_failures": load_failures,
        "n_records": len(store.records),
        "n_failures": len(store.failures),
        "nonconverged_cells": nonconv,
        "started": time.strftime("%Y-%m-%dT%H:%M:%S", time.localtime(started)),
        "elapsed_seconds": round(time.time() - started, 3),
    })
    return store


def _collect(store, records, failures):
    for r in records:
        store.add(r)
    for f in failures:
        store.add_failure(f)


def run_dir_for(cfg: ExperimentConfig, resume: bool = False) -> Path:
    prefix = f"{cfg.name}-{cfg.config_hash[:10]}"
    if resume and cfg.output_dir.exists():
        existing = sorted(p for p in cfg.output_dir.glob(prefix + "-*") if (p / RESULTS_CSV).exists())
        if existing:
            return existing[-1]
    return cfg.output_dir / f"{prefix}-{time.strftime('%Y%m%dT%H%M%S')}"


# --------------------------------------------------------------------------
# Reporting
# --------------------------------------------------------------------------

def aggregate(store: ResultsStore):
    """Per (dataset, classifier): mean total cost, mean savings, cell count."""
    acc = {}
    for r in store.sorted_records():
        a = acc.setdefault((r.dataset, r.classifier), [0.0, 0.0, 0])
        a[0] += r.total_cost
        a[1] += r.savings
        a[2] += 1
    return {k: (c / n, s / n, n) for k, (c, s, n) in acc.items()}


def _complete_classifiers(store, datasets, classifiers, agg):
    failed = {(f["dataset"], f["classifier"]) for f in store.failures}
    ok, dropped = [], {}
    for c in classifiers:
        missing = [d for d in datasets if (d, c) not in agg or (d, c) in failed]
        if missing:
            dropped[c] = missing
        else:
            ok.append(c)
    return ok, dropped


def _groupings(classifiers):
    groups = {"all": list(classifiers)}
    by_l1 = {}
    for c in classifiers:
        if ":" in c:
            by_l1.setdefault(c.split(":", 1)[1], []).append(c)
    for alg, members in sorted(by_l1.items()):
        groups[f"stacking-{alg}"] = members
    return groups


def _write_matrix(path, row_labels, col_labels, cells, corner="dataset"):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([corner, *col_labels])
        for label, row in zip(row_labels, cells):
            w.writerow([label, *row])


def report(results_dir, alpha: float = 0.05, out_dir=None) -> dict:
    """Write tables, rank/test outputs and CD-diagram data for a results directory.

    Only ``results.csv`` and ``failures.csv`` are read, so every number is
    recomputable from them.
    """
    results_dir = Path(results_dir)
    out = Path(out_dir) if out_dir else results_dir / "report"
    out.mkdir(parents=True, exist_ok=True)
    store = ResultsStore.read(results_dir)
    agg = aggregate(store)
    datasets = sorted({d for d, _ in agg})
    classifiers = sorted({c for _, c in agg})
    summary = {"alpha": alpha, "datasets": datasets, "classifiers": classifiers, "sections": {}}

    sav = [[f"{agg[(d, c)][1]:.6f}" if (d, c) in agg else "" for c in classifiers] for d in datasets]
    cost = [[f"{agg[(d, c)][0]:.6f}" if (d, c) in agg else "" for c in classifiers] for d in datasets]
    _write_matrix(out / "savings.csv", datasets, classifiers, sav)
    _write_matrix(out / "mean_cost.csv", datasets, classifiers, cost)
    summary["sections"]["tables"] = {"status": "ok", "files": ["savings.csv", "mean_cost.csv"]}

    complete, dropped = _complete_classifiers(store, datasets, classifiers, agg)
    summary["excluded_incomplete"] = dropped
    for group, members in _groupings(complete).items():
        section = summary["sections"].setdefault(group, {})
        if len(members) < 2 or len(datasets) < 2:
            section.update(status="not computed", reason=(
                f"need >= 2 complete classifiers over >= 2 datasets "
                f"(have {len(members)} classifiers, {len(datasets)} datasets)"
            ))
            continue
        scores = np.array([[agg[(d, c)][0] for c in members] for d in datasets])
        table = stats.rank_table(scores, members, datasets)
        ranks_rows = [[f"{v:.4f}" for v in row] for row in table.ranks]
        ranks_rows.append([f"{v:.4f}" for v in table.mean_ranks])
        _write_matrix(out / f"ranks_{group}.csv", [*datasets, "mean_rank"], members, ranks_rows)
        fr = stats.friedman(table.ranks)
        section.update(status="ok", friedman={
            "statistic": fr.statistic, "p_value": fr.p_value, **fr.params,
        })
        try:
            cd = stats.nemenyi_cd(len(members), len(datasets), alpha)
            cd_data = stats.cd_diagram_data(table.mean_ranks, cd, members)
            with open(out / f"cd_{group}.json", "w", encoding="utf-8") as fh:
                json.dump(cd_data, fh, indent=2)
            section["cd"] = cd
        except stats.StatsError as exc:
            section["cd"] = f"not computed: {exc}"
        cells, long_rows = [], []
        for a in members:
            row = []
            for b in members:
                if a == b:
                    row.append("-")
                    continue
                try:
                    t = stats.wilcoxon_signed_rank(scores[:, members.index(a)], scores[:, members.index(b)])
                    row.append(t.cell())
                    long_rows.append([a, b, repr(t.statistic), repr(t.p_value), t.method])
                except stats.StatsError as exc:
                    row.append("n/a")
                    long_rows.append([a, b, "", "", f"not computed: {exc}"])
            cells.append(row)
        _write_matrix(out / f"wilcoxon_{group}.csv", members, members, cells, corner="classifier")
        with open(out / f"wilcoxon_{group}_long.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["a", "b", "statistic", "p_value", "method"])
            w.writerows(long_rows)

    with open(out / "report.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, default=float)
    return summary
