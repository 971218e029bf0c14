"""Command line: ``csstack validate|run|report|costgen``.

Exit codes: 0 success, 1 config error, 2 partial failures recorded,
3 fatal error.
"""

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .harness import (
    ResultsStore,
    default_workers,
    report,
    run_dir_for,
    run_experiment,
    validate_config,
)

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL, EXIT_FATAL = 0, 1, 2, 3


def _validate(args):
    cfg, errors = validate_config(args.config)
    if errors:
        for e in errors:
            print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    n = len(cfg.classifier_ids())
    print(f"ok: {len(cfg.datasets)} dataset(s), {n} classifier(s), config hash {cfg.config_hash[:10]}")
    return EXIT_OK


def _run(args):
    cfg, errors = validate_config(args.config)
    if errors:
        for e in errors:
            print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out) if args.out else run_dir_for(cfg, resume=args.resume)
    store = ResultsStore.read(out) if args.resume and (out / "results.csv").exists() else None
    if store is not None:
        print(f"resuming {out} ({len(store.records)} records present)")

    def progress(done, total):
        if not args.quiet:
            print(f"\r{done}/{total} cells", end="", file=sys.stderr, flush=True)

    store = run_experiment(cfg, workers=args.workers, store=store, progress=progress)
    if not args.quiet:
        print(file=sys.stderr)
    store.write(out)
    print(f"{len(store.records)} records, {len(store.failures)} failures -> {out}")
    if store.metadata.get("dataset_load_failures") or store.failures:
        return EXIT_PARTIAL
    return EXIT_OK


def _report(args):
    summary = report(args.results_dir, alpha=args.alpha, out_dir=args.out)
    for name, section in summary["sections"].items():
        status = section.get("status")
        extra = f" ({section['reason']})" if "reason" in section else ""
        if "friedman" in section:
            fr = section["friedman"]
            extra = f" Friedman chi2={fr['statistic']:.3f} p={fr['p_value']:.4g}"
        print(f"{name}: {status}{extra}")
    for clf, missing in summary.get("excluded_incomplete", {}).items():
        print(f"notice: {clf} excluded from rankings (incomplete on {', '.join(missing)})")
    return EXIT_OK


def _costgen(args):
    from .data import COST_ROLES, load_csv, load_frame, load_schema

    schema = load_schema(args.schema)
    if not schema.get("costgen"):
        print("error: schema has no costgen directive", file=sys.stderr)
        return EXIT_CONFIG
    ds = load_csv(args.csv, schema)
    frame = load_frame(args.csv)
    for j, role in enumerate(COST_ROLES):
        frame[role] = [repr(float(v)) for v in ds.costs[:, j]]
    frame.to_csv(args.output, index=False, na_rep="NA")
    print(f"wrote {len(frame)} rows with generated costs to {args.output}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="csstack", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check an experiment config")
    v.add_argument("config")
    v.set_defaults(func=_validate)

    r = sub.add_parser("run", help="run an experiment")
    r.add_argument("config")
    r.add_argument("--workers", type=int, default=default_workers(),
                   help="parallel worker processes (default: $CSSTACK_WORKERS or 1)")
    r.add_argument("--resume", action="store_true", help="skip cells already in the latest run directory")
    r.add_argument("--out", help="explicit run directory")
    r.add_argument("-q", "--quiet", action="store_true")
    r.set_defaults(func=_run)

    rep = sub.add_parser("report", help="rank tables, tests and CD data from a run directory")
    rep.add_argument("results_dir")
    rep.add_argument("--alpha", type=float, default=0.05)
    rep.add_argument("--out", help="report directory (default: <results_dir>/report)")
    rep.set_defaults(func=_report)

    c = sub.add_parser("costgen", help="generate cost columns from a schema directive")
    c.add_argument("schema")
    c.add_argument("csv")
    c.add_argument("-o", "--output", required=True)
    c.set_defaults(func=_costgen)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - top-level guard maps to exit code 3
        print(f"fatal: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
