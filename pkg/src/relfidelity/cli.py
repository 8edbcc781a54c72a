"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 validation failure, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .bench import SUITES, BenchmarkConfig, DatasetEntry, MethodEntry, run_benchmark
from .relational import DataError, SchemaError, load_database, validate
from .report import compare, read_report, render_comparison, render_summary, write_plot_data, write_report
from .utility import load_task_config

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _real_pair(value: str) -> tuple[Path, Path]:
    parts = value.split(",")
    if len(parts) != 2 or not all(parts):
        raise argparse.ArgumentTypeError("expected <metadata.json>,<data dir>")
    return Path(parts[0]), Path(parts[1])


def _synthetic(value: str) -> tuple[str | None, Path]:
    name, sep, path = value.partition("=")
    return (name, Path(path)) if sep else (None, Path(value))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="relfidelity", description="Fidelity and utility of synthetic relational data.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check keys and referential integrity")
    p.add_argument("metadata", type=Path)
    p.add_argument("data_dir", type=Path)

    p = sub.add_parser("evaluate", help="run metric suites and write a JSON report")
    p.add_argument("--config", type=Path, help="benchmark config JSON (replaces --real/--synthetic)")
    p.add_argument("--real", type=_real_pair, help="<metadata.json>,<data dir> of the original database")
    p.add_argument(
        "--synthetic",
        type=_synthetic,
        action="append",
        default=[],
        help="[method=]<dir> of synthetic CSVs; repeat for several methods",
    )
    p.add_argument("--name", help="dataset name in the report (default: real data dir name)")
    p.add_argument(
        "--replications",
        type=int,
        default=1,
        help="replications per method; with N > 1 each synthetic dir holds subdirs 1..N",
    )
    p.add_argument("--suite", choices=(*SUITES, "all"), action="append", help="repeatable; default all but utility")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--bootstrap-replications", type=int, default=1000)
    p.add_argument("--row-cap", type=int, default=50_000)
    p.add_argument("--detectors", default="logistic,gbt", help="comma list of learner kinds for DD/DDA")
    p.add_argument("--include-legacy-pc", action="store_true", help="add legacy parent-child detection")
    p.add_argument("--utility", type=Path, help="utility task config JSON")
    p.add_argument("--jobs", type=int, default=1, help="concurrent metric jobs per cell")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("summarize", help="print failed-test counts from a report")
    p.add_argument("report", type=Path)
    p.add_argument("--plots", type=Path, help="directory for per-metric plot data files")

    p = sub.add_parser("compare", help="diff two reports")
    p.add_argument("a", type=Path)
    p.add_argument("b", type=Path)
    return parser


def _replication_dirs(path: Path, n: int) -> list[Path]:
    if n < 1:
        raise UsageError("--replications must be at least 1")
    if n == 1 and not (path / "1").is_dir():
        return [path]
    dirs = [path / str(r) for r in range(1, n + 1)]
    missing = [d for d in dirs if not d.is_dir()]
    if missing:
        raise UsageError(f"missing replication directories: {', '.join(map(str, missing))}")
    return dirs


def _config_from_args(args) -> BenchmarkConfig:
    suites = args.suite or ["single-column", "single-table", "multi-table"]
    if "all" in suites:
        suites = list(SUITES)
    detectors = tuple(k.strip() for k in args.detectors.split(",") if k.strip())
    options = dict(
        suites=tuple(dict.fromkeys(suites)),
        alpha=args.alpha,
        seed=args.seed,
        row_cap=args.row_cap,
        folds=args.folds,
        bootstrap_replications=args.bootstrap_replications,
        detectors=detectors,
        include_legacy_pc=args.include_legacy_pc,
        n_jobs=args.jobs,
    )
    if args.config:
        # the file is authoritative; only suite selection, the legacy flag and jobs come from flags
        config = BenchmarkConfig.from_dict(json.loads(args.config.read_text()), args.config.parent)
        if args.suite:
            config.suites = options["suites"]
        config.include_legacy_pc = config.include_legacy_pc or args.include_legacy_pc
        config.n_jobs = args.jobs
        return config
    if args.real is None or not args.synthetic:
        raise UsageError("evaluate needs --real and at least one --synthetic (or --config)")
    metadata, data_dir = args.real
    tasks = load_task_config(args.utility) if args.utility else []
    if "utility" in suites and not tasks:
        raise UsageError("the utility suite needs --utility <config.json>")
    methods = []
    for i, (name, path) in enumerate(args.synthetic):
        methods.append(MethodEntry(name or path.name or f"method{i + 1}", _replication_dirs(path, args.replications)))
    if len({m.name for m in methods}) != len(methods):
        raise UsageError("synthetic method names must be distinct; use name=<dir>")
    dataset = DatasetEntry(args.name or data_dir.resolve().name, data_dir, metadata, methods, tasks)
    return BenchmarkConfig([dataset], **options)


def _validate(args) -> int:
    try:
        db = load_database(args.metadata, args.data_dir)
    except (DataError, SchemaError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    report = validate(db)
    for table in db:
        print(f"{table.name}: {table.row_count} rows")
    if report.ok:
        print("ok")
        return EXIT_OK
    for v in report:
        print(v)
    return EXIT_INVALID


def _evaluate(args) -> int:
    config = _config_from_args(args)
    report = run_benchmark(config)
    load_failures = [r for r in report["results"] if r["metric"] == "load"]
    write_report(report, args.out)
    for r in load_failures:
        print(f"skipped {r['dataset']}/{r['method']}/{r['replication']}: {r['details']['skipped']}", file=sys.stderr)
    if load_failures and len(load_failures) == len(report["results"]):
        return EXIT_INVALID
    print(render_summary(report), end="")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "validate":
            return _validate(args)
        if args.command == "evaluate":
            return _evaluate(args)
        if args.command == "summarize":
            report = read_report(args.report)
            print(render_summary(report), end="")
            if args.plots:
                for path in write_plot_data(report, args.plots):
                    print(f"wrote {path}")
            return EXIT_OK
        diff = compare(read_report(args.a), read_report(args.b))
        print(render_comparison(diff), end="")
        return EXIT_OK
    except UsageError as exc:
        print(f"relfidelity: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, SchemaError) as exc:
        print(f"relfidelity: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:
        print(f"relfidelity: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
