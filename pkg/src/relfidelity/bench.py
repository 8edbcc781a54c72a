"""Benchmark orchestration: run metric suites over (dataset, method, replication) cells."""

from __future__ import annotations

import logging
import math
import platform
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .detection import (
    ROW_CAP,
    discriminative_detection,
    discriminative_detection_with_aggregation,
    parent_child_detection,
)
from .learners import DEFAULTS, LearnerSpec
from .metrics import (
    SUPPORT,
    BootstrapSpec,
    MetricResult,
    bootstrap_separability,
    cardinality_shape_similarity,
    categorical_distance,
    chi2_two_sample,
    discretize,
    ks_two_sample,
    mmd,
    pcd,
    wasserstein1,
)
from .metrics.distance import MMD_MAX_ROWS, N_BINS, numeric_columns
from .metrics.statistical import KS_SMALL_SAMPLE
from .relational import DISCRETE_TYPES, NUMERIC_TYPES, Database, load_database, validate
from .utility import holdout_split, task_from_config, tstr

logger = logging.getLogger(__name__)

REPORT_VERSION = "1.0"
SUITES = ("single-column", "single-table", "multi-table", "utility")
DEFAULT_SUITES = ("single-column", "single-table", "multi-table")
OMITTED_LEARNERS = "svm, gaussian naive bayes and mlp are not part of the utility panel"


@dataclass
class MethodEntry:
    name: str
    replications: list[Path | Database]


@dataclass
class DatasetEntry:
    name: str
    real: Path | Database
    metadata: Path | None = None
    methods: list[MethodEntry] = field(default_factory=list)
    utility: list[dict[str, Any]] = field(default_factory=list)


@dataclass
class BenchmarkConfig:
    datasets: list[DatasetEntry]
    suites: tuple[str, ...] = DEFAULT_SUITES
    alpha: float = 0.05
    seed: int = 0
    row_cap: int | None = ROW_CAP
    folds: int = 10
    bootstrap_replications: int = 1000
    detectors: tuple[str, ...] = ("logistic", "gbt")
    include_legacy_pc: bool = False
    n_jobs: int = 1

    def __post_init__(self):
        unknown = set(self.suites) - set(SUITES)
        if unknown:
            raise ValueError(f"unknown suite(s) {sorted(unknown)}")
        for d in self.datasets:
            for m in d.methods:
                if not m.replications:
                    raise ValueError(f"method {m.name!r} of dataset {d.name!r} has no replications")

    @classmethod
    def from_dict(cls, doc: dict[str, Any], base: Path | None = None) -> BenchmarkConfig:
        """Build from a JSON-like document; relative paths resolve against ``base``."""
        base = base or Path(".")

        def path(p) -> Path:
            p = Path(p)
            return p if p.is_absolute() else base / p

        datasets = []
        for d in doc["datasets"]:
            methods = [
                MethodEntry(m["name"], [path(r) for r in m["replications"]]) for m in d.get("methods", [])
            ]
            datasets.append(
                DatasetEntry(d["name"], path(d["data"]), path(d["metadata"]), methods, d.get("utility", []))
            )
        options = {k: doc[k] for k in ("alpha", "seed", "row_cap", "folds", "bootstrap_replications",
                                       "include_legacy_pc", "n_jobs") if k in doc}
        if "suites" in doc:
            options["suites"] = tuple(doc["suites"])
        if "detectors" in doc:
            options["detectors"] = tuple(doc["detectors"])
        return cls(datasets, **options)


# ---------------------------------------------------------------------------
# Row construction


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _metric_row(result: MetricResult) -> dict[str, Any]:
    return result.to_dict()


def _detection_row(metric: str, granularity: str, table: str, column: str | None, result) -> dict[str, Any]:
    d = result.to_dict()
    details = {k: d[k] for k in ("baseline", "p_value_lower", "auc", "legacy_ld_score", "copying_flag",
                                 "learner", "folds", "n_real", "n_syn", "columns", "caveat", "notes")}
    details["importances"] = None if d["importances"] is None else d["importances"][:20]
    return {
        "metric": metric,
        "granularity": granularity,
        "target": {"table": table, "column": column},
        "value": d["accuracy"],
        "p_value": d["p_value"],
        "ci": None,
        "separable": d["separable"],
        "alpha": d["alpha"],
        "details": details,
    }


def _skip_row(metric: str, granularity: str, table: str | None, column: str | None, reason: str, alpha: float):
    return {
        "metric": metric,
        "granularity": granularity,
        "target": {"table": table, "column": column},
        "value": None,
        "p_value": None,
        "ci": None,
        "separable": None,
        "alpha": alpha,
        "details": {"skipped": reason},
    }


# ---------------------------------------------------------------------------
# Suites


@dataclass
class _Job:
    metric: str
    granularity: str
    table: str | None
    column: str | None
    run: Callable[[], dict[str, Any]]


def _binned_distance(kind: str, numeric: bool):
    def metric(a, b):
        if numeric:
            a, b = discretize(a, b, N_BINS)
        return categorical_distance(kind, a, b)

    return metric


def _bootstrap_job(config, name, granularity, table, column, metric, real, syn, support_key):
    def run():
        spec = BootstrapSpec(
            config.bootstrap_replications, config.alpha, config.seed, SUPPORT[support_key], "minimize"
        )
        observed = metric(real, syn)
        return _metric_row(bootstrap_separability(metric, real, observed, spec, name, granularity, table, column))

    return _Job(name, granularity, table, column, run)


def _p_value_job(config, name, table, column, test, a, b):
    def run():
        stat, p = test(a, b)
        details = {}
        if name == "ks" and min(np.sum(~np.isnan(a)), np.sum(~np.isnan(b))) < KS_SMALL_SAMPLE:
            details["note"] = "asymptotic p-value with fewer than 25 rows on one side"
        return _metric_row(MetricResult(name, "single-column", table, column, stat, config.alpha, p, details=details))

    return _Job(name, "single-column", table, column, run)


def single_column_jobs(config: BenchmarkConfig, real: Database, syn: Database) -> list[_Job]:
    jobs: list[_Job] = []
    opts = {"alpha": config.alpha, "row_cap": config.row_cap}
    for t in real.schema.table_names:
        rt, st = real[t], syn[t]
        for col in rt.meta.attributes:
            a, b = rt.data[col.name], st.data[col.name]
            numeric = col.sem_type in NUMERIC_TYPES
            if numeric:
                av, bv = a.to_numpy(np.float64), b.to_numpy(np.float64)
                jobs.append(_p_value_job(config, "ks", t, col.name, ks_two_sample, av, bv))
                jobs.append(
                    _bootstrap_job(config, "wasserstein", "single-column", t, col.name,
                                   wasserstein1, av, bv, "wasserstein")
                )
            elif col.sem_type in DISCRETE_TYPES:
                jobs.append(_p_value_job(config, "chi2", t, col.name, chi2_two_sample, a.to_numpy(), b.to_numpy()))
            for kind in ("total_variation", "hellinger", "jensen_shannon"):
                av = a.to_numpy(np.float64) if numeric else a.to_numpy()
                bv = b.to_numpy(np.float64) if numeric else b.to_numpy()
                jobs.append(
                    _bootstrap_job(config, kind, "single-column", t, col.name,
                                   _binned_distance(kind, numeric), av, bv, kind)
                )
            for kind in config.detectors:
                def run(t=t, c=col.name, kind=kind):
                    r = discriminative_detection(real, syn, t, [c], LearnerSpec(kind), config.folds, config.seed,
                                                 **opts)
                    return _detection_row(f"dd_{kind}", "single-column", t, c, r)

                jobs.append(_Job(f"dd_{kind}", "single-column", t, col.name, run))
    return jobs


def single_table_jobs(config: BenchmarkConfig, real: Database, syn: Database) -> list[_Job]:
    jobs: list[_Job] = []
    opts = {"alpha": config.alpha, "row_cap": config.row_cap}
    for t in real.schema.table_names:
        attrs = [c.name for c in real[t].meta.attributes]
        if not attrs:
            reason = "table has no non-key columns"
            for m in ("mmd", "pcd", *(f"dd_{k}" for k in config.detectors)):
                jobs.append(_Job(m, "single-table", t, None,
                                 lambda m=m, t=t, r=reason: _skip_row(m, "single-table", t, None, r, config.alpha)))
            continue
        rt, st = real[t].select(attrs), syn[t].select(attrs)

        def mmd_metric(a, b):
            return mmd(a, b, MMD_MAX_ROWS, config.seed)

        jobs.append(_bootstrap_job(config, "mmd", "single-table", t, None, mmd_metric, rt, st, "mmd"))
        if len(numeric_columns(rt)) >= 2:
            jobs.append(_bootstrap_job(config, "pcd", "single-table", t, None, pcd, rt, st, "pcd"))
        else:
            jobs.append(_Job("pcd", "single-table", t, None, lambda t=t: _skip_row(
                "pcd", "single-table", t, None, "fewer than two numeric columns", config.alpha)))
        for kind in config.detectors:
            def run(t=t, kind=kind):
                r = discriminative_detection(real, syn, t, None, LearnerSpec(kind), config.folds, config.seed, **opts)
                return _detection_row(f"dd_{kind}", "single-table", t, None, r)

            jobs.append(_Job(f"dd_{kind}", "single-table", t, None, run))
    return jobs


def multi_table_jobs(config: BenchmarkConfig, real: Database, syn: Database) -> list[_Job]:
    jobs: list[_Job] = []
    opts = {"alpha": config.alpha, "row_cap": config.row_cap}
    for rel in real.schema.relationships():
        def card(rel=rel):
            return _metric_row(cardinality_shape_similarity(real, syn, rel, config.alpha))

        jobs.append(_Job("cardinality_shape_similarity", "multi-table", rel.child, rel.column, card))
    for t in real.schema.table_names:
        if not real.schema.children(t):
            continue
        for kind in config.detectors:
            def run(t=t, kind=kind):
                r = discriminative_detection_with_aggregation(real, syn, t, LearnerSpec(kind), config.folds,
                                                              config.seed, **opts)
                return _detection_row(f"dda_{kind}", "multi-table", t, None, r)

            jobs.append(_Job(f"dda_{kind}", "multi-table", t, None, run))
    if config.include_legacy_pc:
        for rel in real.schema.relationships():
            siblings = [r for r in real.schema.relationships() if (r.parent, r.child) == (rel.parent, rel.child)]
            for kind in config.detectors:
                metric = f"parent_child_{kind}"
                if len(siblings) > 1:
                    reason = "several foreign keys link these tables; denormalization is ambiguous"
                    jobs.append(_Job(metric, "multi-table", rel.child, rel.column,
                                     lambda m=metric, rel=rel, r=reason: _skip_row(
                                         m, "multi-table", rel.child, rel.column, r, config.alpha)))
                    continue

                def run(rel=rel, kind=kind, metric=metric):
                    r = parent_child_detection(real, syn, rel, LearnerSpec(kind), config.folds, config.seed, **opts)
                    return _detection_row(metric, "multi-table", rel.child, rel.column, r)

                jobs.append(_Job(metric, "multi-table", rel.child, rel.column, run))
    return jobs


def utility_jobs(config: BenchmarkConfig, real: Database, syn: Database, tasks: list[dict]) -> list[_Job]:
    jobs: list[_Job] = []
    for entry in tasks:
        def run(entry=entry):
            train, test = holdout_split(real, entry["target_table"], entry.get("test_fraction", 0.2),
                                        entry.get("split_seed", 0))
            task = task_from_config(entry, test)
            result = tstr(train, syn, task, seed=config.seed)
            return {
                "metric": "utility",
                "granularity": "multi-table",
                "target": {"table": task.target_table, "column": task.target_column},
                "value": None,
                "p_value": None,
                "ci": None,
                "separable": None,
                "alpha": config.alpha,
                "details": result.to_dict(),
            }

        jobs.append(_Job("utility", "multi-table", entry["target_table"], entry["target_column"], run))
    return jobs


def _safe(job: _Job, alpha: float) -> dict[str, Any]:
    try:
        return job.run()
    except Exception as exc:  # recorded, never fatal for the other cells
        logger.warning("%s on %s.%s failed: %s", job.metric, job.table, job.column, exc)
        return _skip_row(job.metric, job.granularity, job.table, job.column,
                         f"error: {type(exc).__name__}: {exc}", alpha)


def cell_jobs(config: BenchmarkConfig, real: Database, syn: Database, tasks: list[dict]) -> list[_Job]:
    jobs: list[_Job] = []
    if "single-column" in config.suites:
        jobs += single_column_jobs(config, real, syn)
    if "single-table" in config.suites:
        jobs += single_table_jobs(config, real, syn)
    if "multi-table" in config.suites:
        jobs += multi_table_jobs(config, real, syn)
    if "utility" in config.suites:
        jobs += utility_jobs(config, real, syn, tasks)
    return jobs


# ---------------------------------------------------------------------------
# Driver


def _load(source, metadata: Path | None, schema=None) -> Database:
    if isinstance(source, Database):
        return source
    source = Path(source)
    own = source / "metadata.json"
    if own.exists():
        return load_database(own, source)
    if metadata is None:
        raise ValueError(f"no metadata for {source}")
    return load_database(metadata, source, schema=schema)


def environment(config: BenchmarkConfig) -> dict[str, Any]:
    import numba
    import pandas
    import scipy

    return {
        "package": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "pandas": pandas.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
        "seed": config.seed,
        "alpha": config.alpha,
        "suites": list(config.suites),
        "folds": config.folds,
        "row_cap": config.row_cap,
        "bootstrap_replications": config.bootstrap_replications,
        "detectors": list(config.detectors),
        "learner_defaults": DEFAULTS,
        "include_legacy_pc": config.include_legacy_pc,
        "mmd": {"kernel": "rbf", "bandwidth": "median pairwise distance", "max_rows": MMD_MAX_ROWS},
        "binning": {"bins": N_BINS, "rule": "equal width over combined range"},
        "ks_p_value": "asymptotic Kolmogorov series, 30 terms",
        "utility_panel_note": OMITTED_LEARNERS,
    }


def run_benchmark(config: BenchmarkConfig) -> dict[str, Any]:
    """Evaluate every (dataset, method, replication) cell and collect one row per metric target."""
    results: list[dict[str, Any]] = []
    caps: list[str] = []
    for dataset in config.datasets:
        try:
            real = _load(dataset.real, dataset.metadata)
            report = validate(real)
            if not report.ok:
                raise ValueError("real database fails validation: " + "; ".join(map(str, report)))
        except Exception as exc:
            results.append(_cell_skip(dataset.name, None, None, f"real data: {exc}", config.alpha))
            continue
        for method in dataset.methods:
            for rep, source in enumerate(method.replications, start=1):
                try:
                    syn = _load(source, dataset.metadata, real.schema)
                    if syn.schema != real.schema:
                        raise ValueError("synthetic schema differs from the real schema")
                    report = validate(syn)
                    if not report.ok:
                        raise ValueError("synthetic database fails validation: " + "; ".join(map(str, report)))
                except Exception as exc:
                    results.append(_cell_skip(dataset.name, method.name, rep, str(exc), config.alpha))
                    continue
                jobs = cell_jobs(config, real, syn, dataset.utility)
                if config.n_jobs > 1:
                    with ThreadPoolExecutor(config.n_jobs) as pool:
                        rows = list(pool.map(lambda j: _safe(j, config.alpha), jobs))
                else:
                    rows = [_safe(j, config.alpha) for j in jobs]
                for row in rows:
                    for note in (row["details"] or {}).get("notes", []) or []:
                        if note.startswith("row cap") or note.startswith("categories capped"):
                            caps.append(f"{dataset.name}/{method.name}/{rep}/{row['metric']}: {note}")
                    results.append({"dataset": dataset.name, "method": method.name, "replication": rep, **row})
    env = environment(config)
    env["caps_triggered"] = caps
    return _clean({"version": REPORT_VERSION, "environment": env, "results": results})


def _cell_skip(dataset, method, rep, reason, alpha):
    row = _skip_row("load", "multi-table", None, None, reason, alpha)
    return {"dataset": dataset, "method": method, "replication": rep, **row}


# ---------------------------------------------------------------------------
# Aggregates over a report


def failure_counts(report: dict[str, Any]) -> dict[tuple[str, str, str], list[tuple[int, int]]]:
    """Separable targets out of evaluated targets, per (dataset, method, metric) and replication."""
    table: dict[tuple[str, str, str], dict[int, list[int]]] = {}
    for row in report["results"]:
        if row["separable"] is None or row["method"] is None:
            continue
        key = (row["dataset"], row["method"], row["metric"])
        per_rep = table.setdefault(key, {})
        counts = per_rep.setdefault(row["replication"], [0, 0])
        counts[0] += int(row["separable"])
        counts[1] += 1
    return {k: [tuple(v[r]) for r in sorted(v)] for k, v in sorted(table.items())}


def fidelity_utility_correlation(
    pairs, replications: int = 10_000, seed: int = 0, alpha: float = 0.05
) -> tuple[float, tuple[float, float]] | None:
    """Pearson correlation of (fidelity, utility) pairs with a bootstrap percentile CI.

    Returns ``None`` when the correlation is undefined (a constant coordinate).
    Resamples whose correlation is undefined are left out of the interval.
    """
    xy = np.asarray(pairs, dtype=np.float64)
    if xy.ndim != 2 or xy.shape[1] != 2 or len(xy) < 3:
        raise ValueError("need at least three (fidelity, utility) pairs")
    x, y = xy[:, 0], xy[:, 1]
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        return None
    rho = float(np.clip(np.corrcoef(x, y)[0, 1], -1.0, 1.0))
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(xy), (replications, len(xy)))
    bx, by = x[idx], y[idx]
    bx = bx - bx.mean(axis=1, keepdims=True)
    by = by - by.mean(axis=1, keepdims=True)
    denom = np.sqrt((bx * bx).sum(1) * (by * by).sum(1))
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(denom > 0, (bx * by).sum(1) / denom, np.nan)
    r = r[~np.isnan(r)]
    lo, hi = np.quantile(np.clip(r, -1, 1), [alpha / 2, 1 - alpha / 2])
    return rho, (float(lo), float(hi))
