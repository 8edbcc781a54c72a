"""Bootstrap confidence intervals for distance metrics on the original data."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np
import pandas as pd

from ..aggregation import AggregatedTable
from ..relational import Table
from .results import MetricResult


class BootstrapError(RuntimeError):
    def __init__(self, replicate: int, cause: Exception):
        super().__init__(f"metric failed on bootstrap replicate {replicate}: {cause}")
        self.replicate = replicate
        self.cause = cause


@dataclass(frozen=True)
class BootstrapSpec:
    replications: int = 1000
    alpha: float = 0.05
    seed: int = 0
    support: tuple[float, float] = (0.0, float("inf"))
    goal: str = "minimize"
    n_jobs: int = 1

    def __post_init__(self):
        if self.replications < 100:
            raise ValueError("bootstrap needs at least 100 replications")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must be in (0, 1)")
        if self.goal not in ("minimize", "maximize"):
            raise ValueError("goal must be 'minimize' or 'maximize'")


def _n_rows(data) -> int:
    if isinstance(data, (Table, AggregatedTable, pd.DataFrame, pd.Series)):
        return len(data)
    return np.asarray(data).shape[0]


def resample(data, rows: np.ndarray):
    """Rows of ``data`` by position, for tables, frames, series and arrays alike."""
    if isinstance(data, AggregatedTable):
        return AggregatedTable(data.table.take(rows), dict(data.provenance))
    if isinstance(data, Table):
        return data.take(rows)
    if isinstance(data, (pd.DataFrame, pd.Series)):
        return data.iloc[rows].reset_index(drop=True)
    return np.asarray(data)[rows]


def replicate_values(metric: Callable[[Any, Any], float], real, spec: BootstrapSpec) -> np.ndarray:
    """Metric between two independent same-size resamples of ``real``, per replicate.

    Replicate ``r`` draws from its own generator seeded by ``(spec.seed, r)``, so
    values do not depend on execution order or worker count.
    """
    n = _n_rows(real)
    if n == 0:
        raise ValueError("cannot bootstrap an empty sample")

    def one(r: int) -> float:
        rng = np.random.default_rng([spec.seed, r])
        a = resample(real, rng.integers(0, n, n))
        b = resample(real, rng.integers(0, n, n))
        try:
            return float(metric(a, b))
        except Exception as exc:
            raise BootstrapError(r, exc) from exc

    if spec.n_jobs <= 1:
        values = [one(r) for r in range(spec.replications)]
    else:
        with ThreadPoolExecutor(spec.n_jobs) as pool:
            values = list(pool.map(one, range(spec.replications)))
    return np.asarray(values)


def bootstrap_ci(values: np.ndarray, spec: BootstrapSpec) -> tuple[float, float]:
    low, high = np.quantile(values, [spec.alpha / 2, 1 - spec.alpha / 2])
    lo_s, hi_s = spec.support
    return float(np.clip(low, lo_s, hi_s)), float(np.clip(high, lo_s, hi_s))


def bootstrap_separability(
    metric: Callable[[Any, Any], float],
    real,
    observed_value: float,
    spec: BootstrapSpec,
    name: str = "metric",
    granularity: str = "single-column",
    table: str | None = None,
    column: str | None = None,
) -> MetricResult:
    """Separable when ``observed_value`` falls outside the bootstrap CI of the metric on real data."""
    values = replicate_values(metric, real, spec)
    ci = bootstrap_ci(values, spec)
    details = {
        "replications": spec.replications,
        "support": [spec.support[0], None if np.isinf(spec.support[1]) else spec.support[1]],
        "goal": spec.goal,
        "bootstrap_mean": float(values.mean()),
    }
    return MetricResult(name, granularity, table, column, float(observed_value), spec.alpha, ci=ci, details=details)
