"""Distance-based fidelity metrics."""

from __future__ import annotations

import numpy as np
import pandas as pd

from ..aggregation import AggregatedTable
from ..learners.preprocessing import FeatureMatrix, TableEncoder
from ..relational import NUMERIC_TYPES, Table
from .statistical import MISSING, _numeric

CATEGORICAL_KINDS = ("total_variation", "hellinger", "jensen_shannon")
N_BINS = 50
MMD_MAX_ROWS = 1000

# support of each metric: (low, high)
SUPPORT = {
    "total_variation": (0.0, 1.0),
    "hellinger": (0.0, 1.0),
    "jensen_shannon": (0.0, 1.0),
    "wasserstein": (0.0, np.inf),
    "mmd": (0.0, np.inf),
    "pcd": (0.0, np.inf),
}


def frequencies(a, b) -> tuple[np.ndarray, np.ndarray]:
    """Empirical category frequencies of both samples over the union of categories."""
    sa = pd.Series(a, dtype=object)
    sb = pd.Series(b, dtype=object)
    if len(sa) == 0 or len(sb) == 0:
        raise ValueError("empty sample")
    sa = sa.where(sa.notna(), MISSING).map(str)
    sb = sb.where(sb.notna(), MISSING).map(str)
    counts = pd.concat([sa.value_counts(), sb.value_counts()], axis=1).fillna(0.0)
    counts = counts.sort_index()
    p = counts.iloc[:, 0].to_numpy(dtype=np.float64)
    q = counts.iloc[:, 1].to_numpy(dtype=np.float64)
    return p / p.sum(), q / q.sum()


def discretize(a, b, bins: int = N_BINS) -> tuple[np.ndarray, np.ndarray]:
    """Equal-width bin indices over the combined min-max range; nulls stay NaN."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    both = np.concatenate([a, b])
    finite = both[~np.isnan(both)]
    if len(finite) == 0:
        return a.copy(), b.copy()
    lo, hi = float(finite.min()), float(finite.max())
    width = (hi - lo) / bins

    def label(x):
        idx = np.zeros_like(x) if width == 0 else np.clip(np.floor((x - lo) / width), 0, bins - 1)
        return np.where(np.isnan(x), np.nan, idx)

    return label(a), label(b)


def categorical_distance(kind: str, a, b) -> float:
    p, q = frequencies(a, b)
    if kind == "total_variation":
        return float(0.5 * np.abs(p - q).sum())
    if kind == "hellinger":
        return float(np.sqrt(0.5 * np.sum((np.sqrt(p) - np.sqrt(q)) ** 2)))
    if kind == "jensen_shannon":
        m = 0.5 * (p + q)
        with np.errstate(divide="ignore", invalid="ignore"):
            kl_p = np.where(p > 0, p * np.log2(p / m), 0.0).sum()
            kl_q = np.where(q > 0, q * np.log2(q / m), 0.0).sum()
        js = max(0.0, 0.5 * (kl_p + kl_q))
        return float(min(1.0, np.sqrt(js)))
    raise ValueError(f"unknown categorical distance {kind!r}")


def wasserstein1(a, b) -> float:
    """1-D earth mover's distance, the integral of |F_a - F_b|."""
    a, b = np.sort(_numeric(a)), np.sort(_numeric(b))
    points = np.concatenate([a, b])
    points.sort(kind="mergesort")
    deltas = np.diff(points)
    fa = np.searchsorted(a, points[:-1], side="right") / len(a)
    fb = np.searchsorted(b, points[:-1], side="right") / len(b)
    return float(np.sum(np.abs(fa - fb) * deltas))


def _as_matrices(a, b) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(a, (Table, AggregatedTable)):
        enc = TableEncoder().fit([a, b])
        return enc.transform(a).values, enc.transform(b).values
    va = a.values if isinstance(a, FeatureMatrix) else np.asarray(a, dtype=np.float64)
    vb = b.values if isinstance(b, FeatureMatrix) else np.asarray(b, dtype=np.float64)
    if va.ndim == 1:
        va, vb = va[:, None], vb[:, None]
    return va, vb


def _sq_dists(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    nx = (x * x).sum(1)[:, None]
    ny = (y * y).sum(1)[None, :]
    d = nx + ny - 2.0 * x @ y.T
    # cancellation noise from the expansion; identical rows must be exactly 0 apart
    d[d <= 1e-12 * (nx + ny)] = 0.0
    return d


def median_bandwidth(pooled: np.ndarray) -> float:
    """Median of the pairwise Euclidean distances between distinct pooled rows.

    Falls back to the mean of the non-zero distances when more than half are
    zero; returns 0 only when every pooled point is identical.
    """
    d = np.sqrt(_sq_dists(pooled, pooled)[np.triu_indices(len(pooled), k=1)])
    if len(d) == 0:
        return 0.0
    med = float(np.median(d))
    if med > 0:
        return med
    nonzero = d[d > 0]
    return float(nonzero.mean()) if len(nonzero) else 0.0


def mmd(a, b, max_rows: int | None = MMD_MAX_ROWS, seed: int = 0) -> float:
    """Biased (V-statistic) MMD with an RBF kernel and median-heuristic bandwidth.

    Tables are encoded with a shared :class:`TableEncoder`. Each side is
    subsampled (seeded) to ``max_rows`` rows first. Returns ``sqrt(max(MMD^2, 0))``.
    """
    x, y = _as_matrices(a, b)
    if len(x) == 0 or len(y) == 0:
        raise ValueError("empty table")
    rng = np.random.default_rng(seed)
    if max_rows is not None:
        if len(x) > max_rows:
            x = x[np.sort(rng.choice(len(x), max_rows, replace=False))]
        if len(y) > max_rows:
            y = y[np.sort(rng.choice(len(y), max_rows, replace=False))]
    sigma = median_bandwidth(np.vstack([x, y]))
    if sigma == 0:
        return 0.0
    gamma = 1.0 / (2.0 * sigma**2)
    kxx = np.exp(-gamma * _sq_dists(x, x)).mean()
    kyy = np.exp(-gamma * _sq_dists(y, y)).mean()
    kxy = np.exp(-gamma * _sq_dists(x, y)).mean()
    return float(np.sqrt(max(kxx + kyy - 2.0 * kxy, 0.0)))


def numeric_columns(table) -> list[str]:
    t = table.table if isinstance(table, AggregatedTable) else table
    return [c.name for c in t.meta.columns if c.sem_type in NUMERIC_TYPES]


def correlation_matrix(frame: pd.DataFrame) -> tuple[np.ndarray, list[str]]:
    """Pairwise-complete Pearson correlations; constant columns correlate 0 with everything else."""
    corr = frame.astype(np.float64).corr(method="pearson", min_periods=2).to_numpy()
    constant = [c for c in frame.columns if frame[c].dropna().nunique() <= 1]
    corr = np.nan_to_num(corr, nan=0.0)
    np.fill_diagonal(corr, 1.0)
    return corr, constant


def pcd(a, b) -> float:
    """Frobenius norm of the difference of Pearson correlation matrices over shared numeric columns."""
    return pcd_details(a, b)[0]


def pcd_details(a, b) -> tuple[float, list[str]]:
    if isinstance(a, pd.DataFrame):
        fa, fb = a, b
        cols = [c for c in fa.columns if c in fb.columns]
    else:
        cols = [c for c in numeric_columns(a) if c in numeric_columns(b)]
        fa, fb = a.data, b.data
    if len(cols) < 2:
        raise ValueError("pairwise correlation difference needs at least two numeric columns")
    ca, const_a = correlation_matrix(fa[cols])
    cb, const_b = correlation_matrix(fb[cols])
    flagged = sorted(set(const_a) | set(const_b))
    return float(np.linalg.norm(ca - cb, "fro")), flagged
