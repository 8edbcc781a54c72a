"""Two-sample statistical tests: Kolmogorov-Smirnov, chi-squared homogeneity and
cardinality shape similarity."""

from __future__ import annotations

import math

import numpy as np
import pandas as pd
from scipy.special import gammaincc

from ..aggregation import child_row_counts
from ..relational import Database, Relationship
from .results import MetricResult

MISSING = "⟂missing"
KS_TERMS = 30
KS_SMALL_SAMPLE = 25


def _numeric(sample) -> np.ndarray:
    x = np.asarray(sample, dtype=np.float64).ravel()
    x = x[~np.isnan(x)]
    if len(x) == 0:
        raise ValueError("empty sample after null removal")
    return x


def ecdf_distance(a: np.ndarray, b: np.ndarray) -> float:
    """sup |F_a - F_b| evaluated at every observed point."""
    a = np.sort(a)
    b = np.sort(b)
    points = np.concatenate([a, b])
    n, m = len(a), len(b)
    # integer numerators so the single division is correctly rounded
    ca = np.searchsorted(a, points, side="right").astype(np.int64)
    cb = np.searchsorted(b, points, side="right").astype(np.int64)
    return int(np.max(np.abs(ca * m - cb * n))) / (n * m)


def kolmogorov_sf(lam: float) -> float:
    """P(K > lam) for the Kolmogorov limiting distribution.

    Uses the alternating series ``2 sum (-1)^(j-1) exp(-2 j^2 lam^2)`` for
    ``lam >= 1.18`` and the Jacobi theta form of the CDF below that, where the
    alternating series converges too slowly. Both are truncated at 30 terms.
    """
    if lam <= 0:
        return 1.0
    j = np.arange(1, KS_TERMS + 1, dtype=np.float64)
    if lam < 1.18:
        odd = 2 * j - 1
        cdf = math.sqrt(2 * math.pi) / lam * float(np.sum(np.exp(-(odd**2) * math.pi**2 / (8 * lam**2))))
        return float(min(1.0, max(0.0, 1.0 - cdf)))
    terms = (-1.0) ** (j - 1) * np.exp(-2.0 * j**2 * lam**2)
    return float(min(1.0, max(0.0, 2.0 * terms.sum())))


def ks_two_sample(a, b) -> tuple[float, float]:
    """KS statistic D and asymptotic p-value (effective size nm/(n+m))."""
    a, b = _numeric(a), _numeric(b)
    d = ecdf_distance(a, b)
    n, m = len(a), len(b)
    return d, kolmogorov_sf(math.sqrt(n * m / (n + m)) * d)


def _categories(sample) -> pd.Series:
    s = pd.Series(sample, dtype=object)
    return s.where(s.notna(), MISSING).map(str)


def chi2_two_sample(a, b) -> tuple[float, float]:
    """Chi-squared homogeneity test on the 2 x k table over the union of categories.

    Nulls count as the category ``⟂missing``.
    """
    sa, sb = _categories(a), _categories(b)
    if len(sa) == 0 or len(sb) == 0:
        raise ValueError("empty sample")
    table = pd.concat([sa.value_counts(), sb.value_counts()], axis=1).fillna(0.0).to_numpy(dtype=np.float64).T
    table = table[:, table.sum(axis=0) > 0]
    k = table.shape[1]
    if k < 2:
        raise ValueError("chi-squared test needs at least two categories in the union")
    expected = table.sum(axis=1, keepdims=True) * table.sum(axis=0, keepdims=True) / table.sum()
    stat = float(np.sum((table - expected) ** 2 / expected))
    return stat, float(gammaincc((k - 1) / 2.0, stat / 2.0))


def cardinality_shape_similarity(
    db_real: Database, db_syn: Database, relationship, alpha: float = 0.05
) -> MetricResult:
    """KS test between real and synthetic child-row counts per parent row."""
    rel = relationship if isinstance(relationship, Relationship) else Relationship(*relationship)
    real_counts = child_row_counts(db_real, rel)
    syn_counts = child_row_counts(db_syn, rel)
    d, p = ks_two_sample(real_counts, syn_counts)
    details = {"relationship": str(rel)}
    if min(len(real_counts), len(syn_counts)) < KS_SMALL_SAMPLE:
        details["note"] = "asymptotic p-value with fewer than 25 rows on one side"
    return MetricResult(
        "cardinality_shape_similarity", "multi-table", rel.child, rel.column, d, alpha, p_value=p, details=details
    )
