"""Rank agreement between two score vectors."""

from __future__ import annotations

import numpy as np
from scipy.stats import kendalltau, rankdata, weightedtau

RANK_KINDS = ("spearman", "kendall", "weighted_kendall")


def hyperbolic_weight(r):
    return 1.0 / (1.0 + r)


def rank_correlation(kind: str, a, b, weigher=hyperbolic_weight) -> float | None:
    """Spearman, Kendall tau-b or additive weighted Kendall tau of ``a`` vs ``b``.

    Returns ``None`` (undefined) when either vector is constant. For the
    weighted variant, pair ``(i, j)`` weighs ``weigher(r_i) + weigher(r_j)``
    where ``r`` is the zero-based position in ``a`` sorted descending, so
    disagreements among the top of ``a`` cost the most.
    """
    if kind not in RANK_KINDS:
        raise ValueError(f"unknown rank correlation {kind!r}")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("score vectors must be 1-D and of equal length")
    if len(a) < 2:
        raise ValueError("need at least two scores")
    if np.all(a == a[0]) or np.all(b == b[0]):
        return None
    if kind == "spearman":
        ra, rb = rankdata(a), rankdata(b)
        value = np.corrcoef(ra, rb)[0, 1]
    elif kind == "kendall":
        value = kendalltau(a, b, variant="b").statistic
    else:
        order = rankdata(-a, method="ordinal").astype(np.intp) - 1
        value = weightedtau(a, b, rank=order, weigher=weigher, additive=True).statistic
    return float(np.clip(value, -1.0, 1.0))


def rank_correlations(a, b) -> dict[str, float | None]:
    return {kind: rank_correlation(kind, a, b) for kind in RANK_KINDS}
