from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

GRANULARITIES = ("single-column", "single-table", "multi-table")


@dataclass
class MetricResult:
    """Outcome of one fidelity metric on one target.

    Exactly one of ``p_value`` (statistical tests) or ``ci`` (bootstrap
    interval for distances) is set; ``separable`` follows from it.
    """

    name: str
    granularity: str
    table: str | None
    column: str | None
    value: float
    alpha: float = 0.05
    p_value: float | None = None
    ci: tuple[float, float] | None = None
    details: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.granularity not in GRANULARITIES:
            raise ValueError(f"unknown granularity {self.granularity!r}")
        if (self.p_value is None) == (self.ci is None):
            raise ValueError("exactly one of p_value or ci must be set")

    @property
    def separable(self) -> bool:
        if self.p_value is not None:
            return bool(self.p_value < self.alpha)
        low, high = self.ci
        return bool(self.value < low or self.value > high)

    def to_dict(self) -> dict[str, Any]:
        return {
            "metric": self.name,
            "granularity": self.granularity,
            "target": {"table": self.table, "column": self.column},
            "value": _finite(self.value),
            "p_value": _finite(self.p_value),
            "ci": None if self.ci is None else [_finite(self.ci[0]), _finite(self.ci[1])],
            "separable": self.separable,
            "alpha": self.alpha,
            "details": self.details,
        }


def _finite(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None
