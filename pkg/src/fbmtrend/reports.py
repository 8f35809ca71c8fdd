"""Common result record for the hypothesis tests."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

__all__ = ["TestReport"]


@dataclass(frozen=True)
class TestReport:
    """Outcome of one hypothesis test.

    Exactly one of p_value / acceptance_region is set: rank-based tests
    carry an empirical p-value, the Brownian-motion test carries a quantile
    interval.  decision is "accept", "warning" or "reject".
    """

    test_name: str
    statistic: float
    decision: str
    alpha: float
    p_value: float | None = None
    acceptance_region: tuple[float, float] | None = None
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if (self.p_value is None) == (self.acceptance_region is None):
            raise ValueError("exactly one of p_value / acceptance_region is required")
        if self.p_value is not None and not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p_value out of [0,1]: {self.p_value}")
        if self.decision not in ("accept", "warning", "reject"):
            raise ValueError(f"unknown decision {self.decision!r}")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "test": self.test_name,
            "statistic": self.statistic,
            "decision": self.decision,
            "alpha": self.alpha,
            "metadata": dict(self.metadata),
        }
        if self.p_value is not None:
            out["p_value"] = self.p_value
        if self.acceptance_region is not None:
            out["region"] = list(self.acceptance_region)
        return out
