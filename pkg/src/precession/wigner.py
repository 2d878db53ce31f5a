"""Conversions between protocol scores and Wigner wedge-integral bounds."""

from __future__ import annotations

from dataclasses import dataclass

from .linalg import ValidationError

P3_CLASSICAL = 2 / 3
SINGLE_WEDGE = 0.655940
DOUBLE_WEDGE = 0.736824
LEGACY_TRIPLE_WEDGE = 0.967820


@dataclass(frozen=True)
class WedgeBound:
    kind: str  # "single", "double", "triple", "k_wedge"
    value: float
    source: str

    def __post_init__(self):
        if self.kind not in ("single", "double", "triple", "k_wedge"):
            raise ValidationError(f"unknown wedge kind {self.kind!r}")
        if self.value < 0:
            raise ValidationError("wedge bound must be non-negative")


def score_to_wedge_deviation(p: float) -> float:
    """|p - 1/2| / (2 (P_c - 1/2)), which is 3|p - 1/2|."""
    return abs(p - 0.5) / (2 * (P3_CLASSICAL - 0.5))


def wedge_deviation_to_score(d: float) -> float:
    """Inverse on p >= 1/2."""
    if d < 0:
        raise ValidationError("deviation must be non-negative")
    return 0.5 + 2 * (P3_CLASSICAL - 0.5) * d


def triple_wedge_bounds(lower_p: float, upper_p: float) -> tuple[float, float]:
    if not 0.5 <= lower_p <= upper_p:
        raise ValidationError(f"need 1/2 <= lower <= upper, got {lower_p}, {upper_p}")
    return score_to_wedge_deviation(lower_p), score_to_wedge_deviation(upper_p)


def negativity_volume_lower_bound(p: float) -> float:
    return max(0.0, 3 * p - 2)


def published_wedge_constants() -> tuple[float, float]:
    return SINGLE_WEDGE, DOUBLE_WEDGE


def k_wedge_bound(K: int, p_upper: float) -> float:
    """K (P_K upper - 1/2) for the equally spaced K-wedge."""
    if K < 3 or K % 2 == 0:
        raise ValidationError(f"K must be odd and >= 3, got {K}")
    if p_upper < 0.5:
        raise ValidationError("upper score bound must be >= 1/2")
    return K * (p_upper - 0.5)


__all__ = [
    "WedgeBound",
    "score_to_wedge_deviation",
    "wedge_deviation_to_score",
    "triple_wedge_bounds",
    "negativity_volume_lower_bound",
    "published_wedge_constants",
    "k_wedge_bound",
]
