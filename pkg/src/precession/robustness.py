"""Coarse-grained score assignment for finite measurement resolution.

Outcomes are binned by endpoints a_n (half-open bins a_n <= x < a_{n+1}).
Bins from the one containing zero up to the n_hat-th score 1/2, later bins
score 1 and earlier bins score 0. The classical adversary can then still
reach at most the sharp classical bound 2/3 on the interior region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _backend
from ._backend import njit
from .angles import TWO_PI, ProbingAngles, classical_max_score
from .linalg import ValidationError


@dataclass(frozen=True)
class BinningScheme:
    """Bin endpoints with the zero bin and the half-score band located.

    ``endpoints`` is empty for the degenerate (infinitely fine) scheme, which
    reproduces the sharp step with value 1/2 at zero.
    """

    endpoints: tuple[float, ...]
    zero_bin: int  # position i with endpoints[i] <= 0 < endpoints[i+1]
    n_hat: int

    @property
    def degenerate(self) -> bool:
        return not self.endpoints

    @property
    def zero_width(self) -> float:
        e, i = self.endpoints, self.zero_bin
        return e[i + 1] - e[i]

    @property
    def reach(self) -> float:
        """Largest r for which r cos(.) stays inside the endpoint window."""
        return min(-self.endpoints[0], self.endpoints[-1])

    @classmethod
    def sharp(cls) -> "BinningScheme":
        return cls((), 0, 0)

    def to_json(self) -> list[float]:
        return list(self.endpoints)


@dataclass
class SearchConfig:
    phi_points: int = 10_000
    r_points: int = 200
    r_max_factor: float = 1e3
    r_min_factor: float = 1e-3
    eps: float = 1e-9


def validate_scheme(endpoints: Sequence[float]) -> BinningScheme:
    a = [float(x) for x in endpoints]
    if len(a) < 3:
        raise ValidationError("need at least 3 endpoints")
    if not all(math.isfinite(x) for x in a):
        raise ValidationError("endpoints must be finite")
    if any(b <= c for c, b in zip(a, a[1:])):
        raise ValidationError("endpoints must be strictly increasing")
    zero = next((i for i in range(len(a) - 1) if a[i] <= 0.0 < a[i + 1]), None)
    if zero is None:
        raise ValidationError("no bin contains 0")
    a0, a1 = a[zero], a[zero + 1]
    # smallest n_hat with a_{n_hat+1} - a_1 >= a_1 - a_0; equality admits uniform bins with n_hat = 1
    for n_hat in range(1, len(a) - zero - 1):
        if a[zero + n_hat + 1] - a1 >= (a1 - a0) * (1 - 1e-12):
            return BinningScheme(tuple(a), zero, n_hat)
    raise ValidationError("no bin index satisfies the width condition inside the window")


def uniform_scheme(width: float, offset: float, count: int) -> BinningScheme:
    """Bins of equal width with the zero bin [-offset, width - offset)."""
    if not 0 <= offset < width:
        raise ValidationError("offset must lie in [0, width)")
    base = -offset + width * np.arange(-count, count + 1)
    return validate_scheme(base)


def _half_score(x: float, scheme: BinningScheme) -> int:
    if scheme.degenerate:
        return 2 if x > 0 else (1 if x == 0 else 0)
    e = scheme.endpoints
    if not e[0] <= x < e[-1]:
        raise ValidationError(f"value {x} outside the binning window [{e[0]}, {e[-1]})")
    pos = int(np.searchsorted(np.asarray(e), x, side="right")) - 1
    n = pos - scheme.zero_bin
    return 2 if n > scheme.n_hat else (1 if n >= 0 else 0)


def coarse_theta(value: float, scheme: BinningScheme) -> Fraction:
    return Fraction(_half_score(float(value), scheme), 2)


@njit
def _coarse_max_numba(thetas, phis, rs, edges, zero_bin, n_hat):
    best = -1
    best_i = 0
    best_j = 0
    K = thetas.shape[0]
    for j in range(rs.shape[0]):
        for i in range(phis.shape[0]):
            s = 0
            for k in range(K):
                x = rs[j] * math.cos(thetas[k] - phis[i])
                pos = np.searchsorted(edges, x, side="right") - 1
                n = pos - zero_bin
                if n > n_hat:
                    s += 2
                elif n >= 0:
                    s += 1
            if s > best:
                best = s
                best_i = i
                best_j = j
    return best, best_i, best_j


def _coarse_max_numpy(thetas, phis, rs, edges, zero_bin, n_hat):
    best, bi, bj = -1, 0, 0
    c = np.cos(thetas[None, :] - phis[:, None])
    for j, r in enumerate(rs):
        pos = np.searchsorted(edges, r * c, side="right") - 1
        n = pos - zero_bin
        s = np.where(n > n_hat, 2, np.where(n >= 0, 1, 0)).sum(axis=1)
        i = int(np.argmax(s))
        if s[i] > best:
            best, bi, bj = int(s[i]), i, j
    return best, bi, bj


def _search_phis(angles: ProbingAngles, cfg: SearchConfig) -> np.ndarray:
    t = angles.as_array()
    dense = np.linspace(0.0, TWO_PI, cfg.phi_points, endpoint=False)
    edges = np.concatenate([t + math.pi / 2, t - math.pi / 2])
    return np.concatenate([dense, edges, edges + cfg.eps, edges - cfg.eps]) % TWO_PI


@dataclass(frozen=True)
class CoarseResult:
    score: Fraction
    r: float
    phi: float


def classical_coarse_search(angles: ProbingAngles, scheme: BinningScheme,
                            cfg: SearchConfig | None = None) -> CoarseResult:
    """Adversarial maximum of the coarse score over an (r, phi) grid."""
    cfg = cfg or SearchConfig()
    if angles.K != 3 or classical_max_score(angles).delta != 1:
        raise ValidationError("angles must be a three-angle set in the interior region")
    phis = _search_phis(angles, cfg)
    t = angles.as_array()
    if scheme.degenerate:
        c = np.cos(t[None, :] - phis[:, None])
        s = np.where(c > 0, 2, np.where(c == 0, 1, 0)).sum(axis=1)
        i = int(np.argmax(s))
        return CoarseResult(Fraction(int(s[i]), 6), 1.0, float(phis[i]))
    w0 = scheme.zero_width
    r_hi = min(cfg.r_max_factor * w0, scheme.reach * (1 - 1e-12))
    r_lo = min(cfg.r_min_factor * w0, r_hi)
    rs = np.geomspace(r_lo, r_hi, cfg.r_points)
    edges = np.asarray(scheme.endpoints, dtype=float)
    args = (t, phis, rs, edges, scheme.zero_bin, scheme.n_hat)
    if _backend.USE_JIT:
        best, i, j = _coarse_max_numba(*args)
    else:
        best, i, j = _coarse_max_numpy(*args)
    return CoarseResult(Fraction(int(best), 6), float(rs[j]), float(phis[i]))


def classical_coarse_max(angles: ProbingAngles, scheme: BinningScheme,
                         cfg: SearchConfig | None = None) -> Fraction:
    return classical_coarse_search(angles, scheme, cfg).score


def random_scheme(rng: np.random.Generator, bins_per_side: int = 400) -> BinningScheme:
    """Random non-uniform bins around a randomly placed zero bin."""
    widths = rng.uniform(0.05, 2.0, size=2 * bins_per_side + 1)
    edges = np.concatenate([[0.0], np.cumsum(widths)])
    zero = edges[bins_per_side] + rng.uniform(0, widths[bins_per_side])
    return validate_scheme(edges - zero)


__all__ = [
    "BinningScheme",
    "SearchConfig",
    "CoarseResult",
    "validate_scheme",
    "uniform_scheme",
    "coarse_theta",
    "classical_coarse_search",
    "classical_coarse_max",
    "random_scheme",
]
