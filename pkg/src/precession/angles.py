"""Probing-angle vectors, their symmetries, and the classical maximum score."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import _backend
from ._backend import njit
from .linalg import ValidationError

TWO_PI = 2.0 * math.pi
GAP_TOL = 1e-12
# tolerance below which cos(theta - phi) is treated as an exact zero
ZERO_COS_TOL = 1e-12

_M = np.array([[1.0, -0.5], [0.0, math.sqrt(3.0) / 2.0]])
_M_INV = np.linalg.inv(_M)
THETA3 = (2.0 * math.pi / 3.0, 4.0 * math.pi / 3.0)


@dataclass(frozen=True)
class ProbingAngles:
    """K probing angles in radians, thetas[0] being the reference angle."""

    thetas: tuple[float, ...]

    def __post_init__(self):
        t = tuple(float(x) for x in self.thetas)
        if len(t) < 3 or len(t) % 2 == 0:
            raise ValidationError(f"need an odd number K >= 3 of angles, got {len(t)}")
        if not all(math.isfinite(x) for x in t):
            raise ValidationError("angles must be finite")
        object.__setattr__(self, "thetas", t)

    @property
    def K(self) -> int:
        return len(self.thetas)

    @property
    def vector(self) -> tuple[float, ...]:
        """The free angles (theta_1, ..., theta_{K-1})."""
        return self.thetas[1:]

    def as_array(self) -> np.ndarray:
        return np.array(self.thetas)

    @property
    def is_canonical(self) -> bool:
        t = self.thetas
        return t[0] == 0.0 and all(0.0 <= a <= b < TWO_PI for a, b in zip(t, t[1:]))

    @classmethod
    def from_vector(cls, vec: Iterable[float]) -> "ProbingAngles":
        return cls((0.0, *vec))


@dataclass(frozen=True)
class VarthetaCoords:
    v1: float
    v2: float

    def as_array(self) -> np.ndarray:
        return np.array([self.v1, self.v2])


@dataclass(frozen=True)
class RegionInfo:
    classical_score: Fraction
    delta: int
    boundary: bool
    region: str  # "interior", "boundary", "outside" for K=3; "delta=<d>" otherwise


def theta3() -> ProbingAngles:
    return ProbingAngles((0.0, *THETA3))


def equally_spaced(K: int) -> ProbingAngles:
    return ProbingAngles(tuple(TWO_PI * k / K for k in range(K)))


def canonicalize(raw: Sequence[float]) -> ProbingAngles:
    """Reduce mod 2pi, sort, and shift so the smallest angle is 0."""
    vals = [float(x) for x in raw]
    if len(vals) < 3 or len(vals) % 2 == 0:
        raise ValidationError(f"need an odd number K >= 3 of angles, got {len(vals)}")
    red = sorted(x % TWO_PI for x in vals)
    base = red[0]
    out = []
    for x in red:
        y = (x - base) % TWO_PI
        if y >= TWO_PI:
            y = 0.0
        out.append(y)
    out[0] = 0.0
    return ProbingAngles(tuple(out))


def _sorted_gap(t: Sequence[float], k: int, step: int) -> float:
    """Arc from sorted angle k forward to angle k+step, wrapping past 2pi."""
    K = len(t)
    j = k + step
    if j < K:
        return t[j] - t[k]
    return t[j - K] + TWO_PI - t[k]


def cyclic_gaps(angles: ProbingAngles, step: int = 1) -> list[float]:
    """Arcs theta_{k+step} - theta_k around the sorted circle."""
    t = canonicalize(angles.thetas).thetas
    return [_sorted_gap(t, k, step) for k in range(len(t))]


def classical_max_score(angles: ProbingAngles) -> RegionInfo:
    """Classical bound 1 - delta/K with delta the largest admissible gap step."""
    t = canonicalize(angles.thetas).thetas
    K = len(t)
    delta = 0
    for d in range(1, (K - 1) // 2 + 1):
        if all(_sorted_gap(t, k, d) <= math.pi + GAP_TOL for k in range(K)):
            delta = d
    score = 1 - Fraction(delta, K)
    boundary = False
    if K == 3:
        if delta == 1:
            boundary = any(abs(_sorted_gap(t, k, 1) - math.pi) <= GAP_TOL for k in range(3))
            region = "boundary" if boundary else "interior"
        else:
            region = "outside"
    else:
        region = f"delta={delta}"
    return RegionInfo(score, delta, boundary, region)


def _theta_half_counts(thetas: np.ndarray, phis: np.ndarray) -> np.ndarray:
    c = np.cos(thetas[None, :] - phis[:, None])
    return np.sum(np.where(c > ZERO_COS_TOL, 2, np.where(c < -ZERO_COS_TOL, 0, 1)), axis=1)


@njit
def _max_half_count_numba(thetas, phis, zero_tol):
    best = -1
    for i in range(phis.shape[0]):
        s = 0
        for k in range(thetas.shape[0]):
            c = math.cos(thetas[k] - phis[i])
            if c > zero_tol:
                s += 2
            elif c >= -zero_tol:
                s += 1
        if s > best:
            best = s
    return best


def _max_half_count(thetas: np.ndarray, phis: np.ndarray) -> int:
    if _backend.USE_JIT:
        return int(_max_half_count_numba(thetas, phis, ZERO_COS_TOL))
    best = 0
    for start in range(0, phis.size, 4096):
        best = max(best, int(_theta_half_counts(thetas, phis[start:start + 4096]).max()))
    return best


def classical_score_at(angles: ProbingAngles, phi: float) -> Fraction:
    """(1/K) sum_k Theta(cos(theta_k - phi)) with Theta(0) = 1/2, as an exact rational."""
    t = angles.as_array()
    half = int(_theta_half_counts(t, np.array([float(phi)]))[0])
    return Fraction(half, 2 * len(t))


def candidate_phis(angles: ProbingAngles, grid: int = 10_000, eps: float = 1e-9) -> np.ndarray:
    """Dense phi grid plus the breakpoints theta_k +- pi/2 and their +-eps neighbours."""
    t = angles.as_array()
    dense = np.linspace(0.0, TWO_PI, grid, endpoint=False)
    edges = np.concatenate([t + math.pi / 2, t - math.pi / 2])
    cands = np.concatenate([edges, edges + eps, edges - eps])
    return np.concatenate([dense, cands])


def brute_force_max_score(angles: ProbingAngles, grid: int = 10_000) -> Fraction:
    """Oracle: maximum of classical_score_at over a dense grid and exact candidates."""
    best = _max_half_count(angles.as_array(), candidate_phis(angles, grid))
    return Fraction(best, 2 * angles.K)


def to_vartheta(angles: ProbingAngles) -> VarthetaCoords:
    if angles.K != 3:
        raise ValidationError("vartheta coordinates are defined for K = 3 only")
    t = np.array(angles.thetas[1:]) - np.array(angles.thetas[0]) - np.array(THETA3)
    v = _M @ t
    return VarthetaCoords(float(v[0]), float(v[1]))


def from_vartheta(v: VarthetaCoords | Sequence[float]) -> ProbingAngles:
    vv = v.as_array() if isinstance(v, VarthetaCoords) else np.asarray(v, dtype=float)
    t = _M_INV @ vv + np.array(THETA3)
    return ProbingAngles((0.0, float(t[0]), float(t[1])))


def rotation(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def equivalent_sets(angles: ProbingAngles) -> tuple[ProbingAngles, ProbingAngles, ProbingAngles]:
    """The three offset-equivalent canonical forms of a three-angle protocol."""
    if angles.K != 3:
        raise ValidationError("equivalent_sets is defined for K = 3 only")
    t0, t1, t2 = angles.thetas
    t1, t2 = t1 - t0, t2 - t0
    return (
        canonicalize((0.0, t1, t2)),
        canonicalize((-t1, 0.0, t2 - t1)),
        canonicalize((-t2, t1 - t2, 0.0)),
    )


def triangle_vertices_vartheta() -> np.ndarray:
    """Vertices of the interior region in vartheta coordinates."""
    corners = [(0.0, math.pi), (math.pi, math.pi), (math.pi, 2 * math.pi)]
    return np.array([to_vartheta(ProbingAngles((0.0, a, b))).as_array() for a, b in corners])


def in_triangle(t1: float, t2: float, strict: bool = False, tol: float = GAP_TOL) -> bool:
    """Whether (theta_1, theta_2) with theta_0 = 0 has all cyclic gaps <= pi."""
    gaps = (t1, t2 - t1, TWO_PI - t2)
    if min(gaps) < -tol:
        return False
    if strict:
        return max(gaps) < math.pi - tol
    return max(gaps) <= math.pi + tol


def random_interior(rng: np.random.Generator, shrink: float = 1.0) -> ProbingAngles:
    """Uniform sample from the interior triangle, optionally shrunk about its center."""
    while True:
        r1, r2 = rng.random(2)
        if r1 + r2 > 1.0:
            r1, r2 = 1.0 - r1, 1.0 - r2
        # barycentric sample on the (theta1, theta2) triangle
        a = np.array([0.0, math.pi])
        b = np.array([math.pi, math.pi])
        c = np.array([math.pi, 2 * math.pi])
        p = a + r1 * (b - a) + r2 * (c - a)
        center = np.array(THETA3)
        p = center + shrink * (p - center)
        if in_triangle(p[0], p[1], strict=True):
            return ProbingAngles((0.0, float(p[0]), float(p[1])))
