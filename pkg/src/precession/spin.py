"""Spin-j protocol scores, gradients and resonant-angle heuristics."""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .angles import (
    ProbingAngles,
    canonicalize,
    classical_max_score,
    equally_spaced,
    equivalent_sets,
    from_vartheta,
    in_triangle,
    theta3,
    to_vartheta,
    triangle_vertices_vartheta,
)
from ._backend import thread_count
from .linalg import ConvergenceError, ValidationError, eigh, fit_least_squares

ZERO_EIG_TOL = 1e-10
DEGENERACY_GAP = 1e-9


@dataclass(frozen=True)
class SpinValue:
    two_j: int

    def __post_init__(self):
        if int(self.two_j) != self.two_j or self.two_j < 1:
            raise ValidationError(f"two_j must be a positive integer, got {self.two_j}")

    @classmethod
    def of(cls, j) -> "SpinValue":
        """Build from j given as int, float, Fraction or a string like '7/2'."""
        if isinstance(j, SpinValue):
            return j
        try:
            if isinstance(j, str):
                fr = Fraction(j.strip())
            elif isinstance(j, float):
                if not math.isfinite(j) or abs(2 * j - round(2 * j)) > 1e-9:
                    raise ValidationError(f"j must be a multiple of 1/2, got {j}")
                fr = Fraction(round(2 * j), 2)
            else:
                fr = Fraction(j)
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"cannot read spin value {j!r}") from None
        two = 2 * fr
        if two.denominator != 1:
            raise ValidationError(f"j must be a multiple of 1/2, got {j}")
        return cls(int(two))

    @property
    def j(self) -> float:
        return self.two_j / 2

    @property
    def dim(self) -> int:
        return self.two_j + 1

    @property
    def is_integer(self) -> bool:
        return self.two_j % 2 == 0

    def __str__(self) -> str:
        return str(self.two_j // 2) if self.is_integer else f"{self.two_j}/2"


@dataclass(frozen=True)
class ResonantIndex:
    n1: int
    n2: int


@dataclass
class OptimizeConfig:
    max_iter: int = 500
    grad_tol: float = 1e-8
    initial_step: float = 0.5
    retries: int = 3
    seed: int = 0


@dataclass
class OptimizeResult:
    angles: ProbingAngles
    score: float
    iterations: int
    grad_norm: float
    converged: bool = True
    history: list = field(default_factory=list)


def _spin(j) -> SpinValue:
    return SpinValue.of(j)


# ---------------------------------------------------------------------------
# operators


@lru_cache(maxsize=64)
def _ops(two_j: int):
    j = two_j / 2
    m = j - np.arange(two_j + 1)  # descending
    # J+ |m> = sqrt(j(j+1) - m(m+1)) |m+1>; row index of m+1 is one less
    up = np.zeros((two_j + 1, two_j + 1))
    for i in range(1, two_j + 1):
        up[i - 1, i] = math.sqrt(j * (j + 1) - m[i] * (m[i] + 1))
    jx = 0.5 * (up + up.T)
    jy = (up - up.T) / 2j
    jz = np.diag(m)
    return jx.astype(complex), jy, jz.astype(complex)


def angular_momentum_ops(j) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(Jx, Jy, Jz) in the |j,m> basis with m descending."""
    jx, jy, jz = _ops(_spin(j).two_j)
    return jx.copy(), jy.copy(), jz.copy()


def m_values(j) -> np.ndarray:
    s = _spin(j)
    return s.j - np.arange(s.dim)


@lru_cache(maxsize=64)
def _ry_half_pi(two_j: int) -> np.ndarray:
    """exp(-i pi/2 Jy) from the eigendecomposition of Jy."""
    _, jy, _ = _ops(two_j)
    sp = eigh(jy)
    v = sp.eigenvectors
    return (v * np.exp(-0.5j * math.pi * sp.eigenvalues)) @ v.conj().T


def ry_half_pi(j) -> np.ndarray:
    return _ry_half_pi(_spin(j).two_j).copy()


def _step(m: np.ndarray) -> np.ndarray:
    return np.where(m > ZERO_EIG_TOL, 1.0, np.where(m < -ZERO_EIG_TOL, 0.0, 0.5))


@lru_cache(maxsize=64)
def _theta_jx(two_j: int) -> np.ndarray:
    r = _ry_half_pi(two_j)
    m = two_j / 2 - np.arange(two_j + 1)
    out = (r * _step(m)) @ r.conj().T
    return 0.5 * (out + out.conj().T)


def theta_jx(j) -> np.ndarray:
    """Theta(Jx) as R diag(Theta(m)) R^dagger with R = exp(-i pi/2 Jy)."""
    return _theta_jx(_spin(j).two_j).copy()


def _conjugate_z(mat: np.ndarray, m: np.ndarray, theta: float) -> np.ndarray:
    # e^{-i theta Jz} M e^{i theta Jz}
    return mat * np.exp(-1j * theta * (m[:, None] - m[None, :]))


def q_spin(j, angles: ProbingAngles) -> np.ndarray:
    s = _spin(j)
    th = _theta_jx(s.two_j)
    m = m_values(s)
    d = m[:, None] - m[None, :]
    phase = np.zeros(d.shape, dtype=complex)
    for t in angles.thetas:
        phase += np.exp(-1j * t * d)
    out = th * phase / angles.K
    return 0.5 * (out + out.conj().T)


def max_score_spin(j, angles: ProbingAngles) -> float:
    return float(eigh(q_spin(j, angles)).eigenvalues[-1])


def _top(j, angles: ProbingAngles):
    sp = eigh(q_spin(j, angles))
    w = sp.eigenvalues
    gap = w[-1] - w[-2] if w.size > 1 else math.inf
    return w[-1], sp.eigenvectors[:, -1], gap


# ---------------------------------------------------------------------------
# gradient


def theta_jz_commutator(j) -> np.ndarray:
    """[Theta(Jx), Jz] from the matrices."""
    s = _spin(j)
    th = _theta_jx(s.two_j)
    _, _, jz = _ops(s.two_j)
    return th @ jz - jz @ th


def theta_jz_commutator_closed(j) -> np.ndarray:
    """[Theta(Jx), Jz] from its rank-two form in the rotated frame.

    Integer j:  sqrt(j(j+1))/4 R (|-1><0| + |0><1| - |1><0| - |0><-1|) R^dagger.
    Half-integer j: (j + 1/2)/2 R (|-1/2><1/2| - |1/2><-1/2|) R^dagger.
    """
    s = _spin(j)
    r = _ry_half_pi(s.two_j)
    jj = s.j

    def idx(mm: float) -> int:
        return int(round(jj - mm))

    core = np.zeros((s.dim, s.dim), dtype=complex)
    if s.is_integer:
        core[idx(-1), idx(0)] += 1
        core[idx(0), idx(1)] += 1
        core[idx(1), idx(0)] -= 1
        core[idx(0), idx(-1)] -= 1
        core *= math.sqrt(jj * (jj + 1)) / 4
    else:
        core[idx(-0.5), idx(0.5)] += 1
        core[idx(0.5), idx(-0.5)] -= 1
        core *= (jj + 0.5) / 2
    return r @ core @ r.conj().T


def score_gradient(j, angles: ProbingAngles, closed_form: bool = True) -> np.ndarray:
    """d P / d theta_k for the free angles theta_1..theta_{K-1}."""
    s = _spin(j)
    if s.two_j < 2:
        return np.zeros(angles.K - 1)
    _, v, gap = _top(s, angles)
    if gap < DEGENERACY_GAP:
        raise ValidationError(
            f"top eigenvalue is degenerate (gap {gap:.2e}); perturb the angles slightly"
        )
    comm = theta_jz_commutator_closed(s) if closed_form else theta_jz_commutator(s)
    m = m_values(s)
    grad = []
    for t in angles.thetas[1:]:
        c = _conjugate_z(comm, m, t)
        grad.append(float(np.real(1j * np.vdot(v, c @ v))) / angles.K)
    return np.array(grad)


# ---------------------------------------------------------------------------
# resonant angles and heuristics


def resonant_indices(j) -> list[ResonantIndex]:
    s = _spin(j)
    if s.two_j < 3:
        raise ValidationError("resonant angles need j >= 3/2")
    a = (s.two_j - 1) // 2  # floor(j - 1/2)
    b = s.two_j // 2  # floor(j)
    return [ResonantIndex(n1, n2) for n1 in range(1, a + 1) for n2 in range(1 + b, n1 + a + 1)]


def resonant_count_formula(j) -> int:
    s = _spin(j)
    a = (s.two_j - 1) // 2
    b = s.two_j // 2
    return int(Fraction(a) * (Fraction(1, 2) + Fraction(3, 2) * a - b))


def resonant_angles(j) -> list[tuple[ResonantIndex, ProbingAngles]]:
    s = _spin(j)
    return [
        (ix, ProbingAngles((0.0, ix.n1 * math.pi / s.j, ix.n2 * math.pi / s.j)))
        for ix in resonant_indices(s)
    ]


def resonant_angles_k(j, K: int) -> list[ProbingAngles]:
    """K-angle resonant sets (pi n_k / j) in the closed top classical region.

    Indices satisfy 0 < n_1 < ... < n_{(K-1)/2} <= floor(j) < ... < n_{K-1} < 2j.
    """
    s = _spin(j)
    half = (K - 1) // 2
    fj = s.two_j // 2
    out = []
    for low in itertools.combinations(range(1, fj + 1), half):
        for high in itertools.combinations(range(fj + 1, s.two_j), half):
            thetas = (0.0, *(n * math.pi / s.j for n in low + high))
            pa = ProbingAngles(thetas)
            if classical_max_score(pa).delta == half:
                out.append(pa)
    return out


def global_peak_guess(j) -> ProbingAngles:
    s = _spin(j)
    if s.two_j < 3:
        raise ValidationError("need j >= 3/2")
    n_g = (s.two_j + 1) // 3 if s.is_integer else s.two_j // 2
    return ProbingAngles((0.0, n_g * math.pi / s.j, 2 * n_g * math.pi / s.j))


def lambda_heuristic(j) -> float:
    s = _spin(j)
    if s.is_integer:
        c1, c2 = 0.533051, 0.213570
    else:
        c1, c2 = 0.554086, 0.197425
    return 1.0 / (1.0 + c1 / (s.j - c2))


def heuristic_peak(j, index: ResonantIndex) -> ProbingAngles:
    """lambda_j theta_Delta + (1 - lambda_j) theta_3."""
    s = _spin(j)
    lam = lambda_heuristic(s)
    d = np.array([index.n1, index.n2]) * math.pi / s.j
    t = lam * d + (1 - lam) * np.array(theta3().thetas[1:])
    return ProbingAngles((0.0, float(t[0]), float(t[1])))


# ---------------------------------------------------------------------------
# optimisation


def fundamental_representative(angles: ProbingAngles) -> ProbingAngles:
    """Canonical form; for K = 3 the offset-equivalent copy with theta1 <= 2pi/3 <= theta2."""
    can = canonicalize(angles.thetas)
    if can.K != 3:
        return can
    cands = [c for c in equivalent_sets(can)]
    third = 2 * math.pi / 3
    good = [c for c in cands if c.thetas[1] <= third + 1e-12 and c.thetas[2] >= third - 1e-12]
    pool = good or cands
    return min(pool, key=lambda c: c.thetas)


def optimize_angles(j, initial: ProbingAngles, config: OptimizeConfig | None = None) -> OptimizeResult:
    """Gradient ascent with Barzilai-Borwein steps and backtracking."""
    cfg = config or OptimizeConfig()
    s = _spin(j)
    K = initial.K
    info = classical_max_score(initial)
    if info.delta != (K - 1) // 2:
        raise ValidationError("initial angles must lie in the region with classical score (1 + 1/K)/2")
    rng = np.random.default_rng(cfg.seed)
    x = np.array(initial.thetas[1:], dtype=float)

    def value(xx):
        return max_score_spin(s, ProbingAngles((0.0, *xx)))

    def grad(xx):
        for attempt in range(cfg.retries + 1):
            try:
                return xx, score_gradient(s, ProbingAngles((0.0, *xx)))
            except ValidationError:
                if attempt == cfg.retries:
                    raise
                xx = xx + 1e-7 * rng.standard_normal(xx.size)
        raise AssertionError("unreachable")

    x, g = grad(x)
    f = value(x)
    step = cfg.initial_step
    it = 0
    history = [f]
    while it < cfg.max_iter and np.linalg.norm(g) >= cfg.grad_tol:
        it += 1
        t = step
        while True:
            x_new = x + t * g
            f_new = value(x_new)
            if f_new >= f + 1e-4 * t * float(g @ g) or t < 1e-14:
                break
            t *= 0.5
        if t < 1e-14 and f_new < f:
            break
        x_new, g_new = grad(x_new)
        sdiff, ydiff = x_new - x, g_new - g
        sy = float(sdiff @ ydiff)
        # ascent: the curvature along s is negative near a maximum
        step = float(sdiff @ sdiff) / -sy if sy < 0 else min(4.0 * t, 10.0)
        step = min(max(step, 1e-6), 10.0)
        x, g, f = x_new, g_new, f_new
        history.append(f)
    final = fundamental_representative(ProbingAngles((0.0, *x)))
    gn = float(np.linalg.norm(g))
    return OptimizeResult(final, f, it, gn, gn < cfg.grad_tol, history)


def k_angle_initial(j, K: int) -> ProbingAngles:
    """Midpoint between the first K-angle resonant set and the equally spaced protocol."""
    cands = resonant_angles_k(j, K)
    if not cands:
        raise ValidationError(f"no {K}-angle resonant set for j = {_spin(j)}")
    eq = np.array(equally_spaced(K).thetas)
    best = min(cands, key=lambda c: float(np.linalg.norm(np.array(c.thetas) - eq)))
    mid = 0.5 * (np.array(best.thetas) + eq)
    return ProbingAngles(tuple(float(v) for v in mid))


# ---------------------------------------------------------------------------
# scans and sequences


def heatmap(j, resolution: int):
    """Scores on a uniform vartheta grid over the closed interior triangle.

    Returns an array of rows (vartheta1, vartheta2, score) in row-major order.
    """
    if resolution < 16:
        raise ValidationError("resolution must be >= 16")
    s = _spin(j)
    verts = triangle_vertices_vartheta()
    lo, hi = verts.min(axis=0), verts.max(axis=0)
    pts = []
    for v2 in np.linspace(lo[1], hi[1], resolution):
        for v1 in np.linspace(lo[0], hi[0], resolution):
            pa = from_vartheta((v1, v2))
            if in_triangle(pa.thetas[1], pa.thetas[2], tol=1e-9):
                pts.append((float(v1), float(v2), pa))
    workers = thread_count()
    score = lambda p: max_score_spin(s, p[2])
    if workers > 1:
        # map keeps input order, so the grid is identical for any worker count
        with ThreadPoolExecutor(workers) as pool:
            vals = list(pool.map(score, pts))
    else:
        vals = [score(p) for p in pts]
    return np.array([(v1, v2, v) for (v1, v2, _), v in zip(pts, vals)])


def heatmap_csv(grid: np.ndarray) -> str:
    lines = ["vartheta1,vartheta2,score"]
    lines += [",".join(f"{x:.17g}" for x in row) for row in grid]
    return "\n".join(lines) + "\n"


def heatmap_local_maxima(grid: np.ndarray, resolution: int, tol: float = 1e-12) -> list[tuple[float, float, float]]:
    """Grid points strictly above all present 8-neighbours."""
    verts = triangle_vertices_vartheta()
    lo, hi = verts.min(axis=0), verts.max(axis=0)
    dx = (hi - lo) / (resolution - 1)
    lookup = {}
    for v1, v2, sc in grid:
        key = (int(round((v1 - lo[0]) / dx[0])), int(round((v2 - lo[1]) / dx[1])))
        lookup[key] = sc
    peaks = []
    for (a, b), sc in lookup.items():
        neigh = [lookup.get((a + da, b + db)) for da in (-1, 0, 1) for db in (-1, 0, 1) if (da, db) != (0, 0)]
        neigh = [x for x in neigh if x is not None]
        if len(neigh) == 8 and all(sc > x + tol for x in neigh):
            peaks.append((lo[0] + a * dx[0], lo[1] + b * dx[1], sc))
    return sorted(peaks)


@dataclass
class ConjectureReport:
    rows: list  # (n, j, score, parity)
    even_increasing: bool
    odd_decreasing: bool
    even_fit: float
    odd_fit: float


def conjecture_sequence(n_max: int, n_fit_min: int = 6) -> ConjectureReport:
    """P3 at j = 3n/2 for n = 1..n_max, monotonicity per parity, and ansatz fits."""
    if n_max < 2:
        raise ValidationError("n_max must be >= 2")
    rows = []
    for n in range(1, n_max + 1):
        s = SpinValue(3 * n)
        rows.append((n, s.j, max_score_spin(s, theta3()), n % 2))
    even = [r for r in rows if r[3] == 0]
    odd = [r for r in rows if r[3] == 1]
    inc = all(b[2] > a[2] for a, b in zip(even, even[1:]))
    dec = all(b[2] < a[2] for a, b in zip(odd, odd[1:]))
    ev = [r for r in even if r[0] >= n_fit_min]
    od = [r for r in odd if r[0] >= n_fit_min]
    ce, _ = fit_least_squares(
        [lambda x: np.ones_like(x), lambda x: -1.0 / x, lambda x: -(x ** -2.0)],
        [r[1] for r in ev], [r[2] for r in ev],
    )
    co, _ = fit_least_squares(
        [lambda x: np.ones_like(x)] + [lambda x, l=l: x ** (-l / 2) for l in range(1, 5)],
        [r[1] for r in od], [r[2] for r in od],
    )
    return ConjectureReport(rows, inc, dec, float(ce[0]), float(co[0]))


def vartheta_distance(a: ProbingAngles, b: ProbingAngles) -> float:
    """Smallest vartheta distance between b and the offset-equivalent forms of a."""
    vb = to_vartheta(b).as_array()
    return min(float(np.linalg.norm(to_vartheta(c).as_array() - vb)) for c in equivalent_sets(a))


__all__ = [
    "SpinValue",
    "ResonantIndex",
    "OptimizeConfig",
    "OptimizeResult",
    "angular_momentum_ops",
    "theta_jx",
    "q_spin",
    "max_score_spin",
    "score_gradient",
    "resonant_angles",
    "resonant_angles_k",
    "global_peak_guess",
    "lambda_heuristic",
    "optimize_angles",
    "heatmap",
    "heatmap_csv",
    "conjecture_sequence",
    "ConvergenceError",
]
