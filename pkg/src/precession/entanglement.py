"""Entanglement witnesses from the precession protocol and PPT separable bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend, fixtures
from ._backend import njit
from .angles import ProbingAngles, canonicalize, theta3
from .linalg import (
    ConvergenceError,
    ValidationError,
    _jacobi_numba,
    _jacobi_numpy,
    as_hermitian,
    eigh,
    heaviside,
    hermitian_function,
    partial_transpose,
)
from .oscillator import fock_score
from .spin import SpinValue, angular_momentum_ops

P3_CLASSICAL = 2 / 3
_JAC_TOL = 1e-14
_JAC_SWEEPS = 60


@dataclass
class SdpProblem:
    objective: np.ndarray
    dim_a: int
    dim_b: int

    def __post_init__(self):
        self.objective = as_hermitian(self.objective)
        if self.objective.shape[0] != self.dim_a * self.dim_b:
            raise ValidationError(
                f"objective has dimension {self.objective.shape[0]}, expected {self.dim_a}*{self.dim_b}"
            )


@dataclass
class SdpConfig:
    rho: float = 1.0
    max_iter: int = 200_000
    primal_tol: float = 1e-7
    value_tol: float = 1e-9
    window: int = 50


@dataclass
class SdpSolution:
    value: float
    state: np.ndarray
    primal_residual: float
    dual_gap_estimate: float
    iterations: int
    upper_bound: float = field(default=math.nan)


@dataclass(frozen=True)
class GmeVerdict:
    certified: bool
    margin: float


# ---------------------------------------------------------------------------
# collective operators


def collective_ops(spins) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Total angular momentum components for a list of spins."""
    ss = [SpinValue.of(j) for j in spins]
    dims = [s.dim for s in ss]
    total = int(np.prod(dims))
    out = [np.zeros((total, total), dtype=complex) for _ in range(3)]
    for i, s in enumerate(ss):
        ops = angular_momentum_ops(s)
        left = np.eye(int(np.prod(dims[:i])))
        right = np.eye(int(np.prod(dims[i + 1:])))
        for c in range(3):
            out[c] += np.kron(np.kron(left, ops[c]), right)
    return out[0], out[1], out[2]


def q_collective(spins, angles: ProbingAngles) -> np.ndarray:
    """(1/K) sum_k Theta[Jx cos theta_k + Jy sin theta_k] on the total spin."""
    jx, jy, _ = collective_ops(spins)
    acc = np.zeros_like(jx)
    for t in angles.thetas:
        acc += hermitian_function(jx * math.cos(t) + jy * math.sin(t), heaviside)
    out = acc / angles.K
    return 0.5 * (out + out.conj().T)


def q_total_spin(j_a, j_b, angles: ProbingAngles) -> np.ndarray:
    return q_collective([j_a, j_b], angles)


def rotate_z(state: np.ndarray, spins, angle: float) -> np.ndarray:
    """exp(-i angle Jz) applied to a product-basis state (Jz is diagonal)."""
    _, _, jz = collective_ops(spins)
    return np.exp(-1j * angle * np.real(np.diag(jz))) * state


# ---------------------------------------------------------------------------
# PPT SDP by ADMM


@njit
def _pt_numba(m, da, db):
    out = np.empty_like(m)
    for a in range(da):
        for b in range(db):
            for a2 in range(da):
                for b2 in range(db):
                    out[a * db + b, a2 * db + b2] = m[a * db + b2, a2 * db + b]
    return out


@njit
def _psd_numba(m, tol, sweeps):
    w, v, _ = _jacobi_numba(m.copy(), tol, sweeps)
    n = w.shape[0]
    out = np.zeros_like(m)
    for k in range(n):
        if w[k] > 0.0:
            for i in range(n):
                for j in range(n):
                    out[i, j] += w[k] * v[i, k] * v[j, k].conjugate()
    return out


@njit
def _admm_numba(c, da, db, rho, max_iter, primal_tol, value_tol, window, tol, sweeps):
    n = c.shape[0]
    y = np.eye(n).astype(np.complex128) / n
    z = _pt_numba(y, da, db)
    u = np.zeros((n, n), dtype=np.complex128)
    w = np.zeros((n, n), dtype=np.complex128)
    hist = np.zeros(window + 1)
    it = 0
    res = 1.0
    while it < max_iter:
        x = 0.5 * ((y - u) + _pt_numba(z - w, da, db)) + c / (2.0 * rho)
        tr = 0.0
        for i in range(n):
            tr += x[i, i].real
        for i in range(n):
            x[i, i] += (1.0 - tr) / n
        tx = _pt_numba(x, da, db)
        y = _psd_numba(x + u, tol, sweeps)
        z = _psd_numba(tx + w, tol, sweeps)
        u += x - y
        w += tx - z
        r1 = 0.0
        r2 = 0.0
        val = 0.0
        for i in range(n):
            for j in range(n):
                d1 = x[i, j] - y[i, j]
                d2 = tx[i, j] - z[i, j]
                r1 += d1.real ** 2 + d1.imag ** 2
                r2 += d2.real ** 2 + d2.imag ** 2
                val += (c[i, j] * x[j, i]).real
        res = max(math.sqrt(r1), math.sqrt(r2))
        hist[it % (window + 1)] = val
        it += 1
        if it > window and res < primal_tol:
            if abs(val - hist[it % (window + 1)]) < value_tol:
                break
    return x, y, z, u, w, it, res


def _admm_numpy(c, da, db, rho, max_iter, primal_tol, value_tol, window):
    n = c.shape[0]

    def pt(m):
        return partial_transpose(m, da, db)

    def psd(m):
        ev, vec, _ = _jacobi_numpy(m.copy(), _JAC_TOL, _JAC_SWEEPS)
        ev = np.clip(ev, 0.0, None)
        return (vec * ev) @ vec.conj().T

    y = np.eye(n, dtype=complex) / n
    z = pt(y)
    u = np.zeros_like(y)
    w = np.zeros_like(y)
    hist = np.zeros(window + 1)
    it, res = 0, 1.0
    while it < max_iter:
        x = 0.5 * ((y - u) + pt(z - w)) + c / (2.0 * rho)
        x += np.eye(n) * (1.0 - np.trace(x).real) / n
        tx = pt(x)
        y = psd(x + u)
        z = psd(tx + w)
        u += x - y
        w += tx - z
        res = max(np.linalg.norm(x - y), np.linalg.norm(tx - z))
        val = float(np.real(np.sum(c * x.T)))
        hist[it % (window + 1)] = val
        it += 1
        if it > window and res < primal_tol and abs(val - hist[it % (window + 1)]) < value_tol:
            break
    return x, y, z, u, w, it, res


def _dual_bound(c: np.ndarray, w: np.ndarray, rho: float, da: int, db: int) -> float:
    """Rigorous upper bound min over S >= 0 of lambda_max(C + S^{T2}), S from the ADMM dual."""
    best = eigh(c).eigenvalues[-1]
    for sign in (1.0, -1.0):
        sp = eigh(0.5 * (sign * rho * w + (sign * rho * w).conj().T))
        s = (sp.eigenvectors * np.clip(sp.eigenvalues, 0, None)) @ sp.eigenvectors.conj().T
        best = min(best, eigh(c + partial_transpose(s, da, db)).eigenvalues[-1])
    return float(best)


def sdp_ppt_max(problem: SdpProblem, cfg: SdpConfig | None = None, backend: str | None = None) -> SdpSolution:
    """Maximise tr(C rho) over states with positive partial transpose."""
    cfg = cfg or SdpConfig()
    c = np.ascontiguousarray(problem.objective, dtype=np.complex128)
    da, db = problem.dim_a, problem.dim_b
    name = backend or _backend.backend_name()
    args = (c, da, db, float(cfg.rho), int(cfg.max_iter), cfg.primal_tol, cfg.value_tol, int(cfg.window))
    if name == "numba":
        x, y, z, u, w, it, res = _admm_numba(*args, _JAC_TOL, _JAC_SWEEPS)
    else:
        x, y, z, u, w, it, res = _admm_numpy(*args)
    if it >= cfg.max_iter and res >= cfg.primal_tol:
        raise ConvergenceError(
            f"ADMM stopped after {it} iterations with primal residual {res:.3e}",
            partial={"residual": res, "iterations": it},
        )
    state = 0.5 * (y + y.conj().T)
    state /= np.trace(state).real
    value = float(np.real(np.trace(c @ state)))
    upper = _dual_bound(c, w, cfg.rho, da, db)
    return SdpSolution(value, state, float(res), max(0.0, upper - value), int(it), upper)


def ppt_margins(state: np.ndarray, dim_a: int, dim_b: int) -> tuple[float, float, float]:
    """(min eigenvalue, min eigenvalue of the partial transpose, trace - 1)."""
    e1 = eigh(state).eigenvalues[0]
    e2 = eigh(partial_transpose(state, dim_a, dim_b)).eigenvalues[0]
    return float(e1), float(e2), float(np.trace(state).real - 1)


def random_product_lower_bound(c: np.ndarray, dim_a: int, dim_b: int, samples: int, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((samples, dim_a)) + 1j * rng.standard_normal((samples, dim_a))
    b = rng.standard_normal((samples, dim_b)) + 1j * rng.standard_normal((samples, dim_b))
    a /= np.linalg.norm(a, axis=1, keepdims=True)
    b /= np.linalg.norm(b, axis=1, keepdims=True)
    prod = np.einsum("si,sj->sij", a, b).reshape(samples, -1)
    vals = np.real(np.einsum("si,ij,sj->s", prod.conj(), c, prod))
    return float(vals.max())


def sep_bound_spin(j_a, j_b, angles: ProbingAngles, cfg: SdpConfig | None = None) -> float:
    sa, sb = SpinValue.of(j_a), SpinValue.of(j_b)
    prob = SdpProblem(q_total_spin(sa, sb, angles), sa.dim, sb.dim)
    return sdp_ppt_max(prob, cfg).value


def sep_bound_ensemble(spins, angles: ProbingAngles, cfg: SdpConfig | None = None) -> tuple[float, tuple]:
    """Largest bipartite PPT bound over spin pairs (j, j') with j + j' <= total spin."""
    two_total = sum(SpinValue.of(j).two_j for j in spins)
    best, arg = -math.inf, None
    for ta in range(1, two_total):
        for tb in range(ta, two_total - ta + 1):
            v = sep_bound_spin(SpinValue(ta), SpinValue(tb), angles, cfg)
            if v > best:
                best, arg = v, (str(SpinValue(ta)), str(SpinValue(tb)))
    return best, arg


# ---------------------------------------------------------------------------
# example states and GME logic


def psi4_state(rotated: bool = True) -> np.ndarray:
    base = rotate_z(fixtures.psi4(), ["1/2"] * 4, fixtures.PSI4_FRAME)
    if not rotated:
        return base
    return rotate_z(base, ["1/2"] * 4, fixtures.PSI4_ROTATION)


def psi4_scores() -> tuple[float, float]:
    """(equally spaced score of the bare state, modified-angle score of the rotated state).

    No single z rotation of the state reaches both reference values; see the notes.
    """
    spins = ["1/2"] * 4
    bare, rot = psi4_state(False), psi4_state(True)
    orig = float(np.real(np.vdot(bare, q_collective(spins, theta3()) @ bare)))
    mod = float(np.real(np.vdot(rot, q_collective(spins, ProbingAngles(fixtures.PSI4_ANGLES)) @ rot)))
    return orig, mod


def chi4_scores() -> tuple[float, float]:
    """(score at (pi^2/4, pi^2/2), score at the equally spaced angles) on the collective mode."""
    c = fixtures.chi4_coefficients()
    shifted = ProbingAngles(tuple(t + fixtures.CHI4_OFFSET for t in fixtures.CHI4_ANGLES))
    return fock_score(c, shifted), fock_score(c, theta3())


def chi4_score() -> float:
    return chi4_scores()[0]


def squeezed_angles(lam: float) -> ProbingAngles:
    if not math.isfinite(lam):
        raise ValidationError("squeezing parameter must be finite")
    # pi -/+ atan(t) written as theta3 -/+ offset so that lam = 0 lands exactly on theta3
    r3 = math.sqrt(3.0)
    t = r3 * math.exp(2 * lam)
    off = math.atan((r3 - t) / (1.0 + r3 * t))
    return canonicalize((0.0, 2 * math.pi / 3 + off, 4 * math.pi / 3 - off))


def gme_certify(score: float, sep_bound: float, tol: float) -> GmeVerdict:
    margin = score - sep_bound
    return GmeVerdict(margin > tol, margin)


__all__ = [
    "SdpProblem",
    "SdpConfig",
    "SdpSolution",
    "GmeVerdict",
    "collective_ops",
    "q_collective",
    "q_total_spin",
    "sdp_ppt_max",
    "sep_bound_spin",
    "sep_bound_ensemble",
    "psi4_scores",
    "chi4_score",
    "squeezed_angles",
    "gme_certify",
]
