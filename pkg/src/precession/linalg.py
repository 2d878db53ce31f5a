"""Dense Hermitian linear algebra, tensor helpers, quadrature and fitting.

The eigensolver is a cyclic Jacobi method using a round-robin ("chess
tournament") pivot order. Each round applies disjoint rotations, so the numba
kernel (one rotation at a time) and the numpy kernel (one vectorized round at a
time) perform the same sequence of transformations.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _backend
from ._backend import njit

HERMITIAN_TOL = 1e-12
_JACOBI_TOL = 1e-15
_MAX_SWEEPS = 60


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative method fails to meet its tolerance.

    ``partial`` carries the best estimate available at the time of failure.
    """

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-12
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValidationError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValidationError("max_subdivisions must be positive")


def as_hermitian(h, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate ``h`` as a square Hermitian matrix and return a symmetrized copy."""
    a = np.asarray(h, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    if a.size:
        dev = np.max(np.abs(a - a.conj().T))
        scale = max(1.0, float(np.max(np.abs(a))))
        if dev > tol * scale:
            raise ValidationError(f"matrix is not Hermitian (max deviation {dev:.3e})")
    return 0.5 * (a + a.conj().T)


# ---------------------------------------------------------------------------
# Jacobi kernels


@njit
def _jacobi_numba(a, tol, max_sweeps):
    n = a.shape[0]
    vt = np.zeros((n, n), dtype=np.complex128)
    for i in range(n):
        vt[i, i] = 1.0
    m = n + (n % 2)
    fro = 0.0
    for i in range(n):
        for k in range(n):
            fro += a[i, k].real ** 2 + a[i, k].imag ** 2
    fro = math.sqrt(fro)
    sweeps = 0
    while sweeps < max_sweeps:
        off = 0.0
        for i in range(n):
            for k in range(i + 1, n):
                off += a[i, k].real ** 2 + a[i, k].imag ** 2
        off = math.sqrt(2.0 * off)
        if off <= tol * fro:
            break
        skip = 1e-20 * fro
        for r in range(m - 1):
            for i in range(m // 2):
                if i == 0:
                    p, q = r, m - 1
                else:
                    p = (r + i) % (m - 1)
                    q = (r - i + m - 1) % (m - 1)
                if p > q:
                    p, q = q, p
                if q >= n:
                    continue
                hpq = a[p, q]
                ab = abs(hpq)
                if ab <= skip:
                    continue
                ph = hpq / ab
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2.0 * ab)
                if abs(tau) > 1e150:
                    t = 0.5 / tau
                else:
                    t = 1.0 / (abs(tau) + math.sqrt(1.0 + tau * tau))
                    if tau < 0.0:
                        t = -t
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    if k == p or k == q:
                        continue
                    apk = a[p, k]
                    aqk = a[q, k]
                    npk = c * apk - s * ph * aqk
                    nqk = s * apk + c * ph * aqk
                    a[p, k] = npk
                    a[q, k] = nqk
                    a[k, p] = npk.conjugate()
                    a[k, q] = nqk.conjugate()
                a[p, p] = app - t * ab
                a[q, q] = aqq + t * ab
                a[p, q] = 0.0
                a[q, p] = 0.0
                # rows of vt are the (conjugated) eigenvector columns
                for k in range(n):
                    vpk = vt[p, k]
                    vqk = vt[q, k]
                    vt[p, k] = c * vpk - s * ph * vqk
                    vt[q, k] = s * vpk + c * ph * vqk
        sweeps += 1
    w = np.empty(n)
    for i in range(n):
        w[i] = a[i, i].real
    return w, vt.T.conj().copy(), sweeps


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    m = n + (n % 2)
    rounds = []
    for r in range(m - 1):
        ps, qs = [], []
        for i in range(m // 2):
            if i == 0:
                p, q = r, m - 1
            else:
                p, q = (r + i) % (m - 1), (r - i + m - 1) % (m - 1)
            p, q = min(p, q), max(p, q)
            if q < n:
                ps.append(p)
                qs.append(q)
        rounds.append((np.array(ps, dtype=np.int64), np.array(qs, dtype=np.int64)))
    return rounds


def _jacobi_numpy(a, tol, max_sweeps):
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    fro = math.sqrt(float(np.sum(np.abs(a) ** 2)))
    schedule = _round_robin(n)
    iu = np.triu_indices(n, 1)
    sweeps = 0
    while sweeps < max_sweeps:
        off = math.sqrt(2.0 * float(np.sum(np.abs(a[iu]) ** 2)))
        if off <= tol * fro:
            break
        skip = 1e-20 * fro
        for ps, qs in schedule:
            h = a[ps, qs]
            ab = np.abs(h)
            keep = ab > skip
            if not keep.any():
                continue
            p, q, h, ab = ps[keep], qs[keep], h[keep], ab[keep]
            ph = h / ab
            cph = ph.conj()
            app = a[p, p].real
            aqq = a[q, q].real
            tau = (aqq - app) / (2.0 * ab)
            big = np.abs(tau) > 1e150
            tau_safe = np.where(big, 1.0, tau)
            t = 1.0 / (np.abs(tau_safe) + np.sqrt(1.0 + tau_safe * tau_safe))
            t = np.where(tau_safe < 0.0, -t, t)
            t = np.where(big, 0.5 / np.where(big, tau, 1.0), t)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            x = a[:, p]
            y = a[:, q]
            a[:, p] = c * x - s * cph * y
            a[:, q] = s * x + c * cph * y
            x = a[p, :]
            y = a[q, :]
            a[p, :] = c[:, None] * x - (s * ph)[:, None] * y
            a[q, :] = s[:, None] * x + (c * ph)[:, None] * y
            a[p, p] = app - t * ab
            a[q, q] = aqq + t * ab
            a[p, q] = 0.0
            a[q, p] = 0.0
            x = v[:, p]
            y = v[:, q]
            v[:, p] = c * x - s * cph * y
            v[:, q] = s * x + c * cph * y
        sweeps += 1
    return np.real(np.diag(a)).copy(), v, sweeps


def jacobi_raw(a: np.ndarray, backend: str | None = None):
    """Run the Jacobi iteration on a Hermitian copy of ``a``.

    Returns unsorted eigenvalues, eigenvectors and the sweep count.
    """
    work = np.array(a, dtype=np.complex128, order="C", copy=True)
    name = backend or _backend.backend_name()
    if name == "numba":
        w, v, sweeps = _jacobi_numba(work, _JACOBI_TOL, _MAX_SWEEPS)
    else:
        w, v, sweeps = _jacobi_numpy(work, _JACOBI_TOL, _MAX_SWEEPS)
    if sweeps >= _MAX_SWEEPS:
        raise ConvergenceError(f"Jacobi iteration did not converge in {_MAX_SWEEPS} sweeps")
    return w, v, sweeps


def eigh(h, backend: str | None = None) -> Spectrum:
    """Full spectrum of a Hermitian matrix, eigenvalues ascending."""
    a = as_hermitian(h)
    if a.shape[0] == 0:
        return Spectrum(np.zeros(0), np.zeros((0, 0), dtype=np.complex128))
    w, v, _ = jacobi_raw(a, backend)
    order = np.argsort(w, kind="stable")
    return Spectrum(w[order], v[:, order])


def eigvalsh(h, backend: str | None = None) -> np.ndarray:
    return eigh(h, backend).eigenvalues


def max_eigenpair(h, backend: str | None = None) -> tuple[float, np.ndarray]:
    """Largest eigenvalue and a unit eigenvector of its eigenspace."""
    spec = eigh(h, backend)
    return float(spec.eigenvalues[-1]), spec.eigenvectors[:, -1].copy()


def hermitian_function(h, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Apply a real scalar function to a Hermitian matrix spectrally."""
    spec = eigh(h)
    vals = np.asarray(fn(spec.eigenvalues), dtype=float)
    vecs = spec.eigenvectors
    return (vecs * vals) @ vecs.conj().T


def heaviside(x, zero_tol: float = 1e-10):
    """Heaviside step with value 1/2 on |x| <= zero_tol."""
    x = np.asarray(x, dtype=float)
    return np.where(x > zero_tol, 1.0, np.where(x < -zero_tol, 0.0, 0.5))


# ---------------------------------------------------------------------------
# tensor helpers


def kron(a, b) -> np.ndarray:
    return np.kron(np.asarray(a), np.asarray(b))


def partial_transpose(m, dim_a: int, dim_b: int) -> np.ndarray:
    """Transpose on the second tensor factor of a (dim_a*dim_b)-square matrix."""
    m = np.asarray(m)
    if m.shape != (dim_a * dim_b, dim_a * dim_b):
        raise ValidationError(
            f"matrix shape {m.shape} does not match dimensions {dim_a}x{dim_b}"
        )
    t = m.reshape(dim_a, dim_b, dim_a, dim_b).transpose(0, 3, 2, 1)
    return t.reshape(dim_a * dim_b, dim_a * dim_b).copy()


# ---------------------------------------------------------------------------
# quadrature

# 15-point Kronrod extension of the 7-point Gauss rule (nodes on [0, 1) of the
# symmetric half; the last node is the center).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
# Gauss nodes are the odd-indexed Kronrod nodes on each side
_WG_FULL = np.zeros(15)
_WG_FULL[[1, 3, 5]] = _WG[:3]
_WG_FULL[[13, 11, 9]] = _WG[:3]
_WG_FULL[7] = _WG[3]


def _gk15(f, a: float, b: float) -> tuple[float, float]:
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    fx = np.asarray(f(mid + half * _NODES), dtype=float)
    k = half * float(np.dot(_WK, fx))
    g = half * float(np.dot(_WG_FULL, fx))
    return k, abs(k - g)


def integrate_adaptive(f, a: float, b: float, spec: QuadratureSpec) -> tuple[float, float]:
    """Globally adaptive Gauss-Kronrod on [a, b]; returns (value, error estimate)."""
    if a == b:
        return 0.0, 0.0
    val, err = _gk15(f, a, b)
    heap = [(-err, a, b, val)]
    total, total_err = val, err
    splits = 0
    while total_err > max(spec.abs_tol, spec.rel_tol * abs(total)):
        if splits >= spec.max_subdivisions:
            raise ConvergenceError(
                f"adaptive quadrature on [{a}, {b}] exceeded {spec.max_subdivisions} "
                f"subdivisions (estimate {total!r}, error {total_err:.3e})",
                partial=total,
            )
        neg_err, lo, hi, v = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        v1, e1 = _gk15(f, lo, mid)
        v2, e2 = _gk15(f, mid, hi)
        total += v1 + v2 - v
        total_err += e1 + e2 + neg_err
        heapq.heappush(heap, (-e1, lo, mid, v1))
        heapq.heappush(heap, (-e2, mid, hi, v2))
        splits += 1
    # resum to shed accumulated cancellation in the running total
    total = math.fsum(item[3] for item in heap)
    total_err = math.fsum(-item[0] for item in heap)
    return total, total_err


def integrate_piecewise(
    f: Callable[[np.ndarray], np.ndarray],
    breakpoints: Sequence[float],
    spec: QuadratureSpec | None = None,
) -> float:
    """Integrate ``f`` over [breakpoints[0], breakpoints[-1]] piece by piece.

    ``f`` must accept numpy arrays. Each piece between consecutive breakpoints
    is integrated adaptively to the tolerance in ``spec``.
    """
    spec = spec or QuadratureSpec()
    pts = np.asarray(breakpoints, dtype=float)
    if pts.ndim != 1 or pts.size < 2:
        raise ValidationError("need at least two breakpoints (the interval ends)")
    if np.any(np.diff(pts) < 0):
        raise ValidationError("breakpoints must be sorted")
    pieces = []
    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi > lo:
            pieces.append(integrate_adaptive(f, float(lo), float(hi), spec)[0])
    return math.fsum(pieces)


# ---------------------------------------------------------------------------
# least squares


def fit_least_squares(
    basis: Sequence[Callable[[np.ndarray], np.ndarray]], xs, ys
) -> tuple[np.ndarray, float]:
    """Least-squares coefficients for ``ys ~ sum_i c_i basis[i](xs)``.

    Returns the coefficients and the sum of squared residuals. Uses a
    Householder QR factorization; a rank-deficient design raises
    ``ValidationError`` naming the first dependent column.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError("xs and ys must be 1-d of equal length")
    if x.size < len(basis):
        raise ValidationError("need at least as many points as basis functions")
    design = np.column_stack([np.broadcast_to(np.asarray(b(x), dtype=float), x.shape) for b in basis])
    q, r = np.linalg.qr(design)
    diag = np.abs(np.diag(r))
    col_norms = np.linalg.norm(design, axis=0)
    for i, (d, cn) in enumerate(zip(diag, col_norms)):
        if cn == 0.0 or d <= 1e-10 * cn:
            raise ValidationError(f"design matrix is rank deficient at basis column {i}")
    coef = np.linalg.solve(r, q.T @ y)
    resid = y - design @ coef
    return coef, float(np.dot(resid, resid))
