"""Harmonic-oscillator scores in the number basis.

Covers the Fock matrices of the averaged Heaviside operator, exact matrix
elements of A3 = (Q3 - 1/2)^2 - 1/36, the resulting lower and upper bounds on
the maximum three-angle score, the trace bound for K equally weighted angles,
and the squeeze/rotation map that carries any interior three-angle protocol
onto the symmetric one.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import specfun
from .angles import TWO_PI, ProbingAngles, classical_max_score, theta3
from .linalg import (
    ConvergenceError,
    QuadratureSpec,
    ValidationError,
    as_hermitian,
    eigvalsh,
    fit_least_squares,
    integrate_piecewise,
    max_eigenpair,
)

P3_CLASSICAL = 2.0 / 3.0
SHIFT = (P3_CLASSICAL - 0.5) ** 2  # 1/36
OMEGA = cmath.exp(2j * math.pi / 3)
ROOTS = (1.0 + 0j, OMEGA, OMEGA.conjugate())
# best point estimate of the three-angle maximum score
P3_ESTIMATE = 0.709364


@dataclass(frozen=True)
class FockMatrix:
    cutoff: int
    matrix: np.ndarray

    def __post_init__(self):
        if self.matrix.shape != (self.cutoff + 1, self.cutoff + 1):
            raise ValidationError("matrix shape does not match cutoff")


@dataclass(frozen=True)
class BoundRecord:
    name: str
    value: float
    kind: str  # closed_form, eigensolve, quadrature, fit
    tolerance: float = 0.0

    def __post_init__(self):
        if self.tolerance < 0:
            raise ValidationError("tolerance must be nonnegative")


@dataclass(frozen=True)
class SymplecticParams:
    phi0: float
    lambda1: float
    phi2: float
    lambda3: float


# ---------------------------------------------------------------------------
# Theta(X) in the number basis


def theta_x_element(n: int, n2: int) -> float:
    """<n| Theta(X) - 1/2 |n'>; zero unless n - n' is odd."""
    if n < 0 or n2 < 0:
        raise ValidationError("Fock labels must be nonnegative")
    if (n - n2) % 2 == 0:
        return 0.0
    d = n - n2
    sign = -1.0 if ((d - 1) // 2) % 2 else 1.0
    h, h2 = n // 2, n2 // 2
    log_mag = (
        0.5 * (specfun.log_central_binom(h) + specfun.log_central_binom(h2))
        - 0.5 * (n + n2) * math.log(2.0)
        - 0.5 * math.log(math.pi)
    )
    odd = n if n % 2 else n2
    log_mag += 0.5 * math.log(odd)
    return sign * math.exp(log_mag) / d


def theta_x_matrix(cutoff: int) -> np.ndarray:
    """Real symmetric matrix of Theta(X) - 1/2 on labels 0..cutoff."""
    n = np.arange(cutoff + 1)
    h = n // 2
    logc = np.array([specfun.log_central_binom(int(k)) for k in range(h.max() + 1)])
    # per-label factor: sqrt(n^(n mod 2) C(2h, h) / pi) 2^(-n/2)
    odd_factor = np.where(n % 2 == 1, 0.5 * np.log(np.maximum(n, 1)), 0.0)
    lf = 0.5 * logc[h] - 0.5 * n * math.log(2.0) + odd_factor
    d = n[:, None] - n[None, :]
    mag = np.exp(lf[:, None] + lf[None, :] - 0.5 * math.log(math.pi))
    odd = d % 2 != 0
    sign = np.where(((d - 1) // 2) % 2 == 0, 1.0, -1.0)
    out = np.zeros_like(mag)
    out[odd] = sign[odd] * mag[odd] / d[odd]
    return out


def q_matrix(angles: ProbingAngles, cutoff: int) -> FockMatrix:
    """Truncation of Q = (1/K) sum_k Theta(X(theta_k)) to labels 0..cutoff."""
    if cutoff < 0:
        raise ValidationError("cutoff must be nonnegative")
    base = theta_x_matrix(cutoff)
    n = np.arange(cutoff + 1)
    d = n[:, None] - n[None, :]
    phase = np.zeros(d.shape, dtype=complex)
    for t in angles.thetas:
        phase += np.exp(1j * t * d)
    m = base * phase / angles.K + 0.5 * np.eye(cutoff + 1)
    return FockMatrix(cutoff, as_hermitian(m))


def fock_score(state, angles: ProbingAngles, cutoff: int | None = None) -> float:
    """<state| Q(angles) |state> for a normalized state in the number basis."""
    psi = np.asarray(state, dtype=complex).ravel()
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-10:
        raise ValidationError(f"state must be normalized, got norm {norm!r}")
    cutoff = psi.size - 1 if cutoff is None else cutoff
    if psi.size > cutoff + 1:
        raise ValidationError("state has support above the cutoff")
    q = q_matrix(angles, cutoff).matrix[: psi.size, : psi.size]
    return float(np.real(np.vdot(psi, q @ psi)))


def max_score(angles: ProbingAngles, cutoff: int) -> tuple[float, np.ndarray]:
    """Largest eigenvalue of the truncated Q and its eigenvector."""
    return max_eigenpair(q_matrix(angles, cutoff).matrix)


# ---------------------------------------------------------------------------
# A3 matrix elements


def _pref(p: int, q: int) -> float:
    """(-1)^(p+q) 2^-(p+q) sqrt(C(2p,p) C(2q,q)) / (8 pi)."""
    sign = -1.0 if (p + q) % 2 else 1.0
    lg = 0.5 * (specfun.log_central_binom(p) + specfun.log_central_binom(q)) - (p + q) * math.log(2.0)
    return sign * math.exp(lg) / (8.0 * math.pi)


def _filter3(values: Sequence[complex], residue: int) -> complex:
    return specfun.roots_of_unity_filter(values, residue % 3, 3)


def a3_fock_element(label: int, label2: int) -> float:
    """<label| A3 |label2> built from l_kernel at the three cube roots of unity."""
    if label < 0 or label2 < 0:
        raise ValidationError("Fock labels must be nonnegative")
    if (label - label2) % 6:
        return 0.0
    delta = SHIFT if label == label2 else 0.0
    if label % 2 == 0:
        p, q = label // 2, label2 // 2
        vals = [specfun.l_kernel(z, p, q) for z in ROOTS]
        val = _pref(p, q) * _filter3(vals, p + 1)
    else:
        p, q = label // 2, label2 // 2
        big_p, big_q = p + 1, q + 1
        # sum_m b_m z^m / ((m - P + 1/2)(m - Q + 1/2)) = (l(z;P,Q) - l(z;0,Q)) / (2P)
        vals = [
            (specfun.l_kernel(z, big_p, big_q) - specfun.l_kernel(z, 0, big_q)) / (2 * big_p)
            for z in ROOTS
        ]
        val = math.sqrt((2 * p + 1) * (2 * q + 1)) * _pref(p, q) * _filter3(vals, p + 2)
    if abs(val.imag) > 1e-10 * max(1.0, abs(val.real)):
        raise ConvergenceError(f"A3 element ({label}, {label2}) has imaginary part {val.imag:.3e}")
    return float(val.real) - delta


def a3_element(n: int, n2: int, k: int) -> float:
    """<6n+k| A3 |6n'+k> for residue k in 0..5."""
    if not 0 <= k <= 5:
        raise ValidationError("residue k must be in 0..5")
    return a3_fock_element(6 * n + k, 6 * n2 + k)


@lru_cache(maxsize=8)
def _fh_tables(p_max: int) -> tuple[np.ndarray, np.ndarray]:
    """F(z;p) and H(z;p) for p = 0..p_max at the three cube roots of unity.

    F(z;p) = sum_m b_m z^m / (m + 1/2 - p) and H(z;p) the same with the
    denominator squared, b_m = C(2m,m)/4^m. Both follow from p = 0 by forward
    recurrences that lose no accuracy (the multiplier has modulus below one).
    """
    f = np.zeros((3, p_max + 1), dtype=complex)
    h = np.zeros((3, p_max + 1), dtype=complex)
    for i, z in enumerate(ROOTS):
        if i == 0:
            f[i, 0] = math.pi
            h[i, 0] = 2.0 * math.pi * math.log(2.0)
        else:
            rz = cmath.sqrt(z)
            f[i, 0] = 2.0 * cmath.asin(rz) / rz
            h[i, 0] = 4.0 * specfun.hyp3f2(0.5, 0.5, 0.5, 1.5, 1.5, z).value
        s = cmath.sqrt(1.0 - z)
        for p in range(1, p_max + 1):
            f[i, p] = (s - z * (p - 1) * f[i, p - 1]) / (0.5 - p)
            h[i, p] = (f[i, p] - z * f[i, p - 1] - z * (p - 1) * h[i, p - 1]) / (0.5 - p)
    return f, h


def _block_labels(residue: int, n_hat: int) -> np.ndarray:
    top = 6 * n_hat
    return np.arange(residue, top + 1, 6)


def a3_block(residue: int, n_hat: int) -> np.ndarray:
    """Residue block of A3 compressed to labels <= 6 n_hat (fast recurrence path)."""
    labels = _block_labels(residue, n_hat)
    if labels.size == 0:
        return np.zeros((0, 0))
    half = labels // 2
    f, h = _fh_tables(int(half.max()) + 2)
    logc = np.array([specfun.log_central_binom(int(p)) for p in half])
    sign = np.where(half % 2 == 0, 1.0, -1.0)
    g = sign * np.exp(0.5 * logc - half * math.log(2.0))
    pref = np.outer(g, g) / (8.0 * math.pi)
    p = half[:, None].astype(float)
    q = half[None, :].astype(float)
    same = half[:, None] == half[None, :]
    pi_, qi = half[:, None], half[None, :]
    total = np.zeros(pref.shape, dtype=complex)
    if residue % 2 == 0:
        r = half[0] + 1
        for j in range(3):
            fp, fq = f[j, pi_], f[j, qi]
            with np.errstate(divide="ignore", invalid="ignore"):
                off = 2.0 * (p * fp - q * fq) / (p - q)
            diag = 2.0 * fp + 2.0 * p * h[j, pi_]
            lval = np.where(same, diag, off)
            total += np.exp(-2j * math.pi * j * r / 3) * lval
    else:
        bp, bq = pi_ + 1, qi + 1
        r = half[0] + 2
        for j in range(3):
            fp, fq = f[j, bp], f[j, bq]
            with np.errstate(divide="ignore", invalid="ignore"):
                off = (fp - fq) / (bp - bq)
            lval = np.where(same, h[j, bp], off)
            total += np.exp(-2j * math.pi * j * r / 3) * lval
        pref = pref * np.sqrt(np.outer(labels, labels).astype(float))
    block = pref * total / 3.0
    if np.max(np.abs(block.imag), initial=0.0) > 1e-10:
        raise ConvergenceError("A3 block has a non-negligible imaginary part")
    out = block.real - SHIFT * np.eye(labels.size)
    return 0.5 * (out + out.T)


def a3_truncation(n_hat: int) -> list[np.ndarray]:
    """All six residue blocks of A3 compressed to labels 0..6 n_hat."""
    return [a3_block(r, n_hat) for r in range(6)]


def a3_max_eigenvalue(n_hat: int) -> float:
    return max(float(eigvalsh(b)[-1]) for b in a3_truncation(n_hat) if b.size)


def score_from_a3(lam: float) -> float:
    return 0.5 + math.sqrt(lam + SHIFT)


def lower_bound_p3(n_hat: int) -> BoundRecord:
    """Rigorous lower bound from the compression of A3 to labels 0..6 n_hat."""
    if n_hat < 1:
        raise ValidationError("n_hat must be >= 1")
    lam = a3_max_eigenvalue(n_hat)
    return BoundRecord(f"P3_lower(n={n_hat})", score_from_a3(lam), "eigensolve", 1e-12)


def lower_bound_sequence(n_values: Sequence[int]) -> list[tuple[int, float]]:
    return [(int(n), lower_bound_p3(int(n)).value) for n in n_values]


def fit_lower_bounds(seq: Sequence[tuple[int, float]]) -> tuple[BoundRecord, np.ndarray]:
    """Fit P(n) = P_inf - a1 (n+1)^-1/2 - a2 (n+1)^-3/2; returns the estimate and (P_inf, a1, a2)."""
    ns = np.array([s[0] for s in seq], dtype=float)
    ps = np.array([s[1] for s in seq], dtype=float)
    basis = [
        lambda x: np.ones_like(x),
        lambda x: -((x + 1.0) ** -0.5),
        lambda x: -((x + 1.0) ** -1.5),
    ]
    coef, ssr = fit_least_squares(basis, ns, ps)
    rms = math.sqrt(ssr / len(ns))
    return BoundRecord("P3_fit", float(coef[0]), "fit", rms), coef


def upper_bound_p3_closed() -> BoundRecord:
    """(1/2)(1 + (1/3) sqrt(1 + (2/pi) sqrt(3 ln 2)))."""
    val = 0.5 * (1.0 + math.sqrt(1.0 + (2.0 / math.pi) * math.sqrt(3.0 * math.log(2.0))) / 3.0)
    return BoundRecord("P3_upper", val, "closed_form", 1e-15)


def score_from_trace(trace: float, K: int) -> float:
    """P >= bound from tr(A^2) >= 2 [(P - 1/2)^2 - (1/2K)^2]^2."""
    return 0.5 * (1.0 + math.sqrt(1.0 + 2.0 * K * K * math.sqrt(2.0 * trace)) / K)


def _a3_trace_integrand(phi: np.ndarray) -> np.ndarray:
    # after the radial integral int_0^inf si(a u) si(b u) du = pi / (2 max(a, b))
    c = 4.0 / math.sqrt(3.0)
    lo = c * np.cos(phi + math.pi / 3) * np.cos(phi - math.pi / 3)
    mid = c * np.cos(phi) * np.cos(phi + math.pi / 3)
    hi = c * np.cos(phi) * np.cos(phi - math.pi / 3)
    half_pi = 0.5 * math.pi
    # squares of the three si terms, then the cross terms with their signs
    return (
        half_pi / lo + half_pi / mid + half_pi / hi
        - math.pi / mid - math.pi / hi + math.pi / hi
    )


def trace_a3_squared(spec: QuadratureSpec | None = None) -> tuple[float, float]:
    """tr(A3^2): closed form and a quadrature of the angular integral."""
    closed = 6.0 * math.log(2.0) / (18.0 * math.pi) ** 2
    spec = spec or QuadratureSpec(abs_tol=1e-12, rel_tol=1e-13)
    quad = integrate_piecewise(_a3_trace_integrand, [0.0, math.pi / 6], spec) / (27.0 * math.pi ** 3)
    return closed, quad


# ---------------------------------------------------------------------------
# K-angle trace bound


def _pair_data(thetas: np.ndarray):
    j, k = np.triu_indices(thetas.size, 1)
    return j, k, np.abs(np.sin(thetas[j] - thetas[k]))


def _k_trace_integrand(thetas: np.ndarray):
    j, k, s = _pair_data(thetas)

    def f(phi: np.ndarray) -> np.ndarray:
        phi = np.atleast_1d(phi)
        c = np.cos(phi[:, None] - thetas[None, :])
        cc = c[:, j] * c[:, k]
        g = s[None, :] / np.abs(cc)
        sg = np.sign(cc)
        # ordered pairs: each unordered pair appears twice on each side
        mins = np.minimum(g[:, :, None], g[:, None, :])
        signs = sg[:, :, None] * sg[:, None, :]
        return 4.0 * np.sum(signs * mins, axis=(1, 2))

    return f


def _quad_coeffs(s1: float, c1: float, s2: float, c2: float) -> np.ndarray:
    # (s1 t + c1)(s2 t + c2) as coefficients in t, highest power first
    return np.array([s1 * s2, s1 * c2 + c1 * s2, c1 * c2])


def k_angle_breakpoints(angles: ProbingAngles) -> np.ndarray:
    """Points in [-pi, pi] where the angular integrand can fail to be smooth.

    These are the cosine zeros theta_k + (2l+1) pi/2 and the roots of
    |s_jk| c_l c_m = +-|s_lm| c_j c_k, which become quadratics in tan(phi).
    """
    t = angles.as_array()
    pts = [-math.pi, math.pi, -0.5 * math.pi, 0.5 * math.pi]
    for tk in t:
        for shift in (-1.5, -0.5, 0.5, 1.5):
            x = tk + shift * math.pi
            x = (x + math.pi) % TWO_PI - math.pi
            pts.append(x)
    j, k, s = _pair_data(t)
    cs, sn = np.cos(t), np.sin(t)
    # cos(phi - a) / cos(phi) = cos a + tan(phi) sin a
    for p in range(j.size):
        for r in range(p + 1, j.size):
            a, b = j[p], k[p]
            c_, d = j[r], k[r]
            lin1 = _quad_coeffs(sn[c_], cs[c_], sn[d], cs[d]) * s[p]
            lin2 = _quad_coeffs(sn[a], cs[a], sn[b], cs[b]) * s[r]
            for sgn in (1.0, -1.0):
                poly = lin1 - sgn * lin2
                if not np.all(np.isfinite(poly)):
                    raise ConvergenceError(f"breakpoint polynomial failed for tuple {(a, b, c_, d)}")
                if np.max(np.abs(poly)) < 1e-14:
                    continue
                # drop leading zeros so np.roots sees the true degree
                while abs(poly[0]) < 1e-14 * np.max(np.abs(poly)):
                    poly = poly[1:]
                for root in np.roots(poly):
                    if abs(root.imag) > 1e-9 * max(1.0, abs(root)):
                        continue
                    base = math.atan(root.real)
                    for x in (base - math.pi, base, base + math.pi):
                        if -math.pi <= x <= math.pi:
                            pts.append(x)
    pts = np.sort(np.array(pts))
    keep = np.concatenate([[True], np.diff(pts) > 1e-12])
    return pts[keep]


def trace_a_squared(angles: ProbingAngles, spec: QuadratureSpec | None = None) -> float:
    """tr[A(theta)^2] for the K-angle operator, by piecewise quadrature in phi."""
    info = classical_max_score(angles)
    K = angles.K
    if info.delta != (K - 1) // 2:
        raise ValidationError("trace bound needs classical score (1 + 1/K)/2")
    spec = spec or QuadratureSpec(abs_tol=1e-11, rel_tol=1e-12, max_subdivisions=200)
    t = angles.as_array()
    val = integrate_piecewise(_k_trace_integrand(t), k_angle_breakpoints(angles), spec)
    return val / (64.0 * math.pi ** 2 * K ** 4)


def upper_bound_pk(angles: ProbingAngles, spec: QuadratureSpec | None = None) -> BoundRecord:
    tr = trace_a_squared(angles, spec)
    return BoundRecord(f"P_upper(K={angles.K})", score_from_trace(tr, angles.K), "quadrature", 1e-8)


# ---------------------------------------------------------------------------
# symplectic map onto the symmetric protocol


def _phi0(t1: float, t2: float) -> float:
    pi = math.pi
    if (pi < t2 <= 2 * t1 and pi / 2 < t1 <= 2 * pi / 3) or (pi < t2 <= t1 / 2 + pi and 2 * pi / 3 <= t1 < pi):
        return 0.0
    if (2 * pi - t1 <= t2 < pi + t1 and pi / 2 < t1 <= 2 * pi / 3) or (
        t1 / 2 + pi <= t2 < pi + t1 and 2 * pi / 3 <= t1 < pi
    ):
        return t1
    if (2 * t1 <= t2 <= 2 * pi - t1 and pi / 2 < t1 <= 2 * pi / 3) or (pi < t2 < pi + t1 and 0 < t1 <= pi / 2):
        return t2
    raise ValidationError(f"angles ({t1}, {t2}) fall outside every case of the rotation table")


def _lambda1(a: float, b: float) -> float:
    if abs(a - math.pi / 2) < 1e-6 or abs(b - 1.5 * math.pi) < 1e-6:
        c1, c2 = 1.0 / math.tan(a), 1.0 / math.tan(b)
        return -0.25 * math.log(c1 * (c1 - 2.0 * c2))
    ta, tb = math.tan(a), math.tan(b)
    return 0.25 * math.log(ta * ta * tb / (tb - 2.0 * ta))


def symplectic_params(angles: ProbingAngles) -> SymplecticParams:
    """Rotation/squeeze parameters carrying theta3 onto an interior protocol."""
    if angles.K != 3:
        raise ValidationError("symplectic construction is defined for K = 3")
    info = classical_max_score(angles)
    if info.delta != 1 or info.boundary:
        raise ValidationError("angles must lie strictly inside the interior region")
    t = angles.thetas
    t1, t2 = (t[1] - t[0]) % TWO_PI, (t[2] - t[0]) % TWO_PI
    if t1 > t2:
        t1, t2 = t2, t1
    phi0 = _phi0(t1, t2)
    if phi0 == 0.0:
        a, b = t1, t2
    elif phi0 == t1:
        a, b = t2 - t1, TWO_PI - t1
    else:
        a, b = TWO_PI - t2, TWO_PI - (t2 - t1)
    lam1 = _lambda1(a, b)
    ratio = abs(math.tan(a)) / math.tan(b) if abs(b - 1.5 * math.pi) >= 1e-6 else (
        abs(1.0 / math.tan(b)) / abs(1.0 / math.tan(a))
    )
    phi2 = 0.5 * math.pi + math.atan(1.0 / math.sqrt(1.0 + 2.0 * ratio))
    lam3 = 0.25 * (2.0 * math.log(abs(math.tan(phi2))) - math.log(3.0))
    return SymplecticParams(phi0, lam1, phi2, lam3)


def rotate_angle(theta: float, phi: float) -> float:
    return (theta - phi) % TWO_PI


def squeeze_angle(theta: float, lam: float) -> float:
    return math.atan2(math.exp(-lam) * math.sin(theta), math.exp(lam) * math.cos(theta)) % TWO_PI


def apply_symplectic(params: SymplecticParams, thetas: Sequence[float]) -> list[float]:
    """Quadrature angles after conjugating by R(phi0) S(lambda1) R(phi2) S(lambda3)."""
    out = []
    for th in thetas:
        x = rotate_angle(th, params.phi0)
        x = squeeze_angle(x, params.lambda1)
        x = rotate_angle(x, params.phi2)
        x = squeeze_angle(x, params.lambda3)
        out.append(x)
    return out


# ---------------------------------------------------------------------------
# backflow


def backflow_bound(p_lower: float | None = None, p_upper: float | None = None) -> dict[str, BoundRecord]:
    """3 P - 2 at the interior point (3pi/4, 5pi/4), for the bounds and the point estimate."""
    p_lower = P3_ESTIMATE if p_lower is None else p_lower
    p_upper = upper_bound_p3_closed().value if p_upper is None else p_upper
    return {
        "lower": BoundRecord("backflow_lower", 3.0 * p_lower - 2.0, "closed_form", 3e-6),
        "upper": BoundRecord("backflow_upper", 3.0 * p_upper - 2.0, "closed_form", 1e-14),
        "estimate": BoundRecord("backflow_estimate", 3.0 * P3_ESTIMATE - 2.0, "fit", 3e-6),
    }


def backflow_angles() -> ProbingAngles:
    return ProbingAngles((0.0, 0.75 * math.pi, 1.25 * math.pi))


__all__ = [
    "BoundRecord",
    "FockMatrix",
    "SymplecticParams",
    "a3_block",
    "a3_element",
    "a3_fock_element",
    "a3_truncation",
    "apply_symplectic",
    "backflow_bound",
    "fit_lower_bounds",
    "fock_score",
    "k_angle_breakpoints",
    "lower_bound_p3",
    "q_matrix",
    "symplectic_params",
    "theta_x_element",
    "theta_x_matrix",
    "trace_a3_squared",
    "trace_a_squared",
    "upper_bound_p3_closed",
    "upper_bound_pk",
    "theta3",
]
