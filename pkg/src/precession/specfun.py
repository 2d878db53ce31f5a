"""Special functions for the oscillator bounds.

Series are summed directly while they converge geometrically. On the unit
circle the tails are summed with Levin's u-transform, and the spread between
successive transform orders is reported as the tail estimate.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .linalg import ConvergenceError, ValidationError

MAX_TERMS = 1_000_000
_EPS = 2.2e-16


@dataclass(frozen=True)
class SeriesResult:
    value: complex
    terms_used: int
    tail_bound: float
    method: str = "direct"  # direct, levin, richardson, terminating or continuation


# ---------------------------------------------------------------------------
# sine integral


def _si_series(x: float) -> float:
    # Si(x) = sum_k (-1)^k x^(2k+1) / ((2k+1) (2k+1)!)
    term = x
    total = x
    x2 = x * x
    k = 0
    while True:
        k += 1
        term *= -x2 / ((2 * k) * (2 * k + 1))
        add = term / (2 * k + 1)
        total += add
        if abs(add) < 1e-17 * abs(total):
            break
    return total - 0.5 * math.pi


def _si_continued_fraction(x: float) -> float:
    # E1(ix) by modified Lentz; si(x) = Im(e^{-ix} h) for x > 0
    tiny = 1e-300
    b = complex(1.0, x)
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(2, 10_000):
        a = -float((i - 1) ** 2)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    else:  # pragma: no cover - converges in a few dozen steps for x >= 4
        raise ConvergenceError("sine-integral continued fraction did not converge")
    h *= complex(math.cos(x), -math.sin(x))
    return h.imag


def si(x: float) -> float:
    """si(x) = -int_x^inf sin(t)/t dt = Si(x) - pi/2."""
    x = float(x)
    if not math.isfinite(x):
        raise ValidationError("si requires a finite argument")
    if x == 0.0:
        return -0.5 * math.pi
    ax = abs(x)
    val = _si_series(ax) if ax < 4.0 else _si_continued_fraction(ax)
    # si(-x) = -si(x) - pi
    return val if x > 0 else -val - math.pi


def si_integral_product(a: float, b: float, upper: float = math.inf) -> float:
    """int_0^L si(a x) si(b x) dx for 0 < a <= b.

    For L = inf this is pi/(2b); for finite L it uses the antiderivative built
    from si and cosine terms.
    """
    if not (0 < a <= b):
        raise ValidationError("need 0 < a <= b")
    if math.isinf(upper):
        return math.pi / (2.0 * b)
    L = upper
    return (
        math.pi / (2 * b)
        + si(a * L) * si(b * L) * L
        - (b - a) / (2 * a * b) * si((b - a) * L)
        - (b + a) / (2 * a * b) * si((b + a) * L)
        + math.cos(a * L) / a * si(b * L)
        + math.cos(b * L) / b * si(a * L)
    )


# ---------------------------------------------------------------------------
# binomials


def log_central_binom(n: int) -> float:
    """ln C(2n, n)."""
    if n < 0:
        raise ValidationError("n must be nonnegative")
    return math.lgamma(2 * n + 1) - 2.0 * math.lgamma(n + 1)


def central_binom_scaled(n: int) -> float:
    """C(2n, n) / 4^n."""
    return math.exp(log_central_binom(n) - 2 * n * math.log(2.0))


# ---------------------------------------------------------------------------
# series acceleration


def levin_u(partial_sums: np.ndarray, terms: np.ndarray, start: int, order: int, beta: float = 1.0) -> complex:
    """Levin u-transform of order ``order`` built on partial sums start..start+order.

    ``terms[n]`` is the n-th series term and ``partial_sums[n]`` the sum of terms
    0..n. The remainder estimate is (beta + n) * terms[n].
    """
    k = order
    num = 0j
    den = 0j
    ref = beta + start + k
    for j in range(k + 1):
        n = start + j
        omega = (beta + n) * terms[n]
        if omega == 0:
            return complex(partial_sums[n])
        w = (-1) ** j * math.comb(k, j) * ((beta + n) / ref) ** (k - 1) / omega
        num += w * partial_sums[n]
        den += w
    return num / den


def _levin_sum(terms: np.ndarray, start: int, max_order: int) -> tuple[complex, float]:
    """Accelerated limit and spread estimate from a run of Levin orders."""
    sums = np.cumsum(terms)
    estimates = []
    for order in range(max(4, max_order - 6), max_order + 1):
        if start + order >= len(terms):
            break
        estimates.append(levin_u(sums, terms, start, order))
    if not estimates:
        raise ConvergenceError("not enough terms for Levin acceleration")
    best = estimates[-1]
    spread = max(abs(e - best) for e in estimates[-4:])
    return best, spread


def roots_of_unity_filter(values_at_roots, residue: int, modulus: int = 3) -> complex:
    """(1/M) sum_j w^{-j r} f(w^j): picks the terms with index = r mod M.

    ``values_at_roots[j]`` holds f(exp(2 pi i j / M)).
    """
    total = 0j
    for j, f in enumerate(values_at_roots):
        total += cmath.exp(-2j * math.pi * j * residue / modulus) * f
    return total / modulus


# ---------------------------------------------------------------------------
# hypergeometric 3F2


def _is_nonpos_int(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


def _hyp_terms(a_params, b_params, z: complex, count: int) -> np.ndarray:
    terms = np.empty(count, dtype=np.complex128)
    t = 1.0 + 0j
    for m in range(count):
        terms[m] = t
        num = z
        for a in a_params:
            num *= a + m
        den = float(m + 1)
        for b in b_params:
            den *= b + m
        t = t * num / den
    return terms


def hyp3f2(a1: float, a2: float, a3: float, b1: float, b2: float, z: complex,
           tol: float = 1e-14, max_terms: int = MAX_TERMS) -> SeriesResult:
    """Generalized hypergeometric 3F2(a1, a2, a3; b1, b2; z) for |z| <= 1."""
    z = complex(z)
    az = abs(z)
    if az > 1.0 + 1e-14:
        raise ValidationError("hyp3f2 is implemented on the closed unit disk only")
    a_params = (a1, a2, a3)
    b_params = (b1, b2)
    n_term = None
    for a in a_params:
        if _is_nonpos_int(a):
            n_term = int(-a) + 1 if n_term is None else min(n_term, int(-a) + 1)
    for b in b_params:
        if _is_nonpos_int(b) and (n_term is None or int(-b) + 1 <= n_term - 1):
            raise ValidationError(f"lower parameter {b} is a nonpositive integer")
    if z == 0:
        return SeriesResult(1.0 + 0j, 1, 0.0, "direct")
    if n_term is not None:
        terms = _hyp_terms(a_params, b_params, z, n_term)
        return SeriesResult(complex(math.fsum(terms.real) + 1j * math.fsum(terms.imag)), n_term, 0.0, "terminating")
    excess = sum(b_params) - sum(a_params)
    scale = max(abs(p) for p in (*a_params, *b_params))
    if az < 1.0 - 1e-12:
        return _direct_sum(a_params, b_params, z, tol, max_terms, scale)
    if excess <= 0:
        raise ValidationError(f"3F2 diverges on |z|=1 when b1+b2-a1-a2-a3 = {excess} <= 0")
    if abs(z - 1) <= 1e-12:
        return _unit_richardson(a_params, b_params, excess, scale)
    start = int(2 * scale) + 20
    order = 24
    terms = _hyp_terms(a_params, b_params, z, start + order + 2)
    value, spread = _levin_sum(terms, start, order)
    bound = 10.0 * spread + 1e-15 * abs(value)
    if bound > 1e-6 * max(1.0, abs(value)):
        raise ConvergenceError(f"3F2 acceleration did not settle (spread {spread:.2e})", partial=value)
    return SeriesResult(value, len(terms), bound, "levin")


def _unit_richardson(a_params, b_params, excess: float, scale: float, levels: int = 6) -> SeriesResult:
    # At z = 1 the terms fall off like m^(-1-excess) times a series in 1/m, so the
    # partial sum S(N) misses a tail N^-excess (d0 + d1/N + ...). Doubling N and
    # eliminating those powers one at a time recovers the limit.
    n0 = max(256, int(32 * scale))
    count = n0 * 2 ** (levels - 1)
    m = np.arange(count, dtype=float)
    ratio = np.ones(count)
    for a in a_params:
        ratio *= a + m
    for b in b_params:
        ratio /= b + m
    ratio /= m + 1
    terms = np.empty(count)
    terms[0] = 1.0
    terms[1:] = np.cumprod(ratio[:-1])
    sums = np.cumsum(terms)
    table = [float(sums[n0 * 2 ** i - 1]) for i in range(levels)]
    prev = table
    for j in range(levels - 1):
        fac = 2.0 ** (excess + j)
        cur = [(fac * prev[i + 1] - prev[i]) / (fac - 1.0) for i in range(len(prev) - 1)]
        prev, last = cur, prev
    value = prev[0]
    spread = abs(value - last[-1])
    bound = 10.0 * spread + 1e-15 * abs(value)
    if bound > 1e-6 * max(1.0, abs(value)):
        raise ConvergenceError(f"3F2 at unit argument did not settle (spread {spread:.2e})", partial=value)
    return SeriesResult(complex(value), count, bound, "richardson")


def _direct_sum(a_params, b_params, z, tol, max_terms, scale) -> SeriesResult:
    az = abs(z)
    total = 0j
    t = 1.0 + 0j
    m = 0
    while m < max_terms:
        total += t
        num = z
        for a in a_params:
            num *= a + m
        den = float(m + 1)
        for b in b_params:
            den *= b + m
        nxt = t * num / den
        m += 1
        ratio = abs(nxt / t) if t != 0 else 0.0
        if m > scale + 2:
            rho = max(ratio, az)
            if rho < 1.0:
                tail = abs(nxt) / (1.0 - rho)
                if tail <= tol * max(1.0, abs(total)):
                    return SeriesResult(total, m, tail, "direct")
        t = nxt
        if t == 0:
            return SeriesResult(total, m, 0.0, "direct")
    raise ConvergenceError(f"3F2 series did not converge in {max_terms} terms", partial=total)


# ---------------------------------------------------------------------------
# incomplete beta


def _beta_terms(z: complex, a: float, b: float, count: int) -> np.ndarray:
    # (1-b)_n / n! * z^n / (n + a), without the z^a factor
    n = np.arange(count)
    if np.any(n + a == 0):
        bad = int(np.flatnonzero(n + a == 0)[0])
        raise ValidationError(f"incomplete beta series term n={bad} has n + a = 0")
    coef = np.empty(count, dtype=np.complex128)
    c = 1.0 + 0j
    for i in range(count):
        coef[i] = c
        c = c * (i + 1 - b) / (i + 1) * z
    return coef / (n + a)


def _gamma_ratio_beta(a: float, b: float) -> float:
    """Beta(a, b) continued to nonpositive arguments via reciprocal gamma."""

    def rgamma(x):
        if _is_nonpos_int(x):
            return 0.0
        return 1.0 / math.gamma(x)

    if _is_nonpos_int(a) or _is_nonpos_int(b):
        raise ValidationError("Beta(a, b) has a pole at nonpositive integer arguments")
    return math.gamma(a) * math.gamma(b) * rgamma(a + b)


def inc_beta(z: complex, a: float, b: float, tol: float = 1e-14,
             max_terms: int = MAX_TERMS) -> SeriesResult:
    """B(z; a, b) = sum_n (1-b)_n/n! z^(n+a)/(n+a) with the principal branch of z^a.

    At z = 1 the value is the complete beta function, continued analytically in
    (a, b). For b <= 0 the series itself diverges there; the continued value
    equals its finite part, which is what the oscillator kernel needs because
    the divergent parts cancel between paired terms.
    """
    z = complex(z)
    if abs(z) > 1.0 + 1e-14:
        raise ValidationError("inc_beta is implemented on the closed unit disk only")
    if _is_nonpos_int(a):
        raise ValidationError(
            f"incomplete beta series term n={int(-a)} has n + a = 0 (a must not be a nonpositive integer)")
    if z == 0:
        if a > 0:
            return SeriesResult(0j, 0, 0.0, "direct")
        raise ValidationError("B(0; a, b) is singular for a <= 0")
    za = cmath.exp(a * cmath.log(z))
    if float(b).is_integer() and b >= 1:
        # (1-b)_n vanishes for n >= b: finite sum
        count = int(b)
        terms = _beta_terms(z, a, b, count)
        return SeriesResult(za * complex(terms.sum()), count, 0.0, "terminating")
    if abs(z - 1) <= 1e-15:
        return SeriesResult(complex(_gamma_ratio_beta(a, b)), 0, 0.0, "continuation")
    az = abs(z)
    if az < 1.0 - 1e-12:
        total = 0j
        c = 1.0 + 0j
        n = 0
        while n < max_terms:
            if n + a == 0:
                raise ValidationError(f"incomplete beta series term n={n} has n + a = 0")
            t = c / (n + a)
            total += t
            c = c * (n + 1 - b) / (n + 1) * z
            n += 1
            if n > abs(a) + abs(b) + 2:
                rho = max(az * abs(n - b) / (n) * abs(n - 1 + a) / abs(n + a), az)
                if rho < 1.0:
                    tail = abs(c / (n + a)) / (1.0 - rho)
                    if tail <= tol * max(1.0, abs(total)):
                        return SeriesResult(za * total, n, tail * abs(za), "direct")
        raise ConvergenceError("incomplete beta series did not converge", partial=za * total)
    start = int(2 * (abs(a) + abs(b))) + 20
    order = 24
    terms = _beta_terms(z, a, b, start + order + 2)
    value, spread = _levin_sum(terms, start, order)
    bound = 10.0 * spread + 1e-15 * abs(value)
    if bound > 1e-6 * max(1.0, abs(value)):
        raise ConvergenceError(f"incomplete beta acceleration did not settle (spread {spread:.2e})",
                               partial=za * value)
    return SeriesResult(za * value, len(terms), bound, "levin")


# ---------------------------------------------------------------------------
# l(z; n, n') kernel


def l_series_terms(z: complex, n: int, n2: int, count: int) -> np.ndarray:
    """Terms C(2m,m) 2(m+1/2) 4^-m z^m / ((m-n+1/2)(m-n2+1/2)) for m < count."""
    m = np.arange(count)
    b = np.empty(count)
    b[0] = 1.0
    if count > 1:
        b[1:] = np.cumprod((m[1:] - 0.5) / m[1:])
    zm = np.exp(1j * np.angle(z) * m) * abs(z) ** m if z != 0 else (m == 0).astype(complex)
    return b * (2 * m + 1) * zm / ((m - n + 0.5) * (m - n2 + 0.5))


def _power_tail(s: float, n: int) -> float:
    """sum_{m >= n} m^-s by Euler-Maclaurin (error ~ n^(-s-3))."""
    return n ** (1 - s) / (s - 1) + 0.5 * n ** -s + s * n ** (-s - 1) / 12.0


def l_direct(z: complex, n: int, n2: int, count: int = 1_000_000) -> complex:
    """Brute-force l(z; n, n') used as an oracle for l_kernel.

    Inside the disk the partial sum is already converged. On the unit circle away
    from z = 1 the oscillating tail is Levin-accelerated. At z = 1 the terms are
    positive and fall off like m^(-3/2); the tail beyond ``count`` terms is taken
    from a least-squares fit t_m ~ m^(-3/2) (c0 + c1/m + c2/m^2) summed with
    Euler-Maclaurin.
    """
    z = complex(z)
    if abs(z) < 1.0 - 1e-12:
        return complex(l_series_terms(z, n, n2, count).sum())
    if abs(z - 1) > 1e-12:
        terms = l_series_terms(z, n, n2, max(n, n2) * 2 + 100)
        start = max(n, n2) * 2 + 40
        head = complex(terms[:start].sum())
        value, _ = _levin_sum(terms[start:start + 40], 0, 24)
        return head + value
    terms = l_series_terms(z, n, n2, count).real
    head = math.fsum(terms)
    m = np.arange(count // 2, count, dtype=float)
    basis = np.stack([m ** -1.5, m ** -2.5, m ** -3.5], axis=1)
    scale = basis[0]
    coef, *_ = np.linalg.lstsq(basis / scale, terms[count // 2:], rcond=None)
    coef = coef / scale
    tail = sum(c * _power_tail(1.5 + j, count) for j, c in enumerate(coef))
    return complex(head + tail)


def l_kernel(z: complex, n: int, n2: int) -> complex:
    """l(z; n, n') from its closed-form cases in terms of 3F2 and incomplete beta."""
    if n < 0 or n2 < 0:
        raise ValidationError("l_kernel needs n, n' >= 0")
    z = complex(z)
    if z == 0:
        return complex(1.0 / ((0.5 - n) * (0.5 - n2)))
    if n == n2:
        a = 0.5 - n
        f1 = hyp3f2(0.5, a, a, a + 1, a + 1, z).value
        f2 = hyp3f2(1.5, a + 1, a + 1, a + 2, a + 2, z).value
        return f1 / a ** 2 + z * f2 / (a + 1) ** 2
    logz = cmath.log(z)

    def zpow(c):
        return cmath.exp(c * logz)

    if n == 0:
        return 2.0 * zpow(n2 - 0.5) * inc_beta(z, 0.5 - n2, 0.5).value
    if n2 == 0:
        return 2.0 * zpow(n - 0.5) * inc_beta(z, 0.5 - n, 0.5).value
    g1 = zpow(n - 0.5) * inc_beta(z, 0.5 - n, -0.5).value
    g2 = zpow(n2 - 0.5) * inc_beta(z, 0.5 - n2, -0.5).value
    return g1 / (n - n2) + g2 / (n2 - n)
