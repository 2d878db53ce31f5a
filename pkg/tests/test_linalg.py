import math

import numpy as np
import pytest
import scipy.linalg as sla

from precession.linalg import (
    ConvergenceError,
    QuadratureSpec,
    ValidationError,
    eigh,
    eigvalsh,
    fit_least_squares,
    heaviside,
    hermitian_function,
    integrate_adaptive,
    integrate_piecewise,
    kron,
    max_eigenpair,
    partial_transpose,
)


def random_hermitian(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (a + a.conj().T) / 2


class TestEigh:
    def test_identity(self, backend):
        np.testing.assert_allclose(eigh(np.eye(3)).eigenvalues, [1, 1, 1], atol=1e-14)

    def test_diagonal(self, backend):
        np.testing.assert_allclose(eigh(np.diag([0, 0.5, 1])).eigenvalues, [0, 0.5, 1], atol=1e-14)

    def test_pauli_x(self, backend):
        np.testing.assert_allclose(eigh([[0, 1], [1, 0]]).eigenvalues, [-1, 1], atol=1e-14)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValidationError):
            eigh([[0, 1], [0, 0]])

    @pytest.mark.parametrize("n", [1, 2, 7, 32, 96])
    def test_random_against_lapack(self, backend, rng, n):
        h = random_hermitian(rng, n)
        spec = eigh(h)
        np.testing.assert_allclose(spec.eigenvalues, sla.eigvalsh(h), atol=1e-10 * max(1, n))
        v = spec.eigenvectors
        np.testing.assert_allclose(v.conj().T @ v, np.eye(n), atol=1e-12 * max(1, n))
        recon = (v * spec.eigenvalues) @ v.conj().T
        assert np.abs(recon - h).max() < 1e-11 * n

    @pytest.mark.slow
    def test_dim_256(self, rng):
        h = random_hermitian(rng, 256)
        spec = eigh(h)
        np.testing.assert_allclose(spec.eigenvalues, sla.eigvalsh(h), atol=1e-9)
        v = spec.eigenvectors
        assert np.abs(v.conj().T @ v - np.eye(256)).max() < 1e-11

    def test_ascending(self, rng):
        w = eigvalsh(random_hermitian(rng, 20))
        assert np.all(np.diff(w) >= 0)

    def test_real_symmetric_degenerate(self, backend):
        h = np.kron(np.eye(3), np.array([[2.0, 1.0], [1.0, 2.0]]))
        np.testing.assert_allclose(eigh(h).eigenvalues, [1, 1, 1, 3, 3, 3], atol=1e-13)


class TestMaxEigenpair:
    def test_identity(self):
        lam, v = max_eigenpair(np.eye(3))
        assert lam == pytest.approx(1.0, abs=1e-14)
        assert np.linalg.norm(v) == pytest.approx(1.0)

    def test_diag(self):
        lam, v = max_eigenpair(np.diag([1 / 3, 2 / 3]))
        assert lam == pytest.approx(2 / 3, abs=1e-14)
        assert abs(abs(v[1]) - 1) < 1e-14

    def test_pauli(self):
        lam, v = max_eigenpair([[0, 1], [1, 0]])
        assert lam == pytest.approx(1.0, abs=1e-14)
        assert abs(abs(np.vdot(v, [1, 1])) / math.sqrt(2) - 1) < 1e-12

    def test_matches_spectrum(self, rng):
        for n in (3, 11, 40):
            h = random_hermitian(rng, n)
            assert abs(max_eigenpair(h)[0] - eigh(h).eigenvalues[-1]) < 1e-10


class TestTensor:
    def test_identity(self):
        np.testing.assert_array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))

    def test_diag(self):
        np.testing.assert_array_equal(kron(np.diag([2.0, 5.0]), np.eye(2)), np.diag([2, 2, 5, 5]))

    def test_bell_eigen(self):
        sx = np.array([[0, 1], [1, 0]])
        phi = np.array([1, 0, 0, 1]) / math.sqrt(2)
        np.testing.assert_allclose(kron(sx, sx) @ phi, phi, atol=1e-15)

    def test_pt_product(self, rng):
        ra, rb = random_hermitian(rng, 2), random_hermitian(rng, 3)
        np.testing.assert_allclose(partial_transpose(np.kron(ra, rb), 2, 3), np.kron(ra, rb.T), atol=1e-15)

    def test_pt_involution_trace(self, rng):
        m = random_hermitian(rng, 6)
        pt = partial_transpose(m, 3, 2)
        np.testing.assert_array_equal(partial_transpose(pt, 3, 2), m)
        assert np.trace(pt) == np.trace(m)
        np.testing.assert_array_equal(pt, pt.conj().T)

    def test_pt_bell(self):
        phi = np.array([1, 0, 0, 1]) / math.sqrt(2)
        w = eigvalsh(partial_transpose(np.outer(phi, phi), 2, 2))
        assert w[0] == pytest.approx(-0.5, abs=1e-14)

    def test_pt_dimension_error(self):
        with pytest.raises(ValidationError):
            partial_transpose(np.eye(6), 4, 2)


class TestSpectralFunctions:
    def test_heaviside_zero_is_half(self):
        np.testing.assert_array_equal(heaviside(np.array([-1.0, 0.0, 1e-12, 2.0])), [0, 0.5, 0.5, 1])

    def test_projector(self):
        sx = np.array([[0, 1], [1, 0]], dtype=float)
        p = hermitian_function(sx, heaviside)
        np.testing.assert_allclose(p, [[0.5, 0.5], [0.5, 0.5]], atol=1e-14)


class TestQuadrature:
    def test_constant(self):
        assert integrate_piecewise(lambda x: np.ones_like(x), [0, math.pi / 2, math.pi]) == pytest.approx(math.pi, abs=1e-13)

    def test_sine(self):
        assert abs(integrate_piecewise(np.sin, [0, math.pi]) - 2) < 1e-10

    def test_abs_cos(self):
        assert abs(integrate_piecewise(lambda x: np.abs(np.cos(x)), [0, math.pi / 2, math.pi]) - 2) < 1e-10

    @pytest.mark.parametrize("deg", range(6))
    def test_polynomials_exact(self, deg, rng):
        c = rng.standard_normal(deg + 1)
        p = np.polynomial.Polynomial(c)
        exact = p.integ()(2.5) - p.integ()(-1.0)
        assert abs(integrate_piecewise(p, [-1.0, 0.3, 2.5]) - exact) < 1e-12

    def test_adaptive_error_estimate(self):
        val, err = integrate_adaptive(lambda x: np.exp(-x * x), 0, 3, QuadratureSpec())
        assert abs(val - math.sqrt(math.pi) / 2 * math.erf(3)) < 1e-12
        assert err >= 0

    def test_subdivision_cap(self):
        spec = QuadratureSpec(abs_tol=1e-15, rel_tol=1e-15, max_subdivisions=3)
        with pytest.raises(ConvergenceError) as exc:
            integrate_adaptive(lambda x: np.sin(1 / (x + 1e-3)), 0, 1, spec)
        assert exc.value.partial is not None


class TestFit:
    def test_line(self):
        xs = np.arange(5.0)
        coef, ssr = fit_least_squares([lambda x: np.ones_like(x), lambda x: x], xs, 2 * xs + 1)
        np.testing.assert_allclose(coef, [1, 2], atol=1e-13)
        assert ssr < 1e-24

    def test_mean(self):
        coef, ssr = fit_least_squares([lambda x: np.ones_like(x)], [0.0, 1.0], [1.0, 3.0])
        assert coef[0] == pytest.approx(2.0)
        assert ssr == pytest.approx(2.0)

    def test_bound_ansatz_roundtrip(self):
        n = np.arange(5, 80, dtype=float)
        basis = [lambda x: np.ones_like(x), lambda x: (x + 1) ** -0.5, lambda x: (x + 1) ** -1.5]
        true = np.array([0.709364, -0.031, 0.012])
        ys = sum(c * b(n) for c, b in zip(true, basis))
        coef, _ = fit_least_squares(basis, n, ys)
        np.testing.assert_allclose(coef, true, atol=1e-8)

    def test_rank_deficient(self):
        with pytest.raises(ValidationError, match="column 1"):
            fit_least_squares([lambda x: x, lambda x: 2 * x], [1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
