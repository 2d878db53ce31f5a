import math
from fractions import Fraction

import numpy as np
import pytest
import scipy.linalg as sla
from scipy.stats import unitary_group

import oracles as O
from precession.angles import canonicalize, from_vartheta, in_triangle, random_interior, theta3, triangle_vertices_vartheta
from precession.entanglement import (
    SdpConfig,
    SdpProblem,
    chi4_scores,
    gme_certify,
    ppt_margins,
    psi4_scores,
    psi4_state,
    q_collective,
    q_total_spin,
    random_product_lower_bound,
    sdp_ppt_max,
    sep_bound_ensemble,
    sep_bound_spin,
    squeezed_angles,
)
from precession.fixtures import bell_states, chi4_coefficients, psi4
from precession.linalg import ConvergenceError, ValidationError
from precession.spin import max_score_spin

PI = math.pi
PAIRS = [("1/2", "1/2"), ("1/2", "1"), ("1/2", "3/2"), ("1", "1")]


def dims(ja, jb):
    return int(2 * Fraction(ja)) + 1, int(2 * Fraction(jb)) + 1


def collective_oracle(spins, thetas):
    ops = [O.spin_ops(Fraction(j)) for j in spins]
    d = [op[0].shape[0] for op in ops]
    total = []
    for axis in range(2):
        acc = 0
        for i, op in enumerate(ops):
            mats = [np.eye(x) for x in d]
            mats[i] = op[axis]
            m = mats[0]
            for x in mats[1:]:
                m = np.kron(m, x)
            acc = acc + m
        total.append(acc)
    jx, jy = total
    return sum(O.step_projector(math.cos(t) * jx + math.sin(t) * jy) for t in thetas) / len(thetas)


class TestCollectiveOperators:
    def test_qubit_pair_basic(self):
        q = q_total_spin("1/2", "1/2", theta3())
        w = np.linalg.eigvalsh(q)
        assert w[0] >= -1e-12 and w[-1] <= 1 + 1e-12
        assert np.trace(q).real == pytest.approx(2.0, abs=1e-12)

    def test_sector_decomposition(self):
        q = q_total_spin("1/2", "1/2", theta3())
        # commutes with the total-spin Casimir, so it is block diagonal in singlet + triplet
        sx = O.spin_ops(Fraction(1, 2))
        jt = [np.kron(a, np.eye(2)) + np.kron(np.eye(2), a) for a in sx]
        casimir = sum(m @ m for m in jt)
        assert np.abs(q @ casimir - casimir @ q).max() < 1e-12
        top = np.linalg.eigvalsh(q)[-1]
        assert top == pytest.approx(max(0.5, max_score_spin(1, theta3())), abs=1e-12)

    @pytest.mark.parametrize("spins", [["1/2", "1/2"], ["1/2", "1"], ["1", "1/2", "1/2"]])
    def test_oracle(self, spins):
        rng = np.random.default_rng(len(spins))
        a = random_interior(rng)
        assert np.abs(q_collective(spins, a) - collective_oracle(spins, a.thetas)).max() < 1e-10


class TestSdp:
    def test_constant_objective(self, backend):
        sol = sdp_ppt_max(SdpProblem(np.eye(6) / 6, 2, 3))
        assert sol.value == pytest.approx(1 / 6, abs=1e-7)

    def test_bell_overlap(self, backend):
        phi = bell_states()["phi+"]
        c = np.outer(phi, phi.conj())
        sol = sdp_ppt_max(SdpProblem(c, 2, 2))
        assert sol.value == pytest.approx(0.5, abs=1e-6)
        assert O.product_score_lower(c, 2, 2) == pytest.approx(0.5, abs=1e-9)

    def test_qubit_pair_below_classical(self):
        assert sep_bound_spin("1/2", "1/2", theta3()) <= 2 / 3 + 1e-4

    def test_feasible_state(self):
        sol = sdp_ppt_max(SdpProblem(q_total_spin("1/2", "1", theta3()), 2, 3))
        e_min, e_pt, tr = ppt_margins(sol.state, 2, 3)
        assert e_min >= -1e-7 and e_pt >= -1e-7 and abs(tr) < 1e-8
        assert sol.upper_bound >= sol.value - 1e-9
        assert sol.dual_gap_estimate < 1e-5

    @pytest.mark.parametrize("ja,jb", PAIRS)
    def test_brackets(self, ja, jb):
        rng = np.random.default_rng(PAIRS.index((ja, jb)))
        da, db = dims(ja, jb)
        for a in [theta3()] + [random_interior(rng) for _ in range(3)]:
            c = q_total_spin(ja, jb, a)
            sol = sdp_ppt_max(SdpProblem(c, da, db))
            lower = max(O.product_score_lower(c, da, db, restarts=5), random_product_lower_bound(c, da, db, 2000))
            assert lower <= sol.value + 1e-6
            assert sol.value <= sla.eigvalsh(c)[-1] + 1e-9
            assert sol.value <= 2 / 3 + 1e-4

    def test_local_unitary_invariance(self):
        c = q_total_spin("1/2", "1", canonicalize((0, 1.9, 4.0)))
        u = np.kron(unitary_group.rvs(2, random_state=1), unitary_group.rvs(3, random_state=2))
        v1 = sdp_ppt_max(SdpProblem(c, 2, 3)).value
        v2 = sdp_ppt_max(SdpProblem(u @ c @ u.conj().T, 2, 3)).value
        assert abs(v1 - v2) < 1e-6

    def test_backends_agree(self):
        from precession import _backend

        c = q_total_spin("1", "1", canonicalize((0, 2.2, 4.1)))
        vals = []
        for name in ("numba", "numpy"):
            _backend.set_backend(name)
            vals.append(sdp_ppt_max(SdpProblem(c, 3, 3)).value)
        _backend.set_backend("numba")
        assert abs(vals[0] - vals[1]) < 1e-7

    def test_iteration_cap(self):
        c = q_total_spin("1", "1", theta3())
        with pytest.raises(ConvergenceError) as exc:
            sdp_ppt_max(SdpProblem(c, 3, 3), SdpConfig(max_iter=5))
        assert exc.value.partial is not None

    def test_shape_validation(self):
        with pytest.raises(ValidationError):
            SdpProblem(np.eye(5), 2, 3)

    def test_triangle_grid_qubits(self):
        verts = triangle_vertices_vartheta()
        pts = []
        for u in np.linspace(0.05, 0.9, 5):
            for v in np.linspace(0.05, 0.9, 5):
                if u + v < 0.95:
                    pts.append(verts[0] + u * (verts[1] - verts[0]) + v * (verts[2] - verts[0]))
        for p in pts:
            a = from_vartheta(p)
            assert sep_bound_spin("1/2", "1/2", a) <= 2 / 3 + 1e-4

    def test_ensemble_covers_pairs(self):
        v, arg = sep_bound_ensemble(["1/2", "1/2", "1/2"], theta3())
        assert v <= 2 / 3 + 1e-4
        assert arg is not None


class TestExampleStates:
    def test_psi4_normalized(self):
        assert np.linalg.norm(psi4()) == pytest.approx(1.0, abs=1e-10)
        assert np.linalg.norm(psi4_state()) == pytest.approx(1.0, abs=1e-10)

    def test_psi4_scores(self):
        original, modified = psi4_scores()
        assert abs(original - 0.6) < 5e-3
        assert abs(modified - 0.67) < 5e-3

    def test_chi4(self):
        assert np.linalg.norm(chi4_coefficients()) == pytest.approx(1.0, abs=1e-10)
        shifted, equal = chi4_scores()
        assert abs(shifted - 0.669) < 2e-3
        assert equal <= 2 / 3

    def test_squeezed(self):
        assert squeezed_angles(0.0).thetas == theta3().thetas
        big = squeezed_angles(20.0)
        assert big.vector == pytest.approx((PI / 2, 3 * PI / 2), abs=1e-12)
        mid = squeezed_angles(0.3)
        assert in_triangle(*mid.vector, strict=True)

    def test_gme(self):
        assert gme_certify(0.67, 2 / 3, 1e-3).certified
        assert not gme_certify(0.6, 2 / 3, 1e-3).certified
        assert not gme_certify(0.7, 0.7, 1e-9).certified
