import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eitlaser import analytic, fock, propagator
from eitlaser.analytic import Branch, Ordering, SystemParams
from eitlaser.errors import ConvergenceError, DimensionMismatchError, InvalidDimensionError
from eitlaser.propagator import AtomBasis, AtomFieldState

TWO = AtomBasis.TWO_LEVEL
THREE = AtomBasis.THREE_LEVEL


def circ_pi(a, b):
    d = (a - b) % math.pi
    return min(d, math.pi - d)


class TestAtomFieldState:
    def test_vector_layout(self):
        s = AtomFieldState.product(TWO, [0.6, 0.8], fock.fock_state(1, 3))
        np.testing.assert_allclose(s.vector, [0, 0.6, 0, 0, 0.8, 0])
        assert s.norm() == pytest.approx(1.0)

    def test_shape_checked(self):
        with pytest.raises(DimensionMismatchError):
            AtomFieldState(THREE, np.zeros((2, 4)))

    def test_initial_levels(self):
        s = propagator.initial_state(5, THREE)
        np.testing.assert_allclose(s.atomic_populations(), [0.5, 0.5, 0.0])
        assert s.project_ground(1).norm() == pytest.approx(1.0)
        assert s.project_ground(2).norm() == pytest.approx(0.0)
        np.testing.assert_allclose(propagator.initial_state(5, level="-").atomic_populations(), [0, 1])

    def test_to_three_level(self):
        s = propagator.initial_state(4).to_three_level()
        assert s.basis is THREE and s.excited_population() == 0.0


class TestFidelity:
    def test_self(self):
        s = propagator.initial_state(6)
        assert propagator.fidelity(s, s) == pytest.approx(1.0)

    def test_orthogonal_branches(self):
        u = propagator.initial_state(6, level="+")
        v = propagator.initial_state(6, level="-")
        assert propagator.fidelity(u, v) == 0.0

    def test_vacuum_coherent(self):
        a, dim = 0.9 + 0.4j, 40
        u = AtomFieldState.product(TWO, [1, 0], fock.vacuum(dim))
        v = AtomFieldState.product(TWO, [1, 0], fock.coherent_fock_vector(a, dim))
        assert propagator.fidelity(u, v) == pytest.approx(math.exp(-abs(a) ** 2), rel=1e-10)

    def test_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            propagator.fidelity(propagator.initial_state(4), propagator.initial_state(5))


class TestHamiltonians:
    params = SystemParams.dimensionless(0.7, 20)

    @pytest.mark.parametrize("builder", ["I", "J", "K", "eff"])
    def test_hermitian(self, builder):
        p, d = self.params, 10
        h = {
            "I": lambda: propagator.hamiltonian_I(p, d),
            "J": lambda: propagator.hamiltonian_J(0.37, p, d),
            "K": lambda: propagator.hamiltonian_K(0.37, p, d),
            "eff": lambda: propagator.effective_hamiltonian(p, d),
        }[builder]()
        np.testing.assert_allclose(h, h.conj().T, atol=1e-13)

    def test_J_is_rotated_I(self):
        p, d, t = self.params, 8, 0.23
        h1 = p.omega12 * np.kron(np.diag([1.0, -1.0, 0.0]), np.eye(d))
        v1 = propagator.hamiltonian_I(p, d) - h1
        u = np.diag(np.exp(1j * np.diag(h1) * t))
        np.testing.assert_allclose(propagator.hamiltonian_J(t, p, d), u @ v1 @ u.conj().T, atol=1e-12)

    def test_effective_decomposition(self):
        p, d = self.params, 12
        diff = propagator.effective_hamiltonian(p, d) - sum(propagator.effective_hamiltonian_parts(p, d))
        keep = np.concatenate([np.arange(d - 1) + k * d for k in range(3)])
        assert np.abs(diff[np.ix_(keep, keep)]).max() < 1e-12

    def test_K_is_H2_frame_of_V2(self):
        p, d, t = self.params, 10, 0.9
        h2, v2, _ = propagator.effective_hamiltonian_parts(p, d)
        ground = np.arange(2 * d)
        u = np.diag(np.exp(1j * np.diag(h2)[ground] * t))
        np.testing.assert_allclose(
            propagator.hamiltonian_K(t, p, d), u @ v2[np.ix_(ground, ground)] @ u.conj().T, atol=1e-12
        )


class TestNestedCommutator:
    def test_same_time_is_zero(self):
        p = SystemParams.dimensionless(1.2, 50)
        assert propagator.nested_commutator_norm(0.4, 0.4, 0.4, p, 12) == 0.0

    @given(st.floats(0.1, 2.0), st.floats(5, 200), st.lists(st.floats(0, 1), min_size=3, max_size=3))
    def test_interior_vanishes(self, r, ratio, fs):
        p = SystemParams.dimensionless(r, ratio)
        val = propagator.nested_commutator_norm(*(f * p.t0 for f in fs), p, 16)
        assert val <= 1e-10 * (r * p.delta) ** 3

    def test_boundary_is_nonzero(self):
        p = SystemParams.dimensionless(1.0, 50)
        full = propagator.nested_commutator_norm(0.1, 1.3, 2.9, p, 12, interior=False)
        assert full > 1e-3

    def test_needs_dim8(self):
        with pytest.raises(InvalidDimensionError):
            propagator.nested_commutator_norm(0, 1, 2, SystemParams.dimensionless(1, 50), 7)


class TestMagnus:
    def test_identity_at_zero(self):
        p = SystemParams.dimensionless(0.5, 50)
        s = propagator.initial_state(20)
        np.testing.assert_allclose(propagator.magnus_UK(0.0, p, s).vector, s.vector, atol=1e-14)

    def test_without_ordering_is_bare_displacement(self):
        p = SystemParams.dimensionless(0.8, 50)
        t, d = 0.3 * p.t0, 40
        s = propagator.magnus_UK(t, p, propagator.initial_state(d), Ordering.WITHOUT)
        b = 0.8 * (1 - np.exp(1j * t))
        np.testing.assert_allclose(s.amplitudes[0], fock.displace(fock.vacuum(d), b).coeffs / math.sqrt(2), atol=1e-12)

    @pytest.mark.parametrize("ordering", list(Ordering))
    def test_composition_reproduces_closed_form(self, ordering):
        p = SystemParams.dimensionless(1.0, 50)
        t, d = 0.37 * p.t0, 50
        k = propagator.magnus_UK(t, p, propagator.initial_state(d), ordering)
        lab = propagator.apply_U1(propagator.apply_U2(k, t, p), t, p)
        ref = propagator.analytic_state(t, p, d, ordering)
        assert propagator.fidelity(lab, ref) >= 1 - 1e-8

    def test_frames_round_trip(self):
        p = SystemParams.dimensionless(0.6, 50)
        t, d = 0.8 * p.t0, 40
        k = propagator.analytic_state(t, p, d, frame="K")
        direct = propagator.magnus_UK(t, p, propagator.initial_state(d))
        assert propagator.fidelity(k, direct) == pytest.approx(1.0, abs=1e-12)

    def test_two_level_only(self):
        p = SystemParams.dimensionless(0.6, 50)
        with pytest.raises(DimensionMismatchError):
            propagator.magnus_UK(1.0, p, propagator.initial_state(10, THREE))

    def test_analytic_state_undersized(self):
        p = SystemParams.dimensionless(1.8, 50)
        with pytest.raises(ConvergenceError):
            propagator.analytic_state(p.t0 / 2, p, 20)


class TestPropagateHK:
    def test_zero_time(self):
        p = SystemParams.dimensionless(0.5, 50)
        s = propagator.initial_state(20)
        res = propagator.propagate_HK(s, 0.0, p, 20)
        assert res.step_count == 0
        np.testing.assert_array_equal(res.final_state.vector, s.vector)

    def test_default_steps(self):
        p = SystemParams.dimensionless(0.5, 50)
        assert propagator.default_steps_K(p.t0, p) == 200
        assert propagator.default_steps_K(p.t0 / 4, p) == 50
        assert propagator.default_steps_J(2 * math.pi / p.omega12, p) == 40

    def test_plus_branch_stays_coherent(self):
        p = SystemParams.dimensionless(1.8, 50)
        t, d = 0.6 * p.t0, fock.recommended_dim(3.6)
        s = propagator.initial_state(d, level="+")
        res = propagator.propagate_HK(s, t, p, d, steps=2000)
        target = propagator.magnus_UK(t, p, s)
        assert propagator.fidelity(res.final_state, target) >= 1 - 1e-6
        assert res.max_norm_drift <= 1e-9

    def test_relative_phase_is_exact_not_naive(self):
        p = SystemParams.dimensionless(0.5, 50)
        t, d = p.t0 / 2, 40
        s = propagator.initial_state(d)
        res = propagator.converge_steps(lambda n: propagator.propagate_HK(s, t, p, d, steps=n, samples=2), 200)
        lab = propagator.apply_U1(propagator.apply_U2(res.final_state, t, p), t, p)
        ph = propagator.branch_relative_phase(
            lab, complex(analytic.alpha_pm(t, p, Branch.PLUS)), complex(analytic.alpha_pm(t, p, Branch.MINUS))
        )
        assert circ_pi(ph, analytic.phase_exact(t, p)) < 1e-3
        naive = analytic.phase_no_ordering(t, p)
        assert (naive - ph) % math.pi == pytest.approx(0.785, abs=1e-3)

    def test_step_halving(self):
        p = SystemParams.dimensionless(1.0, 50)
        t, d = p.t0 / 2, 40
        s = propagator.initial_state(d)
        finals = [propagator.propagate_HK(s, t, p, d, steps=n, samples=2).final_state for n in (25, 50, 100, 200)]
        deficits = [1 - propagator.fidelity(a, b) for a, b in zip(finals, finals[1:])]
        for a, b in zip(deficits, deficits[1:]):
            assert b <= a / 3 or b < 1e-12

    def test_fourth_order_option(self):
        p = SystemParams.dimensionless(1.0, 50)
        t, d = p.t0 / 2, 40
        s = propagator.initial_state(d)
        exact = propagator.magnus_UK(t, p, s)
        err = {m: 1 - propagator.fidelity(propagator.propagate_HK(s, t, p, d, steps=50, method=m).final_state, exact)
               for m in ("midpoint", "magnus4")}
        assert err["magnus4"] < err["midpoint"] / 100

    def test_restart_matches_single_run(self):
        p = SystemParams.dimensionless(0.9, 50)
        d = 40
        s = propagator.initial_state(d)
        one = propagator.propagate_HK(s, 0.5 * p.t0, p, d, steps=100).final_state
        half = propagator.propagate_HK(s, 0.25 * p.t0, p, d, steps=50).final_state
        two = propagator.propagate_HK(half, 0.25 * p.t0, p, d, steps=50, t_start=0.25 * p.t0).final_state
        assert propagator.fidelity(one, two) == pytest.approx(1.0, abs=1e-12)

    def test_reference_observable(self):
        p = SystemParams.dimensionless(0.5, 50)
        d = 30
        s = propagator.initial_state(d)
        res = propagator.propagate_HK(
            s, p.t0, p, d, steps=800, samples=5,
            reference=lambda t: propagator.analytic_state(t, p, d, frame="K"),
        )
        assert len(res.times) == 5
        assert res.times[-1] == pytest.approx(p.t0)
        assert min(rec.fidelity for rec in res.observables) >= 1 - 1e-6

    def test_truncation_detected(self):
        p = SystemParams.dimensionless(1.8, 50)
        s = propagator.initial_state(8)
        with pytest.raises(ConvergenceError, match="increase dim"):
            propagator.propagate_HK(s, p.t0 / 2, p, 8)

    def test_wrong_basis(self):
        p = SystemParams.dimensionless(0.5, 50)
        with pytest.raises(DimensionMismatchError):
            propagator.propagate_HK(propagator.initial_state(8, THREE), 1.0, p, 8)


class TestFirstAndSecondPictures:
    def test_zero_time(self):
        p = SystemParams.dimensionless(0.5, 8)
        s = propagator.initial_state(10, THREE)
        for run in (propagator.propagate_HI, propagator.propagate_HJ):
            np.testing.assert_array_equal(run(s, 0.0, p, 10).final_state.vector, s.vector)

    def test_frame_equivalence(self):
        p = SystemParams.dimensionless(0.5, 8)
        t, d = p.t0 / 8, 24
        s = propagator.initial_state(d, THREE)
        ri = propagator.propagate_HI(s, t, p, d, samples=2)
        rj = propagator.propagate_HJ(s, t, p, d, method="magnus4", samples=2)
        assert propagator.fidelity(propagator.apply_U1(rj.final_state, t, p), ri.final_state) >= 1 - 1e-6
        # |3> is untouched by the frame rotation, so the J-run stays under the I-run bound
        assert rj.max_excited_population <= ri.max_excited_population * (1 + 1e-2)

    def test_excited_population_shrinks_with_ratio(self):
        out = []
        for ratio in (8, 50):
            p = SystemParams.dimensionless(0.5, ratio)
            s = propagator.initial_state(24, THREE)
            res = propagator.propagate_HI(s, p.t0 / 2, p, 24, samples=2)
            ref = propagator.analytic_state(p.t0 / 2, p, 24, basis=THREE)
            out.append((res.max_excited_population, propagator.fidelity(res.final_state, ref)))
        assert out[1][0] < out[0][0]
        assert out[1][1] > out[0][1]

    def test_HI_step_rule(self):
        p = SystemParams.dimensionless(0.5, 8)
        s = propagator.initial_state(16, THREE)
        res = propagator.propagate_HI(s, p.t0 / 4, p, 16, samples=2)
        scale = np.max(np.abs(np.linalg.eigvalsh(propagator.hamiltonian_I(p, 16))))
        assert scale * (p.t0 / 4) / res.step_count <= 0.05 + 1e-12

    def test_unknown_method(self):
        p = SystemParams.dimensionless(0.5, 8)
        with pytest.raises(ValueError):
            propagator.propagate_HJ(propagator.initial_state(10, THREE), 1.0, p, 10, method="rk4")


class TestConvergeSteps:
    def test_gives_up(self):
        p = SystemParams.dimensionless(1.0, 50)
        s = propagator.initial_state(30)
        with pytest.raises(ConvergenceError):
            propagator.converge_steps(
                lambda n: propagator.propagate_HK(s, p.t0, p, 30, steps=n, samples=2), 2, tol=1e-14, max_doublings=2
            )
