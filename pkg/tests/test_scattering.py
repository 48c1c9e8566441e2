import numpy as np
import pytest

from splitwalk.coins import IDENTITY, a2_coin, coin_field_one_defect, make_shift
from splitwalk.errors import ConfigError, NonConvergenceError
from splitwalk.evolution import SplitStepWalk, WalkerState, position_distribution
from splitwalk.scattering import (
    BoundStates,
    GridWeights,
    MomentumWeights,
    approximate_wave_operator,
    detect_bound_states,
    fourier,
    momentum_weights,
    plancherel_mass,
    truncated_operator,
    unitary_eigensystem,
)
from splitwalk.scenarios import builtin_scenario
from splitwalk.spectral import BandParams, dispersion

S = 1 / np.sqrt(2)
BP = BandParams.from_pa(0.6, 0.8)


@pytest.fixture(scope="module")
def one_defect():
    return builtin_scenario("one_defect")


class TestFourier:
    def test_delta(self):
        psi = WalkerState.localized(0, (1, 0))
        k = np.linspace(0, 2 * np.pi, 9)
        np.testing.assert_allclose(fourier(psi, k), np.tile([1, 0], (9, 1)), atol=1e-15)

    def test_shifted_delta(self):
        psi = WalkerState.localized(3, (0, 1j))
        k = np.linspace(-1, 5, 13)
        np.testing.assert_allclose(fourier(psi, k)[:, 1], 1j * np.exp(-3j * k), atol=1e-14)

    def test_matches_direct_sum(self, rng):
        n = 1237
        amps = rng.normal(size=(n, 2)) + 1j * rng.normal(size=(n, 2))
        psi = WalkerState(-400, amps)
        k = rng.uniform(0, 2 * np.pi, 50)
        direct = np.exp(-1j * np.outer(k, psi.sites)) @ amps
        np.testing.assert_allclose(fourier(psi, k, chunk=7), direct, atol=1e-9 * np.abs(direct).max())

    def test_plancherel(self, rng):
        amps = np.zeros((200, 2), complex)
        amps[50:150] = rng.normal(size=(100, 2)) + 1j * rng.normal(size=(100, 2))
        psi = WalkerState(-100, amps)
        k = dispersion(1024, BP).k
        assert plancherel_mass(fourier(psi, k)) == pytest.approx(psi.norm() ** 2, rel=1e-10)

    def test_zero_state(self):
        assert np.all(fourier(WalkerState.zeros(0, 5), np.arange(4.0)) == 0)


class TestTruncation:
    def test_unitary(self, one_defect):
        u = truncated_operator(one_defect.walk, -20, 40).toarray()
        assert np.abs(u.conj().T @ u - np.eye(80)).max() <= 1e-13

    def test_eigensystem_against_numpy(self, one_defect):
        u = truncated_operator(one_defect.walk, -16, 32)
        evals, z = unitary_eigensystem(u, lambda h: np.ones_like(h, dtype=bool))
        dense = u.toarray()
        ref = np.sort_complex(np.round(np.linalg.eigvals(dense), 10))
        np.testing.assert_allclose(np.sort_complex(np.round(evals, 10)), ref, atol=1e-9)
        assert np.abs(dense @ z - z * evals).max() <= 1e-10


class TestBoundStates:
    def test_homogeneous_has_none(self):
        sc = builtin_scenario("homogeneous")
        b = detect_bound_states(sc.walk, sc.psi0)
        assert b.w0 == 0 and not b.vectors

    def test_one_defect_mass(self, one_defect):
        b = detect_bound_states(one_defect.walk, one_defect.psi0, verify_doubling=True)
        assert b.w0 == pytest.approx(8 / 9, abs=1e-10)
        assert b.w0_half_window == pytest.approx(b.w0, abs=1e-3)
        np.testing.assert_allclose(np.sort(b.eigenvalues.real), [-1, 1], atol=1e-10)

    def test_time_average_oracle(self, one_defect):
        # bound mass = long-time average of the weight left near the defect
        walk, psi = one_defect.walk, one_defect.psi0
        trapped = []
        state = psi
        for t in range(1, 3001):
            state = walk.evolve(state, 1)
            if t > 2000:
                d = position_distribution(state)
                trapped.append(d.probs[np.abs(d.xs) <= 20].sum())
        assert np.mean(trapped) == pytest.approx(8 / 9, abs=1e-2)

    def test_orthogonal_initial_state(self, one_defect):
        b = detect_bound_states(one_defect.walk, one_defect.psi0)
        # bound states decay exponentially, so a state 40 sites out has no overlap
        far = WalkerState.localized(40, (1, 0))
        b_far = detect_bound_states(one_defect.walk, far)
        assert b_far.w0 <= 1e-12
        assert len(b.vectors) == len(b_far.vectors)

    def test_support_must_be_central(self, one_defect):
        with pytest.raises(ConfigError):
            detect_bound_states(one_defect.walk, WalkerState.localized(100, (1, 0)), n_sites=256)


class TestWaveOperator:
    def test_homogeneous_is_identity(self):
        sc = builtin_scenario("homogeneous")
        res = approximate_wave_operator(sc.psi0, sc.walk)
        assert np.array_equal(res.phi.amps, sc.psi0.amps) and res.phi.x_min == sc.psi0.x_min
        assert res.w0 == 0 and res.residuals == []

    def test_mass_balance(self, one_defect):
        res = approximate_wave_operator(one_defect.psi0, one_defect.walk, strict=False)
        assert res.scattered_mass() + res.w0 == pytest.approx(1.0, abs=1e-10)
        assert res.monotone

    def test_bound_subtraction_needed(self, one_defect):
        walk, psi = one_defect.walk, one_defect.psi0
        none = BoundStates(0.0, np.zeros(0, complex), [], (-128, 256), np.zeros(0, complex))
        raw = approximate_wave_operator(psi, walk, schedule=(50, 100, 200, 400), bound=none, strict=False)
        sub = approximate_wave_operator(psi, walk, schedule=(50, 100, 200, 400), strict=False)
        raw_r = [r for _, r in raw.residuals]
        sub_r = [r for _, r in sub.residuals]
        assert min(raw_r) > 0.5
        assert sub_r[-1] < sub_r[0] and sub_r[-1] < 1e-2

    def test_strict_raises_with_result(self, one_defect):
        with pytest.raises(NonConvergenceError) as info:
            approximate_wave_operator(one_defect.psi0, one_defect.walk, schedule=(25, 50), tol=1e-12)
        assert info.value.result is not None
        assert info.value.result.T_used == 50
        assert info.value.exit_code == 4

    def test_report_keys(self, one_defect):
        res = approximate_wave_operator(one_defect.psi0, one_defect.walk, schedule=(25, 50, 100), strict=False)
        rep = res.report()
        assert set(rep) == {"T_used", "converged", "residuals", "w0", "gap_eigenvalues"}
        assert rep["T_used"] == 100 and rep["converged"] is False
        assert [r["T"] for r in rep["residuals"]] == [50, 100]

    def test_two_sided_parts(self):
        sc = builtin_scenario("two_phase")
        res = approximate_wave_operator(sc.psi0, sc.walk, schedule=(25, 50, 100), strict=False)
        assert res.two_sided
        assert res.scattered_mass() + res.w0 == pytest.approx(1.0, abs=1e-10)


class TestWeights:
    def test_delta_weights_sum_to_one(self):
        d = dispersion(64, BP)
        w1, w2 = momentum_weights(WalkerState.localized(0, (0.6, 0.8j)), d)
        np.testing.assert_allclose(w1 + w2, 1.0, atol=1e-14)

    def test_zero_state(self):
        w1, w2 = momentum_weights(WalkerState.zeros(0, 4), dispersion(16, BP))
        assert np.all(w1 == 0) and np.all(w2 == 0)

    def test_plancherel_of_weights(self, rng):
        amps = np.zeros((40, 2), complex)
        amps[5:35] = rng.normal(size=(30, 2)) + 1j * rng.normal(size=(30, 2))
        psi = WalkerState(-20, amps)
        w1, w2 = momentum_weights(psi, dispersion(512, BP))
        assert np.mean(w1 + w2) == pytest.approx(psi.norm() ** 2, rel=1e-12)

    def test_exact_matches_grid(self, rng):
        psi = WalkerState(-3, rng.normal(size=(7, 2)) + 0j)
        d = dispersion(128, BP)
        g1, g2 = momentum_weights(psi, d)
        e1, e2 = MomentumWeights(psi, BP)(d.k)
        np.testing.assert_allclose(e1, g1, atol=1e-13)
        np.testing.assert_allclose(e2, g2, atol=1e-13)

    def test_grid_interpolation(self):
        g = GridWeights.constant(0.25, 0.75)
        w1, w2 = g(np.array([0.0, 3.0, 7.0, -1.0]))
        np.testing.assert_allclose(w1, 0.25)
        np.testing.assert_allclose(w2, 0.75)
