import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from splitwalk.coins import (
    IDENTITY,
    SIGMA_X,
    a2_coin,
    coin_field_custom,
    coin_field_homogeneous,
    coin_field_one_defect,
    make_shift,
)
from splitwalk.errors import BoundaryTouchError, ConfigError
from splitwalk.evolution import (
    Distribution,
    SplitStepWalk,
    WalkerState,
    build_local_transfer,
    evolve,
    kitagawa_equivalence_check,
    position_distribution,
    rescaled_moments,
    step,
    step_inverse,
)

from conftest import dense_walk_matrix, random_unitary

S = 1 / np.sqrt(2)


def _field_from_array(mats, x_min):
    n = len(mats)
    return coin_field_custom(lambda x: mats[x - x_min] if 0 <= x - x_min < n else IDENTITY, IDENTITY, window=(x_min, x_min + n - 1))


def _random_state(rng, x_min, n, pad=2):
    amps = np.zeros((n, 2), complex)
    amps[pad:-pad] = rng.normal(size=(n - 2 * pad, 2)) + 1j * rng.normal(size=(n - 2 * pad, 2))
    amps /= np.linalg.norm(amps)
    return WalkerState(x_min, amps)


class TestTransfer:
    def test_identity_coin(self):
        sh = make_shift(0.6, 0.8)
        tr = build_local_transfer(sh, coin_field_homogeneous(IDENTITY), -3, 7)
        np.testing.assert_allclose(tr.P[0], [[0, 0.8], [0, 0]], atol=1e-15)
        np.testing.assert_allclose(tr.Q[0], [[0, 0], [0.8, 0]], atol=1e-15)
        np.testing.assert_allclose(tr.R[0], [[0.6, 0], [0, -0.6]], atol=1e-15)

    def test_complex_q_conjugated_in_q_block(self):
        q = 0.8j
        tr = build_local_transfer(make_shift(0.6, q), coin_field_homogeneous(IDENTITY), 0, 3)
        assert tr.P[0, 0, 1] == pytest.approx(q)
        assert tr.Q[0, 1, 0] == pytest.approx(np.conj(q))

    def test_p_zero_has_no_lazy_term(self):
        tr = build_local_transfer(make_shift(0.0, 1.0), coin_field_homogeneous(IDENTITY), 0, 4)
        assert np.all(tr.R == 0)

    def test_matches_dense_oracle(self, rng):
        x_min, n = -16, 33
        for _ in range(5):
            mats = random_unitary(rng, n)
            q = 0.8 * np.exp(1j * rng.uniform(0, 2 * np.pi))
            sh = make_shift(0.6, q)
            tr = build_local_transfer(sh, _field_from_array(mats, x_min), x_min, n)
            psi = _random_state(rng, x_min, n)
            dense = dense_walk_matrix(sh.p, sh.q, mats, x_min, n)
            expected = (dense @ psi.amps.ravel()).reshape(n, 2)
            assert np.abs(step(psi, tr).amps - expected).max() <= 1e-14
            back = (dense.conj().T @ psi.amps.ravel()).reshape(n, 2)
            assert np.abs(step_inverse(psi, tr).amps - back).max() <= 1e-14


class TestStep:
    def setup_method(self):
        self.walk = SplitStepWalk(make_shift(0.6, 0.8), coin_field_homogeneous(a2_coin(0.8)))

    def test_one_step_table(self):
        psi = self.walk.evolve(WalkerState.localized(0, (1, 0)), 1)
        np.testing.assert_allclose(psi.at(-1), [0.8 * 0.6, 0], atol=1e-15)
        np.testing.assert_allclose(psi.at(0), [0.6 * 0.8, -0.6 * 0.6], atol=1e-15)
        np.testing.assert_allclose(psi.at(1), [0, 0.8 * 0.8], atol=1e-15)
        table = position_distribution(psi).as_dict()
        expected = {-1: 0.2304, 0: 0.36, 1: 0.4096}
        for x, prob in expected.items():
            assert table[x] == pytest.approx(prob, abs=1e-15)
        assert sum(table.values()) == pytest.approx(1.0, abs=1e-15)
        assert rescaled_moments(position_distribution(psi), 1, [1])[0] == pytest.approx(0.1792, abs=1e-15)

    def test_zero_state(self):
        out = self.walk.evolve(WalkerState.zeros(-2, 5), 3)
        assert out.norm() == 0

    def test_t_zero_identity(self):
        psi = WalkerState.localized(2, (0.6, 0.8j))
        out = self.walk.evolve(psi, 0)
        assert np.array_equal(out.embed(psi.x_min, psi.n).amps, psi.amps)

    def test_strict_locality(self, rng):
        tr = build_local_transfer(self.walk.shift, self.walk.coins, -10, 21)
        psi = WalkerState.zeros(-10, 21)
        psi.amps[8:13] = rng.normal(size=(5, 2))
        supp = step(psi, tr).support()
        assert supp[0] >= -3 and supp[1] <= 3

    def test_boundary_touch_is_an_error(self):
        tr = build_local_transfer(self.walk.shift, self.walk.coins, -1, 3)
        psi = WalkerState.localized(0, (1, 0))
        with pytest.raises(BoundaryTouchError):
            step(psi, tr)
        with pytest.raises(BoundaryTouchError):
            evolve(psi.embed(-2, 5), build_local_transfer(self.walk.shift, self.walk.coins, -2, 5), 2)

    def test_window_mismatch_rejected(self):
        tr = build_local_transfer(self.walk.shift, self.walk.coins, -5, 11)
        with pytest.raises(ConfigError):
            step(WalkerState.zeros(-4, 11), tr)

    def test_round_trip_500(self, rng):
        walk = SplitStepWalk(make_shift(0.6, 0.8), coin_field_one_defect(a2_coin(0.8), IDENTITY))
        psi = _random_state(rng, -4, 9, pad=1)
        fwd = walk.evolve(psi, 500)
        back = walk.evolve(fwd, 500, "inverse")
        assert np.abs((back - psi).amps).max() <= 1e-9

    def test_trajectory_matches_evolve(self):
        psi = WalkerState.localized(0, (S, 1j * S))
        snaps = dict(self.walk.trajectory(psi, [7, 0, 3]))
        assert sorted(snaps) == [0, 3, 7]
        for t, state in snaps.items():
            direct = self.walk.evolve(psi, t)
            assert np.abs((state - direct).amps).max() <= 1e-14

    def test_classical_walk_against_textbook_form(self, rng):
        # p = 0: U = S~ sigma_1 C with (S~ phi)(x) = (phi_up(x + 1), phi_down(x - 1))
        c = a2_coin(S, S)
        walk = SplitStepWalk(make_shift(0.0, 1.0), coin_field_homogeneous(c))
        n, T = 61, 25
        psi = np.zeros((n, 2), complex)
        psi[30] = [S, 1j * S]
        ref = psi.copy()
        for _ in range(T):
            phi = ref @ (SIGMA_X @ c).T
            nxt = np.zeros_like(phi)
            nxt[:-1, 0] = phi[1:, 0]
            nxt[1:, 1] = phi[:-1, 1]
            ref = nxt
        out = walk.evolve(WalkerState(-30, psi), T).embed(-30, n)
        assert np.abs(out.amps - ref).max() <= 1e-14


class TestUnitarity:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(min_value=0, max_value=2**32 - 1))
    def test_random_fields_and_states(self, seed):
        rng = np.random.default_rng(seed)
        n = 24
        mats = random_unitary(rng, n)
        p = rng.uniform(0, 1)
        sh = make_shift(p, np.sqrt(1 - p**2) * np.exp(1j * rng.uniform(0, 2 * np.pi)))
        tr = build_local_transfer(sh, _field_from_array(mats, 0), 0, n)
        for _ in range(25):
            psi = _random_state(rng, 0, n)
            assert abs(step(psi, tr).norm() - 1) <= 1e-12
            assert abs(step_inverse(psi, tr).norm() - 1) <= 1e-12

    def test_distribution_sums_to_one(self, rng):
        walk = SplitStepWalk(make_shift(0.6, 0.8), coin_field_one_defect(a2_coin(0.8), IDENTITY))
        dist = position_distribution(walk.evolve(_random_state(rng, -3, 7, 1), 200))
        assert np.all(dist.probs >= 0)
        assert dist.probs.sum() == pytest.approx(1.0, abs=1e-10)


class TestMoments:
    def test_point_mass(self):
        d = Distribution(np.array([-1, 0, 1]), np.array([0.0, 1.0, 0.0]))
        assert rescaled_moments(d, 10, [0, 1, 2, 4]) == [1.0, 0.0, 0.0, 0.0]

    def test_needs_positive_t(self):
        with pytest.raises(ConfigError):
            rescaled_moments(Distribution(np.array([0]), np.array([1.0])), 0, [1])


class TestKitagawa:
    def test_rotation_free(self):
        assert kitagawa_equivalence_check(0.0, 0.0, 1) == 0.0

    def test_zero_steps(self):
        assert kitagawa_equivalence_check(1.1, 0.4, 0) == 0.0

    def test_reference_pair(self):
        assert kitagawa_equivalence_check(np.pi / 3, np.pi / 5, 20) <= 1e-10
