import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from splitwalk.coins import (
    IDENTITY,
    SIGMA_X,
    a2_coin,
    coin_field_anisotropic,
    coin_field_custom,
    coin_field_homogeneous,
    coin_field_one_defect,
    coin_field_short_range,
    coin_field_two_phase,
    coin_matrix,
    make_shift,
    operator_norm,
    rotation,
    validate_short_range,
)
from splitwalk.errors import ConfigError

from conftest import random_unitary

S = 1 / np.sqrt(2)


class TestShift:
    def test_pythagorean_pair(self):
        sh = make_shift(0.6, 0.8)
        assert sh.p == 0.6
        assert sh.p**2 + abs(sh.q) ** 2 == pytest.approx(1.0, abs=1e-12)
        assert sh.is_assumption_mode

    def test_p_zero_is_shift_times_sigma_x(self):
        sh = make_shift(0.0, 1.0)
        for k in (0.0, 0.7, 2.9):
            s_tilde = np.diag([np.exp(1j * k), np.exp(-1j * k)])
            np.testing.assert_allclose(sh.matrix(k), s_tilde @ SIGMA_X, atol=1e-15)
        assert not sh.is_assumption_mode

    def test_inconsistent_pair_rejected(self):
        with pytest.raises(ConfigError):
            make_shift(0.5, 0.5)

    def test_rounding_renormalized(self):
        sh = make_shift(0.6, 0.8 + 5e-10)
        assert sh.p**2 + abs(sh.q) ** 2 == pytest.approx(1.0, abs=1e-15)

    def test_complex_q_keeps_phase(self):
        q = 0.8 * np.exp(0.3j)
        sh = make_shift(0.6, q)
        assert np.angle(sh.q) == pytest.approx(0.3)
        assert not sh.is_assumption_mode

    def test_complex_p_rejected(self):
        with pytest.raises(ConfigError):
            make_shift(0.6 + 0.1j, 0.8)


class TestCoinMatrix:
    def test_a2_form(self):
        c = a2_coin(0.8)
        np.testing.assert_allclose(c, [[0.8, 0.6], [0.6, -0.8]], atol=1e-15)
        assert not c.flags.writeable

    def test_non_unitary_rejected(self):
        with pytest.raises(ConfigError):
            coin_matrix([[1, 0.1], [0, 1]])

    @pytest.mark.parametrize("a,b", [(0.0, 1.0), (-0.6, 0.8), (0.6, 0.6)])
    def test_a2_requires_positive_normalized(self, a, b):
        with pytest.raises(ConfigError):
            a2_coin(a, b)

    def test_rotation_convention(self):
        np.testing.assert_allclose(rotation(np.pi / 2), [[0, -1], [1, 0]], atol=1e-15)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=0, max_value=2**32 - 1))
    def test_random_unitaries_accepted(self, seed):
        u = random_unitary(np.random.default_rng(seed))
        c = coin_matrix(u)
        assert np.abs(c.conj().T @ c - np.eye(2)).max() <= 1e-12


class TestFields:
    def test_homogeneous(self):
        f = coin_field_homogeneous(a2_coin(0.8))
        mats = f.matrices(np.arange(-5, 6))
        assert np.all(mats == a2_coin(0.8))
        assert f.is_homogeneous

    def test_one_defect_equal_is_homogeneous(self):
        c = a2_coin(S, S)
        f = coin_field_one_defect(c, c)
        h = coin_field_homogeneous(c)
        xs = np.arange(-20, 21)
        assert f.model == "homogeneous"
        assert np.array_equal(f.matrices(xs), h.matrices(xs))

    def test_one_defect_only_origin_differs(self):
        bulk = a2_coin(S, S)
        f = coin_field_one_defect(bulk, IDENTITY)
        xs = np.arange(-10, 11)
        diff = np.abs(f.matrices(xs) - bulk).max(axis=(1, 2))
        assert np.flatnonzero(diff > 0).tolist() == [10]
        np.testing.assert_array_equal(f(0), IDENTITY)

    @pytest.mark.parametrize("kappa", [1e-6, 0.5, 3.0])
    def test_one_defect_passes_any_kappa(self, kappa):
        f = coin_field_one_defect(a2_coin(S, S), IDENTITY)
        assert validate_short_range(f, (-100, 100), kappa=kappa, epsilon=1.0) == 0.0

    def test_short_range_zero_angle_is_homogeneous(self):
        f = coin_field_short_range(a2_coin(0.8), kappa=0.1, epsilon=1.0, theta0=0.0)
        xs = np.arange(-50, 51)
        assert f.model == "homogeneous"
        assert np.array_equal(f.matrices(xs), coin_field_homogeneous(a2_coin(0.8)).matrices(xs))

    def test_short_range_bound_by_direct_norms(self):
        c0 = a2_coin(0.8)
        f = coin_field_short_range(c0, kappa=0.3, epsilon=1.0)
        xs = np.arange(-10_000, 10_001)
        xs = xs[xs != 0]
        theta = 0.3 * (1 + np.abs(xs)) ** -2.0
        norms = np.array([np.linalg.norm(m - c0, 2) for m in f.matrices(xs[::97])])
        np.testing.assert_allclose(norms, 2 * np.abs(np.sin(theta[::97] / 2)), rtol=0, atol=1e-15)
        assert np.all(norms <= theta[::97] + 1e-15)
        assert np.all(norms <= 0.3 * np.abs(xs[::97]) ** -2.0 + 1e-15)

    def test_constant_offset_rejected(self):
        c0 = a2_coin(0.8)
        offset = rotation(0.1) @ c0
        with pytest.raises(ConfigError, match="short-range bound violated"):
            coin_field_short_range(c0, kappa=0.1, epsilon=1.0, perturbation=lambda x: offset, window=(-200, 200))

    def test_short_range_requires_positive_constants(self):
        with pytest.raises(ConfigError):
            coin_field_short_range(a2_coin(0.8), kappa=0.1, epsilon=0.0)

    def test_two_phase(self):
        plus, minus = a2_coin(0.8), a2_coin(0.5)
        f = coin_field_two_phase(plus, minus)
        np.testing.assert_array_equal(f(3), plus)
        np.testing.assert_array_equal(f(-3), minus)
        np.testing.assert_array_equal(f(0), plus)
        assert f.two_sided
        np.testing.assert_array_equal(f.limits_at(np.array([-1, 1])), [minus, plus])

    def test_anisotropic_tends_to_side_limits(self):
        plus, minus = a2_coin(0.8), a2_coin(0.5)
        f = coin_field_anisotropic(plus, minus, kappa=0.1, epsilon=1.0, window=(-2000, 2000))
        assert operator_norm(f(2000) - plus) <= 0.1 * 2000.0**-2
        assert operator_norm(f(-2000) - minus) <= 0.1 * 2000.0**-2
        assert validate_short_range(f, (-2000, 2000)) <= 1.0

    def test_custom_non_unitary_rejected(self):
        with pytest.raises(ConfigError, match="not unitary"):
            coin_field_custom(lambda x: 1.01 * IDENTITY if x == 3 else IDENTITY, IDENTITY, window=(-5, 5))

    def test_fields_are_immutable(self):
        f = coin_field_homogeneous(a2_coin(0.8))
        with pytest.raises(dataclasses.FrozenInstanceError):
            f.model = "other"
        with pytest.raises(ValueError):
            f.limit[0, 0] = 2.0

    def test_builtin_fields_unitary(self):
        fields = [
            coin_field_one_defect(a2_coin(0.8), IDENTITY),
            coin_field_two_phase(a2_coin(0.8), a2_coin(0.5)),
            coin_field_short_range(a2_coin(0.8), 0.1, 1.0),
            coin_field_anisotropic(a2_coin(0.8), a2_coin(0.5), 0.1, 1.0, window=(-500, 500)),
        ]
        xs = np.arange(-500, 501)
        for f in fields:
            m = f.matrices(xs)
            defect = np.abs(np.conj(np.swapaxes(m, -1, -2)) @ m - np.eye(2)).max()
            assert defect <= 1e-12, f.model
