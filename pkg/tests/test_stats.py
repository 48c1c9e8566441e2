import numpy as np
import pytest

from splitwalk.errors import ConfigError
from splitwalk.evolution import Distribution, WalkerState, position_distribution
from splitwalk.limit_law import LimitDensity
from splitwalk.scattering import GridWeights, detect_bound_states
from splitwalk.scenarios import Scenario, builtin_scenario
from splitwalk.stats import StepCDF, convergence_sweep, empirical_cdf, ks_distance
from splitwalk.spectral import BandParams

BP = BandParams.from_pa(0.6, 0.8)


class TestEmpiricalCDF:
    def test_point_mass_is_unit_step(self):
        f = empirical_cdf(Distribution(np.array([-1, 0, 1]), np.array([0.0, 1.0, 0.0])), 5)
        np.testing.assert_array_equal(f(np.array([-0.1, 0.0, 0.3])), [0, 1, 1])
        assert ks_distance(f, StepCDF.unit_step(0.0)) == 0

    def test_one_step_table(self):
        d = Distribution(np.array([-1, 0, 1]), np.array([0.2304, 0.36, 0.4096]))
        f = empirical_cdf(d, 1)
        np.testing.assert_allclose(f(np.array([-1.0, -0.5, 0.0, 0.99, 1.0])), [0.2304, 0.2304, 0.5904, 0.5904, 1.0])
        np.testing.assert_allclose(f.left_limit(np.array([-1.0, 0.0, 1.0])), [0.0, 0.2304, 0.5904])
        assert f(np.inf) == pytest.approx(1.0)

    def test_needs_positive_t(self):
        with pytest.raises(ConfigError):
            empirical_cdf(Distribution(np.array([0]), np.array([1.0])), 0)


class TestKS:
    def test_identical(self):
        d = LimitDensity(BP, GridWeights.constant(0.5, 0.5))
        assert ks_distance(d.cdf, d.cdf, np.linspace(-1, 1, 101)) == 0

    def test_separated_steps(self):
        assert ks_distance(StepCDF.unit_step(0.0), StepCDF.unit_step(1.0)) == 1.0

    def test_symmetric(self, rng):
        a = StepCDF(np.sort(rng.uniform(-1, 1, 20)), np.linspace(0.05, 1, 20))
        b = StepCDF(np.sort(rng.uniform(-1, 1, 30)), np.linspace(1 / 30, 1, 30))
        grid = np.linspace(-1, 1, 11)
        assert ks_distance(a, b, grid) == ks_distance(b, a, grid)
        assert 0 <= ks_distance(a, b, grid) <= 1

    def test_left_limits_count(self):
        # a step at 0.5 against a continuous ramp: the worst gap sits just below the jump
        ramp = lambda v: np.clip(np.asarray(v, float), 0, 1)
        assert ks_distance(StepCDF.unit_step(0.5), ramp) == pytest.approx(0.5)

    def test_exclusion(self):
        assert ks_distance(StepCDF.unit_step(0.0), StepCDF.unit_step(0.01), exclude=0.02) == 0.0


class TestSweep:
    def test_empty_times(self):
        sc = builtin_scenario("homogeneous")
        with pytest.raises(ConfigError):
            convergence_sweep(sc, [], LimitDensity(BP, GridWeights.constant(0.5, 0.5)))

    def test_exact_bound_state(self):
        # starting in a bound state keeps the law at the origin; mu_V = delta_0
        sc = builtin_scenario("one_defect")
        b = detect_bound_states(sc.walk, sc.psi0)
        phi = b.vectors[0]
        phi = WalkerState(phi.x_min, phi.amps / phi.norm())
        trapped = Scenario("bound", sc.shift, sc.coins, phi)
        delta = LimitDensity(BP, GridWeights.constant(0.0, 0.0), w0=1.0)
        rep = convergence_sweep(trapped, [100, 400], delta, atom_sites=8)
        assert rep.ks[-1] <= 1e-6
        assert all(g <= 1e-3 for g in rep.gap(2))

    def test_report_shape(self):
        sc = builtin_scenario("homogeneous")
        d = LimitDensity(BP, GridWeights.constant(0.5, 0.5))
        rep = convergence_sweep(sc, [40, 20], d, grid_size=101)
        assert rep.ts == [20, 40]
        s = rep.summary()
        assert set(s["records"][0]) == {"t", "ks", "gap_m1", "gap_m2", "gap_m4", "seconds"}
        assert all(0 <= k <= 1 for k in rep.ks)

    def test_moments_use_same_table(self):
        sc = builtin_scenario("homogeneous")
        d = LimitDensity(BP, GridWeights.constant(0.5, 0.5))
        rep = convergence_sweep(sc, [30], d, grid_size=11, orders=(1,))
        dist = position_distribution(sc.walk.evolve(sc.psi0, 30))
        emp = float(np.sum(dist.probs * dist.xs / 30))
        assert rep.gap(1)[0] == pytest.approx(abs(emp - d.moment(1)), abs=1e-14)
