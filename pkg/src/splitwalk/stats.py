"""
Comparing the simulated law of X_t / t with the limit law mu_V.

Empirical laws are exact probability tables, so no sampling noise enters.
The theoretical CDF has a jump of w0 at v = 0; when w0 > 0 the KS distance
skips a small neighborhood of the origin, where convergence in law says
nothing about CDF values.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import ConfigError
from .evolution import Distribution, position_distribution, rescaled_moments
from .limit_law import LimitDensity
from .scenarios import Scenario

__all__ = [
    "StepCDF",
    "empirical_cdf",
    "ks_distance",
    "ConvergenceRecord",
    "ConvergenceReport",
    "convergence_sweep",
]

MOMENT_ORDERS = (1, 2, 4)


@dataclass(frozen=True)
class StepCDF:
    """Right-continuous step function with jumps at ``points`` reaching ``levels``."""

    points: NDArray[np.float64]
    levels: NDArray[np.float64]

    def __call__(self, v: ArrayLike) -> NDArray[np.float64]:
        idx = np.searchsorted(self.points, np.asarray(v, dtype=float), side="right")
        return np.concatenate([[0.0], self.levels])[idx]

    def left_limit(self, v: ArrayLike) -> NDArray[np.float64]:
        idx = np.searchsorted(self.points, np.asarray(v, dtype=float), side="left")
        return np.concatenate([[0.0], self.levels])[idx]

    @classmethod
    def unit_step(cls, at: float = 0.0) -> "StepCDF":
        return cls(np.array([float(at)]), np.array([1.0]))


def empirical_cdf(dist: Distribution, t: int) -> StepCDF:
    """CDF of X_t / t from an exact position table; zero-probability sites add no jump."""
    if t < 1:
        raise ConfigError(f"rescaled CDF needs t >= 1 (got {t})")
    keep = dist.probs > 0
    return StepCDF(dist.xs[keep] / float(t), np.cumsum(dist.probs[keep]))


CDF = Callable[[NDArray[np.float64]], NDArray[np.float64]]


def _values(cdf: CDF, v: NDArray) -> tuple[NDArray, NDArray]:
    right = np.asarray(cdf(v), dtype=float)
    left = cdf.left_limit(v) if isinstance(cdf, StepCDF) else right
    return right, left


def ks_distance(
    first: CDF,
    second: CDF,
    grid: ArrayLike | None = None,
    exclude: float = 0.0,
) -> float:
    """
    sup |F - G| over ``grid`` and every jump point of a :class:`StepCDF`
    argument, comparing both the values and the left limits there.

    Points with |v| <= ``exclude`` are skipped when ``exclude > 0``.  Plain
    callables are treated as continuous.
    """
    pts = [np.asarray(grid, dtype=float).ravel()] if grid is not None else []
    pts += [c.points for c in (first, second) if isinstance(c, StepCDF)]
    v = np.unique(np.concatenate(pts)) if pts else np.empty(0)
    if exclude > 0:
        v = v[np.abs(v) > exclude]
    if v.size == 0:
        return 0.0
    f_right, f_left = _values(first, v)
    g_right, g_left = _values(second, v)
    return float(max(np.abs(f_right - g_right).max(), np.abs(f_left - g_left).max()))


@dataclass(frozen=True)
class ConvergenceRecord:
    t: int
    ks: float
    gaps: dict[int, float]
    seconds: float


@dataclass
class ConvergenceReport:
    """Per-t KS distances and moment gaps, in increasing t."""

    scenario: str
    w0: float
    theory_moments: dict[int, float]
    records: list[ConvergenceRecord] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def ts(self) -> list[int]:
        return [r.t for r in self.records]

    @property
    def ks(self) -> list[float]:
        return [r.ks for r in self.records]

    def gap(self, m: int) -> list[float]:
        return [r.gaps[m] for r in self.records]

    def summary(self) -> dict:
        return {
            "scenario": self.scenario,
            "w0": self.w0,
            "theory_moments": {f"m{m}": v for m, v in self.theory_moments.items()},
            "records": [
                {"t": r.t, "ks": r.ks, **{f"gap_m{m}": g for m, g in r.gaps.items()}, "seconds": r.seconds}
                for r in self.records
            ],
            "seconds": self.seconds,
        }


def convergence_sweep(
    scenario: Scenario,
    ts: Sequence[int],
    density: LimitDensity,
    grid_size: int = 2001,
    atom_sites: int = 1,
    orders: Sequence[int] = MOMENT_ORDERS,
) -> ConvergenceReport:
    """
    Evolve ``scenario`` to every t and compare X_t / t with ``density``.

    KS is taken over the empirical jumps plus ``grid_size`` uniform points on
    [-1, 1]; with w0 > 0 the sites |x| <= ``atom_sites`` are skipped.

    Raises
    ------
    ConfigError
        For an empty t-list or t < 1.
    BoundaryTouchError, NonConvergenceError
        Propagated from evolution and quadrature.
    """
    ts = sorted(set(int(t) for t in ts))
    if not ts:
        raise ConfigError("convergence sweep needs at least one time")
    if ts[0] < 1:
        raise ConfigError(f"convergence sweep times must be >= 1 (got {ts[0]})")
    start = time.perf_counter()
    theory = {m: density.moment(m) for m in orders}
    grid = np.linspace(-1.0, 1.0, grid_size)
    report = ConvergenceReport(scenario.name, density.w0, theory)
    tick = time.perf_counter()
    for t, state in scenario.walk.trajectory(scenario.psi0, ts):
        dist = position_distribution(state)
        exclude = atom_sites / t if density.w0 > 0 else 0.0
        ks = ks_distance(empirical_cdf(dist, t), density.cdf, grid, exclude)
        emp = rescaled_moments(dist, t, orders)
        gaps = {m: abs(e - theory[m]) for m, e in zip(orders, emp)}
        now = time.perf_counter()
        report.records.append(ConvergenceRecord(t, ks, gaps, now - tick))
        tick = now
    report.seconds = time.perf_counter() - start
    return report
