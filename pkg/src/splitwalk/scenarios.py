"""
Built-in scenarios and the scattering-to-limit-law pipeline.

A :class:`Scenario` bundles a shift, a coin field and an initial state.
:func:`limit_law_for` turns one into an evaluable :class:`LimitDensity` by
detecting bound states, approximating the wave operator and reading off the
momentum weights.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike

from .coins import (
    IDENTITY,
    CoinField,
    ShiftParams,
    a2_coin,
    coin_field_anisotropic,
    coin_field_homogeneous,
    coin_field_one_defect,
    coin_field_short_range,
    coin_field_two_phase,
    make_shift,
)
from .errors import ConfigError
from .evolution import SplitStepWalk, WalkerState
from .limit_law import LimitDensity
from .scattering import (
    DEFAULT_SCHEDULE,
    MomentumWeights,
    ScatteringResult,
    approximate_wave_operator,
)
from .spectral import BandParams, band_params

__all__ = ["Scenario", "BUILTIN_SCENARIOS", "builtin_scenario", "limit_law_for", "PipelineResult"]


@dataclass(frozen=True)
class Scenario:
    name: str
    shift: ShiftParams
    coins: CoinField
    psi0: WalkerState

    @property
    def walk(self) -> SplitStepWalk:
        return SplitStepWalk(self.shift, self.coins)

    def band_params(self, side: str = "plus") -> BandParams:
        limit = self.coins.limit_minus if side == "minus" and self.coins.two_sided else self.coins.limit
        return band_params(self.shift, limit)


def _localized(spinor: ArrayLike) -> WalkerState:
    s = np.asarray(spinor, dtype=np.complex128)
    return WalkerState.localized(0, s / np.linalg.norm(s))


def _homogeneous() -> Scenario:
    return Scenario("homogeneous", make_shift(0.6, 0.8), coin_field_homogeneous(a2_coin(0.8)), _localized((1, 0)))


def _one_defect() -> Scenario:
    coins = coin_field_one_defect(a2_coin(0.8), IDENTITY)
    return Scenario("one_defect", make_shift(0.6, 0.8), coins, _localized((0, 1)))


def _two_phase() -> Scenario:
    coins = coin_field_two_phase(a2_coin(0.8), a2_coin(0.5))
    return Scenario("two_phase", make_shift(0.6, 0.8), coins, _localized((1, 0)))


def _short_range() -> Scenario:
    coins = coin_field_short_range(a2_coin(0.8), kappa=0.1, epsilon=1.0)
    return Scenario("short_range", make_shift(0.6, 0.8), coins, _localized((1, 0)))


def _anisotropic() -> Scenario:
    coins = coin_field_anisotropic(a2_coin(0.8), a2_coin(0.5), kappa=0.1, epsilon=1.0, window=(-10000, 10000))
    return Scenario("anisotropic", make_shift(0.6, 0.8), coins, _localized((1, 0)))


def _classical() -> Scenario:
    s = 1 / np.sqrt(2)
    return Scenario("classical", make_shift(0.0, 1.0), coin_field_homogeneous(a2_coin(s, s)), _localized((1, 0)))


def _q_equals_b() -> Scenario:
    # p = a forces q = b: the bands touch at k = 0 and f_+ vanishes
    return Scenario("q_equals_b", make_shift(0.6, 0.8), coin_field_homogeneous(a2_coin(0.6)), _localized((1, 0)))


BUILTIN_SCENARIOS: dict[str, Callable[[], Scenario]] = {
    "homogeneous": _homogeneous,
    "one_defect": _one_defect,
    "two_phase": _two_phase,
    "short_range": _short_range,
    "anisotropic": _anisotropic,
    "classical": _classical,
    "q_equals_b": _q_equals_b,
}


def builtin_scenario(name: str) -> Scenario:
    try:
        return BUILTIN_SCENARIOS[name]()
    except KeyError:
        raise ConfigError(f"unknown scenario {name!r}; choose from {sorted(BUILTIN_SCENARIOS)}") from None


@dataclass
class PipelineResult:
    density: LimitDensity
    scattering: ScatteringResult


def limit_law_for(
    scenario: Scenario,
    schedule: Sequence[int] = DEFAULT_SCHEDULE,
    tol: float = 1e-4,
    bound_window: int = 512,
    strict: bool = True,
) -> PipelineResult:
    """
    Build mu_V for ``scenario``.

    Two-sided fields use the C+ parameters and weights of the right-moving part
    for v >= 0 and the C- ones of the left-moving part for v < 0.

    Raises
    ------
    NonConvergenceError
        Propagated from :func:`approximate_wave_operator` when ``strict``.
    ConfigError
        If a limit coin is not of the form [[a, b], [b, -a]] with a, b > 0.
    """
    bp_plus = scenario.band_params("plus")
    bp_minus = scenario.band_params("minus") if scenario.coins.two_sided else None
    result = approximate_wave_operator(
        scenario.psi0, scenario.walk, schedule=schedule, tol=tol, bound_window=bound_window, strict=strict
    )
    left = None
    if result.two_sided:
        left = (bp_minus, MomentumWeights(result.phi_minus, bp_minus))
    density = LimitDensity(bp_plus, MomentumWeights(result.phi, bp_plus), w0=result.w0, left=left)
    return PipelineResult(density, result)
