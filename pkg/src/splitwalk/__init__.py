"""Split-step quantum walks on the line: simulation, spectra, scattering and limit laws."""

from .coins import (
    CoinField,
    ShiftParams,
    a2_coin,
    coin_field_anisotropic,
    coin_field_custom,
    coin_field_homogeneous,
    coin_field_one_defect,
    coin_field_short_range,
    coin_field_two_phase,
    coin_matrix,
    make_shift,
    rotation,
)
from .errors import (
    BoundaryTouchError,
    ConfigError,
    DegenerateBandError,
    DomainError,
    NonConvergenceError,
    SplitWalkError,
    WindowSensitivityError,
)
from .evolution import SplitStepWalk, WalkerState, evolve, position_distribution, step, step_inverse
from .limit_law import LimitDensity, f_pm, g_pm, konno_f, w_pm
from .scattering import approximate_wave_operator, detect_bound_states, fourier, momentum_weights
from .scenarios import BUILTIN_SCENARIOS, Scenario, builtin_scenario, limit_law_for
from .spectral import BandParams, band_params, dispersion, eigensystem, group_velocity, tau
from .stats import convergence_sweep, empirical_cdf, ks_distance

__version__ = "0.1.0"
