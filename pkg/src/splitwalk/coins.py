"""
Shift parameters and position-dependent coin fields.

A coin field is a map ``x -> C(x)`` into U(2) together with its limit at
spatial infinity.  Fields are evaluated lazily and vectorized over integer
site arrays: ``field.matrices(xs)`` returns an array of shape ``(len(xs), 2, 2)``.

Built-in models
---------------
- homogeneous:   C(x) = C0
- one_defect:    C(0) = origin, C(x) = bulk elsewhere
- two_phase:     C(x) = C+ for x >= 0, C- for x < 0
- short_range:   C(x) = R(theta(x)) C0 with theta(x) = theta0 (1 + |x|)^(-1-eps)
- anisotropic:   short-range rotations on top of a two-phase field
- custom:        any user callable, validated on a window
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import ConfigError

__all__ = [
    "ShiftParams",
    "CoinField",
    "make_shift",
    "coin_matrix",
    "a2_coin",
    "rotation",
    "kitagawa_rotation",
    "SIGMA_X",
    "IDENTITY",
    "operator_norm",
    "coin_field_homogeneous",
    "coin_field_one_defect",
    "coin_field_two_phase",
    "coin_field_short_range",
    "coin_field_anisotropic",
    "coin_field_custom",
    "validate_short_range",
]

UNITARY_ATOL = 1e-12
SHIFT_ATOL = 1e-9

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
IDENTITY = np.eye(2, dtype=np.complex128)
SIGMA_X.flags.writeable = False
IDENTITY.flags.writeable = False

Evaluator = Callable[[NDArray[np.int64]], NDArray[np.complex128]]


@dataclass(frozen=True)
class ShiftParams:
    """Parameters (p, q) of the split-step shift, p real, p^2 + |q|^2 = 1."""

    p: float
    q: complex

    @property
    def is_assumption_mode(self) -> bool:
        """True when p > 0 and q is real and positive."""
        return self.p > 0 and self.q.imag == 0 and self.q.real > 0

    def matrix(self, k: float) -> NDArray[np.complex128]:
        """Fourier symbol [[p, q e^{ik}], [conj(q) e^{-ik}, -p]]."""
        e = np.exp(1j * k)
        return np.array(
            [[self.p, self.q * e], [np.conj(self.q) / e, -self.p]],
            dtype=np.complex128,
        )


def make_shift(p: float, q: complex) -> ShiftParams:
    """
    Validate (p, q) and renormalize q so that p^2 + |q|^2 = 1.

    Raises
    ------
    ConfigError
        If p is not real or |p^2 + |q|^2 - 1| > 1e-9.
    """
    if isinstance(p, complex):
        if p.imag != 0:
            raise ConfigError(f"shift parameter p must be real (got {p!r})")
        p = p.real
    p = float(p)
    q = complex(q)
    defect = p * p + abs(q) ** 2 - 1.0
    if abs(defect) > SHIFT_ATOL:
        raise ConfigError(
            f"shift parameters violate p^2 + |q|^2 = 1 (p={p}, q={q}, defect={defect:.3e})"
        )
    if abs(q) > 0:
        q = q * (np.sqrt(1.0 - p * p) / abs(q))
    return ShiftParams(p=p, q=complex(q))


def operator_norm(m: ArrayLike) -> float:
    """Spectral 2-norm of a 2x2 matrix (or max over a stack of them)."""
    m = np.asarray(m)
    if m.ndim == 2:
        return float(np.linalg.norm(m, 2))
    return float(np.linalg.norm(m, 2, axis=(-2, -1)).max(initial=0.0))


def _unitarity_defect(m: NDArray) -> NDArray:
    eye = np.eye(2)
    return np.abs(np.conj(np.swapaxes(m, -1, -2)) @ m - eye).max(axis=(-2, -1))


def coin_matrix(entries: ArrayLike, atol: float = UNITARY_ATOL) -> NDArray[np.complex128]:
    """Return a read-only complex 2x2 array after checking unitarity."""
    m = np.array(entries, dtype=np.complex128)
    if m.shape != (2, 2):
        raise ConfigError(f"coin matrix must be 2x2 (got shape {m.shape})")
    defect = float(_unitarity_defect(m))
    if defect > atol:
        raise ConfigError(f"coin matrix is not unitary (|C*C - I| = {defect:.3e})")
    m.flags.writeable = False
    return m


def a2_coin(a: float, b: float | None = None) -> NDArray[np.complex128]:
    """
    Real symmetric coin [[a, b], [b, -a]] with a, b > 0.

    If ``b`` is omitted it is set to sqrt(1 - a^2).
    """
    if b is None:
        b = float(np.sqrt(1.0 - a * a))
    if not (a > 0 and b > 0):
        raise ConfigError(f"coin entries must satisfy a, b > 0 (got a={a}, b={b})")
    if abs(a * a + b * b - 1.0) > SHIFT_ATOL:
        raise ConfigError(f"coin entries must satisfy a^2 + b^2 = 1 (got a={a}, b={b})")
    norm = np.hypot(a, b)
    return coin_matrix([[a / norm, b / norm], [b / norm, -a / norm]])


def rotation(theta: float) -> NDArray[np.complex128]:
    """R(theta) = [[cos, -sin], [sin, cos]] evaluated at the full angle theta."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def kitagawa_rotation(theta: float) -> NDArray[np.complex128]:
    """Half-angle rotation exp(-i theta sigma_y / 2) used by Kitagawa's walk."""
    return rotation(theta / 2.0)


def _rotations(thetas: NDArray[np.float64]) -> NDArray[np.complex128]:
    c, s = np.cos(thetas), np.sin(thetas)
    out = np.empty(thetas.shape + (2, 2), dtype=np.complex128)
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    return out


@dataclass(frozen=True, eq=False)
class CoinField:
    """
    Immutable coin field ``x -> C(x)``.

    ``limit`` is C0 for single-limit fields.  Two-sided fields (two_phase,
    anisotropic) also carry ``limit_plus`` / ``limit_minus`` and set
    ``limit`` to ``limit_plus``.
    """

    model: str
    evaluator: Evaluator = field(repr=False)
    limit: NDArray[np.complex128] = field(repr=False)
    kappa: float | None = None
    epsilon: float | None = None
    limit_plus: NDArray[np.complex128] | None = field(default=None, repr=False)
    limit_minus: NDArray[np.complex128] | None = field(default=None, repr=False)
    params: dict = field(default_factory=dict, compare=False)

    @property
    def two_sided(self) -> bool:
        return self.limit_plus is not None

    @property
    def is_homogeneous(self) -> bool:
        return self.model == "homogeneous"

    def matrices(self, xs: ArrayLike) -> NDArray[np.complex128]:
        xs = np.asarray(xs, dtype=np.int64)
        return self.evaluator(xs)

    def __call__(self, x: int) -> NDArray[np.complex128]:
        return self.matrices(np.array([x]))[0]

    def limits_at(self, xs: ArrayLike) -> NDArray[np.complex128]:
        """Limit matrix relevant at each site (C+ / C- by sign for two-sided fields)."""
        xs = np.asarray(xs, dtype=np.int64)
        if not self.two_sided:
            return np.broadcast_to(self.limit, xs.shape + (2, 2))
        return np.where((xs > 0)[:, None, None], self.limit_plus, self.limit_minus)


def _constant(c: NDArray[np.complex128]) -> Evaluator:
    def evaluate(xs):
        return np.broadcast_to(c, xs.shape + (2, 2)).copy()

    return evaluate


def _check_all_unitary(field_: CoinField, window: tuple[int, int]) -> None:
    xs = np.arange(window[0], window[1] + 1)
    mats = field_.matrices(xs)
    defect = _unitarity_defect(mats)
    bad = np.flatnonzero(defect > UNITARY_ATOL)
    if bad.size:
        x = int(xs[bad[0]])
        raise ConfigError(
            f"coin field '{field_.model}' is not unitary at x={x} (defect {defect[bad[0]]:.3e})"
        )


def validate_short_range(
    field_: CoinField,
    window: tuple[int, int] = (-10_000, 10_000),
    kappa: float | None = None,
    epsilon: float | None = None,
) -> float:
    """
    Check ||C(x) - C0|| <= kappa |x|^(-1-eps) on every sampled x != 0.

    For two-sided fields the comparison is against C+ for x > 0 and C- for
    x < 0.  Returns the largest observed ratio ||C(x) - C0|| / (kappa |x|^(-1-eps)).

    Raises
    ------
    ConfigError
        If the bound fails anywhere in the window.
    """
    kappa = field_.kappa if kappa is None else kappa
    epsilon = field_.epsilon if epsilon is None else epsilon
    if kappa is None or epsilon is None or kappa <= 0 or epsilon <= 0:
        raise ConfigError("short-range validation needs kappa > 0 and epsilon > 0")
    xs = np.arange(window[0], window[1] + 1)
    xs = xs[xs != 0]
    diff = field_.matrices(xs) - field_.limits_at(xs)
    norms = np.linalg.norm(diff, 2, axis=(-2, -1))
    bound = kappa * np.abs(xs).astype(float) ** (-1.0 - epsilon)
    ratio = norms / bound
    worst = int(np.argmax(ratio)) if ratio.size else 0
    if ratio.size and ratio[worst] > 1.0 + 1e-12:
        raise ConfigError(
            f"short-range bound violated at x={int(xs[worst])}: "
            f"||C(x)-C0|| = {norms[worst]:.3e} > {bound[worst]:.3e}"
        )
    return float(ratio.max(initial=0.0))


def coin_field_homogeneous(c0: ArrayLike) -> CoinField:
    c0 = coin_matrix(c0)
    return CoinField("homogeneous", _constant(c0), c0, kappa=1.0, epsilon=1.0)


def coin_field_one_defect(bulk: ArrayLike, origin: ArrayLike) -> CoinField:
    """C(0) = origin and C(x) = bulk elsewhere; degenerates to homogeneous when equal."""
    bulk = coin_matrix(bulk)
    origin = coin_matrix(origin)
    if np.array_equal(bulk, origin):
        return coin_field_homogeneous(bulk)

    def evaluate(xs):
        out = np.broadcast_to(bulk, xs.shape + (2, 2)).copy()
        out[xs == 0] = origin
        return out

    return CoinField("one_defect", evaluate, bulk, kappa=1.0, epsilon=1.0, params={"origin": origin})


def coin_field_two_phase(
    plus: ArrayLike, minus: ArrayLike, origin: ArrayLike | None = None
) -> CoinField:
    """C(x) = plus for x > 0, minus for x < 0; C(0) = origin (default: plus)."""
    plus = coin_matrix(plus)
    minus = coin_matrix(minus)
    origin = plus if origin is None else coin_matrix(origin)

    def evaluate(xs):
        out = np.where((xs > 0)[:, None, None], plus, minus)
        out[xs == 0] = origin
        return out

    return CoinField(
        "two_phase", evaluate, plus, kappa=1.0, epsilon=1.0,
        limit_plus=plus, limit_minus=minus, params={"origin": origin},
    )


def _decaying_angles(xs, theta0, epsilon):
    return theta0 * (1.0 + np.abs(xs).astype(float)) ** (-1.0 - epsilon)


def coin_field_short_range(
    c0: ArrayLike,
    kappa: float,
    epsilon: float,
    perturbation: Callable[[int], ArrayLike] | None = None,
    theta0: float | None = None,
    window: tuple[int, int] = (-10_000, 10_000),
) -> CoinField:
    """
    Short-range field around the limit ``c0``.

    Without ``perturbation`` the built-in family C(x) = R(theta(x)) C0 with
    theta(x) = theta0 (1 + |x|)^(-1-eps) is used (theta0 defaults to kappa).
    Since ||R(theta) - I|| = 2|sin(theta/2)| <= theta, the decay bound holds
    whenever |theta0| <= kappa.  ``theta0 == 0`` returns the homogeneous field.
    A custom ``perturbation`` maps a site x to the full coin C(x).

    The decay bound and unitarity are validated on ``window``.
    """
    if not (kappa > 0 and epsilon > 0):
        raise ConfigError(f"short-range field needs kappa > 0 and epsilon > 0 (got {kappa}, {epsilon})")
    c0 = coin_matrix(c0)
    theta0 = kappa if theta0 is None else float(theta0)
    if perturbation is None and theta0 == 0.0:
        return coin_field_homogeneous(c0)
    if perturbation is None:
        def evaluate(xs):
            return _rotations(_decaying_angles(xs, theta0, epsilon)) @ c0
    else:
        def evaluate(xs):
            return np.array([np.asarray(perturbation(int(x)), dtype=np.complex128) for x in xs]).reshape(
                xs.shape + (2, 2)
            )

    out = CoinField(
        "short_range", evaluate, c0, kappa=kappa, epsilon=epsilon, params={"theta0": theta0}
    )
    _check_all_unitary(out, window)
    validate_short_range(out, window)
    return out


def coin_field_anisotropic(
    plus: ArrayLike,
    minus: ArrayLike,
    kappa: float,
    epsilon: float,
    window: tuple[int, int] = (-10_000, 10_000),
) -> CoinField:
    """Two-phase field dressed with decaying rotations theta(x) = kappa (1+|x|)^(-1-eps)."""
    if not (kappa > 0 and epsilon > 0):
        raise ConfigError(f"anisotropic field needs kappa > 0 and epsilon > 0 (got {kappa}, {epsilon})")
    plus = coin_matrix(plus)
    minus = coin_matrix(minus)

    def evaluate(xs):
        base = np.where((xs > 0)[:, None, None], plus, minus)
        return _rotations(_decaying_angles(xs, kappa, epsilon)) @ base

    out = CoinField(
        "anisotropic", evaluate, plus, kappa=kappa, epsilon=epsilon,
        limit_plus=plus, limit_minus=minus,
    )
    _check_all_unitary(out, window)
    validate_short_range(out, window)
    return out


def coin_field_custom(
    evaluate: Callable[[int], ArrayLike],
    limit: ArrayLike,
    window: tuple[int, int] = (-1000, 1000),
) -> CoinField:
    """Wrap an arbitrary per-site coin function; only unitarity is checked."""
    limit = coin_matrix(limit)

    def vectorized(xs):
        return np.array([np.asarray(evaluate(int(x)), dtype=np.complex128) for x in xs]).reshape(
            xs.shape + (2, 2)
        )

    out = CoinField("custom", vectorized, limit)
    _check_all_unitary(out, window)
    return out
