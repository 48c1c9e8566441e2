"""
Time evolution U = S C of the split-step walk on a finite lattice window.

The state lives on sites ``x_min .. x_min + n - 1``.  One step is the lazy
three-term recurrence

    (U psi)(x) = P(x+1) psi(x+1) + Q(x-1) psi(x-1) + R(x) psi(x)

with per-site 2x2 matrices built from the shift parameters and the coins.
Amplitude is never allowed to reach the window edges: doing so raises
:class:`BoundaryTouchError` instead of wrapping or truncating.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Literal, Mapping, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .coins import (
    SIGMA_X,
    CoinField,
    ShiftParams,
    coin_field_homogeneous,
    kitagawa_rotation,
    make_shift,
)
from .errors import BoundaryTouchError, ConfigError

__all__ = [
    "WalkerState",
    "LocalTransfer",
    "Distribution",
    "SplitStepWalk",
    "build_local_transfer",
    "step",
    "step_inverse",
    "evolve",
    "position_distribution",
    "rescaled_moments",
    "kitagawa_equivalence_check",
]

Direction = Literal["forward", "inverse"]


@dataclass
class WalkerState:
    """Complex 2-spinor field on the window ``x_min .. x_min + n - 1``."""

    x_min: int
    amps: NDArray[np.complex128]

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=np.complex128)
        if self.amps.ndim != 2 or self.amps.shape[1] != 2:
            raise ConfigError(f"amplitudes must have shape (n, 2), got {self.amps.shape}")
        self.x_min = int(self.x_min)

    @classmethod
    def zeros(cls, x_min: int, n: int) -> "WalkerState":
        return cls(x_min, np.zeros((n, 2), dtype=np.complex128))

    @classmethod
    def from_spinors(
        cls, spinors: Mapping[int, ArrayLike], padding: int = 1, normalize: bool = False
    ) -> "WalkerState":
        """Build a state from ``{site: spinor}``; the window leaves ``padding`` empty sites per side."""
        if not spinors:
            raise ConfigError("initial state needs at least one site")
        sites = sorted(spinors)
        x_min = sites[0] - padding
        n = sites[-1] - sites[0] + 1 + 2 * padding
        amps = np.zeros((n, 2), dtype=np.complex128)
        for x in sites:
            amps[x - x_min] = np.asarray(spinors[x], dtype=np.complex128)
        state = cls(x_min, amps)
        if normalize:
            norm = state.norm()
            if norm == 0:
                raise ConfigError("cannot normalize the zero state")
            state.amps /= norm
        return state

    @classmethod
    def localized(cls, site: int = 0, spinor: ArrayLike = (1.0, 0.0), padding: int = 1) -> "WalkerState":
        return cls.from_spinors({site: spinor}, padding=padding)

    @property
    def n(self) -> int:
        return self.amps.shape[0]

    @property
    def x_max(self) -> int:
        return self.x_min + self.n - 1

    @property
    def sites(self) -> NDArray[np.int64]:
        return np.arange(self.x_min, self.x_min + self.n)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amps) ** 2)))

    def support(self) -> tuple[int, int] | None:
        """Smallest and largest site carrying nonzero amplitude, or None for the zero state."""
        nz = np.flatnonzero(np.any(self.amps != 0, axis=1))
        if nz.size == 0:
            return None
        return self.x_min + int(nz[0]), self.x_min + int(nz[-1])

    def copy(self) -> "WalkerState":
        return WalkerState(self.x_min, self.amps.copy())

    def embed(self, x_min: int, n: int) -> "WalkerState":
        """Copy into the window ``x_min .. x_min + n - 1``; nonzero amplitude must fit."""
        supp = self.support()
        if supp is not None and (supp[0] < x_min or supp[1] > x_min + n - 1):
            raise BoundaryTouchError(
                f"state support {supp} does not fit window [{x_min}, {x_min + n - 1}]"
            )
        out = WalkerState.zeros(x_min, n)
        lo = max(x_min, self.x_min)
        hi = min(x_min + n - 1, self.x_max)
        if hi >= lo:
            out.amps[lo - x_min : hi - x_min + 1] = self.amps[lo - self.x_min : hi - self.x_min + 1]
        return out

    def at(self, x: int) -> NDArray[np.complex128]:
        if x < self.x_min or x > self.x_max:
            return np.zeros(2, dtype=np.complex128)
        return self.amps[x - self.x_min]

    def inner(self, other: "WalkerState") -> complex:
        """<self, other>, conjugate-linear in ``self``; windows may differ."""
        lo = max(self.x_min, other.x_min)
        hi = min(self.x_max, other.x_max)
        if hi < lo:
            return 0j
        a = self.amps[lo - self.x_min : hi - self.x_min + 1]
        b = other.amps[lo - other.x_min : hi - other.x_min + 1]
        return complex(np.vdot(a, b))

    def __sub__(self, other: "WalkerState") -> "WalkerState":
        lo = min(self.x_min, other.x_min)
        hi = max(self.x_max, other.x_max)
        a = self.embed(lo, hi - lo + 1)
        a.amps -= other.embed(lo, hi - lo + 1).amps
        return a


@dataclass(frozen=True, eq=False)
class LocalTransfer:
    """Per-site matrices P, Q, R of shape (n, 2, 2) on the window starting at ``x_min``."""

    x_min: int
    P: NDArray[np.complex128]
    Q: NDArray[np.complex128]
    R: NDArray[np.complex128]

    @property
    def n(self) -> int:
        return self.P.shape[0]


def build_local_transfer(shift: ShiftParams, coins: CoinField, x_min: int, n: int) -> LocalTransfer:
    """
    Expand (S C psi)(x) into the three-term recurrence.

    With (S phi)(x) = (p phi_up(x) + q phi_down(x+1), conj(q) phi_up(x-1) - p phi_down(x))
    and phi = C psi, the site-x output collects

    - P(x+1): first row q * C(x+1)[1, :]       (hop from the right)
    - Q(x-1): second row conj(q) * C(x-1)[0, :] (hop from the left)
    - R(x):   rows p * C(x)[0, :] and -p * C(x)[1, :] (lazy term)
    """
    c = coins.matrices(np.arange(x_min, x_min + n))
    p, q = shift.p, shift.q
    P = np.zeros_like(c)
    Q = np.zeros_like(c)
    P[:, 0, :] = q * c[:, 1, :]
    Q[:, 1, :] = np.conj(q) * c[:, 0, :]
    R = np.empty_like(c)
    R[:, 0, :] = p * c[:, 0, :]
    R[:, 1, :] = -p * c[:, 1, :]
    for m in (P, Q, R):
        m.flags.writeable = False
    return LocalTransfer(x_min, P, Q, R)


def _check_edges(amps: NDArray, when: str) -> None:
    if np.any(amps[0] != 0) or np.any(amps[-1] != 0):
        raise BoundaryTouchError(f"amplitude reached the window edge ({when}); enlarge the window")


def _apply(mats: NDArray, vecs: NDArray) -> NDArray:
    return np.einsum("nij,nj->ni", mats, vecs)


def step(state: WalkerState, transfer: LocalTransfer) -> WalkerState:
    """One application of U.  Raises BoundaryTouchError rather than losing amplitude."""
    if state.x_min != transfer.x_min or state.n != transfer.n:
        raise ConfigError("state and transfer windows differ")
    psi = state.amps
    _check_edges(psi, "before step")
    out = _apply(transfer.R, psi)
    out[:-1] += _apply(transfer.P[1:], psi[1:])
    out[1:] += _apply(transfer.Q[:-1], psi[:-1])
    _check_edges(out, "after step")
    return WalkerState(state.x_min, out)


def step_inverse(state: WalkerState, transfer: LocalTransfer) -> WalkerState:
    """One application of U* = P(x)* psi(x-1) + Q(x)* psi(x+1) + R(x)* psi(x)."""
    if state.x_min != transfer.x_min or state.n != transfer.n:
        raise ConfigError("state and transfer windows differ")
    psi = state.amps
    _check_edges(psi, "before inverse step")
    adj = lambda m: np.conj(np.swapaxes(m, -1, -2))  # noqa: E731
    out = _apply(adj(transfer.R), psi)
    out[1:] += _apply(adj(transfer.P[1:]), psi[:-1])
    out[:-1] += _apply(adj(transfer.Q[:-1]), psi[1:])
    _check_edges(out, "after inverse step")
    return WalkerState(state.x_min, out)


def evolve(
    state: WalkerState, transfer: LocalTransfer, t: int, direction: Direction = "forward"
) -> WalkerState:
    """Apply U^t (forward) or (U*)^t (inverse) on the transfer's window."""
    if t < 0:
        raise ConfigError(f"number of steps must be >= 0 (got {t})")
    if direction not in ("forward", "inverse"):
        raise ConfigError(f"unknown direction {direction!r}")
    fn = step if direction == "forward" else step_inverse
    out = state.copy()
    for _ in range(t):
        out = fn(out, transfer)
    return out


class SplitStepWalk:
    """
    Convenience wrapper pairing shift parameters with a coin field.

    Transfers are built per window and cached; :meth:`evolve` enlarges the
    window automatically so the wavefront never reaches the edge.
    """

    def __init__(self, shift: ShiftParams, coins: CoinField):
        self.shift = shift
        self.coins = coins
        self._transfer = lru_cache(maxsize=8)(self._build)

    def _build(self, x_min: int, n: int) -> LocalTransfer:
        return build_local_transfer(self.shift, self.coins, x_min, n)

    def transfer(self, x_min: int, n: int) -> LocalTransfer:
        return self._transfer(int(x_min), int(n))

    def homogeneous_limit(self, side: str = "plus") -> "SplitStepWalk":
        """Walk with the coin replaced by its spatial limit (C0, or C+/C- by ``side``)."""
        c = self.coins.limit
        if self.coins.two_sided:
            c = self.coins.limit_plus if side == "plus" else self.coins.limit_minus
        return SplitStepWalk(self.shift, coin_field_homogeneous(c))

    def window_for(self, state: WalkerState, t: int) -> tuple[int, int]:
        """Window padded by t + 2 sites around the current support."""
        supp = state.support() or (state.x_min, state.x_min)
        x_min = supp[0] - t - 2
        return x_min, supp[1] - supp[0] + 1 + 2 * (t + 2)

    def evolve(self, state: WalkerState, t: int, direction: Direction = "forward") -> WalkerState:
        x_min, n = self.window_for(state, t)
        if state.x_min <= x_min and state.x_max >= x_min + n - 1:
            x_min, n = state.x_min, state.n
        else:
            state = state.embed(x_min, n)
        return evolve(state, self.transfer(x_min, n), t, direction)

    def trajectory(self, state: WalkerState, times: Iterable[int]) -> Iterator[tuple[int, WalkerState]]:
        """Yield ``(t, U^t psi)`` for the requested times, reusing earlier steps."""
        times = sorted(set(int(t) for t in times))
        if not times:
            return
        if times[0] < 0:
            raise ConfigError("times must be nonnegative")
        x_min, n = self.window_for(state, times[-1])
        current = state.embed(x_min, n)
        transfer = self.transfer(x_min, n)
        done = 0
        for t in times:
            current = evolve(current, transfer, t - done)
            done = t
            yield t, current


@dataclass(frozen=True)
class Distribution:
    """Position distribution P(X = x) on consecutive sites."""

    xs: NDArray[np.int64]
    probs: NDArray[np.float64]

    def as_dict(self) -> dict[int, float]:
        return {int(x): float(p) for x, p in zip(self.xs, self.probs)}


def position_distribution(state: WalkerState) -> Distribution:
    probs = np.sum(np.abs(state.amps) ** 2, axis=1)
    return Distribution(state.sites, probs)


def rescaled_moments(dist: Distribution, t: int, orders: Sequence[int]) -> list[float]:
    """E[(X_t / t)^m] for every m in ``orders``."""
    if t < 1:
        raise ConfigError(f"rescaled moments need t >= 1 (got {t})")
    v = dist.xs / float(t)
    return [float(np.sum(dist.probs * v**m)) for m in orders]


# ---------------------------------------------------------------------------
# Kitagawa's split-step walk, implemented directly from its factors.


def _kitagawa_step(psi: NDArray, theta: float, theta_prime: float) -> NDArray:
    """U_ss = S_- R(theta) S_+ R(theta') on an (n, 2) array; edges must be empty."""
    out = psi @ kitagawa_rotation(theta_prime).T
    up = np.zeros(len(out), dtype=np.complex128)
    up[1:] = out[:-1, 0]  # S_+ = L* (+) 1
    out[:, 0] = up
    out = out @ kitagawa_rotation(theta).T
    down = np.zeros(len(out), dtype=np.complex128)
    down[:-1] = out[1:, 1]  # S_- = 1 (+) L
    out[:, 1] = down
    return out


def kitagawa_equivalence_check(theta: float, theta_prime: float, T: int, probes: int = 3) -> float:
    """
    Max discrepancy between U^T psi and sigma_1 U_ss^T sigma_1 psi.

    U uses p = sin(theta/2), q = cos(theta/2) and the homogeneous coin
    R(theta') sigma_1.  Test states are delta spinors on ``2 * probes + 1``
    sites around the origin, both spin components.
    """
    if T < 0:
        raise ConfigError(f"T must be >= 0 (got {T})")
    shift = make_shift(np.sin(theta / 2), np.cos(theta / 2))
    coins = coin_field_homogeneous(kitagawa_rotation(theta_prime) @ SIGMA_X)
    pad = probes + T + 2
    x_min, n = -pad, 2 * pad + 1
    transfer = build_local_transfer(shift, coins, x_min, n)
    worst = 0.0
    for x in range(-probes, probes + 1):
        for s in range(2):
            psi = WalkerState.zeros(x_min, n)
            psi.amps[x - x_min, s] = 1.0
            lhs = evolve(psi, transfer, T).amps
            rhs = psi.amps @ SIGMA_X.T
            for _ in range(T):
                if np.any(rhs[0] != 0) or np.any(rhs[-1] != 0):
                    raise BoundaryTouchError("Kitagawa reference walk reached the window edge")
                rhs = _kitagawa_step(rhs, theta, theta_prime)
            rhs = rhs @ SIGMA_X.T
            worst = max(worst, float(np.abs(lhs - rhs).max()))
    return worst
