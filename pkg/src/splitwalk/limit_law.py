"""
Closed-form limit distribution of X_t / t.

    mu_V(dv) = w0 delta_0(dv) + (w_+(v) f_+(v) + w_-(v) f_-(v)) dv

f_K(v; r) is Konno's density, f_+- = |f_K(v; q) -+ f_K(v; b)| / 2 on
(-q, q) n (-b, b), and w_+- evaluates the momentum weights w_1, w_2 at the
momenta k = arccos g_+-(v) or 2 pi - arccos g_+-(v) whose group velocity is v.

Quadrature and CDF tables use v = r sin(theta) on each half of the support,
which cancels the 1/sqrt(r^2 - v^2) edge singularity exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
import scipy.integrate
from numpy.typing import ArrayLike, NDArray
from scipy.interpolate import CubicHermiteSpline

from .errors import DomainError, NonConvergenceError
from .spectral import BandParams

__all__ = [
    "konno_f",
    "g_pm",
    "f_pm",
    "w_pm",
    "jacobian_identity_check",
    "branch_angle",
    "branch_momentum",
    "branch_consistency_check",
    "LimitDensity",
    "density_cdf_moments",
]

STANDARD_ORDERS = (0, 1, 2, 3, 4)

Weights = Callable[[NDArray[np.float64]], tuple[NDArray, NDArray]]


def konno_f(v: ArrayLike, r: float) -> NDArray[np.float64]:
    """
    Konno's function sqrt(1 - r^2) / (pi (1 - v^2) sqrt(r^2 - v^2)) on |v| < r, else 0.

    Never evaluated at |v| = r by the quadrature in this module; returns 0 there.
    """
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape)
    inside = np.abs(v) < r
    vi = v[inside]
    out[inside] = np.sqrt(1 - r * r) / (np.pi * (1 - vi * vi) * np.sqrt(r * r - vi * vi))
    return out


def _sign(sign: int | str) -> int:
    if sign in (1, "+", "plus"):
        return 1
    if sign in (-1, "-", "minus"):
        return -1
    raise ValueError(f"sign must be + or - (got {sign!r})")


def g_pm(v: ArrayLike, sign: int | str, bp: BandParams) -> NDArray[np.float64]:
    """
    g_+-(v) = (p a v^2 +- sqrt((q^2 - v^2)(b^2 - v^2))) / (q b (1 - v^2)).

    Values within 1e-9 outside [-1, 1] are clamped.

    Raises
    ------
    DomainError
        If |v| >= min(q, b) or the result leaves [-1, 1] by more than 1e-9.
    """
    s = _sign(sign)
    v = np.asarray(v, dtype=float)
    if np.any(np.abs(v) > bp.support_edge):
        raise DomainError(f"g is defined for |v| <= {bp.support_edge} only")
    v2 = v * v
    root = np.sqrt(np.maximum((bp.q**2 - v2) * (bp.b**2 - v2), 0.0))
    g = (bp.p * bp.a * v2 + s * root) / (bp.q * bp.b * (1 - v2))
    excess = np.abs(g) - 1
    if np.any(excess > 1e-9):
        raise DomainError(f"g left [-1, 1] by {excess.max():.3e}")
    return np.clip(g, -1.0, 1.0)


def f_pm(v: ArrayLike, sign: int | str, bp: BandParams) -> NDArray[np.float64]:
    """|f_K(v; q) -+ f_K(v; b)| / 2 on the common support, 0 elsewhere."""
    s = _sign(sign)
    v = np.asarray(v, dtype=float)
    out = np.abs(konno_f(v, bp.q) - s * konno_f(v, bp.b)) / 2
    return np.where(np.abs(v) < bp.support_edge, out, 0.0)


def branch_angle(v: ArrayLike, sign: int | str, bp: BandParams) -> NDArray[np.float64]:
    """
    arccos g_+-(v), evaluated without the cancellation of arccos near +-1.

    1 - g_+ and 1 + g_- carry an exact factor v^2 once the square root is
    rationalized, so the angle comes from 2 arcsin(sqrt((1 -+ g) / 2)).
    """
    s = _sign(sign)
    v = np.asarray(v, dtype=float)
    g_pm(v, s, bp)  # domain validation
    p, q, a, b = bp.p, bp.q, bp.a, bp.b
    v2 = v * v
    root = np.sqrt(np.maximum((q * q - v2) * (b * b - v2), 0.0))
    c = q * b + s * p * a
    # qb(1 - v^2) -+ (pa v^2 +- root) = v^2 (q^2 + b^2 - 2qbc - (1 - c^2) v^2) / (qb - c v^2 + root)
    num = v2 * (q * q + b * b - 2 * q * b * c - (1 - c * c) * v2)
    den = (q * b - c * v2 + root) * q * b * (1 - v2)
    with np.errstate(invalid="ignore", divide="ignore"):
        gap = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    half = 2 * np.arcsin(np.sqrt(np.clip(gap / 2, 0.0, 1.0)))
    return half if s > 0 else np.pi - half


def branch_momentum(v: ArrayLike, sign: int | str, bp: BandParams):
    """
    Momenta reached by arccos g_+-(v): returns (k_band1, k_band2).

    For v >= 0 band 1 contributes at 2 pi - arccos g and band 2 at arccos g;
    for v < 0 the roles swap.
    """
    v = np.asarray(v, dtype=float)
    base = branch_angle(v, sign, bp)
    k1 = np.where(v >= 0, 2 * np.pi - base, base)
    k2 = np.where(v >= 0, base, 2 * np.pi - base)
    return k1, k2


def w_pm(v: ArrayLike, sign: int | str, weights: Weights, bp: BandParams) -> NDArray[np.float64]:
    """
    w_+-(v) = w_1(2 pi - arccos g) + w_2(arccos g) for v >= 0, and
    w_1(arccos g) + w_2(2 pi - arccos g) for v < 0.
    """
    v = np.asarray(v, dtype=float)
    k1, k2 = branch_momentum(v, sign, bp)
    w1, _ = weights(k1)
    _, w2 = weights(k2)
    return np.asarray(w1) + np.asarray(w2)


def jacobian_identity_check(v: ArrayLike, sign: int | str, bp: BandParams, rel_step: float = 1e-6) -> float:
    """
    max |d/dv arccos g_+-(v) - (+-) 2 pi sgn(v) f_+-(v)| by central differences
    with step ``rel_step * |v|``.
    """
    s = _sign(sign)
    v = np.asarray(v, dtype=float)
    h = rel_step * np.abs(v)
    fd = (branch_angle(v + h, s, bp) - branch_angle(v - h, s, bp)) / (2 * h)
    exact = s * 2 * np.pi * np.sign(v) * f_pm(v, s, bp)
    return float(np.abs(fd - exact).max())


def branch_consistency_check(k: ArrayLike, bp: BandParams) -> float:
    """
    Map k -> v = v_1(k) -> k again through the arccos branch table; return max error.

    Branches: [0, kc) via arccos g_+, [kc, pi) via arccos g_-, [pi, 2pi - kc)
    via 2pi - arccos g_-, [2pi - kc, 2pi) via 2pi - arccos g_+.
    """
    from .spectral import critical_momentum, group_velocity

    k = np.mod(np.asarray(k, dtype=float), 2 * np.pi)
    v = group_velocity(k, bp)[..., 0]
    v = np.clip(v, -bp.support_edge, bp.support_edge)
    kc = critical_momentum(bp)
    kc = 0.0 if kc is None else kc
    gp = branch_angle(v, +1, bp)
    gm = branch_angle(v, -1, bp)
    back = np.select(
        [k < kc, k < np.pi, k < 2 * np.pi - kc],
        [gp, gm, 2 * np.pi - gm],
        2 * np.pi - gp,
    )
    return float(np.abs(back - k).max())


@dataclass(frozen=True)
class _Side:
    bp: BandParams
    weights: Weights
    direction: int  # +1 for v >= 0, -1 for v < 0

    @property
    def edge(self) -> float:
        return self.bp.support_edge

    def regular_density(self, theta: NDArray) -> NDArray:
        """(w_+ f_+ + w_- f_-)(v) dv/dtheta at v = direction * edge * sin(theta), theta in [0, pi/2)."""
        theta = np.asarray(theta, dtype=float)
        r = self.edge
        v = self.direction * r * np.sin(theta)
        jac = r * np.cos(theta)
        fk_q, fk_b = (self._regular_konno(v, jac, rr) for rr in (self.bp.q, self.bp.b))
        # one weights call for both branches and both bands
        ks = [k for s in (1, -1) for k in branch_momentum(v, s, self.bp)]
        w1, w2 = self.weights(np.concatenate(ks))
        n = v.size
        w_plus = w1[:n] + w2[n : 2 * n]
        w_minus = w1[2 * n : 3 * n] + w2[3 * n :]
        return (w_plus * np.abs(fk_q - fk_b) + w_minus * (fk_q + fk_b)) / 2

    def _regular_konno(self, v, jac, rr):
        if rr == self.edge:
            # f_K(v; r) r cos(theta) with the square root cancelled analytically
            return np.sqrt(1 - rr * rr) / (np.pi * (1 - v * v))
        return konno_f(v, rr) * jac

    def integrate_moments(self, orders: NDArray, panels: int, epsabs: float, limit: int):
        """
        Adaptive integrals of v^m (w_+ f_+ + w_- f_-) over this half of the support.

        The theta range is cut into ``panels`` equal pieces that are refined
        together, so each integrand call is one vectorized evaluation.  The
        returned error bound sums the per-panel estimates.
        """
        edges = np.linspace(0.0, np.pi / 2, panels + 1)
        width = np.diff(edges)

        def integrand(t):
            theta = edges[:-1] + t * width
            v = self.direction * self.edge * np.sin(theta)
            rho = self.regular_density(theta) * width
            return (v[None, :] ** orders[:, None] * rho[None, :]).ravel()

        val, err = scipy.integrate.quad_vec(integrand, 0.0, 1.0, epsabs=epsabs, epsrel=0.0, norm="max", limit=limit)
        return val.reshape(len(orders), panels).sum(axis=1), err * panels


class LimitDensity:
    """
    Evaluable mu_V = w0 delta_0 + (w_+ f_+ + w_- f_-) dv.

    ``weights`` maps momenta to (w_1(k), w_2(k)).  For two-sided coin fields
    pass ``left=(bp_minus, weights_minus)``: then v < 0 uses the left
    parameters and v >= 0 the right ones.
    """

    def __init__(
        self,
        bp: BandParams,
        weights: Weights,
        w0: float = 0.0,
        left: tuple[BandParams, Weights] | None = None,
        quad_epsabs: float = 1e-9,
        quad_target: float = 1e-6,
        quad_limit: int = 200,
        quad_panels: int = 64,
        cdf_panels: int = 1024,
    ):
        self.w0 = float(w0)
        self.right = _Side(bp, weights, +1)
        self.left = _Side(left[0], left[1], -1) if left is not None else _Side(bp, weights, -1)
        self.quad_epsabs = quad_epsabs
        self.quad_target = quad_target
        self.quad_limit = quad_limit
        self.quad_panels = quad_panels
        self.cdf_panels = cdf_panels

    @property
    def params(self) -> BandParams:
        return self.right.bp

    @property
    def support(self) -> tuple[float, float]:
        return (-self.left.edge, self.right.edge)

    def _side_values(self, v, fn):
        v = np.asarray(v, dtype=float)
        out = np.zeros(v.shape)
        for side in (self.right, self.left):
            mask = (v >= 0) if side.direction > 0 else (v < 0)
            mask &= np.abs(v) < side.edge
            if mask.any():
                out[mask] = fn(side, v[mask])
        return out

    def f_plus(self, v):
        return self._side_values(v, lambda s, x: f_pm(x, +1, s.bp))

    def f_minus(self, v):
        return self._side_values(v, lambda s, x: f_pm(x, -1, s.bp))

    def w_plus(self, v):
        return self._side_values(v, lambda s, x: w_pm(x, +1, s.weights, s.bp))

    def w_minus(self, v):
        return self._side_values(v, lambda s, x: w_pm(x, -1, s.weights, s.bp))

    def density(self, v):
        """Density of the continuous part, w_+ f_+ + w_- f_-."""
        return self._side_values(
            v,
            lambda s, x: sum(w_pm(x, sg, s.weights, s.bp) * f_pm(x, sg, s.bp) for sg in (1, -1)),
        )

    def _moments(self, orders: Sequence[int]) -> tuple[NDArray, float]:
        orders = np.asarray(orders, dtype=float)
        total, err = np.zeros(len(orders)), 0.0
        for side in (self.right, self.left):
            val, e = side.integrate_moments(orders, self.quad_panels, self.quad_epsabs, self.quad_limit)
            total += val
            err += e
        if err > self.quad_target:
            raise NonConvergenceError(
                f"moment quadrature reached error estimate {err:.2e} > target {self.quad_target:.0e}"
            )
        return total, err

    @cached_property
    def _standard_moments(self) -> tuple[NDArray, float]:
        return self._moments(STANDARD_ORDERS)

    def moment_with_error(self, m: int) -> tuple[float, float]:
        """
        int v^m dmu_V and the quadrature error bound.  The atom at 0 only
        contributes for m = 0.

        Raises
        ------
        NonConvergenceError
            If the error estimate exceeds ``quad_target``.
        """
        if m in STANDARD_ORDERS:
            vals, err = self._standard_moments
            val = float(vals[STANDARD_ORDERS.index(m)])
        else:
            vals, err = self._moments([m])
            val = float(vals[0])
        return (val + self.w0 if m == 0 else val), err

    def continuous_mass(self) -> float:
        return self.moment_with_error(0)[0] - self.w0

    def mass(self) -> float:
        """Total mass w0 + int (w_+ f_+ + w_- f_-) dv."""
        return self.moment_with_error(0)[0]

    def moment(self, m: int) -> float:
        return self.moment_with_error(m)[0]

    @cached_property
    def _cdf_tables(self):
        x, w = np.polynomial.legendre.leggauss(10)
        tables = []
        for side in (self.right, self.left):
            edges = np.linspace(0.0, np.pi / 2, self.cdf_panels + 1)
            half = np.diff(edges) / 2
            mid = (edges[:-1] + edges[1:]) / 2
            nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
            vals = side.regular_density(nodes).reshape(self.cdf_panels, -1)
            cum = np.concatenate([[0.0], np.cumsum((vals * w).sum(axis=1) * half)])
            slopes = side.regular_density(edges[:-1])
            # density at theta = pi/2 is a one-sided limit; evaluate just inside
            slopes = np.append(slopes, side.regular_density(np.array([np.pi / 2 * (1 - 1e-12)])))
            tables.append(CubicHermiteSpline(edges, cum, slopes))
        return tables

    def cdf(self, v: ArrayLike) -> NDArray[np.float64]:
        """Right-continuous CDF of mu_V, with a jump of w0 at v = 0."""
        v = np.asarray(v, dtype=float)
        right, left = self._cdf_tables
        left_total = float(left(np.pi / 2))
        out = np.empty(v.shape)
        neg = v < 0
        th_left = np.arcsin(np.clip(-v[neg] / self.left.edge, 0.0, 1.0))
        out[neg] = left_total - left(th_left)
        th_right = np.arcsin(np.clip(v[~neg] / self.right.edge, 0.0, 1.0))
        out[~neg] = left_total + self.w0 + right(th_right)
        return out


def density_cdf_moments(density: LimitDensity, probes: ArrayLike, orders: Sequence[int] = (1, 2, 4)) -> dict:
    """CDF values at ``probes`` plus total mass and the requested moments."""
    return {
        "cdf": density.cdf(probes),
        "mass": density.mass(),
        "moments": {m: density.moment(m) for m in orders},
    }
