"""
Momentum-space analysis of the homogeneous evolution U0 = S C0.

In Fourier space (F psi)(k) = sum_x e^{-ikx} psi(x) the homogeneous walk is
multiplication by

    U0_hat(k) = [[p, q e^{ik}], [q e^{-ik}, -p]] C0,   C0 = [[a, b], [b, -a]],

whose eigenvalues are exp(+-i arccos tau(k)) with tau(k) = pa + qb cos k.
Everything here assumes p >= 0 and q, a, b > 0 (see :class:`BandParams`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .coins import SHIFT_ATOL, ShiftParams, a2_coin, make_shift
from .errors import ConfigError, DegenerateBandError

__all__ = [
    "BandParams",
    "DispersionData",
    "band_params",
    "tau",
    "tau_prime",
    "one_minus_tau_squared",
    "u0_hat",
    "eigensystem",
    "group_velocity",
    "dispersion",
    "critical_momentum",
    "dvdk_closed_form",
    "dvdk_factorization_check",
    "FactorizationCheck",
    "phase_velocity_residual",
    "band_angle_range",
]

DEGENERACY_TOL = 1e-14


@dataclass(frozen=True)
class BandParams:
    """
    Real parameters with p >= 0, q, a, b > 0 and p^2 + q^2 = a^2 + b^2 = 1.

    p = 0 is admitted: it is the classical two-state walk, for which all the
    closed forms stay finite.
    """

    p: float
    q: float
    a: float
    b: float

    def __post_init__(self):
        if self.p < 0:
            raise ConfigError(f"parameter p must be nonnegative (got {self.p})")
        for name in ("q", "a", "b"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"parameter {name} must be positive (got {getattr(self, name)})")
        if abs(self.p**2 + self.q**2 - 1) > SHIFT_ATOL or abs(self.a**2 + self.b**2 - 1) > SHIFT_ATOL:
            raise ConfigError(f"parameters not normalized: {self}")

    @classmethod
    def from_pa(cls, p: float, a: float) -> "BandParams":
        return cls(p, float(np.sqrt(1 - p * p)), a, float(np.sqrt(1 - a * a)))

    @property
    def shift(self) -> ShiftParams:
        return make_shift(self.p, self.q)

    @property
    def coin(self) -> NDArray[np.complex128]:
        return a2_coin(self.a, self.b)

    @property
    def support_edge(self) -> float:
        """min(q, b): largest attainable |group velocity|."""
        return min(self.q, self.b)


def band_params(shift: ShiftParams, c0: ArrayLike, atol: float = 1e-12) -> BandParams:
    """
    Extract (p, q, a, b) after checking that shift and limit coin have the required form.

    Raises
    ------
    ConfigError
        If q is not real and positive, or C0 is not [[a, b], [b, -a]] with a, b > 0.
    """
    if not (shift.p >= 0 and shift.q.imag == 0 and shift.q.real > 0):
        raise ConfigError(f"limit law needs p >= 0 and real q > 0 (got p={shift.p}, q={shift.q})")
    c0 = np.asarray(c0, dtype=np.complex128)
    if np.abs(c0.imag).max() > atol:
        raise ConfigError("limit coin must be real")
    a, b = c0[0, 0].real, c0[0, 1].real
    if abs(c0[1, 0].real - b) > atol or abs(c0[1, 1].real + a) > atol:
        raise ConfigError("limit coin must have the form [[a, b], [b, -a]]")
    return BandParams(shift.p, shift.q.real, float(a), float(b))


def tau(k: ArrayLike, bp: BandParams) -> NDArray[np.float64]:
    """tau(k) = pa + qb cos k, half the trace of U0_hat(k)."""
    return bp.p * bp.a + bp.q * bp.b * np.cos(np.asarray(k, dtype=float))


def one_minus_tau_squared(k: ArrayLike, bp: BandParams) -> NDArray[np.float64]:
    """
    1 - tau^2 without cancellation near the band edges.

    With p^2 + q^2 = a^2 + b^2 = 1,
    1 - tau = ((p - a)^2 + (q - b)^2) / 2 + 2 qb sin^2(k/2) and
    1 + tau = ((p + a)^2 + (q - b)^2) / 2 + 2 qb cos^2(k/2).
    """
    k = np.asarray(k, dtype=float)
    p, q, a, b = bp.p, bp.q, bp.a, bp.b
    minus = ((p - a) ** 2 + (q - b) ** 2) / 2 + 2 * q * b * np.sin(k / 2) ** 2
    plus = ((p + a) ** 2 + (q - b) ** 2) / 2 + 2 * q * b * np.cos(k / 2) ** 2
    return minus * plus


def tau_prime(k: ArrayLike, bp: BandParams) -> NDArray[np.float64]:
    return -bp.q * bp.b * np.sin(np.asarray(k, dtype=float))


def u0_hat(k: ArrayLike, shift: ShiftParams, c0: ArrayLike) -> NDArray[np.complex128]:
    """U0_hat(k), shape k.shape + (2, 2).  Works for any shift and coin."""
    k = np.asarray(k, dtype=float)
    e = np.exp(1j * k)
    s = np.empty(k.shape + (2, 2), dtype=np.complex128)
    s[..., 0, 0] = shift.p
    s[..., 0, 1] = shift.q * e
    s[..., 1, 0] = np.conj(shift.q) / e
    s[..., 1, 1] = -shift.p
    return s @ np.asarray(c0, dtype=np.complex128)


def _fix_phase(vec: NDArray[np.complex128]) -> NDArray[np.complex128]:
    """Rotate each vector so its largest-magnitude component is real positive (first on ties)."""
    idx = np.argmax(np.abs(vec), axis=-1)
    lead = np.take_along_axis(vec, idx[..., None], axis=-1)
    return vec * (np.abs(lead) / lead)


def eigensystem(k: ArrayLike, bp: BandParams) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
    """
    Eigenvalues and normalized eigenvectors of U0_hat(k).

    Returns
    -------
    lam : array, shape k.shape + (2,)
        lam[..., j] = exp((-1)^j i arccos tau(k)) for j = 0, 1 (bands 1 and 2).
    u : array, shape k.shape + (2, 2)
        u[..., j, :] is the eigenvector of band j + 1.  At band-touching points
        (U0_hat = lambda I) the standard basis is returned.
    """
    k = np.asarray(k, dtype=float)
    m = u0_hat(k, bp.shift, bp.coin)
    omega = np.arccos(np.clip(tau(k, bp), -1.0, 1.0))
    lam = np.stack([np.exp(1j * omega), np.exp(-1j * omega)], axis=-1)
    vecs = []
    for j in range(2):
        l = lam[..., j]
        c1 = np.stack([m[..., 0, 1], l - m[..., 0, 0]], axis=-1)
        c2 = np.stack([l - m[..., 1, 1], m[..., 1, 0]], axis=-1)
        n1 = np.linalg.norm(c1, axis=-1)
        n2 = np.linalg.norm(c2, axis=-1)
        use1 = (n1 >= n2)[..., None]
        v = np.where(use1, c1, c2)
        nv = np.maximum(n1, n2)[..., None]
        basis = np.zeros(2, dtype=np.complex128)
        basis[j] = 1.0
        degenerate = nv < 1e-8
        v = np.where(degenerate, basis, v / np.where(degenerate, 1.0, nv))
        vecs.append(_fix_phase(v))
    return lam, np.stack(vecs, axis=-2)


def group_velocity(k: ArrayLike, bp: BandParams) -> NDArray[np.float64]:
    """
    v_j(k) = (-1)^(j+1) tau'(k) / sqrt(1 - tau(k)^2), shape k.shape + (2,).

    Raises
    ------
    DegenerateBandError
        Where 1 - tau^2 < 1e-14 (bands touch, velocity undefined).
    """
    k = np.asarray(k, dtype=float)
    gap = one_minus_tau_squared(k, bp)
    if np.any(gap < DEGENERACY_TOL):
        bad = np.asarray(k)[gap < DEGENERACY_TOL].ravel()[0]
        raise DegenerateBandError(f"bands touch at k={bad:.17g}; group velocity undefined")
    v1 = tau_prime(k, bp) / np.sqrt(gap)
    return np.stack([v1, -v1], axis=-1)


def phase_velocity_residual(k: ArrayLike, bp: BandParams, h: float = 1e-5) -> float:
    """
    max |v_j(k) + d arg(lambda_j)/dk| using central differences of the band phase.

    With the e^{-ikx} Fourier convention the position operator is i d/dk, so the
    group velocity is minus the phase derivative.
    """
    k = np.asarray(k, dtype=float)
    lam_p, _ = eigensystem(k + h, bp)
    lam_m, _ = eigensystem(k - h, bp)
    dphase = np.angle(lam_p / lam_m) / (2 * h)
    return float(np.abs(group_velocity(k, bp) + dphase).max())


@dataclass(frozen=True)
class DispersionData:
    k: NDArray[np.float64]
    tau: NDArray[np.float64]
    lam: NDArray[np.complex128]
    u: NDArray[np.complex128]
    v: NDArray[np.float64]
    params: BandParams


def dispersion(M: int, bp: BandParams, offset: float = 0.5) -> DispersionData:
    """Spectral data on the uniform grid k_m = (m + offset) 2 pi / M, m = 0..M-1."""
    if M < 1:
        raise ConfigError(f"grid size must be positive (got {M})")
    k = (np.arange(M) + offset) * (2 * np.pi / M)
    lam, u = eigensystem(k, bp)
    return DispersionData(k, tau(k, bp), lam, u, group_velocity(k, bp), bp)


def band_angle_range(bp: BandParams) -> tuple[float, float]:
    """Band 1 occupies arguments [arccos(pa + qb), arccos(pa - qb)]; band 2 is its mirror."""
    return (
        float(np.arccos(np.clip(bp.p * bp.a + bp.q * bp.b, -1, 1))),
        float(np.arccos(np.clip(bp.p * bp.a - bp.q * bp.b, -1, 1))),
    )


def critical_momentum(bp: BandParams) -> float | None:
    """
    Momentum in (0, pi) where dv_1/dk changes sign, or None when p == a.

    tau = a/p for p > a and tau = p/a for p < a, i.e. cos k equals aq/(bp)
    or its reciprocal, whichever is below one.
    """
    if bp.p == bp.a:
        return None
    num, den = bp.a * bp.q, bp.b * bp.p
    return float(np.arccos(den / num if den < num else num / den))


def dvdk_closed_form(k: ArrayLike, bp: BandParams) -> NDArray[np.float64]:
    """ap (tau - a/p)(tau - p/a) / (1 - tau^2)^(3/2), written as (p tau - a)(a tau - p) / ..."""
    t = tau(k, bp)
    a, p = bp.a, bp.p
    return (p * t - a) * (a * t - p) / one_minus_tau_squared(k, bp) ** 1.5


@dataclass(frozen=True)
class FactorizationCheck:
    residual: float
    sign_pattern_ok: bool
    critical_k: float | None


def dvdk_factorization_check(k: ArrayLike, bp: BandParams, h: float = 1e-5) -> FactorizationCheck:
    """
    Compare central-difference dv_1/dk with the factorized closed form.

    Also checks the sign pattern: negative on [0, kc) and (2pi - kc, 2pi),
    positive on (kc, 2pi - kc); for p == a the derivative must be >= 0.
    """
    k = np.mod(np.asarray(k, dtype=float), 2 * np.pi)
    fd = (group_velocity(k + h, bp)[..., 0] - group_velocity(k - h, bp)[..., 0]) / (2 * h)
    exact = dvdk_closed_form(k, bp)
    residual = float(np.abs(fd - exact).max())
    kc = critical_momentum(bp)
    if kc is None:
        ok = bool(np.all(exact >= 0))
    else:
        outer = (k < kc) | (k > 2 * np.pi - kc)
        inner = (k > kc) & (k < 2 * np.pi - kc)
        ok = bool(np.all(exact[outer] < 0) and np.all(exact[inner] > 0))
    return FactorizationCheck(residual, ok, kc)
