"""
Numerical wave operator, bound-state mass and momentum weights.

Pipeline for an initial state psi0:

1. Diagonalize a truncated copy of U and keep eigenvectors that sit in a
   spectral gap of U0 and are localized well inside the window.  Their
   overlap with psi0 gives the point-spectrum mass w0.
2. Remove that component and iterate Phi_T = U0^{-T} U^T psi_ac over a
   schedule of T until consecutive iterates agree to ``tol``.
3. Momentum weights w_j(k) = |<u_j(k), (F Phi)(k)>|^2.

Two-sided fields (two_phase, anisotropic) have different limits C+ and C-.
For them the evolved state is split at the origin and each half is pulled
back with its own homogeneous walk, giving Phi+ and Phi-.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse
from numpy.typing import ArrayLike, NDArray

from .coins import CoinField, ShiftParams
from .errors import ConfigError, NonConvergenceError, WindowSensitivityError
from .evolution import SplitStepWalk, WalkerState
from .spectral import BandParams, DispersionData, band_angle_range, band_params, eigensystem, u0_hat

__all__ = [
    "fourier",
    "plancherel_mass",
    "truncated_operator",
    "truncated_matrix",
    "unitary_eigensystem",
    "BoundStates",
    "detect_bound_states",
    "ScatteringResult",
    "approximate_wave_operator",
    "momentum_weights",
    "MomentumWeights",
    "GridWeights",
    "DEFAULT_SCHEDULE",
]

log = logging.getLogger(__name__)

DEFAULT_SCHEDULE = (25, 50, 100, 200, 400, 800)


def fourier(state: WalkerState, k: ArrayLike, chunk: int = 8192) -> NDArray[np.complex128]:
    """
    (F psi)(k) = sum_x e^{-ikx} psi(x); returns shape k.shape + (2,).

    Sites are grouped in blocks of B ~ sqrt(n) so that e^{-ik(x0 + B i + j)}
    factors into e^{-ik(x0 + B i)} e^{-ikj}: O(n^(1/2)) exponentials per k and
    the rest is matrix products.
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    out = np.zeros(k.shape + (2,), dtype=np.complex128)
    supp = state.support()
    if supp is None:
        return out
    amps = state.amps[supp[0] - state.x_min : supp[1] - state.x_min + 1]
    n = amps.shape[0]
    block = max(1, int(np.ceil(np.sqrt(n))))
    nb = -(-n // block)
    padded = np.zeros((nb * block, 2), dtype=np.complex128)
    padded[:n] = amps
    # (block, nb * 2): column (i, s) holds block i of component s
    stacked = padded.reshape(nb, block, 2).transpose(1, 0, 2).reshape(block, nb * 2)
    inner_x = np.arange(block, dtype=float)
    outer_x = supp[0] + block * np.arange(nb, dtype=float)
    flat_k = k.ravel()
    flat_out = out.reshape(-1, 2)
    for i in range(0, flat_k.size, chunk):
        kk = flat_k[i : i + chunk]
        partial = (np.exp(-1j * np.outer(kk, inner_x)) @ stacked).reshape(-1, nb, 2)
        flat_out[i : i + chunk] = np.einsum("ni,nis->ns", np.exp(-1j * np.outer(kk, outer_x)), partial)
    return out


def plancherel_mass(values: NDArray[np.complex128]) -> float:
    """(1/2pi) int ||F(k)||^2 dk from samples on a uniform grid over one period."""
    return float(np.mean(np.sum(np.abs(values) ** 2, axis=-1)))


def truncated_operator(walk: SplitStepWalk, x_min: int, n: int) -> scipy.sparse.csr_matrix:
    """
    Sparse 2n x 2n restriction of U = S C to a window, made exactly unitary.

    S couples the pairs (x up, x+1 down) through [[p, q], [conj q, -p]].  The two
    unpaired components at the window edges (x_max up, x_min down) are
    reflected onto themselves.  Index of (x, s) is 2 (x - x_min) + s.
    """
    p, q = walk.shift.p, walk.shift.q
    up = 2 * np.arange(n - 1)
    down = up + 3
    rows = np.concatenate([up, up, down, down, [2 * (n - 1), 1]])
    cols = np.concatenate([up, down, up, down, [2 * (n - 1), 1]])
    vals = np.concatenate(
        [np.full(n - 1, p), np.full(n - 1, q), np.full(n - 1, np.conj(q)), np.full(n - 1, -p), [1.0, 1.0]]
    ).astype(np.complex128)
    s = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(2 * n, 2 * n))
    c = scipy.sparse.block_diag(walk.coins.matrices(np.arange(x_min, x_min + n)), format="csr")
    return (s @ c).tocsr()


def truncated_matrix(walk: SplitStepWalk, x_min: int, n: int) -> NDArray[np.complex128]:
    """Dense version of :func:`truncated_operator`."""
    return truncated_operator(walk, x_min, n).toarray()


def _hermitian_band(u) -> NDArray[np.complex128]:
    """Upper banded storage of the Hermitian part (U + U*)/2."""
    h = ((u + u.conj().T) / 2).tocoo()
    bw = int(np.abs(h.row - h.col).max(initial=0))
    band = np.zeros((bw + 1, h.shape[0]), dtype=np.complex128)
    upper = h.col >= h.row
    band[bw + h.row[upper] - h.col[upper], h.col[upper]] = h.data[upper]
    return band


def _full_band(band: NDArray) -> NDArray:
    """Upper Hermitian band storage -> general (l = u = bw) storage for solve_banded."""
    bw, n = band.shape[0] - 1, band.shape[1]
    full = np.zeros((2 * bw + 1, n), dtype=band.dtype)
    full[: bw + 1] = band
    for d in range(1, bw + 1):
        # H[j + d, j] = conj(H[j, j + d])
        full[bw + d, : n - d] = np.conj(band[bw - d, d:])
    return full


def _cluster_vectors(full, bw, center, size, rng, iters=4):
    """Orthonormal basis of the H-eigenspace near ``center`` by block inverse iteration."""
    n = full.shape[1]
    shifted = full.copy()
    sigma = center + 1e-11 * (1 + abs(center))
    shifted[bw] -= sigma
    x = rng.standard_normal((n, size)) + 1j * rng.standard_normal((n, size))
    for _ in range(iters):
        x = scipy.linalg.solve_banded((bw, bw), shifted, x, check_finite=False)
        x, _ = np.linalg.qr(x)
    return x


def unitary_eigensystem(
    u,
    candidates: Callable[[NDArray[np.float64]], NDArray[np.bool_]] | None = None,
    cluster_tol: float = 1e-9,
):
    """
    Eigenpairs of a banded (sparse or dense) unitary matrix.

    The Hermitian part H = (U + U*)/2 is banded and shares eigenvectors with U.
    Its eigenvalues come from a banded solver; eigenvalues closer than
    ``cluster_tol`` are grouped, each group spans a U-invariant subspace, and U
    compressed to that subspace is diagonalized by a small Schur decomposition.

    ``candidates`` maps eigenvalues h of H to a mask; only those clusters get
    eigenvectors, found by block inverse iteration.  Without it the full
    decomposition is computed densely.  Returns U-eigenvalues and orthonormal
    eigenvectors (columns).
    """
    u = scipy.sparse.csr_matrix(u)
    band = _hermitian_band(u)
    bw = band.shape[0] - 1
    if candidates is None:
        hvals, hvecs = scipy.linalg.eig_banded(band, lower=False)
    else:
        hvals = scipy.linalg.eig_banded(band, lower=False, eigvals_only=True)
    n = hvals.size
    mask = np.ones(n, bool) if candidates is None else np.asarray(candidates(hvals), bool)

    groups, start = [], 0
    while start < n:
        stop = start + 1
        while stop < n and hvals[stop] - hvals[stop - 1] < cluster_tol:
            stop += 1
        if mask[start:stop].any():
            groups.append((start, stop))
        start = stop

    full = _full_band(band) if candidates is not None else None
    rng = np.random.default_rng(0)
    evals, evecs = [], []
    for start, stop in groups:
        if candidates is None:
            basis = hvecs[:, start:stop]
        else:
            basis = _cluster_vectors(full, bw, hvals[start:stop].mean(), stop - start, rng)
        t, z = scipy.linalg.schur(np.conj(basis.T) @ (u @ basis), output="complex")
        evals.extend(np.diag(t))
        evecs.append(basis @ z)
    if not evals:
        return np.zeros(0, complex), np.zeros((u.shape[0], 0), complex)
    return np.array(evals, dtype=np.complex128), np.hstack(evecs)


def _band_params_list(walk: SplitStepWalk) -> list[BandParams | None]:
    coins = walk.coins
    limits = [coins.limit_plus, coins.limit_minus] if coins.two_sided else [coins.limit]
    out = []
    for c in limits:
        try:
            out.append(band_params(walk.shift, c))
        except ConfigError:
            out.append(None)
    return out


def _gap_distance(angles: NDArray[np.float64], walk: SplitStepWalk, grid: int = 1 << 14) -> NDArray[np.float64]:
    """Arc distance from each eigenvalue argument to the continuous spectrum of the limit walk(s)."""
    coins = walk.coins
    limits = [coins.limit_plus, coins.limit_minus] if coins.two_sided else [coins.limit]
    dist = np.full(angles.shape, np.inf)
    for c, bp in zip(limits, _band_params_list(walk)):
        if bp is not None:
            lo, hi = band_angle_range(bp)
            for sgn in (1, -1):
                rel = np.abs(np.angle(np.exp(1j * (angles - sgn * (lo + hi) / 2))))
                dist = np.minimum(dist, np.maximum(rel - (hi - lo) / 2, 0.0))
        else:
            k = (np.arange(grid) + 0.5) * 2 * np.pi / grid
            band = np.angle(np.linalg.eigvals(u0_hat(k, walk.shift, c))).ravel()
            band.sort()
            for i, a in enumerate(angles):
                dist[i] = min(dist[i], np.abs(np.angle(np.exp(1j * (band - a)))).min())
    return dist


@dataclass
class BoundStates:
    """Localized eigenvectors of the truncated U lying in a spectral gap."""

    w0: float
    eigenvalues: NDArray[np.complex128]
    vectors: list[WalkerState]
    window: tuple[int, int]
    overlaps: NDArray[np.complex128]
    w0_half_window: float | None = None

    def projection(self) -> WalkerState:
        """Pi_p psi0 = sum_b <phi_b, psi0> phi_b on the diagonalization window."""
        out = WalkerState.zeros(*self.window)
        for c, phi in zip(self.overlaps, self.vectors):
            out.amps += c * phi.amps
        return out


def _localize_degenerate(evals, z, inner, tol=1e-8):
    """
    Within each degenerate eigenspace pick the basis diagonalizing the
    inner-region projector, separating central bound states from edge
    states of the truncation that share their eigenvalue.
    """
    z = z.copy()
    order = np.argsort(np.angle(evals))
    used = np.zeros(evals.size, bool)
    for i in order:
        if used[i]:
            continue
        group = np.flatnonzero((np.abs(evals - evals[i]) < tol) & ~used)
        used[group] = True
        if group.size > 1:
            block = z[:, group]
            m = np.conj(block[inner].T) @ block[inner]
            _, rot = np.linalg.eigh(m)
            z[:, group] = block @ rot
    return z


def _detect_once(walk, psi0, n_sites, gap_tol, inner_mass):
    x_min = -(n_sites // 2)
    window = (x_min, n_sites)
    supp = psi0.support()
    quarter = n_sites // 4
    if supp is not None and (supp[0] < -quarter or supp[1] > quarter):
        raise ConfigError(f"initial state support {supp} must lie in the inner half of the {n_sites}-site window")
    u = truncated_operator(walk, x_min, n_sites)

    def in_gap(h):
        theta = np.arccos(np.clip(h, -1, 1))
        return np.maximum(_gap_distance(theta, walk), _gap_distance(-theta, walk)) > gap_tol

    evals, z = unitary_eigensystem(u, in_gap)
    dist = _gap_distance(np.angle(evals), walk)
    xs = np.arange(x_min, x_min + n_sites)
    inner = np.repeat(np.abs(xs) <= quarter, 2)
    z = _localize_degenerate(evals, z, inner)
    mass_inner = np.sum(np.abs(z[inner]) ** 2, axis=0)
    keep = np.flatnonzero((dist > gap_tol) & (mass_inner >= inner_mass))
    psi = psi0.embed(*window).amps.ravel()
    vectors, overlaps = [], []
    for j in keep:
        phi = WalkerState(x_min, z[:, j].reshape(n_sites, 2).copy())
        vectors.append(phi)
        overlaps.append(np.vdot(z[:, j], psi))
    overlaps = np.array(overlaps, dtype=np.complex128)
    w0 = float(np.sum(np.abs(overlaps) ** 2))
    return BoundStates(w0, evals[keep], vectors, window, overlaps)


def detect_bound_states(
    walk: SplitStepWalk,
    psi0: WalkerState,
    n_sites: int = 256,
    gap_tol: float = 1e-3,
    inner_mass: float = 1 - 1e-6,
    verify_doubling: bool = False,
    doubling_tol: float = 1e-3,
) -> BoundStates:
    """
    Point-spectrum component of psi0 from an ``n_sites`` truncation centred at 0.

    An eigenpair counts as a bound state when its eigenvalue is more than
    ``gap_tol`` (arc length) away from the bands of the limit walk and at
    least ``inner_mass`` of the eigenvector lies in the inner half of the
    window.  With ``verify_doubling`` the computation is repeated on a window
    of ``2 n_sites`` sites and that result is returned.

    Raises
    ------
    WindowSensitivityError
        If doubling the window moves w0 by more than ``doubling_tol``.
    """
    if walk.coins.is_homogeneous:
        return BoundStates(0.0, np.zeros(0, complex), [], (-(n_sites // 2), n_sites), np.zeros(0, complex))
    first = _detect_once(walk, psi0, n_sites, gap_tol, inner_mass)
    if not verify_doubling:
        return first
    second = _detect_once(walk, psi0, 2 * n_sites, gap_tol, inner_mass)
    second.w0_half_window = first.w0
    if abs(second.w0 - first.w0) > doubling_tol:
        raise WindowSensitivityError(
            f"bound-state mass changed from {first.w0:.6g} to {second.w0:.6g} when the window doubled"
        )
    return second


@dataclass
class ScatteringResult:
    """
    Approximation of W* psi0 together with diagnostics.

    ``phi`` is W* psi0 for single-limit fields.  For two-sided fields ``phi``
    is the right-moving part (pulled back with C+) and ``phi_minus`` the
    left-moving part (pulled back with C-).
    """

    phi: WalkerState
    w0: float
    bound: BoundStates
    residuals: list[tuple[int, float]] = field(default_factory=list)
    T_used: int = 0
    converged: bool = True
    monotone: bool = True
    phi_minus: WalkerState | None = None

    @property
    def two_sided(self) -> bool:
        return self.phi_minus is not None

    def scattered_mass(self) -> float:
        m = self.phi.norm() ** 2
        if self.phi_minus is not None:
            m += self.phi_minus.norm() ** 2
        return m

    def report(self) -> dict:
        return {
            "T_used": self.T_used,
            "converged": self.converged,
            "residuals": [{"T": t, "residual": r} for t, r in self.residuals],
            "w0": self.w0,
            "gap_eigenvalues": [[float(z.real), float(z.imag)] for z in self.bound.eigenvalues],
        }


def _split(state: WalkerState) -> tuple[WalkerState, WalkerState]:
    right = state.copy()
    left = state.copy()
    right.amps[state.sites <= 0] = 0
    left.amps[state.sites > 0] = 0
    return right, left


def approximate_wave_operator(
    psi0: WalkerState,
    walk: SplitStepWalk,
    schedule: Sequence[int] = DEFAULT_SCHEDULE,
    tol: float = 1e-4,
    bound: BoundStates | None = None,
    bound_window: int = 512,
    strict: bool = True,
) -> ScatteringResult:
    """
    Iterate Phi_T = U0^{-T} U^T (psi0 - Pi_p psi0) until successive schedule
    points differ by at most ``tol``.

    Raises
    ------
    NonConvergenceError
        When ``strict`` and the last residual still exceeds ``tol``; the
        partial :class:`ScatteringResult` is attached as ``.result``.
    """
    if walk.coins.is_homogeneous:
        empty = detect_bound_states(walk, psi0, bound_window)
        return ScatteringResult(psi0.copy(), 0.0, empty)
    if bound is None:
        bound = detect_bound_states(walk, psi0, bound_window)
    psi_ac = psi0 - bound.projection() if bound.vectors else psi0.copy()

    two_sided = walk.coins.two_sided
    plus = walk.homogeneous_limit("plus")
    minus = walk.homogeneous_limit("minus") if two_sided else None

    result = ScatteringResult(psi0, bound.w0, bound, converged=False)
    prev = None
    for T in sorted(schedule):
        evolved = walk.evolve(psi_ac, T)
        if two_sided:
            right, left = _split(evolved)
            current = (plus.evolve(right, T, "inverse"), minus.evolve(left, T, "inverse"))
        else:
            current = (plus.evolve(evolved, T, "inverse"),)
        if prev is not None:
            res = float(np.sqrt(sum(np.linalg.norm((c - p).amps) ** 2 for c, p in zip(current, prev))))
            if result.residuals and res > result.residuals[-1][1]:
                result.monotone = False
                log.warning("wave-operator residual increased at T=%d (%.3e)", T, res)
            result.residuals.append((T, res))
        prev = current
        result.T_used = T
        result.phi = current[0]
        result.phi_minus = current[1] if two_sided else None
        if result.residuals and result.residuals[-1][1] <= tol:
            result.converged = True
            break
    if not result.converged and strict:
        last = result.residuals[-1][1] if result.residuals else float("nan")
        raise NonConvergenceError(
            f"wave operator did not converge by T={result.T_used} (residual {last:.3e} > tol {tol:.1e})",
            result,
        )
    return result


def momentum_weights(phi: WalkerState, disp: DispersionData) -> tuple[NDArray, NDArray]:
    """w_j(k) = |<u_j(k), (F phi)(k)>|^2 on the dispersion grid."""
    f = fourier(phi, disp.k)
    proj = np.einsum("kjs,ks->kj", np.conj(disp.u), f)
    w = np.abs(proj) ** 2
    return w[:, 0], w[:, 1]


Weights = Callable[[NDArray[np.float64]], tuple[NDArray, NDArray]]


class MomentumWeights:
    """Exact w_j(k) at arbitrary momenta by direct Fourier summation of phi."""

    def __init__(self, phi: WalkerState, bp: BandParams):
        supp = phi.support()
        self.bp = bp
        self.phi = phi if supp is None else phi.embed(supp[0], supp[1] - supp[0] + 1)

    def __call__(self, k: ArrayLike) -> tuple[NDArray, NDArray]:
        k = np.asarray(k, dtype=float)
        f = fourier(self.phi, k.ravel())
        _, u = eigensystem(k.ravel(), self.bp)
        w = np.abs(np.einsum("kjs,ks->kj", np.conj(u), f)) ** 2
        return w[:, 0].reshape(k.shape), w[:, 1].reshape(k.shape)


class GridWeights:
    """Periodic linear interpolation of weights sampled on a uniform k-grid."""

    def __init__(self, k: NDArray, w1: NDArray, w2: NDArray):
        self.k, self.w1, self.w2 = np.asarray(k), np.asarray(w1), np.asarray(w2)

    @classmethod
    def constant(cls, w1: float, w2: float, M: int = 8) -> "GridWeights":
        k = (np.arange(M) + 0.5) * 2 * np.pi / M
        return cls(k, np.full(M, w1), np.full(M, w2))

    def __call__(self, k: ArrayLike) -> tuple[NDArray, NDArray]:
        k = np.mod(np.asarray(k, dtype=float), 2 * np.pi)
        return (
            np.interp(k, self.k, self.w1, period=2 * np.pi),
            np.interp(k, self.k, self.w2, period=2 * np.pi),
        )
