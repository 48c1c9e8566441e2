"""
CSV and JSON writers.

Floats are written with 17 significant digits and '.' as the decimal point,
so tables round-trip exactly and identical runs give identical bytes.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import NDArray

from .evolution import Distribution, WalkerState
from .limit_law import LimitDensity
from .spectral import DispersionData
from .stats import ConvergenceReport

__all__ = [
    "TRAJECTORY_COLUMNS",
    "DISTRIBUTION_COLUMNS",
    "DISPERSION_COLUMNS",
    "DENSITY_COLUMNS",
    "WEIGHTS_COLUMNS",
    "REPORT_COLUMNS",
    "write_csv",
    "write_json",
    "trajectory_rows",
    "distribution_rows",
    "dispersion_rows",
    "density_rows",
    "weights_rows",
    "report_rows",
    "density_summary",
]

TRAJECTORY_COLUMNS = ("t", "x", "re_up", "im_up", "re_down", "im_down")
DISTRIBUTION_COLUMNS = ("t", "x", "prob")
DISPERSION_COLUMNS = (
    "k", "tau",
    "re_lambda1", "im_lambda1", "v1", "re_u1_up", "im_u1_up", "re_u1_down", "im_u1_down",
    "re_lambda2", "im_lambda2", "v2", "re_u2_up", "im_u2_up", "re_u2_down", "im_u2_down",
)
DENSITY_COLUMNS = ("v", "f_plus", "f_minus", "w_plus", "w_minus", "density")
WEIGHTS_COLUMNS = ("k", "w1", "w2")
REPORT_COLUMNS = ("t", "ks", "gap_m1", "gap_m2", "gap_m4")


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_csv(path: str | Path, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def write_json(path: str | Path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="ascii")
    return path


def _support_slice(state: WalkerState) -> slice:
    supp = state.support()
    if supp is None:
        return slice(0, 0)
    return slice(supp[0] - state.x_min, supp[1] - state.x_min + 1)


def trajectory_rows(t: int, state: WalkerState):
    sl = _support_slice(state)
    for x, (up, down) in zip(state.sites[sl], state.amps[sl]):
        yield (t, x, up.real, up.imag, down.real, down.imag)


def distribution_rows(t: int, dist: Distribution):
    nz = np.flatnonzero(dist.probs)
    if nz.size == 0:
        return
    for i in range(nz[0], nz[-1] + 1):
        yield (t, dist.xs[i], dist.probs[i])


def dispersion_rows(data: DispersionData):
    for i, k in enumerate(data.k):
        row = [k, data.tau[i]]
        for j in range(2):
            lam, u = data.lam[i, j], data.u[i, j]
            row += [lam.real, lam.imag, data.v[i, j], u[0].real, u[0].imag, u[1].real, u[1].imag]
        yield row


def density_rows(density: LimitDensity, v: NDArray[np.float64]):
    cols = (density.f_plus(v), density.f_minus(v), density.w_plus(v), density.w_minus(v), density.density(v))
    for i, vi in enumerate(v):
        yield (vi, *(c[i] for c in cols))


def weights_rows(k: NDArray, w1: NDArray, w2: NDArray):
    return zip(k, w1, w2)


def report_rows(report: ConvergenceReport):
    for r in report.records:
        yield (r.t, r.ks, r.gaps[1], r.gaps[2], r.gaps[4])


def density_summary(density: LimitDensity, orders: Sequence[int] = (1, 2, 4)) -> dict:
    return {
        "w0": density.w0,
        "mass": density.mass(),
        "moments": {f"m{m}": density.moment(m) for m in orders},
    }
