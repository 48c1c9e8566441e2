"""
Command line front end.

    splitwalk simulate --config run.ini     position tables at the configured times
    splitwalk density  --config run.ini     limit density, weights and scattering report
    splitwalk compare  --config run.ini     KS distance and moment gaps against the limit law
    splitwalk spectrum --config run.ini     dispersion table of the limit coin(s)

The output directory is taken from ``--out``, else from the
``SPLITWALK_OUT_DIR`` environment variable, else from ``[output] dir``.
Exit codes: 0 success, 2 configuration error, 3 boundary touch,
4 non-convergence, 5 domain error, 6 window sensitivity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import output
from .config import RunConfig, load_config
from .errors import NonConvergenceError, SplitWalkError
from .evolution import position_distribution
from .limit_law import LimitDensity
from .scattering import momentum_weights
from .scenarios import PipelineResult, limit_law_for
from .spectral import band_params, dispersion
from .stats import convergence_sweep

log = logging.getLogger("splitwalk")

OUT_ENV = "SPLITWALK_OUT_DIR"


def cmd_simulate(cfg: RunConfig, out: Path) -> list[Path]:
    scenario = cfg.scenario
    traj, dist = [], []
    for t, state in scenario.walk.trajectory(scenario.psi0, cfg.times):
        traj.extend(output.trajectory_rows(t, state))
        dist.extend(output.distribution_rows(t, position_distribution(state)))
        log.info("t=%d norm defect %.2e", t, abs(state.norm() - scenario.psi0.norm()))
    return [
        output.write_csv(out / "trajectory.csv", output.TRAJECTORY_COLUMNS, traj),
        output.write_csv(out / "distribution.csv", output.DISTRIBUTION_COLUMNS, dist),
    ]


def _pipeline(cfg: RunConfig, out: Path) -> PipelineResult:
    try:
        result = limit_law_for(
            cfg.scenario, schedule=cfg.schedule, tol=cfg.tol, bound_window=cfg.bound_window, strict=cfg.strict
        )
    except NonConvergenceError as exc:
        if exc.result is not None:
            output.write_json(out / "scattering.json", exc.result.report())
        raise
    report = result.scattering
    if not report.converged:
        last = report.residuals[-1][1] if report.residuals else float("nan")
        log.warning("wave operator not converged: residual %.3e at T=%d (tol %.1e)", last, report.T_used, cfg.tol)
    output.write_json(out / "scattering.json", report.report())
    return result


def _v_grid(density: LimitDensity, n: int) -> np.ndarray:
    lo, hi = density.support
    return np.linspace(lo, hi, n + 2)[1:-1]


def cmd_density(cfg: RunConfig, out: Path) -> list[Path]:
    result = _pipeline(cfg, out)
    density = result.density
    paths = [out / "scattering.json"]
    paths.append(
        output.write_csv(out / "density.csv", output.DENSITY_COLUMNS, output.density_rows(density, _v_grid(density, cfg.v_grid)))
    )
    sides = [("weights.csv", result.scattering.phi, density.right.bp)]
    if result.scattering.two_sided:
        sides.append(("weights_minus.csv", result.scattering.phi_minus, density.left.bp))
    for name, phi, bp in sides:
        disp = dispersion(cfg.k_grid, bp)
        w1, w2 = momentum_weights(phi, disp)
        paths.append(output.write_csv(out / name, output.WEIGHTS_COLUMNS, output.weights_rows(disp.k, w1, w2)))
    summary = output.density_summary(density)
    paths.append(output.write_json(out / "summary.json", summary))
    log.info("w0 = %.6g, mass = %.12g", summary["w0"], summary["mass"])
    return paths


def cmd_compare(cfg: RunConfig, out: Path) -> list[Path]:
    result = _pipeline(cfg, out)
    report = convergence_sweep(cfg.scenario, cfg.sweep, result.density, grid_size=cfg.v_grid, atom_sites=cfg.atom_sites)
    for r in report.records:
        log.info("t=%d ks=%.4g gap_m2=%.3g", r.t, r.ks, r.gaps[2])
    return [
        out / "scattering.json",
        output.write_csv(out / "report.csv", output.REPORT_COLUMNS, output.report_rows(report)),
        output.write_json(out / "report.json", report.summary()),
    ]


def cmd_spectrum(cfg: RunConfig, out: Path) -> list[Path]:
    coins = cfg.coins
    limits = [("dispersion.csv", coins.limit)]
    if coins.two_sided:
        limits.append(("dispersion_minus.csv", coins.limit_minus))
    paths = []
    for name, c in limits:
        data = dispersion(cfg.k_grid, band_params(cfg.shift, c))
        paths.append(output.write_csv(out / name, output.DISPERSION_COLUMNS, output.dispersion_rows(data)))
    return paths


COMMANDS = {
    "simulate": cmd_simulate,
    "density": cmd_density,
    "compare": cmd_compare,
    "spectrum": cmd_spectrum,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="splitwalk", description="Split-step quantum walk simulator and limit laws.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "evolve and write trajectory and distribution tables",
        "density": "compute the limit law and write density, weights and summaries",
        "compare": "compare simulated laws of X_t/t with the limit law",
        "spectrum": "write the dispersion table of the limit coin",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, type=Path, help="run configuration (INI)")
        p.add_argument("--out", type=Path, default=None, help=f"output directory (overrides ${OUT_ENV} and the config)")
        p.add_argument("--threads", type=int, default=0, help="BLAS threads, 0 = library default")
    return parser


def resolve_out_dir(cli_out: Path | None, cfg: RunConfig) -> Path:
    if cli_out is not None:
        return cli_out
    env = os.environ.get(OUT_ENV)
    return Path(env) if env else cfg.out_dir


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 0:
        print("error: --threads must be >= 0", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config)
        out = resolve_out_dir(args.out, cfg)
        out.mkdir(parents=True, exist_ok=True)
        with threadpool_limits(limits=args.threads or None):
            paths = COMMANDS[args.command](cfg, out)
    except SplitWalkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
