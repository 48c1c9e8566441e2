"""
Run configuration files.

Plain INI (``key = value`` under ``[section]`` headers, ``#`` comments).
Every section is optional except ``[shift]`` and ``[coins]``; see
the package README for the full schema.  Validation errors name the
file and line of the offending entry.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

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
    coin_matrix,
    make_shift,
)
from .errors import ConfigError, SplitWalkError
from .evolution import WalkerState
from .scattering import DEFAULT_SCHEDULE
from .scenarios import Scenario

__all__ = ["RunConfig", "load_config", "parse_config"]

COIN_MODELS = ("homogeneous", "one_defect", "two_phase", "short_range", "anisotropic")
KNOWN = {
    "shift": {"p", "q"},
    "coins": {"model", "a", "b", "c0", "minus_a", "minus_b", "c_minus", "defect", "theta0", "kappa", "epsilon"},
    "initial": {"sites", "spinors", "random_sites", "normalize"},
    "time": {"times", "sweep"},
    "numerics": {"k_grid", "v_grid", "schedule", "tol", "strict", "bound_window", "atom_sites"},
    "output": {"dir"},
    "seed": {"value"},
}


@dataclass
class RunConfig:
    name: str
    shift: ShiftParams
    coins: CoinField
    psi0: WalkerState
    times: list[int] = field(default_factory=lambda: [0, 100])
    sweep: list[int] = field(default_factory=lambda: [500, 1000, 2000, 4000])
    k_grid: int = 1024
    v_grid: int = 2001
    schedule: tuple[int, ...] = DEFAULT_SCHEDULE
    tol: float = 1e-4
    strict: bool = True
    bound_window: int = 512
    atom_sites: int = 1
    out_dir: Path = Path("out")
    seed: int = 0

    @property
    def scenario(self) -> Scenario:
        return Scenario(self.name, self.shift, self.coins, self.psi0)


def _line_index(text: str) -> dict[tuple[str, str], int]:
    """(section, key) -> 1-based line number, plus (section, '') for headers."""
    index, section = {}, ""
    for n, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        m = re.match(r"\[([^\]]+)\]", stripped)
        if m:
            section = m.group(1).strip().lower()
            index.setdefault((section, ""), n)
            continue
        m = re.match(r"([^=:#;\s][^=:]*?)\s*[=:]", stripped)
        if m and section:
            index.setdefault((section, m.group(1).strip().lower()), n)
    return index


class _Reader:
    def __init__(self, parser: configparser.ConfigParser, lines: dict, source: str):
        self.parser, self.lines, self.source = parser, lines, source

    def fail(self, section: str, key: str, message: str) -> ConfigError:
        line = self.lines.get((section, key)) or self.lines.get((section, ""))
        where = f"{self.source}:{line}" if line else self.source
        label = f"[{section}] {key}" if key else f"[{section}]"
        return ConfigError(f"{where}: {label}: {message}")

    def has(self, section: str, key: str) -> bool:
        return self.parser.has_option(section, key)

    def raw(self, section: str, key: str, default=None):
        if not self.has(section, key):
            if default is None:
                raise self.fail(section, key, "required value missing")
            return default
        return self.parser.get(section, key)

    def convert(self, section: str, key: str, fn, default=None):
        if not self.has(section, key):
            if default is None:
                raise self.fail(section, key, "required value missing")
            return default
        text = self.parser.get(section, key)
        try:
            return fn(text)
        except (ValueError, TypeError) as exc:
            raise self.fail(section, key, f"cannot parse {text!r} ({exc})") from None

    def number(self, section, key, default=None):
        return self.convert(section, key, float, default)

    def integer(self, section, key, default=None):
        return self.convert(section, key, int, default)

    def ints(self, section, key, default=None):
        return self.convert(section, key, lambda s: [int(x) for x in s.split()], default)

    def complexes(self, section, key, default=None):
        return self.convert(section, key, lambda s: [complex(x) for x in s.replace(";", " ").split()], default)

    def boolean(self, section, key, default: bool) -> bool:
        if not self.has(section, key):
            return default
        try:
            return self.parser.getboolean(section, key)
        except ValueError as exc:
            raise self.fail(section, key, str(exc)) from None


def _matrix(reader: _Reader, section: str, key: str):
    entries = reader.complexes(section, key)
    if len(entries) != 4:
        raise reader.fail(section, key, f"expected 4 entries (row-major 2x2), got {len(entries)}")
    try:
        return coin_matrix(np.array(entries).reshape(2, 2))
    except SplitWalkError as exc:
        raise reader.fail(section, key, str(exc)) from None


def _a2(reader: _Reader, prefix: str, matrix_key: str):
    section = "coins"
    if reader.has(section, matrix_key):
        return _matrix(reader, section, matrix_key)
    a_key = f"{prefix}a"
    a = reader.number(section, a_key)
    b = reader.number(section, f"{prefix}b", float("nan"))
    try:
        return a2_coin(a, None if np.isnan(b) else b)
    except SplitWalkError as exc:
        raise reader.fail(section, a_key, str(exc)) from None


def _coins(reader: _Reader) -> CoinField:
    model = reader.raw("coins", "model").strip().lower()
    if model not in COIN_MODELS:
        raise reader.fail("coins", "model", f"unknown model {model!r}; choose from {', '.join(COIN_MODELS)}")
    c0 = _a2(reader, "", "c0")
    try:
        if model == "homogeneous":
            return coin_field_homogeneous(c0)
        if model == "one_defect":
            defect = _matrix(reader, "coins", "defect") if reader.has("coins", "defect") else IDENTITY
            return coin_field_one_defect(c0, defect)
        if model == "two_phase":
            return coin_field_two_phase(c0, _a2(reader, "minus_", "c_minus"))
        kappa = reader.number("coins", "kappa")
        epsilon = reader.number("coins", "epsilon")
        for key, value in (("kappa", kappa), ("epsilon", epsilon)):
            if not value > 0:
                raise reader.fail("coins", key, f"must be positive (got {value})")
        if model == "short_range":
            theta0 = reader.number("coins", "theta0", kappa)
            return coin_field_short_range(c0, kappa, epsilon, theta0=theta0)
        return coin_field_anisotropic(c0, _a2(reader, "minus_", "c_minus"), kappa, epsilon)
    except ConfigError as exc:
        if str(exc).startswith(reader.source):
            raise
        raise reader.fail("coins", "model", str(exc)) from None


def _initial(reader: _Reader, seed: int) -> WalkerState:
    section = "initial"
    normalize = reader.boolean(section, "normalize", True)
    if reader.has(section, "random_sites"):
        n = reader.integer(section, "random_sites")
        if n < 1:
            raise reader.fail(section, "random_sites", "must be positive")
        rng = np.random.default_rng(seed)
        spinors = rng.normal(size=(n, 2)) + 1j * rng.normal(size=(n, 2))
        lo = -(n // 2)
        return WalkerState.from_spinors({lo + i: s for i, s in enumerate(spinors)}, normalize=True)
    sites = reader.ints(section, "sites", [0])
    entries = reader.complexes(section, "spinors", [1.0, 0.0])
    if len(entries) != 2 * len(sites):
        raise reader.fail(section, "spinors", f"expected {2 * len(sites)} entries for {len(sites)} site(s)")
    if len(set(sites)) != len(sites):
        raise reader.fail(section, "sites", "sites must be distinct")
    spinors = {x: entries[2 * i : 2 * i + 2] for i, x in enumerate(sites)}
    norm = float(np.linalg.norm(entries))
    if norm == 0:
        raise reader.fail(section, "spinors", "initial state is zero")
    if not normalize and abs(norm - 1) > 1e-12:
        raise reader.fail(section, "spinors", f"state has norm {norm:.17g}; set normalize = true")
    return WalkerState.from_spinors(spinors, normalize=normalize)


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """
    Parse and validate configuration text.

    Raises
    ------
    ConfigError
        With a ``source:line:`` prefix for syntax and validation problems.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: expected a [section] header before {exc.line.strip()!r}") from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: duplicate key {exc.option!r} in [{exc.section}]") from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: duplicate section [{exc.section}]") from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0]
        raise ConfigError(f"{source}:{lineno}: cannot parse line (expected 'key = value')") from None
    reader = _Reader(parser, _line_index(text), source)

    for section in parser.sections():
        if section not in KNOWN:
            raise reader.fail(section, "", f"unknown section; expected one of {', '.join(KNOWN)}")
        for key in parser.options(section):
            if key not in KNOWN[section]:
                raise reader.fail(section, key, "unknown key")
    for section in ("shift", "coins"):
        if not parser.has_section(section):
            raise ConfigError(f"{source}: missing required section [{section}]")

    p = reader.number("shift", "p")
    q = reader.convert("shift", "q", complex)
    try:
        shift = make_shift(p, q)
    except SplitWalkError as exc:
        raise reader.fail("shift", "p", str(exc)) from None

    seed = reader.integer("seed", "value", 0)
    cfg = RunConfig(
        name=Path(source).stem,
        shift=shift,
        coins=_coins(reader),
        psi0=_initial(reader, seed),
        seed=seed,
    )
    cfg.times = reader.ints("time", "times", cfg.times)
    cfg.sweep = reader.ints("time", "sweep", cfg.sweep)
    if any(t < 0 for t in cfg.times):
        raise reader.fail("time", "times", "times must be nonnegative")
    if reader.has("time", "sweep") and not cfg.sweep:
        raise reader.fail("time", "sweep", "empty time list")
    if any(t < 1 for t in cfg.sweep):
        raise reader.fail("time", "sweep", "sweep times must be >= 1")
    cfg.k_grid = reader.integer("numerics", "k_grid", cfg.k_grid)
    cfg.v_grid = reader.integer("numerics", "v_grid", cfg.v_grid)
    cfg.schedule = tuple(reader.ints("numerics", "schedule", list(cfg.schedule)))
    cfg.tol = reader.number("numerics", "tol", cfg.tol)
    cfg.strict = reader.boolean("numerics", "strict", cfg.strict)
    cfg.bound_window = reader.integer("numerics", "bound_window", cfg.bound_window)
    cfg.atom_sites = reader.integer("numerics", "atom_sites", cfg.atom_sites)
    for key, value in (("k_grid", cfg.k_grid), ("v_grid", cfg.v_grid), ("bound_window", cfg.bound_window)):
        if value < 1:
            raise reader.fail("numerics", key, "must be positive")
    if not cfg.schedule or any(t < 1 for t in cfg.schedule):
        raise reader.fail("numerics", "schedule", "needs positive times")
    if not cfg.tol > 0:
        raise reader.fail("numerics", "tol", "must be positive")
    if cfg.atom_sites < 0:
        raise reader.fail("numerics", "atom_sites", "must be nonnegative")
    cfg.out_dir = Path(reader.raw("output", "dir", "out"))
    return cfg


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    return parse_config(text, str(path))
