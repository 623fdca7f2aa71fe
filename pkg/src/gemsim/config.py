"""Run configuration: INI files read with :mod:`configparser`.

Sections are ``[meta]``, ``[physics]``, ``[zeeman]``, ``[gradient]``,
``[pulse]``, ``[grid]`` and ``[experiment]``. Units are Hz, s, m and G.
Some physics quantities may be given through a more convenient alternate
key (for example ``d_tilde`` instead of ``coupling_density``); parsing
resolves these to the canonical field, and :func:`emit_config` writes only
canonical fields, so ``parse(emit(cfg)) == cfg``.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import MISSING, dataclass, field, fields
from pathlib import Path

import numpy as np

from .params import (
    DEFAULT_KAPPA,
    TWO_PI,
    DomainError,
    GradientSchedule,
    PhysicalParams,
    ProbePulse,
    ZeemanMap,
    coupling_density_for_depth,
    coupling_density_for_raman_od,
)
from .record import Grid

SCHEMA_VERSION = "1"
SOLVER_NAMES = ("two-level", "three-level")


class ConfigError(ValueError):
    """Malformed or invalid configuration; ``path`` names the offending field."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path:
            where += f"{path}: "
        if line is not None:
            where = f"line {line}: " + where
        super().__init__(where + message)


@dataclass(frozen=True)
class PhysicsConfig:
    delta1: float
    gamma0: float
    g_single: float
    coupling_density: float
    omega_c: float
    length: float
    gamma: float = 0.0
    alpha_bg: float = 0.0
    control_on: bool = True


@dataclass(frozen=True)
class ZeemanConfig:
    b_offset: float
    b_slope: float
    kappa: float = DEFAULT_KAPPA


@dataclass(frozen=True)
class GradientConfig:
    t_flip: float = math.inf
    tau_switch: float = 0.0
    ramp_shape: str = "linear"


@dataclass(frozen=True)
class PulseConfig:
    shape: str = "gaussian"
    t_center: float = 0.0
    fwhm: float = 1e-6
    peak_amp: float = 1.0
    # None: tuned to the Zeeman offset at the medium centre
    carrier_detuning: float | None = None
    samples_file: str = ""


@dataclass(frozen=True)
class GridConfig:
    nz: int
    nt: int
    duration: float
    t_start: float = 0.0


@dataclass(frozen=True)
class ExperimentConfig:
    solver: str = "two-level"
    control_during_storage: bool = True
    delta_min: float = -2e6
    delta_max: float = 2e6
    n_points: int = 401
    broadened: bool = False
    crosscheck: bool = False
    mix_offset: float = 1e6
    gradient_on: bool = False
    fid_floor: float = 0.01
    delay_step: float = 400e-9
    delay_count: int = 4
    sweep_axis: str = "d_tilde"
    sweep_values: tuple[float, ...] = ()


@dataclass(frozen=True)
class RunConfig:
    physics: PhysicsConfig
    zeeman: ZeemanConfig
    grid: GridConfig
    gradient: GradientConfig = field(default_factory=GradientConfig)
    pulse: PulseConfig = field(default_factory=PulseConfig)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    schema_version: str = SCHEMA_VERSION
    base_dir: str = field(default=".", compare=False)

    # -- domain objects --------------------------------------------------

    def zeeman_map(self) -> ZeemanMap:
        z = self.zeeman
        return ZeemanMap(b_offset=z.b_offset, b_slope=z.b_slope, kappa=z.kappa)

    def params(self) -> PhysicalParams:
        p = self.physics
        return PhysicalParams(
            delta1=p.delta1, gamma=p.gamma, gamma0=p.gamma0, g_single=p.g_single,
            coupling_density=p.coupling_density, omega_c=p.omega_c if p.control_on else 0.0,
            length=p.length, alpha_bg=p.alpha_bg,
        )

    def schedule(self) -> GradientSchedule:
        g = self.gradient
        shape = g.ramp_shape if g.tau_switch > 0 else "step"
        return self.zeeman_map().schedule(t_flip=g.t_flip, tau_switch=g.tau_switch, ramp_shape=shape)

    def carrier_detuning(self) -> float:
        c = self.pulse.carrier_detuning
        return self.zeeman_map().delta_offset if c is None else c

    def probe(self) -> ProbePulse:
        pc = self.pulse
        if pc.shape == "custom":
            path = Path(self.base_dir) / pc.samples_file
            try:
                data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
            except OSError as exc:
                raise ConfigError(f"cannot read samples: {exc}", "pulse.samples_file") from None
            if data.shape[1] < 2:
                raise ConfigError("samples file needs columns t_s, re_e[, im_e]", "pulse.samples_file")
            e = data[:, 1] + (1j * data[:, 2] if data.shape[1] > 2 else 0.0)
            return ProbePulse.sampled(data[:, 0], e, carrier_detuning=self.carrier_detuning())
        return ProbePulse(shape=pc.shape, t_center=pc.t_center, fwhm=pc.fwhm, peak_amp=pc.peak_amp,
                          carrier_detuning=self.carrier_detuning())

    def make_grid(self) -> Grid:
        g = self.grid
        return Grid(nz=g.nz, nt=g.nt, duration=g.duration, t_start=g.t_start)


# ---------------------------------------------------------------------------
# parsing

_BOOL = {"true": True, "yes": True, "on": True, "1": True,
         "false": False, "no": False, "off": False, "0": False}

_SECTIONS = {
    "physics": PhysicsConfig,
    "zeeman": ZeemanConfig,
    "gradient": GradientConfig,
    "pulse": PulseConfig,
    "grid": GridConfig,
    "experiment": ExperimentConfig,
}

# alternate key -> canonical field it resolves to
_ALTERNATES = {
    "physics": {
        "gamma0_rate": "gamma0",  # decay rate in 1/s
        "linewidth": "gamma0",  # Raman line FWHM in Hz
        "d_tilde": "coupling_density",
        "raman_od": "coupling_density",
        "light_shift": "omega_c",
        "background_transmission": "alpha_bg",
    },
}


def _line_index(text: str) -> dict[tuple[str, str], int]:
    """(section, key) -> 1-based line number of the key's definition."""
    index: dict[tuple[str, str], int] = {}
    section = None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"^\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip().lower()
            continue
        m = re.match(r"^([A-Za-z0-9_.\-]+)\s*[=:]", line)
        if m and section is not None:
            index.setdefault((section, m.group(1).lower()), n)
    return index


def _default_of(f) -> object:
    if f.default is not MISSING:
        return f.default
    if f.default_factory is not MISSING:  # type: ignore[misc]
        return f.default_factory()  # type: ignore[misc]
    return MISSING


def _convert(raw: str, kind: str, path: str, line: int | None):
    text = raw.strip()
    try:
        if kind == "bool":
            if text.lower() not in _BOOL:
                raise ValueError(f"expected a boolean, got {text!r}")
            return _BOOL[text.lower()]
        if kind == "int":
            value = int(text)
            return value
        if kind == "float":
            return float(text)
        if kind == "optional_float":
            return None if text.lower() in ("", "auto") else float(text)
        if kind == "floats":
            return tuple(float(x) for x in re.split(r"[,\s]+", text) if x)
        return text
    except ValueError as exc:
        raise ConfigError(str(exc), path, line) from None


def _kind(f) -> str:
    t = str(f.type)
    if "tuple" in t:
        return "floats"
    if "None" in t:
        return "optional_float"
    for k in ("bool", "int", "float", "str"):
        if t == k:
            return k
    return "str"


def _resolve_physics(values: dict, alts: dict, where: dict) -> None:
    """Turn alternate physics keys into canonical ones (in place)."""

    def once(canonical: str, choices: list[str]) -> str | None:
        given = [k for k in [canonical, *choices] if k in values or k in alts]
        if len(given) > 1:
            raise ConfigError(f"give only one of {', '.join(given)}", f"physics.{given[1]}",
                              where.get(given[1]))
        return given[0] if given else None

    key = once("gamma0", ["gamma0_rate", "linewidth"])
    if key == "gamma0_rate":
        values["gamma0"] = alts["gamma0_rate"] / TWO_PI
    elif key == "linewidth":
        values["gamma0"] = 0.5 * alts["linewidth"]

    key = once("omega_c", ["light_shift"])
    if key == "light_shift":
        if "delta1" not in values:
            raise ConfigError("light_shift needs delta1", "physics.delta1")
        ls = alts["light_shift"]
        if ls * values["delta1"] < 0:
            raise ConfigError("light shift and delta1 must share a sign", "physics.light_shift",
                              where.get("light_shift"))
        values["omega_c"] = math.sqrt(ls * values["delta1"])

    key = once("alpha_bg", ["background_transmission"])
    if key == "background_transmission":
        tr = alts["background_transmission"]
        if not 0 < tr <= 1:
            raise ConfigError("must lie in (0, 1]", "physics.background_transmission",
                              where.get("background_transmission"))
        if "length" not in values:
            raise ConfigError("background_transmission needs length", "physics.length")
        values["alpha_bg"] = -math.log(tr) / values["length"]

    return once("coupling_density", ["d_tilde", "raman_od"])


def parse_config_text(text: str, base_dir: str = ".", source: str = "<config>") -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"),
                                   empty_lines_in_values=False)
    cp.optionxform = str.lower  # type: ignore[assignment]
    try:
        cp.read_string(text, source=source)
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError(f"parse error in {source}", None, line) from None
    except configparser.Error as exc:
        raise ConfigError(f"parse error in {source}: {exc}", None, getattr(exc, "lineno", None)) from None
    lines = _line_index(text)

    unknown = [s for s in cp.sections() if s not in _SECTIONS and s != "meta"]
    if unknown:
        raise ConfigError(f"unknown section [{unknown[0]}]", unknown[0])
    version = SCHEMA_VERSION
    if cp.has_section("meta"):
        for key in cp["meta"]:
            if key != "schema_version":
                raise ConfigError("unknown key", f"meta.{key}", lines.get(("meta", key)))
        version = cp["meta"].get("schema_version", SCHEMA_VERSION).strip()
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema version {version!r}", "meta.schema_version",
                              lines.get(("meta", "schema_version")))

    sections: dict[str, dict] = {}
    pending_coupling = None
    for name, cls in _SECTIONS.items():
        raw = cp[name] if cp.has_section(name) else {}
        specs = {f.name: f for f in fields(cls)}
        alt_names = _ALTERNATES.get(name, {})
        values: dict = {}
        alts: dict = {}
        where = {k: lines.get((name, k)) for k in raw}
        for key in raw:
            path = f"{name}.{key}"
            if key in specs:
                values[key] = _convert(raw[key], _kind(specs[key]), path, where[key])
            elif key in alt_names:
                alts[key] = _convert(raw[key], "float", path, where[key])
            else:
                raise ConfigError("unknown key", path, where[key])
        if name == "physics":
            pending_coupling = (_resolve_physics(values, alts, where), alts, where)
        sections[name] = values

    exp_solver = sections["experiment"].get("solver", ExperimentConfig.solver)
    if exp_solver not in SOLVER_NAMES:
        raise ConfigError(f"solver must be one of {SOLVER_NAMES}", "experiment.solver",
                          lines.get(("experiment", "solver")))

    # required fields (coupling density is checked after the Zeeman section exists)
    needs_gamma = exp_solver == "three-level"
    for name, cls in _SECTIONS.items():
        for f in fields(cls):
            if f.name == "coupling_density":
                continue
            if f.name in sections[name]:
                continue
            if f.name == "gamma" and needs_gamma:
                raise ConfigError("required by the three-level solver", "physics.gamma")
            if _default_of(f) is MISSING:
                raise ConfigError("missing required field", f"{name}.{f.name}")

    phys = sections["physics"]
    key, alts, where = pending_coupling
    if key is None:
        raise ConfigError("missing required field (or d_tilde / raman_od)", "physics.coupling_density")
    try:
        if key == "d_tilde":
            z = sections["zeeman"]
            eta = z.get("kappa", DEFAULT_KAPPA) * z["b_slope"]
            phys["coupling_density"] = coupling_density_for_depth(
                alts["d_tilde"], eta, phys["g_single"], phys["omega_c"], phys["delta1"])
        elif key == "raman_od":
            phys["coupling_density"] = coupling_density_for_raman_od(
                alts["raman_od"], phys["gamma0"], phys["length"], phys["g_single"],
                phys["omega_c"], phys["delta1"])
    except DomainError as exc:
        raise ConfigError(str(exc), f"physics.{key}", where.get(key)) from None

    try:
        cfg = RunConfig(
            physics=PhysicsConfig(**phys), zeeman=ZeemanConfig(**sections["zeeman"]),
            grid=GridConfig(**sections["grid"]), gradient=GradientConfig(**sections["gradient"]),
            pulse=PulseConfig(**sections["pulse"]), experiment=ExperimentConfig(**sections["experiment"]),
            schema_version=version, base_dir=base_dir,
        )
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    validate_config(cfg)
    return cfg


def validate_config(cfg: RunConfig) -> None:
    """Build every domain object once so that domain errors surface as config errors."""
    checks = (
        ("physics", cfg.params),
        ("gradient", cfg.schedule),
        ("pulse", cfg.probe),
    )
    for name, build in checks:
        try:
            build()
        except DomainError as exc:
            raise ConfigError(str(exc), name) from None
    g = cfg.grid
    if g.nz < 2 or g.nt < 2:
        raise ConfigError("nz and nt must be at least 2", "grid")
    if not (g.duration > 0 and math.isfinite(g.duration)):
        raise ConfigError("duration must be positive", "grid.duration")
    if cfg.gradient.ramp_shape not in ("step", "linear"):
        raise ConfigError("ramp_shape must be step or linear", "gradient.ramp_shape")
    if cfg.physics.delta1 == 0:
        raise ConfigError("must be nonzero", "physics.delta1")
    if cfg.experiment.n_points < 3:
        raise ConfigError("need at least 3 points", "experiment.n_points")
    if cfg.experiment.delay_count < 1:
        raise ConfigError("need at least one delay", "experiment.delay_count")


def parse_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config_text(text, base_dir=str(path.parent), source=str(path))


# ---------------------------------------------------------------------------
# emitting


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if value is None:
        return "auto"
    return str(value)


def config_dict(cfg: RunConfig) -> dict:
    out: dict = {"meta": {"schema_version": cfg.schema_version}}
    for name in _SECTIONS:
        section = getattr(cfg, name)
        out[name] = {f.name: getattr(section, f.name) for f in fields(section)}
    return out


def emit_config(cfg: RunConfig) -> str:
    """Fully resolved canonical INI text."""
    lines = []
    for name, values in config_dict(cfg).items():
        lines.append(f"[{name}]")
        for key, value in values.items():
            lines.append(f"{key} = {_fmt(value)}")
        lines.append("")
    return "\n".join(lines)
