"""Command-line entry point: ``gemsim <subcommand> --config FILE``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 validation failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import math
import os
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, experiments, validate
from .analysis import FitError
from .config import ConfigError, RunConfig, config_dict, emit_config, parse_config, parse_config_text
from .params import DomainError
from .record import FieldRecord, NumericalError, write_boundary_csv, write_snapshots

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_VALIDATION = 4


class ValidationFailure(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# config lookup


def preset_names() -> list[str]:
    root = resources.files("gemsim.presets")
    return sorted(f.name[:-4] for f in root.iterdir() if f.name.endswith(".cfg"))


def load_config(spec: str) -> RunConfig:
    """A config path, or the name of a shipped preset (with or without ``.cfg``)."""
    path = Path(spec)
    if path.is_file():
        return parse_config(path)
    name = spec[:-4] if spec.endswith(".cfg") else spec
    if os.sep not in spec and name in preset_names():
        text = resources.files("gemsim.presets").joinpath(name + ".cfg").read_text()
        return parse_config_text(text, source=name + ".cfg")
    raise ConfigError(f"no such config file or preset: {spec}")


# ---------------------------------------------------------------------------
# output helpers


def _float(x) -> str:
    return repr(float(x))


def write_table(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_float(v) if isinstance(v, (float, np.floating)) else v for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def write_sidecar(path: Path, command: str, cfg: RunConfig | None, results: dict,
                  warnings: list[str] | None = None) -> None:
    doc = {
        "tool": "gemsim",
        "version": __version__,
        "command": command,
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "config": config_dict(cfg) if cfg is not None else None,
        "results": results,
        "warnings": sorted(set(warnings or [])),
    }
    path.write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=False) + "\n")


def _prepare_out(args, cfg: RunConfig | None) -> Path:
    out = Path(os.environ.get("GEMSIM_OUT") or args.out)
    out.mkdir(parents=True, exist_ok=True)
    if cfg is not None:
        (out / "resolved.cfg").write_text(emit_config(cfg))
    return out


def _snapshots(args, rec: FieldRecord, out: Path, stem: str) -> None:
    if args.snapshot_stride is not None:
        write_snapshots(rec, out / f"{stem}_snapshots.bin")


# ---------------------------------------------------------------------------
# subcommands


def cmd_spectrum(args, cfg: RunConfig) -> dict:
    e = cfg.experiment
    crossgrid = cfg.make_grid() if e.crosscheck else None
    broadened = e.broadened if args.broadened is None else args.broadened
    r = experiments.spectrum_scan(cfg.params(), cfg.schedule(), (e.delta_min, e.delta_max), e.n_points,
                                  broadened, crosscheck_grid=crossgrid)
    out = _prepare_out(args, cfg)
    write_table(out / "spectrum.csv", ["delta_hz", "transmission"], r.rows())
    res = {"center_hz": r.center, "fwhm_hz": r.fwhm, "fwhm_dip_hz": r.fwhm_dip,
           "min_transmission": r.min_transmission, "background": r.background,
           "broadened": broadened, "crosscheck": r.crosscheck}
    write_sidecar(out / "spectrum.json", "spectrum", cfg, res)
    return res


def _fit_dict(f) -> dict | None:
    if f is None:
        return None
    return {"amplitude": f.amplitude, "tau_s": f.tau, "offset": f.offset,
            "residual_norm": f.residual_norm, "t0_s": f.t0}


def cmd_fid(args, cfg: RunConfig) -> dict:
    e = cfg.experiment
    gradient_on = e.gradient_on if args.gradient_on is None else args.gradient_on
    r = experiments.fid_run(cfg.params(), cfg.make_grid(), cfg.probe(), mix_offset=e.mix_offset,
                            gradient_on=gradient_on, schedule=cfg.schedule(), floor=e.fid_floor)
    out = _prepare_out(args, cfg)
    pulse = cfg.probe()
    write_table(out / "fid.csv", ["t_s", "re_e_in", "im_e_in", "re_e_out", "im_e_out"],
                ((t, a.real, a.imag, b.real, b.imag)
                 for t, a, b in zip(r.t, pulse.envelope(r.t), r.e_out)))
    write_table(out / "fid_mixed.csv", ["t_s", "mixed", "re_radiated", "im_radiated"],
                ((t, m, x.real, x.imag) for t, m, x in zip(r.t, r.mixed, r.radiated)))
    res = {"gradient_on": gradient_on, "tau_amp_s": r.tau_amp, "tau_int_s": r.tau_int,
           "consistency": r.consistency, "fit_window_s": list(r.window),
           "oscillation_time_s": r.oscillation_time, "mix_offset_hz": e.mix_offset,
           "fit_amp": _fit_dict(r.fit_amp), "fit_int": _fit_dict(r.fit_int)}
    write_sidecar(out / "fid.json", "fid", cfg, res)
    return res


_REPORT_FIELDS = ("efficiency_total", "efficiency_coherent", "echo_peak_time", "echo_centroid",
                  "reversal_fidelity", "input_energy", "leak_energy", "echo_energy", "coherent_absorbed",
                  "input_centroid", "flip_time", "storage_time", "truncated")


def _report_row(r: experiments.EchoReport) -> list:
    s = r.summary()
    return [s[k] if k != "truncated" else int(s[k]) for k in _REPORT_FIELDS]


def cmd_echo(args, cfg: RunConfig) -> dict:
    e = cfg.experiment
    r = experiments.echo_run(cfg.params(), cfg.schedule(), cfg.probe(), cfg.make_grid(),
                             e.control_during_storage, e.solver, keep_record=True,
                             snapshot_stride=args.snapshot_stride)
    out = _prepare_out(args, cfg)
    write_boundary_csv(r.record, out / "echo.csv")
    write_table(out / "echo_report.csv", list(_REPORT_FIELDS), [_report_row(r)])
    _snapshots(args, r.record, out, "echo")
    res = r.summary()
    write_sidecar(out / "echo.json", "echo", cfg, res, r.warnings)
    return res


def cmd_delay_series(args, cfg: RunConfig) -> dict:
    e = cfg.experiment
    step = e.delay_step if args.step is None else args.step
    count = e.delay_count if args.count is None else args.count
    if count < 1:
        raise ConfigError("need at least one delay", "--count")
    delays = [k * step for k in range(count)]
    ds = experiments.delay_series(cfg.params(), cfg.schedule(), cfg.probe(), cfg.make_grid(), delays,
                                  e.control_during_storage, workers=args.workers)
    out = _prepare_out(args, cfg)
    write_table(out / "delay_series.csv",
                ["delay_s", "flip_time_s", "echo_centroid_s", "echo_peak_s", "storage_time_s",
                 "echo_energy", "efficiency_total", "efficiency_coherent"], ds.rows())
    warnings = [w for r in ds.reports for w in r.warnings]
    res = {"delays_s": delays, "slope": ds.slope, "intercept_s": ds.intercept, "peak_slope": ds.peak_slope,
           "energy_decay_tau_s": ds.decay_tau, "energy_decay_amplitude": ds.decay_amplitude,
           "truncated": [r.truncated for r in ds.reports]}
    write_sidecar(out / "delay_series.json", "delay-series", cfg, res, warnings)
    return res


def cmd_sweep(args, cfg: RunConfig) -> dict:
    e = cfg.experiment
    axis = args.axis or e.sweep_axis
    values = tuple(args.values) if args.values else e.sweep_values
    if not values:
        raise ConfigError("no sweep values given", "experiment.sweep_values")
    if axis not in experiments.SWEEP_AXES:
        raise ConfigError(f"invalid sweep axis; choose from {experiments.SWEEP_AXES}", "experiment.sweep_axis")
    base = experiments.EchoSetup(cfg.params(), cfg.schedule(), cfg.probe(), cfg.make_grid(),
                                 e.control_during_storage, e.solver)
    sw = experiments.efficiency_sweep(base, axis, values, workers=args.workers)
    out = _prepare_out(args, cfg)
    write_table(out / "sweep.csv", ["value", "efficiency_total", "efficiency_coherent", "reversal_fidelity",
                                    "leak_fraction"], sw.rows())
    res = {"axis": axis, "values": list(values), "monotonicity": sw.annotations}
    write_sidecar(out / "sweep.json", "sweep", cfg, res, [w for r in sw.reports for w in r.warnings])
    return res


def cmd_compare(args, cfg: RunConfig) -> dict:
    if cfg.physics.gamma <= 0:
        raise ConfigError("required by the three-level solver", "physics.gamma")
    cmp = experiments.compare_models(cfg.params(), cfg.schedule(), cfg.probe(), cfg.make_grid())
    out = _prepare_out(args, cfg)
    a, b = cmp.two_level, cmp.three_level
    write_table(out / "compare.csv", ["t_s", "re_e_two", "im_e_two", "re_e_three", "im_e_three"],
                ((t, x.real, x.imag, y.real, y.imag) for t, x, y in zip(a.t, a.e_out, b.e_out)))
    res = {"l2_discrepancy": cmp.l2, "peak_discrepancy": cmp.peak, "r1": cmp.r1, "r2": cmp.r2,
           "phase_reference": b.metadata["phase_reference"]}
    write_sidecar(out / "compare.json", "compare-models", cfg, res, a.warnings + b.warnings)
    return res


def cmd_validate(args, cfg: RunConfig | None) -> dict:
    checks = validate.run_all()
    out = _prepare_out(args, cfg)
    write_table(out / "validate.csv", ["check", "passed", "value", "tolerance", "detail"],
                ((c.name, int(c.passed), float(c.value), float(c.tolerance), c.detail) for c in checks))
    res = {"passed": all(c.passed for c in checks), "n_checks": len(checks),
           "failed": [c.name for c in checks if not c.passed]}
    write_sidecar(out / "validate.json", "validate", cfg, res)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}  value={c.value:.3g}  tol={c.tolerance:.3g}"
              + (f"  ({c.detail})" if c.detail else ""))
    if not res["passed"]:
        raise ValidationFailure(f"{len(res['failed'])} invariant check(s) failed")
    return res


COMMANDS = {
    "spectrum": cmd_spectrum,
    "fid": cmd_fid,
    "echo": cmd_echo,
    "delay-series": cmd_delay_series,
    "sweep": cmd_sweep,
    "compare-models": cmd_compare,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gemsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"gemsim {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file path or preset name (e.g. fig3)")
    common.add_argument("--out", default="gemsim_out", help="output directory (GEMSIM_OUT overrides)")
    common.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                        help="parallel workers for sweeps and delay series")
    common.add_argument("--seedless", action="store_true",
                        help="accepted for compatibility; nothing here is random")
    common.add_argument("--snapshot-stride", type=int, default=None,
                        help="write E and sigma12 snapshots every N steps")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "spectrum":
            g = p.add_mutually_exclusive_group()
            g.add_argument("--broadened", dest="broadened", action="store_true", default=None)
            g.add_argument("--unbroadened", dest="broadened", action="store_false")
        elif name == "fid":
            g = p.add_mutually_exclusive_group()
            g.add_argument("--gradient-on", dest="gradient_on", action="store_true", default=None)
            g.add_argument("--gradient-off", dest="gradient_on", action="store_false")
        elif name == "delay-series":
            p.add_argument("--step", type=float, default=None, help="flip delay step in seconds")
            p.add_argument("--count", type=int, default=None, help="number of delays")
        elif name == "sweep":
            p.add_argument("--axis", choices=experiments.SWEEP_AXES, default=None)
            p.add_argument("--values", type=float, nargs="+", default=None)
    sub.add_parser("presets", help="list shipped presets")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "presets":
        print("\n".join(preset_names()))
        return EXIT_OK
    try:
        if args.config is None:
            if args.command != "validate":
                raise ConfigError("--config is required")
            cfg = None
        else:
            cfg = load_config(args.config)
        if args.workers < 1:
            raise ConfigError("must be at least 1", "--workers")
        if cfg is not None and args.snapshot_stride is not None:
            if args.snapshot_stride < 1:
                raise ConfigError("must be at least 1", "--snapshot-stride")
        res = COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, experiments.EchoWindowError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, FitError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValidationFailure as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if args.command != "validate":
        print(json.dumps(_jsonable(res), indent=2))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
