"""Built-in invariant suite run by ``gemsim validate``.

Every check uses small grids so the whole suite finishes in well under a
minute. Each returns a :class:`Check` carrying the measured value and the
tolerance it was held to.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from importlib import resources
from typing import Callable

import numpy as np
from scipy.integrate import quad

from . import analysis, experiments
from .config import emit_config, parse_config_text
from .params import (
    GradientSchedule,
    PhysicalParams,
    ProbePulse,
    ZeemanMap,
    adiabatic_coupling,
    coupling_density_for_depth,
    coupling_density_for_raman_od,
    light_shift,
    zeeman_to_detuning,
)
from .record import Grid
from .solver2 import solve_two_level
from .solver3 import rephase_output, solve_three_level

DELTA1 = 600e6
OMEGA_C = math.sqrt(50e3 * 600e6)
LENGTH = 0.1


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""


def _memory(d_tilde: float = 1.0, eta: float = 1.4e7, gamma0: float = 0.0, alpha_bg: float = 0.0,
            gamma: float = 3e6) -> PhysicalParams:
    gn = coupling_density_for_depth(d_tilde, eta, 1.0, OMEGA_C, DELTA1)
    return PhysicalParams(delta1=DELTA1, gamma=gamma, gamma0=gamma0, g_single=1.0, coupling_density=gn,
                          omega_c=OMEGA_C, length=LENGTH, alpha_bg=alpha_bg)


def _rel(a, b) -> float:
    scale = max(float(np.max(np.abs(b))), 1e-300)
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))) / scale)


def check_zero_input() -> Check:
    p = _memory(gamma0=50e3, alpha_bg=1.0)
    s = GradientSchedule(eta0=1.4e7, t_flip=1e-6)
    pulse = ProbePulse(t_center=0.5e-6, fwhm=0.3e-6, peak_amp=0.0)
    grid = Grid(50, 400, 3e-6)
    worst = max(float(np.max(np.abs(solve_two_level(p, s, pulse, grid).e_out))),
                float(np.max(np.abs(solve_three_level(p, s, pulse, grid).e_out))))
    return Check("zero input gives zero output", worst == 0.0, worst, 0.0)


def check_linearity() -> Check:
    p = _memory(gamma0=50e3, alpha_bg=2.0)
    s = GradientSchedule(eta0=1.4e7, t_flip=1.5e-6, tau_switch=0.3e-6, ramp_shape="linear")
    grid = Grid(60, 600, 4e-6)
    pulse = ProbePulse(t_center=0.6e-6, fwhm=0.3e-6)
    c = 0.37 - 1.9j
    worst = 0.0
    for solve in (solve_two_level, solve_three_level):
        a = solve(p, s, pulse, grid).e_out
        b = solve(p, s, replace(pulse, peak_amp=c), grid).e_out
        worst = max(worst, _rel(b, c * a))
    return Check("linearity in the probe amplitude", worst < 1e-10, worst, 1e-10)


def check_conservation() -> Check:
    p = _memory(d_tilde=1.0)
    s = GradientSchedule(eta0=1.4e7)
    pulse = ProbePulse(t_center=1.5e-6, fwhm=0.5e-6)
    grid = Grid(200, 2000, 4e-6)
    rec = solve_two_level(p, s, pulse, grid)
    e_in = analysis.energy(rec.e_in, rec.t)
    e_out = analysis.energy(rec.e_out, rec.t)
    stored = p.density * float(np.trapezoid(np.abs(rec.final_s12) ** 2, rec.z))
    err = abs(e_in - e_out - stored) / e_in
    return Check("energy budget closes (gamma0 = alpha = 0)", err < 1e-3, err, 1e-3)


def check_spectrum_background() -> Check:
    p = replace(_memory(alpha_bg=math.log(2) / LENGTH, gamma0=85e3), omega_c=0.0)
    s = GradientSchedule(eta0=1.4e7, delta_offset=2.38e6)
    r = experiments.spectrum_scan(p, s, (0.0, 5e6), 101, broadened=True)
    err = float(np.max(np.abs(r.transmission - p.background_transmission)))
    return Check("control off: flat background transmission", err == 0.0, err, 0.0)


def check_spectrum_quadrature() -> Check:
    p = _memory(gamma0=85e3, d_tilde=0.5)
    eta, offset = 1.4e7, 2.38e6
    gp = 2 * math.pi * adiabatic_coupling(p.g_single, p.omega_c, p.delta1)
    gpn = 2 * math.pi * adiabatic_coupling(p.coupling_density, p.omega_c, p.delta1)
    worst = 0.0
    for probe in (offset, offset + 0.3e6, offset + 0.75e6, offset - 1.2e6):
        def integrand(z):
            loc = 2 * math.pi * (eta * z + offset - probe)
            g0 = 2 * math.pi * p.gamma0
            return 2 * gp * gpn * g0 / (g0 ** 2 + loc ** 2)

        ref, _ = quad(integrand, -LENGTH / 2, LENGTH / 2, epsabs=0, epsrel=1e-12, limit=200)
        got = float(experiments.absorbance(p, eta, offset, probe))
        worst = max(worst, abs(got - ref) / max(ref, 1e-12))
    return Check("closed-form absorbance matches quadrature", worst < 1e-8, worst, 1e-8)


def check_spectrum_time_domain() -> Check:
    g0 = 85e3
    gn = coupling_density_for_raman_od(math.log(4), g0, LENGTH, 1.0, OMEGA_C, DELTA1)
    p = PhysicalParams(delta1=DELTA1, gamma=3e6, gamma0=g0, g_single=1.0, coupling_density=gn,
                       omega_c=OMEGA_C, length=LENGTH, alpha_bg=math.log(2) / LENGTH)
    s = GradientSchedule(eta0=0.0, delta_offset=2.38e6)
    r = experiments.spectrum_scan(p, s, (1.38e6, 3.38e6), 201, broadened=False,
                                  crosscheck_grid=Grid(100, 2000, 20e-6))
    err = float(r.crosscheck["relative_difference"])
    return Check("steady state matches a long time-domain run", err < 1e-3, err, 1e-3)


def check_fit_consistency() -> Check:
    t = np.linspace(0, 6e-6, 600)
    amp = np.exp(-t / 1.2e-6)
    fa = analysis.fit_exp_decay(t, amp)
    fi = analysis.fit_exp_decay(t, amp ** 2)
    err = abs(fi.tau / (fa.tau / 2) - 1)
    return Check("tau_int = tau_amp / 2 for an exponential", err < 1e-6, err, 1e-6)


def check_fidelity_invariance() -> Check:
    t = np.linspace(-2e-6, 2e-6, 801)
    ref = np.exp(-(t / 0.4e-6) ** 2) * (1 + 0.3 * t / 1e-6) * np.exp(1j * 2e6 * t)
    echo = np.roll(ref[::-1].conj(), 40) + 0.2 * np.exp(-((t - 1e-6) / 0.2e-6) ** 2)
    base = analysis.reversal_fidelity(echo, ref)
    worst = max(abs(analysis.reversal_fidelity(3.7j * echo, ref) - base),
                abs(analysis.reversal_fidelity(echo, 0.2 * np.exp(1.1j) * ref) - base))
    return Check("reversal fidelity ignores phase and scale", worst < 1e-12, worst, 1e-12)


def check_heterodyne_roundtrip() -> Check:
    t = np.linspace(0, 20e-6, 20001)
    env = np.exp(-((t - 10e-6) / 2e-6) ** 2) * np.exp(1j * 0.3)
    mixed = analysis.heterodyne_mix(env, t, 1e6)
    back = analysis.demodulate(mixed, t, 1e6)
    core = slice(2000, -2000)
    err = _rel(np.abs(back[core]), np.abs(env[core]))
    return Check("mix then demodulate recovers the envelope", err < 0.01, err, 0.01)


def check_energy_properties() -> Check:
    t = np.linspace(0, 4e-6, 4001)
    y = np.exp(-((t - 2e-6) / 0.5e-6) ** 2) * np.exp(3j * t / 1e-6)
    whole = analysis.energy(y, t)
    split = analysis.energy(y, t, (0, 1.5e-6)) + analysis.energy(y, t, (1.5e-6, 4e-6))
    shifted = analysis.energy(y, t + 7e-6)
    err = max(abs(whole - split), abs(whole - shifted)) / whole
    return Check("energy additive and shift invariant", err < 1e-12, err, 1e-12)


def check_rephase_amplitude() -> Check:
    p = _memory(d_tilde=0.8, gamma0=20e3)
    e = np.exp(1j * np.linspace(0, 5, 50)) * np.linspace(0.1, 2, 50)
    err = float(np.max(np.abs(np.abs(rephase_output(e, p)) - np.abs(e))))
    return Check("re-phasing leaves |E| unchanged", err < 1e-15, err, 1e-15)


def check_schedule_and_units() -> Check:
    s = GradientSchedule(eta0=1.4e7, t_flip=1e-6, tau_switch=0.6e-6, ramp_shape="linear")
    tau = np.linspace(0, 2e-6, 41)
    anti = float(np.max(np.abs(s.eta_at(s.flip_midpoint + tau) + s.eta_at(s.flip_midpoint - tau))))
    zm = ZeemanMap(b_offset=0.0, b_slope=20.0)
    z = np.linspace(-0.05, 0.05, 11)
    lin = float(np.max(np.abs(zeeman_to_detuning(zm, 2 * z) - 2 * zeeman_to_detuning(zm, z))))
    hom = abs(light_shift(3 * OMEGA_C, DELTA1) - 9 * light_shift(OMEGA_C, DELTA1)) / 50e3
    hom += abs(adiabatic_coupling(1.0, 3 * OMEGA_C, DELTA1) - 3 * adiabatic_coupling(1.0, OMEGA_C, DELTA1))
    worst = max(anti / 1.4e7, lin / 1e5, hom)
    return Check("schedule antisymmetry, Zeeman linearity, homogeneity", worst < 1e-12, worst, 1e-12)


def check_timing_law() -> Check:
    p = _memory(d_tilde=1.0)
    p = replace(p, length=0.2)
    s = GradientSchedule(eta0=1.4e7, t_flip=0.0)
    pulse = ProbePulse(t_center=-2.5e-6, fwhm=1e-6)
    grid = Grid(150, 3000, 14e-6, t_start=-5e-6)
    ds = experiments.delay_series(p, s, pulse, grid, [0.0, 400e-9, 800e-9, 1200e-9])
    err = abs(ds.slope - 2.0)
    return Check("echo centroid moves at twice the flip delay", err < 0.05, ds.slope, 0.05)


def check_accounting() -> Check:
    p = _memory(d_tilde=1.0)
    s = GradientSchedule(eta0=1.4e7, t_flip=0.0)
    pulse = ProbePulse(t_center=-2.5e-6, fwhm=1e-6)
    r = experiments.echo_run(p, s, pulse, Grid(150, 3000, 12e-6, t_start=-5e-6))
    excess = r.efficiency_total - (1 - r.leak_energy / r.input_energy)
    return Check("recall never exceeds the absorbed fraction", excess < 1e-3, excess, 1e-3)


def check_decoupled_three_level() -> Check:
    # bare optical depth d = 10, so gamma * d stays far below the detuning
    gamma = 3e6
    gn = 10 * gamma / (2 * math.pi * LENGTH)
    p = PhysicalParams(delta1=DELTA1, gamma=gamma, gamma0=0.0, g_single=1.0, coupling_density=gn,
                       omega_c=0.0, length=LENGTH, alpha_bg=3.0)
    pulse = ProbePulse(t_center=1e-6, fwhm=0.4e-6)
    rec = solve_three_level(p, GradientSchedule(eta0=1.4e7), pulse, Grid(100, 1000, 3e-6))
    expect = math.exp(-0.5 * p.alpha_bg * p.length) * np.abs(rec.e_in)
    err = _rel(np.abs(rec.e_out), expect)
    return Check("three-level with control off only shows background loss", err < 0.01, err, 0.01)


def check_preset_roundtrip() -> Check:
    bad = []
    names = sorted(f.name for f in resources.files("gemsim.presets").iterdir() if f.name.endswith(".cfg"))
    for name in names:
        text = resources.files("gemsim.presets").joinpath(name).read_text()
        cfg = parse_config_text(text, source=name)
        if parse_config_text(emit_config(cfg)) != cfg:
            bad.append(name)
    return Check(f"config round trip ({len(names)} presets)", not bad and bool(names),
                 float(len(bad)), 0.0, ", ".join(bad))


CHECKS: tuple[Callable[[], Check], ...] = (
    check_zero_input,
    check_linearity,
    check_conservation,
    check_spectrum_background,
    check_spectrum_quadrature,
    check_spectrum_time_domain,
    check_fit_consistency,
    check_fidelity_invariance,
    check_heterodyne_roundtrip,
    check_energy_properties,
    check_rephase_amplitude,
    check_schedule_and_units,
    check_timing_law,
    check_accounting,
    check_decoupled_three_level,
    check_preset_roundtrip,
)


def run_all() -> list[Check]:
    results = []
    for fn in CHECKS:
        try:
            results.append(fn())
        except Exception as exc:  # a crashing check is a failed check
            results.append(Check(fn.__name__, False, math.nan, math.nan, f"{type(exc).__name__}: {exc}"))
    return results
