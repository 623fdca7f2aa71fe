"""Acceptance criteria, one test each, each printing a single PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` (the lines are repeated
in the terminal summary) or ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest

from gemsim import analysis, experiments
from gemsim.cli import load_config, main
from gemsim.params import GradientSchedule, PhysicalParams, ProbePulse, coupling_density_for_depth
from gemsim.record import Grid
from gemsim.solver2 import solve_two_level
from gemsim.solver3 import solve_three_level

LINES: list[str] = []


def report(tag: str, passed: bool, text: str) -> None:
    line = f"{'PASS' if passed else 'FAIL'}  {tag}: {text}"
    LINES.append(line)
    print(line)


DELTA1 = 600e6
OMEGA_C = math.sqrt(50e3 * 600e6)


def lossless(d_tilde: float, eta: float, length: float) -> PhysicalParams:
    gn = coupling_density_for_depth(d_tilde, eta, 1.0, OMEGA_C, DELTA1)
    return PhysicalParams(delta1=DELTA1, gamma=3e6, gamma0=0.0, g_single=1.0, coupling_density=gn,
                          omega_c=OMEGA_C, length=length, alpha_bg=0.0)


def spectrum(name: str) -> experiments.SpectrumResult:
    cfg = load_config(name)
    e = cfg.experiment
    return experiments.spectrum_scan(cfg.params(), cfg.schedule(), (e.delta_min, e.delta_max), e.n_points,
                                     e.broadened)


def test_c01_background_transmission():
    r = spectrum("fig2a-i")
    err = float(np.max(np.abs(r.transmission - 0.5)))
    ok = err <= 1e-3
    report("C1 background", ok, f"max |T - 0.5| = {err:.2e} over {r.transmission.size} points (tol 1e-3)")
    assert ok


def test_c02_raman_line_calibration():
    r = spectrum("fig2a-ii")
    cfg = load_config("fig2a-ii")
    p = cfg.params()
    ratio = r.min_transmission / r.background
    linewidth = 2 * p.gamma0
    # independent oracle: the absorbance of an unbroadened line is a Lorentzian
    # whose FWHM is twice the decoherence rate
    delta = np.linspace(-2e6, 2e6, 400001)
    lorentz = 1 / (1 + (delta / p.gamma0) ** 2)
    above = delta[lorentz >= 0.5]
    oracle = float(above[-1] - above[0])
    fwhm_err = abs(r.fwhm - oracle) / oracle
    ok = abs(ratio - 0.25) <= 0.01 * 0.25 and fwhm_err <= 0.05 and abs(oracle - linewidth) / linewidth < 1e-4
    report("C2 Raman line", ok,
           f"T_min/T_bg = {ratio:.5f} (0.25 +/- 1%), FWHM = {r.fwhm / 1e3:.2f} kHz vs oracle "
           f"{oracle / 1e3:.2f} kHz (rel err {fwhm_err:.1e}, tol 5%)")
    assert ok


def test_c03_fid_consistency():
    cfg = load_config("fig2b")
    p, grid, pulse, sched = cfg.params(), cfg.make_grid(), cfg.probe(), cfg.schedule()
    linewidth = 2 * p.gamma0
    eta_l = sched.eta0 * p.length
    off = experiments.fid_run(p, grid, pulse, schedule=sched, gradient_on=False)
    on = experiments.fid_run(p, grid, pulse, schedule=sched, gradient_on=True)
    target = 1 / (2 * math.pi * linewidth)
    err = abs(off.tau_int - target) / target
    speedup = off.tau_amp / on.tau_amp
    ok = err <= 0.30 and speedup >= 5 and abs(eta_l / linewidth - 10) < 1e-9
    report("C3 FID", ok,
           f"tau_int(off) = {off.tau_int * 1e6:.3f} us vs 1/(2 pi lw) = {target * 1e6:.3f} us "
           f"(rel err {err:.2f}, tol 0.30); off/on decay ratio = {speedup:.2f} at eta L = "
           f"{eta_l / 1e6:.2f} MHz (need >= 5; intensity-fit ratio {off.tau_int / on.tau_int:.2f})")
    assert ok


def test_c04_echo_timing_law():
    cfg = load_config("fig3b")
    e = cfg.experiment
    delays = [k * e.delay_step for k in range(e.delay_count)]
    ds = experiments.delay_series(cfg.params(), cfg.schedule(), cfg.probe(), cfg.make_grid(), delays)
    ok = abs(ds.slope - 2.0) <= 0.05 and e.delay_count == 4 and e.delay_step == 400e-9
    report("C4 timing law", ok,
           f"centroid slope = {ds.slope:.4f} (2.00 +/- 0.05), peak slope = {ds.peak_slope:.4f}, "
           f"{e.delay_count} delays of {e.delay_step * 1e9:.0f} ns")
    assert ok


def test_c05_fig3_parity_band():
    cfg = load_config("fig3")
    r = experiments.echo_run(cfg.params(), cfg.schedule(), cfg.probe(), cfg.make_grid(),
                             cfg.experiment.control_during_storage, cfg.experiment.solver)
    ok_coh = 0.15 <= r.efficiency_coherent <= 0.45
    ok_tot = 0.003 <= r.efficiency_total <= 0.05
    ok = ok_coh and ok_tot
    report("C5 fig3 parity", ok,
           f"efficiency_coherent = {r.efficiency_coherent:.4f} (band [0.15, 0.45]: "
           f"{'ok' if ok_coh else 'out'}), efficiency_total = {r.efficiency_total:.4f} "
           f"(band [0.003, 0.05]: {'ok' if ok_tot else 'out'})")
    assert ok


def test_c06_conservation():
    # storage: gradient on, no flip, the pulse ends up split between output and coherence
    p = lossless(1.0, 1.4e7, 0.1)
    rec = solve_two_level(p, GradientSchedule(eta0=1.4e7), ProbePulse(t_center=1.5e-6, fwhm=0.5e-6),
                          Grid(200, 2000, 4e-6))
    e_in, e_out = analysis.energy(rec.e_in, rec.t), analysis.energy(rec.e_out, rec.t)
    stored = p.density * float(np.trapezoid(np.abs(rec.final_s12) ** 2, rec.z))
    err_store = abs(e_in - e_out - stored) / e_in
    # full echo cycle: store, flip, recall; whatever is left sits in the coherence
    p2 = lossless(1.0, 1.4e7, 0.2)
    rec2 = solve_two_level(p2, GradientSchedule(eta0=1.4e7, t_flip=0.0), ProbePulse(t_center=-2.5e-6, fwhm=1e-6),
                           Grid(200, 3000, 14e-6, t_start=-5e-6))
    e_in2, e_out2 = analysis.energy(rec2.e_in, rec2.t), analysis.energy(rec2.e_out, rec2.t)
    stored2 = p2.density * float(np.trapezoid(np.abs(rec2.final_s12) ** 2, rec2.z))
    err_echo = abs(e_in2 - e_out2 - stored2) / e_in2
    ok = err_store < 1e-3 and err_echo < 1e-3
    report("C6 conservation", ok,
           f"budget error storage = {err_store:.2e}, full echo = {err_echo:.2e} (tol 1e-3)")
    assert ok


def test_c07_linearity():
    p = replace(lossless(1.0, 1.4e7, 0.1), gamma0=50e3, alpha_bg=2.0)
    s = GradientSchedule(eta0=1.4e7, t_flip=1.5e-6, tau_switch=0.3e-6, ramp_shape="linear")
    pulse = ProbePulse(t_center=0.6e-6, fwhm=0.3e-6)
    grid = Grid(100, 1000, 4e-6)
    worst = 0.0
    for solve in (solve_two_level, solve_three_level):
        base = solve(p, s, pulse, grid).e_out
        for c in (1e-3, 2.5, 0.3 - 4.1j):
            out = solve(p, s, replace(pulse, peak_amp=c), grid).e_out
            worst = max(worst, float(np.max(np.abs(out - c * base)) / np.max(np.abs(c * base))))
    ok = worst < 1e-10
    report("C7 linearity", ok, f"max relative deviation = {worst:.2e} over both solvers (tol 1e-10)")
    assert ok


def test_c08_model_equivalence():
    cfg = load_config("fig3")
    p = cfg.params()
    scale = 2000.0  # same g' and two-photon physics, far larger one-photon detuning
    deep = p.with_(delta1=p.delta1 * scale, omega_c=p.omega_c * scale)
    cmp = experiments.compare_models(deep, cfg.schedule(), cfg.probe(), cfg.make_grid())
    ok = cmp.l2 < 0.05 and cmp.r1 < 1e-2 and cmp.r2 < 1e-2
    report("C8 model equivalence", ok,
           f"L2 = {cmp.l2:.2e} (tol 5e-2) with r1 = {cmp.r1:.1e}, r2 = {cmp.r2:.1e} (both < 1e-2)")
    assert ok


def test_c09_ideal_recall():
    eta = 2.8e7
    p = lossless(5.0, eta, 0.1)
    s = GradientSchedule(eta0=eta, t_flip=0.0)
    pulse = ProbePulse(t_center=-15e-6, fwhm=1e-6)
    r = experiments.echo_run(p, s, pulse, Grid(200, 4000, 38e-6, t_start=-18e-6))
    ok = r.efficiency_total > 0.9 and r.reversal_fidelity > 0.9 and not r.truncated
    report("C9 ideal recall", ok,
           f"efficiency_total = {r.efficiency_total:.4f}, reversal_fidelity = {r.reversal_fidelity:.4f} "
           f"(both > 0.9; d~ = 5, storage {r.storage_time * 1e6:.1f} us)")
    assert ok


RUNS = [
    ("spectrum", "fig2a-i", "spectrum.csv"),
    ("spectrum", "fig2a-ii", "spectrum.csv"),
    ("spectrum", "fig2a-iii", "spectrum.csv"),
    ("fid", "fig2b", "fid.csv"),
    ("echo", "fig3", "echo.csv"),
    ("echo", "fig3a", "echo_report.csv"),
    ("delay-series", "fig3b", "delay_series.csv"),
]


def test_c10_determinism(tmp_path, monkeypatch):
    monkeypatch.delenv("GEMSIM_OUT", raising=False)
    bad = []
    for cmd, preset, csv_name in RUNS:
        bodies = []
        for k in range(2):
            out = tmp_path / f"{preset}-{k}"
            assert main([cmd, "--config", preset, "--out", str(out), "--workers", "1"]) == 0
            bodies.append((out / csv_name).read_bytes())
        if bodies[0] != bodies[1] or not bodies[0]:
            bad.append(preset)
    ok = not bad
    report("C10 determinism", ok,
           f"{len(RUNS) - len(bad)}/{len(RUNS)} preset CSVs byte-identical across two runs"
           + (f" (differs: {', '.join(bad)})" if bad else ""))
    assert ok


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
