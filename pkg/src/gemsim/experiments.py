"""The four measurements (spectrum, FID, echo, flip-delay series) plus sweeps."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import analysis
from .params import (
    TWO_PI,
    DomainError,
    GradientSchedule,
    PhysicalParams,
    ProbePulse,
    adiabatic_coupling,
    check_adiabatic,
    coupling_density_for_depth,
    effective_coupling_density,
)
from .record import FieldRecord, Grid
from .solver2 import solve_two_level
from .solver3 import solve_three_level

# Intensity time-bandwidth product of a Gaussian pulse.
GAUSSIAN_TBP = 2.0 * math.log(2.0) / math.pi
# Largest fraction of the input energy allowed to arrive after the flip starts.
FLIP_OVERLAP_TOL = 1e-3


class EchoWindowError(ValueError):
    """Input, leakage and echo windows overlap or fall outside the grid."""


SOLVERS = {"two-level": solve_two_level, "three-level": solve_three_level}


def run_solver(name: str, params, schedule, pulse, grid, **kw) -> FieldRecord:
    try:
        fn = SOLVERS[name]
    except KeyError:
        raise DomainError(f"unknown solver {name!r}") from None
    return fn(params, schedule, pulse, grid, **kw)


# --------------------------------------------------------------------------
# spectrum


def absorbance(params: PhysicalParams, eta: float, delta_offset: float, probe_detuning,
               ) -> np.ndarray:
    """Steady-state coherent intensity optical depth at the given probe detuning(s).

    With s12 = i g' E / (gamma0 + i delta_loc) the field obeys
    dE/dz = -g'^2 N / (gamma0 + i delta_loc) E, so the intensity depth is
    2 g'^2 N * int gamma0 / (gamma0^2 + delta_loc^2) dz (angular units) with
    delta_loc = eta z + offset - probe; the z integral is an arctangent.
    """
    probe = np.asarray(probe_detuning, dtype=float)
    if params.omega_c == 0:
        return np.zeros(probe.shape)
    gp = TWO_PI * adiabatic_coupling(params.g_single, params.omega_c, params.delta1)
    gpn = TWO_PI * effective_coupling_density(params)
    strength = 2.0 * gp * gpn  # 1/(s m)
    c = delta_offset - probe
    half = 0.5 * params.length
    g0 = params.gamma0
    if eta == 0:
        if g0 == 0:
            return np.where(c == 0, np.inf, 0.0)
        return strength * params.length * (TWO_PI * g0) / ((TWO_PI * g0) ** 2 + (TWO_PI * c) ** 2)
    if g0 == 0:
        inside = (np.abs(c) < abs(eta) * half).astype(float)
        return strength * math.pi / (TWO_PI * abs(eta)) * inside
    lo = np.arctan((c - abs(eta) * half) / g0)
    hi = np.arctan((c + abs(eta) * half) / g0)
    return strength * (hi - lo) / (TWO_PI * abs(eta))


def steady_transmission(params: PhysicalParams, eta: float, delta_offset: float, probe_detuning):
    return params.background_transmission * np.exp(-absorbance(params, eta, delta_offset, probe_detuning))


def _half_max_width(x: np.ndarray, y: np.ndarray) -> float:
    """Full width at half maximum of a single-peaked sampled curve (linear interpolation)."""
    k = int(np.argmax(y))
    half = 0.5 * y[k]
    if not half > 0:
        return math.nan
    left = np.flatnonzero(y[:k] < half)
    right = np.flatnonzero(y[k:] < half)
    if left.size == 0 or right.size == 0:
        return math.nan
    i = left[-1]
    xl = x[i] + (half - y[i]) * (x[i + 1] - x[i]) / (y[i + 1] - y[i])
    j = k + right[0]
    xr = x[j - 1] + (half - y[j - 1]) * (x[j] - x[j - 1]) / (y[j] - y[j - 1])
    return float(xr - xl)


@dataclass
class SpectrumResult:
    delta: np.ndarray
    transmission: np.ndarray
    background: float
    center: float
    fwhm: float  # of the absorbance profile
    fwhm_dip: float  # of the transmission dip, half depth
    min_transmission: float
    crosscheck: dict | None = None

    def rows(self):
        return [(float(d), float(tr)) for d, tr in zip(self.delta, self.transmission)]


def spectrum_scan(params: PhysicalParams, schedule: GradientSchedule, delta_range: tuple[float, float],
                  n_points: int, broadened: bool, crosscheck_grid: Grid | None = None) -> SpectrumResult:
    """CW transmission vs probe two-photon detuning from the analytic steady state.

    With ``crosscheck_grid`` one point (the transmission minimum) is repeated
    as a long time-domain run of the two-level solver.
    """
    lo, hi = delta_range
    if not hi > lo or n_points < 3:
        raise DomainError("degenerate spectrum range")
    eta = schedule.eta0 if broadened else 0.0
    delta = np.linspace(lo, hi, n_points)
    od = absorbance(params, eta, schedule.delta_offset, delta)
    tr = params.background_transmission * np.exp(-od)
    k = int(np.argmin(tr))
    if np.any(od > 0):
        center = float(delta[int(np.argmax(od))])
        fwhm = _half_max_width(delta, od)
        depth = params.background_transmission - tr
        fwhm_dip = _half_max_width(delta, depth)
    else:
        center = fwhm = fwhm_dip = math.nan
    result = SpectrumResult(delta=delta, transmission=tr, background=params.background_transmission,
                            center=center, fwhm=fwhm, fwhm_dip=fwhm_dip,
                            min_transmission=float(tr[k]))
    if crosscheck_grid is not None:
        sched = GradientSchedule(eta0=eta, delta_offset=schedule.delta_offset)
        td = cw_transmission(params, sched, float(delta[k]), crosscheck_grid)
        result.crosscheck = {"delta": float(delta[k]), "analytic": float(tr[k]), "time_domain": td,
                             "relative_difference": abs(td - tr[k]) / tr[k]}
    return result


def cw_transmission(params: PhysicalParams, schedule: GradientSchedule, probe_detuning: float,
                    grid: Grid) -> float:
    """Output/input intensity at the end of a long CW run with a smooth turn-on."""
    t = grid.t
    rise = 0.1 * grid.duration
    ramp = np.clip((t - t[0]) / rise, 0.0, 1.0)
    e_in = (0.5 - 0.5 * np.cos(math.pi * ramp)).astype(complex)
    pulse = ProbePulse.sampled(t, e_in, carrier_detuning=probe_detuning)
    rec = solve_two_level(params, schedule, pulse, grid, e_in=e_in)
    return float(abs(rec.e_out[-1]) ** 2 / abs(rec.e_in[-1]) ** 2)


# --------------------------------------------------------------------------
# free induction decay


@dataclass
class FidResult:
    t: np.ndarray
    e_out: np.ndarray
    radiated: np.ndarray
    mixed: np.ndarray
    tau_amp: float
    tau_int: float
    fit_amp: analysis.DecayFit | None
    fit_int: analysis.DecayFit | None
    window: tuple[float, float]
    oscillation_time: float

    @property
    def consistency(self) -> float:
        """tau_int / (tau_amp / 2); unity for an exponential envelope."""
        return self.tau_int / (0.5 * self.tau_amp)

    def rows(self):
        return [(float(a), complex(b), complex(c), float(d))
                for a, b, c, d in zip(self.t, self.e_out, self.radiated, self.mixed)]


def fid_run(params: PhysicalParams, grid: Grid, pulse: ProbePulse, mix_offset: float = 1e6,
            gradient_on: bool = False, schedule: GradientSchedule | None = None,
            floor: float = 0.01) -> FidResult:
    """Excite with a short pulse and fit the decay of the re-radiated field.

    The medium is linear, so the field radiated by the atoms is the output
    minus the background-attenuated input. Its magnitude is fitted with a
    pure exponential from its peak until it first drops below ``floor``
    times the peak (or the grid ends). With the gradient on, most of the
    fast decay happens while the short pulse is still passing, which is why
    the fit does not wait for the pulse to end.

    ``schedule`` supplies the gradient (used only when ``gradient_on``) and
    the Zeeman offset; by default the probe sits on the Raman resonance.
    """
    if schedule is None:
        schedule = GradientSchedule(eta0=0.0, delta_offset=pulse.carrier_detuning)
    sched = GradientSchedule(eta0=schedule.eta0 if gradient_on else 0.0,
                             delta_offset=schedule.delta_offset)
    rec = solve_two_level(params, sched, pulse, grid)
    t = rec.t
    radiated = rec.e_out - math.sqrt(params.background_transmission) * rec.e_in
    amp = np.abs(radiated)
    mixed = analysis.heterodyne_mix(rec.e_out, t, mix_offset)
    if not np.any(amp > 0):
        # nothing radiated: a zero FID with undefined decay times
        return FidResult(t=t, e_out=rec.e_out, radiated=radiated, mixed=mixed, tau_amp=math.nan,
                         tau_int=math.nan, fit_amp=None, fit_int=None, window=(math.nan, math.nan),
                         oscillation_time=0.0)
    k = int(np.argmax(amp))
    below = np.flatnonzero(amp[k:] < floor * amp[k])
    stop = t[k + below[0]] if below.size else t[-1]
    window = (float(t[k]), float(stop))
    fit_a = analysis.fit_exp_decay(t, amp, window, offset=False)
    fit_i = analysis.fit_exp_decay(t, amp ** 2, window, offset=False)
    osc = analysis.oscillation_duration(t, mixed, start=pulse.end_time())
    return FidResult(t=t, e_out=rec.e_out, radiated=radiated, mixed=mixed, tau_amp=fit_a.tau,
                     tau_int=fit_i.tau, fit_amp=fit_a, fit_int=fit_i, window=window,
                     oscillation_time=osc)


# --------------------------------------------------------------------------
# echo


@dataclass
class EchoReport:
    efficiency_total: float
    efficiency_coherent: float
    echo_peak_time: float
    echo_centroid: float
    reversal_fidelity: float
    input_energy: float
    leak_energy: float
    echo_energy: float
    coherent_absorbed: float
    input_centroid: float
    flip_time: float
    truncated: bool
    warnings: list[str] = field(default_factory=list)
    record: FieldRecord | None = field(default=None, repr=False)

    @property
    def storage_time(self) -> float:
        return self.echo_centroid - self.input_centroid

    def summary(self) -> dict:
        keys = ("efficiency_total", "efficiency_coherent", "echo_peak_time", "echo_centroid",
                "reversal_fidelity", "input_energy", "leak_energy", "echo_energy",
                "coherent_absorbed", "input_centroid", "flip_time", "truncated")
        out = {k: getattr(self, k) for k in keys}
        out["storage_time"] = self.storage_time
        return out


def _storage_params(params: PhysicalParams, schedule: GradientSchedule,
                    control_during_storage: bool) -> PhysicalParams:
    if control_during_storage:
        return params
    return replace(params, control_off=params.control_off + ((schedule.t_flip, schedule.flip_end),))


def echo_run(params: PhysicalParams, schedule: GradientSchedule, pulse: ProbePulse, grid: Grid,
             control_during_storage: bool = True, solver: str = "two-level",
             keep_record: bool = False, snapshot_stride: int | None = None) -> EchoReport:
    """Store, flip and recall.

    Leakage is everything leaving the medium before the flip starts; the echo
    window runs from the end of the ramp to the end of the grid. Coherently
    absorbed energy is the background-attenuated input minus the leakage.
    """
    t = grid.t
    if not math.isfinite(schedule.t_flip):
        raise EchoWindowError("echo run needs a finite flip time")
    if not (t[0] < schedule.t_flip and schedule.flip_end < t[-1]):
        raise EchoWindowError("flip ramp must lie inside the grid")
    e_in = pulse.envelope(t)
    e_total = analysis.energy(e_in, t)
    if e_total > 0:
        late = analysis.energy(e_in, t, (schedule.t_flip, t[-1]))
        if late > FLIP_OVERLAP_TOL * e_total:
            raise EchoWindowError(f"{late / e_total:.2e} of the input arrives after the flip starts")
    run_params = _storage_params(params, schedule, control_during_storage)
    rec = run_solver(solver, run_params, schedule, pulse, grid, snapshot_stride=snapshot_stride)

    leak = analysis.energy(rec.e_out, t, (t[0], schedule.t_flip))
    echo_window = (schedule.flip_end, t[-1])
    echo = analysis.energy(rec.e_out, t, echo_window)
    coherent = params.background_transmission * e_total - leak
    mask = t >= schedule.flip_end
    echo_series = rec.e_out[mask]
    if e_total > 0 and echo > 0:
        fidelity = analysis.reversal_fidelity(echo_series, e_in)
        peak = float(t[mask][int(np.argmax(np.abs(echo_series)))])
        cen = analysis.centroid(rec.e_out, t, echo_window)
    else:
        fidelity, peak, cen = 0.0, math.nan, math.nan
    warnings = list(rec.warnings)
    peak_amp = np.max(np.abs(echo_series)) if echo_series.size else 0.0
    truncated = bool(peak_amp > 0 and abs(echo_series[-1]) > 1e-2 * peak_amp)
    if truncated:
        warnings.append("echo window truncated by the end of the grid")
    return EchoReport(
        efficiency_total=echo / e_total if e_total > 0 else 0.0,
        efficiency_coherent=echo / coherent if coherent > 0 else 0.0,
        echo_peak_time=peak, echo_centroid=cen, reversal_fidelity=fidelity,
        input_energy=e_total, leak_energy=leak, echo_energy=echo, coherent_absorbed=coherent,
        input_centroid=analysis.centroid(e_in, t) if e_total > 0 else math.nan,
        flip_time=schedule.t_flip, truncated=truncated, warnings=warnings,
        record=rec if keep_record else None,
    )


@dataclass(frozen=True)
class EchoSetup:
    params: PhysicalParams
    schedule: GradientSchedule
    pulse: ProbePulse
    grid: Grid
    control_during_storage: bool = True
    solver: str = "two-level"

    def run(self, keep_record: bool = False) -> EchoReport:
        return echo_run(self.params, self.schedule, self.pulse, self.grid,
                        self.control_during_storage, self.solver, keep_record)


def _run_setup(setup: EchoSetup) -> EchoReport:
    return setup.run()


def _map(setups: Sequence[EchoSetup], workers: int) -> list[EchoReport]:
    if workers <= 1 or len(setups) <= 1:
        return [s.run() for s in setups]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_setup, setups))


@dataclass
class DelaySeries:
    delays: list[float]
    reports: list[EchoReport]
    slope: float
    intercept: float
    peak_slope: float
    decay_tau: float
    decay_amplitude: float

    def rows(self):
        return [(d, r.flip_time, r.echo_centroid, r.echo_peak_time, r.storage_time, r.echo_energy,
                 r.efficiency_total, r.efficiency_coherent) for d, r in zip(self.delays, self.reports)]


def delay_series(params: PhysicalParams, schedule_base: GradientSchedule, pulse: ProbePulse, grid: Grid,
                 delays: Sequence[float], control_during_storage: bool = True,
                 workers: int = 1) -> DelaySeries:
    """Echo runs with the flip delayed by each entry of ``delays``.

    Fits echo centroid against flip time (the timing law predicts slope 2)
    and echo energy against storage time (exponential decay). The slope of
    the echo peak time is reported alongside as a cross-check.
    """
    delays = [float(d) for d in delays]
    if not delays:
        raise DomainError("no delays given")
    setups = [EchoSetup(params, replace(schedule_base, t_flip=schedule_base.t_flip + d), pulse, grid,
                        control_during_storage) for d in delays]
    for s in setups:
        if not s.schedule.flip_end < grid.t[-1]:
            raise EchoWindowError(f"flip at {s.schedule.t_flip} leaves no echo window")
    reports = _map(setups, workers)
    flips = np.array([r.flip_time for r in reports])
    cents = np.array([r.echo_centroid for r in reports])
    if len(reports) >= 2:
        slope, intercept = np.polyfit(flips, cents, 1)
        peak_slope = np.polyfit(flips, [r.echo_peak_time for r in reports], 1)[0]
        energies = np.array([r.echo_energy for r in reports])
        storage = np.array([r.storage_time for r in reports])
        try:
            amp, tau = analysis.log_linear_decay(storage, energies)
        except analysis.FitError:
            amp, tau = math.nan, math.nan
    else:
        slope = intercept = peak_slope = amp = tau = math.nan
    return DelaySeries(delays=delays, reports=reports, slope=float(slope), intercept=float(intercept),
                       peak_slope=float(peak_slope), decay_tau=float(tau), decay_amplitude=float(amp))


# --------------------------------------------------------------------------
# sweeps

SWEEP_AXES = ("d_tilde", "eta", "gamma0", "tau_switch", "bandwidth")


def apply_axis(setup: EchoSetup, axis: str, value: float) -> EchoSetup:
    p, s, pulse = setup.params, setup.schedule, setup.pulse
    if axis == "d_tilde":
        gn = coupling_density_for_depth(value, s.eta0, p.g_single, p.omega_c, p.delta1)
        return replace(setup, params=replace(p, coupling_density=gn))
    if axis == "eta":
        return replace(setup, schedule=replace(s, eta0=value))
    if axis == "gamma0":
        return replace(setup, params=replace(p, gamma0=value))
    if axis == "tau_switch":
        shape = "linear" if value > 0 else "step"
        return replace(setup, schedule=replace(s, tau_switch=value, ramp_shape=shape))
    if axis == "bandwidth":
        if pulse.shape != "gaussian":
            raise DomainError("bandwidth axis needs a Gaussian pulse")
        return replace(setup, pulse=replace(pulse, fwhm=GAUSSIAN_TBP / value))
    raise DomainError(f"invalid sweep axis {axis!r}; choose from {SWEEP_AXES}")


def monotonicity(values: Sequence[float]) -> str:
    d = np.diff(np.asarray(values, dtype=float))
    if np.all(d > 0):
        return "increasing"
    if np.all(d < 0):
        return "decreasing"
    return "non-monotonic"


@dataclass
class SweepResult:
    axis: str
    values: list[float]
    reports: list[EchoReport]

    def rows(self):
        return [(v, r.efficiency_total, r.efficiency_coherent, r.reversal_fidelity,
                 r.leak_energy / r.input_energy if r.input_energy else math.nan)
                for v, r in zip(self.values, self.reports)]

    @property
    def annotations(self) -> dict:
        return {
            "efficiency_total": monotonicity([r.efficiency_total for r in self.reports]),
            "efficiency_coherent": monotonicity([r.efficiency_coherent for r in self.reports]),
            "reversal_fidelity": monotonicity([r.reversal_fidelity for r in self.reports]),
        }


def efficiency_sweep(base: EchoSetup, axis: str, values: Sequence[float], workers: int = 1) -> SweepResult:
    if axis not in SWEEP_AXES:
        raise DomainError(f"invalid sweep axis {axis!r}; choose from {SWEEP_AXES}")
    values = [float(v) for v in values]
    setups = [apply_axis(base, axis, v) for v in values]
    return SweepResult(axis=axis, values=values, reports=_map(setups, workers))


# --------------------------------------------------------------------------
# model comparison


@dataclass
class ModelComparison:
    l2: float
    peak: float
    r1: float
    r2: float
    two_level: FieldRecord = field(repr=False)
    three_level: FieldRecord = field(repr=False)


def compare_models(params: PhysicalParams, schedule: GradientSchedule, pulse: ProbePulse,
                   grid: Grid) -> ModelComparison:
    """Relative L2 and peak distance between the re-phased three-level output and the reduced model."""
    r2 = solve_two_level(params, schedule, pulse, grid)
    r3 = solve_three_level(params, schedule, pulse, grid, rephase=True)
    ref_norm = np.linalg.norm(r2.e_out)
    diff = r3.e_out - r2.e_out
    if ref_norm == 0:
        l2 = 0.0 if np.linalg.norm(diff) == 0 else math.inf
        peak = l2
    else:
        l2 = float(np.linalg.norm(diff) / ref_norm)
        peak = float(np.max(np.abs(diff)) / np.max(np.abs(r2.e_out)))
    t_fast = pulse.fwhm if pulse.shape != "custom" else grid.duration
    if schedule.tau_switch > 0:
        t_fast = min(t_fast, schedule.tau_switch)
    if params.gamma > 0:
        rep = check_adiabatic(params, t_fast)
        ratios = (rep.r1, rep.r2)
    else:
        ratios = (math.nan, math.nan)
    return ModelComparison(l2=l2, peak=peak, r1=ratios[0], r2=ratios[1], two_level=r2, three_level=r3)
