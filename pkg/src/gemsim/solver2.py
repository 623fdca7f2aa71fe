"""Reduced (adiabatically eliminated) Raman memory.

    d s/dt = -2pi [gamma0 + i delta(z, t)] s + i 2pi g' E
    dE/dz  = i 2pi g'N s - (alpha_bg / 2) E

with delta(z, t) = eta(t) z + offset - probe carrier detuning, in the frame
moving with the light. Time stepping is the exponential trapezoidal rule of
:mod:`gemsim._kernel`; the field at t_{n+1} and the coherence are solved
jointly, so the scheme is implicit in the light-atom coupling.
"""

from __future__ import annotations

import math

import numpy as np

from ._kernel import field_sweep, phi_scalar
from .params import TWO_PI, DomainError, GradientSchedule, PhysicalParams, ProbePulse, light_shift
from .record import FieldRecord, Grid, check_finite, resolution_warnings

SOLVER_ID = "two-level"


def _snapshot_steps(nt: int, stride: int | None) -> np.ndarray:
    if stride is None:
        stride = max(1, (nt - 1) // 50)
    steps = list(range(0, nt, stride))
    if steps[-1] != nt - 1:
        steps.append(nt - 1)
    return np.asarray(steps)


def inject_coherence(grid: Grid, profile) -> np.ndarray:
    """Validate an initial spin-coherence profile for a free-induction run."""
    profile = np.asarray(profile, dtype=complex)
    if profile.shape != (grid.nz,):
        raise DomainError(f"coherence profile has shape {profile.shape}, expected ({grid.nz},)")
    return profile.copy()


def solve_two_level(params: PhysicalParams, schedule: GradientSchedule, pulse: ProbePulse,
                    grid: Grid, initial_s12=None, snapshot_stride: int | None = None,
                    e_in: np.ndarray | None = None) -> FieldRecord:
    """Integrate the reduced model over ``grid``.

    ``e_in`` overrides the pulse envelope with explicit samples on the grid
    times (the pulse still supplies the carrier detuning).
    """
    if params.delta1 == 0:
        raise DomainError("two-level reduction needs a nonzero one-photon detuning")
    t = grid.t
    z = grid.z(params.length)
    dt = grid.dt
    dz = z[1] - z[0]
    nz, nt = grid.nz, grid.nt

    if e_in is None:
        e_in = pulse.envelope(t)
    else:
        e_in = np.asarray(e_in, dtype=complex)
        if e_in.shape != (nt,):
            raise DomainError("explicit e_in must match the time grid")
    s = np.zeros(nz, dtype=complex) if initial_s12 is None else inject_coherence(grid, initial_s12)

    ls_nominal = light_shift(params.omega_c, params.delta1)
    static_det = schedule.delta_offset - pulse.carrier_detuning + ls_nominal
    eta_int = schedule.eta_integral(t)
    atten = math.exp(-0.5 * params.alpha_bg * dz)
    half_dz = 0.5 * dz
    g_over_delta = params.g_single / params.delta1
    gn_over_delta = params.coupling_density / params.delta1

    snap_steps = _snapshot_steps(nt, snapshot_stride)
    snap_index = {int(n): k for k, n in enumerate(snap_steps)}
    e_snap = np.zeros((len(snap_steps), nz), dtype=complex)
    s_snap = np.zeros((len(snap_steps), nz), dtype=complex)
    e_out = np.zeros(nt, dtype=complex)

    oc0 = params.omega_c_at(t[0])
    e = field_sweep(e_in[0], s, np.zeros(nz), 1j * TWO_PI * gn_over_delta * oc0, atten, half_dz)
    e_out[0] = e[-1]
    if 0 in snap_index:
        e_snap[snap_index[0]] = e
        s_snap[snap_index[0]] = s

    for n in range(nt - 1):
        oc = params.omega_c_at(t[n] + 0.5 * dt)
        gp = TWO_PI * g_over_delta * oc
        coupling = 1j * TWO_PI * gn_over_delta * oc
        det = static_det - oc * oc / params.delta1
        x = -TWO_PI * (params.gamma0 * dt + 1j * (z * (eta_int[n + 1] - eta_int[n]) + det * dt))
        ex, p1, p2 = phi_scalar(x)
        p = ex * s + dt * (p1 - p2) * (1j * gp) * e
        q = dt * p2 * (1j * gp)
        e = field_sweep(e_in[n + 1], p, q, coupling, atten, half_dz)
        s = p + q * e
        e_out[n + 1] = e[-1]
        k = snap_index.get(n + 1)
        if k is not None:
            check_finite("field", e, n + 1)
            e_snap[k] = e
            s_snap[k] = s
    check_finite("output field", e_out, nt - 1)

    gp_nom = params.g_single * params.omega_c / params.delta1
    gpn_nom = params.coupling_density * params.omega_c / params.delta1
    warnings = resolution_warnings(grid, params, schedule, gp_nom, gpn_nom)
    return FieldRecord(
        solver=SOLVER_ID, t=t, z=z, e_in=e_in, e_out=e_out,
        snapshot_t=t[snap_steps], e_snap=e_snap, s12_snap=s_snap,
        final_e=e, final_s12=s, warnings=warnings,
        metadata={"grid": grid, "params": params, "schedule": schedule, "pulse": pulse},
    )
