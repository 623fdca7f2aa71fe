"""Full three-level (Lambda) mean-field Maxwell-Bloch model.

    d s13/dt = -2pi (gamma + gamma0/2 + i Delta) s13 + i 2pi g E + i 2pi Omega_c s12
    d s12/dt = -2pi (gamma0 + i delta(z, t)) s12 + i 2pi Omega_c* s13
    dE/dz    = i 2pi gN s13 - (alpha_bg / 2) E

The atomic pair (s13, s12) at each z is advanced with the exact 2x2 matrix
exponential, so neither Delta nor the light shift needs to be resolved by
the time step; only the probe drive is interpolated across a step.

The control frequency is chosen to cancel the light shift: the two-photon
detuning entering the equations carries +|Omega_c|^2/Delta of the nominal
control field. The dispersive phase of the far-detuned transition is
removed from the output afterwards (see :func:`rephase_output`).
"""

from __future__ import annotations

import math

import numpy as np

from ._kernel import field_sweep, phi_2x2
from .params import TWO_PI, GradientSchedule, PhysicalParams, ProbePulse, light_shift
from .record import FieldRecord, Grid, check_finite, resolution_warnings
from .solver2 import _snapshot_steps

SOLVER_ID = "three-level"
WEAK_PROBE_LIMIT = 0.1


def index_wavenumber(params: PhysicalParams) -> float:
    """Dispersive wavenumber (rad/m) of the off-resonant 1-3 transition."""
    gam = params.gamma + 0.5 * params.gamma0
    return TWO_PI * params.g_single * params.coupling_density * params.delta1 / (gam ** 2 + params.delta1 ** 2)


def rephase_output(e_out: np.ndarray, params: PhysicalParams) -> np.ndarray:
    """Remove the effective-index phase accumulated over the medium."""
    return e_out * np.exp(-1j * index_wavenumber(params) * params.length)


def solve_three_level(params: PhysicalParams, schedule: GradientSchedule, pulse: ProbePulse,
                      grid: Grid, snapshot_stride: int | None = None, rephase: bool = True,
                      compensate_light_shift: bool = True,
                      e_in: np.ndarray | None = None) -> FieldRecord:
    t = grid.t
    z = grid.z(params.length)
    dt = grid.dt
    dz = z[1] - z[0]
    nz, nt = grid.nz, grid.nt
    e_in = pulse.envelope(t) if e_in is None else np.asarray(e_in, dtype=complex)

    ls_nominal = light_shift(params.omega_c, params.delta1) if compensate_light_shift else 0.0
    static_det = schedule.delta_offset - pulse.carrier_detuning + ls_nominal
    eta_int = schedule.eta_integral(t)
    atten = math.exp(-0.5 * params.alpha_bg * dz)
    half_dz = 0.5 * dz
    g_ang = TWO_PI * params.g_single
    coupling = 1j * TWO_PI * params.coupling_density
    lam3_dt = TWO_PI * (params.gamma + 0.5 * params.gamma0 + 1j * params.delta1) * dt

    x = np.zeros((nz, 2), dtype=complex)  # columns: s13, s12
    snap_steps = _snapshot_steps(nt, snapshot_stride)
    snap_index = {int(n): k for k, n in enumerate(snap_steps)}
    e_snap = np.zeros((len(snap_steps), nz), dtype=complex)
    s12_snap = np.zeros_like(e_snap)
    s13_snap = np.zeros_like(e_snap)
    e_out = np.zeros(nt, dtype=complex)

    e = field_sweep(e_in[0], x[:, 0], np.zeros(nz), coupling, atten, half_dz)
    e_out[0] = e[-1]
    if 0 in snap_index:
        e_snap[0] = e

    peak_coherence = 0.0
    mat = np.empty((nz, 2, 2), dtype=complex)
    cached_oc = None
    for n in range(nt - 1):
        oc = params.omega_c_at(t[n] + 0.5 * dt)
        w_dt = 1j * TWO_PI * oc * dt
        lam2_dt = TWO_PI * (params.gamma0 * dt
                            + 1j * (z * (eta_int[n + 1] - eta_int[n]) + static_det * dt))
        if oc != cached_oc or schedule.eta0 != 0 or n == 0:
            # the matrix depends on time only through eta(t) and the control
            mat[:, 0, 0] = -lam3_dt
            mat[:, 0, 1] = w_dt
            mat[:, 1, 0] = w_dt
            mat[:, 1, 1] = -lam2_dt
            ex, p1, p2 = phi_2x2(mat)
            cached_oc = oc
        drive_old = 1j * g_ang * e  # only the s13 row is driven
        p = np.einsum("zij,zj->zi", ex, x) + dt * (p1[:, :, 0] - p2[:, :, 0]) * drive_old[:, None]
        q = dt * p2[:, :, 0] * (1j * g_ang)
        e = field_sweep(e_in[n + 1], p[:, 0], q[:, 0], coupling, atten, half_dz)
        x = p + q * e[:, None]
        e_out[n + 1] = e[-1]
        k = snap_index.get(n + 1)
        if k is not None:
            check_finite("field", e, n + 1)
            e_snap[k] = e
            s13_snap[k] = x[:, 0]
            s12_snap[k] = x[:, 1]
            peak_coherence = max(peak_coherence, float(np.max(np.abs(x))))
    check_finite("output field", e_out, nt - 1)
    peak_coherence = max(peak_coherence, float(np.max(np.abs(x))))

    gp = params.g_single * params.omega_c / params.delta1 if params.delta1 else 0.0
    gpn = params.coupling_density * params.omega_c / params.delta1 if params.delta1 else 0.0
    warnings = resolution_warnings(grid, params, schedule, gp, gpn)
    if peak_coherence > WEAK_PROBE_LIMIT:
        warnings.append(f"weak-probe limit exceeded: max |sigma| = {peak_coherence:.3g}")

    kz = index_wavenumber(params)
    phase_reference = {
        "index_wavenumber_rad_per_m": kz,
        "index_phase_rad": kz * params.length,
        "light_shift_hz": light_shift(params.omega_c, params.delta1),
        "light_shift_compensated": compensate_light_shift,
        "rephased": rephase,
    }
    out = rephase_output(e_out, params) if rephase else e_out
    return FieldRecord(
        solver=SOLVER_ID, t=t, z=z, e_in=e_in, e_out=out,
        snapshot_t=t[snap_steps], e_snap=e_snap, s12_snap=s12_snap, s13_snap=s13_snap,
        final_e=e, final_s12=x[:, 1].copy(), final_s13=x[:, 0].copy(), warnings=warnings,
        metadata={"grid": grid, "params": params, "schedule": schedule, "pulse": pulse,
                  "phase_reference": phase_reference, "e_out_raw": e_out},
    )
