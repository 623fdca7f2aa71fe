"""Grid-convergence study for the ideal-recall configuration.

Runs the high-depth, loss-free echo on a ladder of grids and prints a
markdown table of efficiency and reversal fidelity. Usage::

    python3 scripts/convergence.py
"""

from __future__ import annotations

import itertools
import time

from gemsim.experiments import echo_run
from gemsim.params import GradientSchedule, PhysicalParams, ProbePulse, coupling_density_for_depth
from gemsim.record import Grid

DELTA1 = 600e6
OMEGA_C = (50e3 * 600e6) ** 0.5
LENGTH = 0.1
ETA = 2.8e7  # eta * L = 2.8 MHz
D_TILDE = 5.0


def ideal_setup():
    gn = coupling_density_for_depth(D_TILDE, ETA, 1.0, OMEGA_C, DELTA1)
    params = PhysicalParams(delta1=DELTA1, gamma=3e6, gamma0=0.0, g_single=1.0, coupling_density=gn,
                            omega_c=OMEGA_C, length=LENGTH, alpha_bg=0.0)
    schedule = GradientSchedule(eta0=ETA, t_flip=0.0)
    pulse = ProbePulse(t_center=-15e-6, fwhm=1e-6)
    return params, schedule, pulse


def ideal_grid(nz: int = 200, nt: int = 4000) -> Grid:
    return Grid(nz, nt, 38e-6, t_start=-18e-6)


def main() -> None:
    params, schedule, pulse = ideal_setup()
    print("| nz | nt | efficiency_total | reversal_fidelity | seconds |")
    print("|---:|---:|---:|---:|---:|")
    for nz, nt in itertools.product((100, 200, 400), (2000, 4000, 8000)):
        t0 = time.perf_counter()
        r = echo_run(params, schedule, pulse, ideal_grid(nz, nt))
        dt = time.perf_counter() - t0
        print(f"| {nz} | {nt} | {r.efficiency_total:.4f} | {r.reversal_fidelity:.4f} | {dt:.1f} |")
    fids = []
    for nz in (400, 800, 1600):
        r = echo_run(params, schedule, pulse, ideal_grid(nz, 4000))
        fids.append(r.reversal_fidelity)
        print(f"| {nz} | 4000 | {r.efficiency_total:.5f} | {r.reversal_fidelity:.5f} | |")
    # second-order extrapolation in dz
    print(f"\nextrapolated fidelity (nz -> inf): {fids[-1] + (fids[-1] - fids[-2]) / 3:.4f}")


if __name__ == "__main__":
    main()
