"""Space-time grid, solver output record and its file formats."""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .params import TWO_PI, DomainError, GradientSchedule, PhysicalParams

SNAPSHOT_MAGIC = b"GEMSNAP1"


class NumericalError(RuntimeError):
    """The integration produced non-finite values."""


@dataclass(frozen=True)
class Grid:
    """Uniform grid: ``nz`` points over the medium, ``nt`` samples in time.

    The medium occupies z in [-L/2, L/2] (L from :class:`PhysicalParams`);
    time runs from ``t_start`` to ``t_start + duration``.
    """

    nz: int
    nt: int
    duration: float
    t_start: float = 0.0

    def __post_init__(self) -> None:
        if self.nz < 2 or self.nt < 2:
            raise DomainError("grid needs nz >= 2 and nt >= 2")
        if not self.duration > 0:
            raise DomainError("duration must be positive")

    @property
    def dt(self) -> float:
        return self.duration / (self.nt - 1)

    @property
    def t(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.nt)

    def z(self, length: float) -> np.ndarray:
        return np.linspace(-0.5 * length, 0.5 * length, self.nz)

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(nz=(self.nz - 1) * factor + 1, nt=(self.nt - 1) * factor + 1,
                    duration=self.duration, t_start=self.t_start)


def resolution_warnings(grid: Grid, params: PhysicalParams, schedule: GradientSchedule,
                        coupling: float, coupling_density: float) -> list[str]:
    """Soft resolution checks; the solvers run regardless."""
    out = []
    dt = grid.dt
    phase = TWO_PI * dt * abs(schedule.eta0) * params.length / 2
    if phase >= 0.5:
        out.append(f"gradient phase per step {phase:.3g} rad >= 0.5")
    rate = max(params.gamma0, math.sqrt(abs(coupling * coupling_density) * params.length))
    if TWO_PI * dt * rate >= 0.5:
        out.append(f"coupling rate times dt {TWO_PI * dt * rate:.3g} >= 0.5")
    return out


@dataclass
class FieldRecord:
    """Solver output.

    ``e_in``/``e_out`` are the complex field at the entrance and exit for
    every time sample. Snapshots hold E and the spin coherence on the full z
    grid every ``stride`` steps; the final state is always kept in
    ``final_e`` / ``final_s12`` (and ``final_s13`` for the three-level model).
    """

    solver: str
    t: np.ndarray
    z: np.ndarray
    e_in: np.ndarray
    e_out: np.ndarray
    snapshot_t: np.ndarray
    e_snap: np.ndarray
    s12_snap: np.ndarray
    final_e: np.ndarray
    final_s12: np.ndarray
    final_s13: np.ndarray | None = None
    s13_snap: np.ndarray | None = None
    warnings: list[str] = field(default_factory=list)
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])


def check_finite(name: str, arr: np.ndarray, step: int) -> None:
    if not np.all(np.isfinite(arr)):
        raise NumericalError(f"non-finite {name} at time step {step}")


def write_boundary_csv(record: FieldRecord, path: str | Path) -> Path:
    """CSV of the boundary series: t_s, re_e_in, im_e_in, re_e_out, im_e_out."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t_s", "re_e_in", "im_e_in", "re_e_out", "im_e_out"])
        for ti, a, b in zip(record.t, record.e_in, record.e_out):
            w.writerow([repr(float(ti)), repr(float(a.real)), repr(float(a.imag)),
                        repr(float(b.real)), repr(float(b.imag))])
    return path


def read_boundary_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1] + 1j * data[:, 2], data[:, 3] + 1j * data[:, 4]


def write_snapshots(record: FieldRecord, path: str | Path) -> Path:
    """Binary snapshot file.

    Layout (little endian): 8-byte magic ``GEMSNAP1``; uint32 n_snap;
    uint32 nz; float64[n_snap] snapshot times; float64[nz] z; then E and
    sigma12 blocks, each float64[n_snap, nz, 2] row-major (re, im) pairs.
    """
    path = Path(path)
    ns, nz = record.e_snap.shape
    with path.open("wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(struct.pack("<II", ns, nz))
        fh.write(np.asarray(record.snapshot_t, dtype="<f8").tobytes())
        fh.write(np.asarray(record.z, dtype="<f8").tobytes())
        for block in (record.e_snap, record.s12_snap):
            pairs = np.stack([block.real, block.imag], axis=-1).astype("<f8")
            fh.write(pairs.tobytes(order="C"))
    return path


def read_snapshots(path: str | Path) -> dict[str, np.ndarray]:
    raw = Path(path).read_bytes()
    if raw[:8] != SNAPSHOT_MAGIC:
        raise ValueError("not a snapshot file")
    ns, nz = struct.unpack("<II", raw[8:16])
    off = 16
    t = np.frombuffer(raw, "<f8", ns, off)
    off += 8 * ns
    z = np.frombuffer(raw, "<f8", nz, off)
    off += 8 * nz
    blocks = []
    for _ in range(2):
        arr = np.frombuffer(raw, "<f8", ns * nz * 2, off).reshape(ns, nz, 2)
        off += 8 * ns * nz * 2
        blocks.append(arr[..., 0] + 1j * arr[..., 1])
    return {"t": t, "z": z, "e": blocks[0], "s12": blocks[1]}
