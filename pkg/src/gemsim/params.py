"""Physical parameters, unit conversions and the gradient schedule.

All frequencies are ordinary frequencies in Hz. Solvers convert to angular
units (multiply by 2*pi) at the point of use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

TWO_PI = 2.0 * math.pi

# 87Rb F=2 ground state: g_F * mu_B / h
DEFAULT_KAPPA = 0.7e6  # Hz per gauss


class DomainError(ValueError):
    """A quantity is outside the domain where the formula is defined."""


@dataclass(frozen=True)
class PhysicalParams:
    """Atomic medium and beams.

    ``coupling_density`` is g*N in Hz per metre; the linear atomic density
    is recovered as ``coupling_density / g_single``. ``control_off`` lists
    (start, stop) windows in seconds during which the control field is
    switched off; outside them the control Rabi frequency is ``omega_c``.
    """

    delta1: float
    gamma: float
    gamma0: float
    g_single: float
    coupling_density: float
    omega_c: float
    length: float
    alpha_bg: float = 0.0
    control_off: tuple[tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        for name in ("gamma", "gamma0", "g_single", "coupling_density", "length", "alpha_bg"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise DomainError(f"{name} must be finite and nonnegative, got {value!r}")
        if not math.isfinite(self.delta1) or not math.isfinite(self.omega_c):
            raise DomainError("delta1 and omega_c must be finite")
        if self.omega_c < 0:
            raise DomainError(f"omega_c must be nonnegative, got {self.omega_c!r}")
        if self.length <= 0:
            raise DomainError("length must be positive")
        windows = tuple((float(a), float(b)) for a, b in self.control_off)
        for a, b in windows:
            if not b >= a:
                raise DomainError(f"control_off window ({a}, {b}) is reversed")
        object.__setattr__(self, "control_off", windows)

    @property
    def density(self) -> float:
        """Linear atomic density N."""
        if self.g_single == 0:
            raise DomainError("g_single is zero; density undefined")
        return self.coupling_density / self.g_single

    @property
    def background_transmission(self) -> float:
        return math.exp(-self.alpha_bg * self.length)

    def omega_c_at(self, t: float) -> float:
        for a, b in self.control_off:
            if a <= t < b:
                return 0.0
        return self.omega_c

    def with_(self, **changes) -> "PhysicalParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class GradientSchedule:
    """Detuning slope eta(t) in Hz/m with a sign reversal at ``t_flip``.

    ``t_flip = inf`` gives a static gradient. For the linear ramp eta goes
    from +eta0 to -eta0 over ``tau_switch`` seconds starting at ``t_flip``.
    """

    eta0: float
    t_flip: float = math.inf
    tau_switch: float = 0.0
    ramp_shape: str = "step"
    delta_offset: float = 0.0

    def __post_init__(self) -> None:
        if self.ramp_shape not in ("step", "linear"):
            raise DomainError(f"unknown ramp shape {self.ramp_shape!r}")
        if self.tau_switch < 0 or not math.isfinite(self.tau_switch):
            raise DomainError("tau_switch must be finite and nonnegative")
        if self.ramp_shape == "step" and self.tau_switch != 0:
            raise DomainError("step ramp requires tau_switch = 0")

    @property
    def flip_midpoint(self) -> float:
        return self.t_flip + 0.5 * self.tau_switch

    @property
    def flip_end(self) -> float:
        return self.t_flip + self.tau_switch

    def eta_at(self, t):
        """eta(t) for scalar or array ``t``."""
        t = np.asarray(t, dtype=float)
        out = np.full(t.shape, self.eta0, dtype=float)
        if math.isinf(self.t_flip):
            return out if out.ndim else float(out)
        if self.ramp_shape == "step" or self.tau_switch == 0:
            out = np.where(t < self.t_flip, self.eta0, -self.eta0)
        else:
            frac = np.clip((t - self.t_flip) / self.tau_switch, 0.0, 1.0)
            out = self.eta0 * (1.0 - 2.0 * frac)
        return out if out.ndim else float(out)

    def eta_integral(self, t):
        """Antiderivative of eta with value 0 at t = 0 (Hz*s/m)."""
        t = np.asarray(t, dtype=float)
        e0 = self.eta0
        if math.isinf(self.t_flip):
            out = e0 * t
            return out if out.ndim else float(out)
        tf, tau = self.t_flip, self.tau_switch
        before = e0 * t
        if tau == 0:
            after = e0 * tf - e0 * (t - tf)
            out = np.where(t < tf, before, after)
        else:
            s = np.clip(t - tf, 0.0, tau)
            ramp = e0 * tf + e0 * (s - s * s / tau)
            after = e0 * tf - e0 * (t - tf - tau)
            out = np.where(t < tf, before, np.where(t <= tf + tau, ramp, after))
        return out if out.ndim else float(out)

    def with_(self, **changes) -> "GradientSchedule":
        return replace(self, **changes)


@dataclass(frozen=True)
class ZeemanMap:
    b_offset: float  # G
    b_slope: float  # G/m
    kappa: float = DEFAULT_KAPPA  # Hz/G

    @property
    def delta_offset(self) -> float:
        return self.kappa * self.b_offset

    @property
    def eta0(self) -> float:
        return self.kappa * self.b_slope

    def schedule(self, t_flip: float = math.inf, tau_switch: float = 0.0,
                 ramp_shape: str = "step") -> GradientSchedule:
        return GradientSchedule(eta0=self.eta0, t_flip=t_flip, tau_switch=tau_switch,
                                ramp_shape=ramp_shape, delta_offset=self.delta_offset)


@dataclass(frozen=True)
class ProbePulse:
    """Input field envelope at the medium entrance.

    Shapes: ``gaussian`` (``fwhm`` is the intensity FWHM), ``square``
    (``fwhm`` is the full duration) and ``custom`` (complex samples
    linearly interpolated, zero outside the sampled span).
    """

    shape: str = "gaussian"
    t_center: float = 0.0
    fwhm: float = 1e-6
    peak_amp: complex = 1.0
    carrier_detuning: float = 0.0
    samples_t: tuple[float, ...] = field(default=(), repr=False)
    samples_e: tuple[complex, ...] = field(default=(), repr=False)

    def __post_init__(self) -> None:
        if self.shape not in ("gaussian", "square", "custom"):
            raise DomainError(f"unknown pulse shape {self.shape!r}")
        if self.shape != "custom" and not self.fwhm > 0:
            raise DomainError("fwhm must be positive")
        if self.shape == "custom" and len(self.samples_t) != len(self.samples_e):
            raise DomainError("custom pulse needs equal-length time and value samples")

    @classmethod
    def sampled(cls, t: Sequence[float], e: Sequence[complex],
                carrier_detuning: float = 0.0) -> "ProbePulse":
        return cls(shape="custom", carrier_detuning=carrier_detuning,
                   samples_t=tuple(float(x) for x in t),
                   samples_e=tuple(complex(x) for x in e))

    def envelope(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.shape == "gaussian":
            x = (t - self.t_center) / self.fwhm
            return self.peak_amp * np.exp(-2.0 * math.log(2.0) * x * x).astype(complex)
        if self.shape == "square":
            inside = np.abs(t - self.t_center) <= 0.5 * self.fwhm
            return np.where(inside, self.peak_amp, 0.0).astype(complex)
        if not self.samples_t:
            return np.zeros(t.shape, dtype=complex)
        st = np.asarray(self.samples_t)
        se = np.asarray(self.samples_e, dtype=complex)
        re = np.interp(t, st, se.real, left=0.0, right=0.0)
        im = np.interp(t, st, se.imag, left=0.0, right=0.0)
        return re + 1j * im

    def end_time(self) -> float:
        """Time after which the envelope is negligible (< 1e-6 of peak for Gaussians)."""
        if self.shape == "gaussian":
            # intensity exp(-4 ln2 x^2) = 1e-6  ->  x = 2.232 fwhm from center
            return self.t_center + 2.24 * self.fwhm
        if self.shape == "square":
            return self.t_center + 0.5 * self.fwhm
        return max(self.samples_t) if self.samples_t else -math.inf

    def with_(self, **changes) -> "ProbePulse":
        return replace(self, **changes)


def adiabatic_coupling(g_single: float, omega_c: float, delta1: float) -> float:
    """Raman coupling g' = g*Omega_c/Delta."""
    if delta1 == 0:
        raise DomainError("one-photon detuning is zero")
    return g_single * omega_c / delta1


def light_shift(omega_c: float, delta1: float) -> float:
    """AC Stark shift |Omega_c|^2/Delta of the two-photon resonance."""
    if delta1 == 0:
        raise DomainError("one-photon detuning is zero")
    return abs(omega_c) ** 2 / delta1


def zeeman_to_detuning(zmap: ZeemanMap, z):
    return zmap.kappa * (zmap.b_offset + zmap.b_slope * np.asarray(z, dtype=float))


def eta_of_t(schedule: GradientSchedule, t):
    return schedule.eta_at(t)


def effective_coupling_density(params: PhysicalParams, omega_c: float | None = None) -> float:
    """g'N = gN * Omega_c / Delta."""
    oc = params.omega_c if omega_c is None else omega_c
    return adiabatic_coupling(params.coupling_density, oc, params.delta1)


def optical_depth_per_bandwidth(params: PhysicalParams, eta: float) -> float:
    """d~ = g'^2 N / eta in angular units, i.e. 2*pi*g' g'N / eta in Hz.

    A broadband memory of this depth transmits exp(-2*pi*d~) of the intensity
    inside its bandwidth.
    """
    if eta == 0:
        raise DomainError("zero gradient: optical depth per bandwidth undefined")
    gp = adiabatic_coupling(params.g_single, params.omega_c, params.delta1)
    return TWO_PI * gp * effective_coupling_density(params) / abs(eta)


def coupling_density_for_depth(d_tilde: float, eta: float, g_single: float,
                               omega_c: float, delta1: float) -> float:
    """Inverse of :func:`optical_depth_per_bandwidth` for gN."""
    if omega_c == 0 or g_single == 0:
        raise DomainError("need nonzero g and Omega_c to reach a finite depth")
    return d_tilde * abs(eta) * delta1 ** 2 / (TWO_PI * g_single * omega_c ** 2)


def raman_optical_depth(params: PhysicalParams) -> float:
    """Resonant intensity optical depth of the unbroadened Raman line."""
    if params.gamma0 == 0:
        raise DomainError("gamma0 = 0: resonant depth diverges")
    gp = adiabatic_coupling(params.g_single, params.omega_c, params.delta1)
    return 2.0 * TWO_PI * gp * effective_coupling_density(params) * params.length / params.gamma0


def coupling_density_for_raman_od(od: float, gamma0: float, length: float,
                                  g_single: float, omega_c: float, delta1: float) -> float:
    if omega_c == 0 or g_single == 0:
        raise DomainError("need nonzero g and Omega_c to reach a finite depth")
    return od * gamma0 * delta1 ** 2 / (2.0 * TWO_PI * g_single * omega_c ** 2 * length)


@dataclass(frozen=True)
class AdiabaticReport:
    optical_depth: float
    r1: float
    r2: float
    margin: float

    @property
    def fast_ok(self) -> bool:
        return self.r1 < self.margin

    @property
    def detuning_ok(self) -> bool:
        return self.r2 < self.margin

    @property
    def ok(self) -> bool:
        return self.fast_ok and self.detuning_ok


def check_adiabatic(params: PhysicalParams, t_fast: float, margin: float = 0.1) -> AdiabaticReport:
    """Ratios for the elimination conditions 1/(d T) << gamma and Delta >> gamma d.

    d is the resonant amplitude optical depth of the bare 1-3 transition,
    (2 pi g)(2 pi gN) L / (2 pi gamma).
    """
    if params.gamma == 0 or params.delta1 == 0:
        raise DomainError("check_adiabatic needs nonzero gamma and delta1")
    if not t_fast > 0:
        raise DomainError("t_fast must be positive")
    d = TWO_PI * params.g_single * params.coupling_density * params.length / params.gamma
    if d == 0:
        r1 = math.inf
    else:
        r1 = 1.0 / (d * t_fast * TWO_PI * params.gamma)
    r2 = params.gamma * d / abs(params.delta1)
    return AdiabaticReport(optical_depth=d, r1=r1, r2=r2, margin=margin)
