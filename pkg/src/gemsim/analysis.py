"""Post-processing: decay fits, energies, fidelity and heterodyne mixing."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit
from scipy.signal import correlate, find_peaks, hilbert


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class DecayFit:
    amplitude: float
    tau: float
    offset: float
    residual_norm: float
    t0: float

    def __call__(self, t):
        return self.amplitude * np.exp(-(np.asarray(t) - self.t0) / self.tau) + self.offset


def _window_mask(t: np.ndarray, window) -> np.ndarray:
    if window is None:
        return np.ones(t.shape, dtype=bool)
    lo, hi = window
    return (t >= lo) & (t <= hi)


def log_linear_decay(t, y) -> tuple[float, float]:
    """Least-squares line through log(y); returns (amplitude at t[0], tau)."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    pos = y > 0
    if np.count_nonzero(pos) < 2:
        raise FitError("need at least two positive samples")
    slope, intercept = np.polyfit(t[pos] - t[0], np.log(y[pos]), 1)
    if not slope < 0:
        raise FitError("series does not decay")
    return math.exp(intercept), -1.0 / slope


def fit_exp_decay(t, y, window=None, offset: bool = True) -> DecayFit:
    """Fit A exp(-(t - t0)/tau) + c over ``window``; t0 is the window start."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape:
        raise FitError("t and y differ in shape")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
        raise FitError("non-finite samples")
    mask = _window_mask(t, window)
    tw, yw = t[mask], y[mask]
    if tw.size < 8:
        raise FitError(f"need >= 8 samples in window, got {tw.size}")
    if not np.any(yw != 0):
        raise FitError("all-zero series")
    span = tw[-1] - tw[0]
    if np.ptp(yw) <= 1e-12 * np.max(np.abs(yw)):
        raise FitError("constant series: no decay to fit")
    a0, tau0 = log_linear_decay(tw, yw)
    t0 = tw[0]
    scale = np.max(np.abs(yw))

    def model(tt, a, tau, c):
        return a * np.exp(-(tt - t0) / tau) + c

    if offset:
        p0 = (a0 / scale, min(tau0, 10 * span), 0.0)
        try:
            popt, _ = curve_fit(model, tw, yw / scale, p0=p0, maxfev=20000)
        except RuntimeError as exc:
            raise FitError(str(exc)) from exc
        a, tau, c = popt[0] * scale, popt[1], popt[2] * scale
    else:
        def model0(tt, a, tau):
            return a * np.exp(-(tt - t0) / tau)

        try:
            popt, _ = curve_fit(model0, tw, yw / scale, p0=(a0 / scale, tau0), maxfev=20000)
        except RuntimeError as exc:
            raise FitError(str(exc)) from exc
        a, tau, c = popt[0] * scale, popt[1], 0.0
    if not (tau > 0 and math.isfinite(tau)) or tau > 1e3 * span:
        raise FitError(f"unphysical decay time {tau!r}")
    resid = float(np.linalg.norm(model(tw, a, tau, c) - yw) / np.linalg.norm(yw))
    return DecayFit(amplitude=float(a), tau=float(tau), offset=float(c),
                    residual_norm=resid, t0=float(t0))


def peak_envelope(t, y) -> tuple[np.ndarray, np.ndarray]:
    """Local maxima of a rectified oscillating series."""
    y = np.abs(np.asarray(y, dtype=float))
    idx, _ = find_peaks(y)
    return np.asarray(t)[idx], y[idx]


def _clipped(t: np.ndarray, w: np.ndarray, window) -> tuple[np.ndarray, np.ndarray]:
    """Samples of a piecewise-linear weight restricted to [lo, hi].

    The window edges are added as interpolated samples, so integrals over
    adjacent windows add up exactly.
    """
    if window is None:
        return t, w
    lo, hi = max(window[0], t[0]), min(window[1], t[-1])
    if lo > hi:
        raise ValueError("empty energy window")
    inside = (t > lo) & (t < hi)
    tt = np.concatenate(([lo], t[inside], [hi]))
    ww = np.concatenate(([np.interp(lo, t, w)], w[inside], [np.interp(hi, t, w)]))
    return tt, ww


def energy(series, t, window=None) -> float:
    """Trapezoidal integral of |series|^2 over [lo, hi] (whole series if no window)."""
    t = np.asarray(t, dtype=float)
    w = np.abs(np.asarray(series)) ** 2
    if t.size == 0:
        raise ValueError("empty series")
    tt, ww = _clipped(t, w, window)
    return float(np.trapezoid(ww, tt))


def centroid(series, t, window=None) -> float:
    """Energy-weighted mean time over the window."""
    t = np.asarray(t, dtype=float)
    tt, ww = _clipped(t, np.abs(np.asarray(series)) ** 2, window)
    total = np.trapezoid(ww, tt)
    if total == 0:
        return math.nan
    return float(np.trapezoid(ww * tt, tt) / total)


def reversal_fidelity(echo, reference) -> float:
    """Best normalised overlap of ``echo`` with the time-reversed ``reference``.

    The time-reversed copy of a field f(t) is f*(T - t); its overlap with
    ``echo`` is |sum echo(t) f(T - t)|. Both series must share the sample
    spacing. The overlap is maximised over relative shifts, so the absolute
    timing of the two series is irrelevant.
    """
    echo = np.asarray(echo, dtype=complex)
    rev = np.asarray(reference, dtype=complex)[::-1]
    ne = np.linalg.norm(echo)
    nr = np.linalg.norm(rev)
    if ne == 0 or nr == 0:
        raise ValueError("zero-norm series in reversal_fidelity")
    # correlate conjugates its second argument
    c = correlate(echo, np.conj(rev), mode="full", method="direct")
    return float(min(1.0, np.max(np.abs(c)) / (ne * nr)))


def heterodyne_mix(series, t, offset: float) -> np.ndarray:
    """Re[series(t) exp(i 2 pi offset t)]."""
    return np.real(np.asarray(series) * np.exp(2j * math.pi * offset * np.asarray(t)))


def demodulate(mixed, t, offset: float) -> np.ndarray:
    """Recover the complex envelope of a mixed-down real trace (analytic signal)."""
    analytic = hilbert(np.asarray(mixed, dtype=float))
    return analytic * np.exp(-2j * math.pi * offset * np.asarray(t))


def oscillation_duration(t, mixed, threshold: float = 0.05, start: float | None = None) -> float:
    """Time from ``start`` until the oscillation peaks fall below ``threshold`` of their maximum."""
    tp, yp = peak_envelope(t, mixed)
    if start is not None:
        keep = tp >= start
        tp, yp = tp[keep], yp[keep]
    if tp.size == 0:
        return 0.0
    above = np.flatnonzero(yp >= threshold * yp.max())
    t_begin = tp[0] if start is None else start
    return float(tp[above[-1]] - t_begin)
