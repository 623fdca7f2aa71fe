import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gemsim.analysis import (
    FitError,
    centroid,
    demodulate,
    energy,
    fit_exp_decay,
    heterodyne_mix,
    log_linear_decay,
    oscillation_duration,
    peak_envelope,
    reversal_fidelity,
)


class TestFit:
    def test_exact_exponential(self):
        t = np.linspace(0, 6e-6, 500)
        fit = fit_exp_decay(t, np.exp(-t / 1.2e-6))
        assert fit.tau == pytest.approx(1.2e-6, rel=1e-6)
        assert fit.residual_norm < 1e-8

    def test_with_offset(self):
        t = np.linspace(0, 8e-6, 500)
        fit = fit_exp_decay(t, 3 * np.exp(-t / 1e-6) + 0.2)
        assert fit.tau == pytest.approx(1e-6, rel=1e-6)
        assert fit.offset == pytest.approx(0.2, rel=1e-6)

    def test_window_and_t0(self):
        t = np.linspace(0, 6e-6, 601)
        y = np.where(t < 1e-6, 0.1, np.exp(-(t - 1e-6) / 0.5e-6))
        fit = fit_exp_decay(t, y, window=(1e-6, 5e-6), offset=False)
        assert fit.tau == pytest.approx(0.5e-6, rel=1e-6)
        assert fit.t0 == pytest.approx(1e-6)
        assert fit(1e-6) == pytest.approx(1.0, rel=1e-6)

    def test_rectified_oscillation_envelope(self):
        t = np.linspace(0, 8e-6, 40001)
        tau = 1.2e-6
        mixed = np.exp(-t / tau) * np.abs(np.cos(2 * math.pi * 1e6 * t))
        tp, yp = peak_envelope(t, mixed)
        fit = fit_exp_decay(tp, yp, offset=False)
        assert fit.tau == pytest.approx(tau, rel=0.05)

    @pytest.mark.parametrize("y", [np.zeros(50), np.full(50, 2.0)])
    def test_degenerate_series(self, y):
        with pytest.raises(FitError):
            fit_exp_decay(np.linspace(0, 1, 50), y)

    def test_rejects_short_and_nonfinite(self):
        with pytest.raises(FitError):
            fit_exp_decay(np.arange(5.0), np.exp(-np.arange(5.0)))
        y = np.exp(-np.linspace(0, 3, 20))
        y[4] = np.nan
        with pytest.raises(FitError):
            fit_exp_decay(np.linspace(0, 3, 20), y)

    def test_growing_series(self):
        with pytest.raises(FitError):
            log_linear_decay(np.arange(10.0), np.exp(np.arange(10.0)))

    def test_amplitude_and_intensity_consistent(self):
        t = np.linspace(0, 5e-6, 400)
        a = fit_exp_decay(t, np.exp(-t / 0.8e-6))
        i = fit_exp_decay(t, np.exp(-2 * t / 0.8e-6))
        assert i.tau == pytest.approx(a.tau / 2, rel=1e-6)


class TestEnergy:
    def test_zero(self):
        assert energy(np.zeros(10), np.arange(10.0)) == 0.0

    def test_square_pulse(self):
        t = np.linspace(-2e-6, 2e-6, 4001)
        y = np.where(np.abs(t) <= 0.5e-6 + 1e-15, 1.0, 0.0)
        assert energy(y, t) == pytest.approx(1e-6, rel=2e-3)

    def test_gaussian_closed_form(self):
        tau = 0.7e-6
        t = np.linspace(-6e-6, 6e-6, 6001)
        y = np.exp(-2 * math.log(2) * (t / tau) ** 2)  # intensity FWHM tau
        assert energy(y, t) == pytest.approx(tau * math.sqrt(math.pi / (4 * math.log(2))), rel=1e-9)

    @settings(max_examples=40)
    @given(st.floats(0.1e-6, 3.9e-6), st.floats(-1e-5, 1e-5))
    def test_additive_and_shift_invariant(self, cut, shift):
        t = np.linspace(0, 4e-6, 801)
        y = np.exp(-((t - 2e-6) / 0.6e-6) ** 2) * np.exp(1j * t / 1e-7)
        whole = energy(y, t)
        assert energy(y, t, (0, cut)) + energy(y, t, (cut, 4e-6)) == pytest.approx(whole, rel=1e-12)
        assert energy(y, t + shift) == pytest.approx(whole, rel=1e-9)

    def test_empty_window(self):
        with pytest.raises(ValueError):
            energy(np.ones(5), np.arange(5.0), (10.0, 20.0))

    def test_centroid(self):
        t = np.linspace(0, 10, 1001)
        y = np.exp(-((t - 6.5) ** 2))
        assert centroid(y, t) == pytest.approx(6.5, abs=1e-9)


class TestFidelity:
    def setup_method(self):
        t = np.linspace(-2, 2, 401)
        self.ref = np.exp(-t ** 2 / 0.3) * (1 + 0.5 * t) * np.exp(2j * t)

    def test_exact_reverse(self):
        assert reversal_fidelity(np.conj(self.ref[::-1]), self.ref) == pytest.approx(1.0, abs=1e-12)

    def test_shifted_reverse(self):
        echo = np.concatenate([np.zeros(37), np.conj(self.ref[::-1]), np.zeros(11)])
        assert reversal_fidelity(echo, self.ref) == pytest.approx(1.0, abs=1e-12)

    def test_plain_copy_is_not_a_reversal(self):
        # a quadratic chirp survives in f(t) f(T - t), so the unreversed copy overlaps poorly
        t = np.linspace(-2, 2, 401)
        chirp = np.exp(-t ** 2 / 0.3) * np.exp(20j * t ** 2)
        assert reversal_fidelity(chirp, chirp) < 0.5
        assert reversal_fidelity(np.conj(chirp[::-1]), chirp) == pytest.approx(1.0, abs=1e-12)

    def test_spectrally_disjoint_is_near_zero(self):
        # a smooth envelope against a fast tone: every shifted overlap averages out
        t = np.linspace(-2, 2, 401)
        tone = np.exp(-t ** 2 / 0.3) * np.exp(1j * 60 * t)
        assert reversal_fidelity(tone, self.ref) < 1e-3

    @settings(max_examples=30)
    @given(st.floats(0.01, 100), st.floats(-math.pi, math.pi), st.floats(0.01, 100), st.floats(-math.pi, math.pi))
    def test_phase_and_scale_invariant(self, a, pa, b, pb):
        echo = np.roll(np.conj(self.ref[::-1]), 13) + 0.3 * np.exp(-np.linspace(-3, 3, 401) ** 2)
        base = reversal_fidelity(echo, self.ref)
        scaled = reversal_fidelity(a * np.exp(1j * pa) * echo, b * np.exp(1j * pb) * self.ref)
        assert scaled == pytest.approx(base, abs=1e-12)
        assert 0.0 <= base <= 1.0

    def test_zero_norm(self):
        with pytest.raises(ValueError):
            reversal_fidelity(np.zeros(5), np.ones(5))


class TestHeterodyne:
    def test_constant(self):
        t = np.linspace(0, 3e-6, 301)
        assert np.allclose(heterodyne_mix(np.full(301, 2.0), t, 1e6), 2 * np.cos(2 * math.pi * 1e6 * t))

    def test_zero_offset(self):
        s = np.array([1 + 2j, -3j, 0.5])
        assert np.array_equal(heterodyne_mix(s, np.arange(3.0), 0.0), s.real)

    def test_round_trip(self):
        t = np.linspace(0, 20e-6, 20001)
        env = np.exp(-((t - 10e-6) / 2e-6) ** 2)  # band-limited far below 250 kHz
        back = demodulate(heterodyne_mix(env, t, 1e6), t, 1e6)
        core = slice(2000, -2000)
        assert np.max(np.abs(np.abs(back[core]) - env[core])) < 0.01

    def test_oscillation_duration(self):
        t = np.linspace(0, 10e-6, 100001)
        mixed = heterodyne_mix(np.exp(-t / 1e-6), t, 1e6)
        # peaks fall below 5% of the first after ln(20) tau
        assert oscillation_duration(t, mixed) == pytest.approx(math.log(20) * 1e-6, abs=1.01e-6)
