import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.integrate import quad

from gemsim import experiments as ex
from gemsim.cli import load_config
from gemsim.params import DomainError, GradientSchedule, PhysicalParams, ProbePulse, coupling_density_for_depth
from gemsim.record import Grid

DELTA1 = 600e6
OMEGA_C = math.sqrt(50e3 * 600e6)


def memory(d_tilde=1.0, eta=1.4e7, gamma0=0.0, alpha_bg=0.0, length=0.1):
    gn = coupling_density_for_depth(d_tilde, eta, 1.0, OMEGA_C, DELTA1)
    return PhysicalParams(delta1=DELTA1, gamma=3e6, gamma0=gamma0, g_single=1.0, coupling_density=gn,
                          omega_c=OMEGA_C, length=length, alpha_bg=alpha_bg)


def ideal_setup(d_tilde=5.0, nz=100, nt=2000) -> ex.EchoSetup:
    eta = 2.8e7
    return ex.EchoSetup(memory(d_tilde, eta), GradientSchedule(eta0=eta, t_flip=0.0),
                        ProbePulse(t_center=-15e-6, fwhm=1e-6), Grid(nz, nt, 38e-6, t_start=-18e-6))


class TestSpectrum:
    def test_absorbance_matches_quadrature(self):
        p = memory(d_tilde=0.7, gamma0=85e3)
        eta, offset = 1.4e7, 2.38e6
        gp = 2 * math.pi * p.g_single * OMEGA_C / DELTA1
        gpn = 2 * math.pi * p.coupling_density * OMEGA_C / DELTA1
        g0 = 2 * math.pi * p.gamma0
        for probe in (offset, offset + 0.5e6, offset - 0.69e6, offset + 3e6):
            def integrand(z):
                return 2 * gp * gpn * g0 / (g0 ** 2 + (2 * math.pi * (eta * z + offset - probe)) ** 2)

            ref, _ = quad(integrand, -0.05, 0.05, epsabs=0, epsrel=1e-12, limit=200)
            assert ex.absorbance(p, eta, offset, probe) == pytest.approx(ref, rel=1e-9)

    def test_control_off_flat(self):
        p = replace(memory(gamma0=85e3, alpha_bg=math.log(2) / 0.1), omega_c=0.0)
        r = ex.spectrum_scan(p, GradientSchedule(eta0=1.4e7), (-1e6, 1e6), 51, broadened=True)
        assert np.array_equal(r.transmission, np.full(51, p.background_transmission))

    def test_broadened_plateau(self):
        # eta L = 4 MHz >> 170 kHz linewidth: shallower dip, width close to eta L
        gamma0 = 85e3
        p = memory(d_tilde=0.3, eta=4e7, gamma0=gamma0)
        s = GradientSchedule(eta0=4e7, delta_offset=0.0)
        narrow = ex.spectrum_scan(p, s, (-4e6, 4e6), 1601, broadened=False)
        wide = ex.spectrum_scan(p, s, (-4e6, 4e6), 1601, broadened=True)
        assert wide.min_transmission > narrow.min_transmission
        assert wide.fwhm == pytest.approx(4e6, rel=0.05)
        # at the band centre the depth is exp(-2 pi d~) reduced by the Lorentzian tails
        # that fall outside the finite band: a factor (2/pi) atan(eta L / (2 gamma0))
        edge = 2 / math.pi * math.atan(4e6 / (2 * gamma0))
        assert wide.min_transmission == pytest.approx(math.exp(-2 * math.pi * 0.3 * edge), rel=1e-3)

    def test_time_domain_crosscheck(self):
        cfg = load_config("fig2a-ii")
        r = ex.spectrum_scan(cfg.params(), cfg.schedule(), (1.5e6, 3.2e6), 41, False,
                             crosscheck_grid=Grid(100, 2000, 20e-6))
        assert r.crosscheck["relative_difference"] < 1e-3

    def test_degenerate_range(self):
        with pytest.raises(DomainError):
            ex.spectrum_scan(memory(gamma0=85e3), GradientSchedule(eta0=0.0), (1e6, 1e6), 11, False)


class TestFid:
    def test_zero_pulse_gives_zero_fid(self):
        cfg = load_config("fig2b")
        r = ex.fid_run(cfg.params(), Grid(50, 500, 5e-6), replace(cfg.probe(), peak_amp=0.0),
                       schedule=cfg.schedule())
        assert not np.any(r.e_out) and not np.any(r.mixed)
        assert math.isnan(r.tau_amp)

    def test_gradient_speeds_up_decay(self):
        cfg = load_config("fig2b")
        p, grid, pulse, s = cfg.params(), cfg.make_grid(), cfg.probe(), cfg.schedule()
        off = ex.fid_run(p, grid, pulse, schedule=s)
        on = ex.fid_run(p, grid, pulse, schedule=s, gradient_on=True)
        assert off.tau_amp / on.tau_amp >= 5
        assert off.consistency == pytest.approx(1.0, abs=0.5)
        # beat note persists for a couple of microseconds
        assert 1.5e-6 < off.oscillation_time < 6e-6

    def test_mixing_definition(self):
        cfg = load_config("fig2b")
        r = ex.fid_run(cfg.params(), Grid(50, 500, 5e-6), cfg.probe(), mix_offset=1e6, schedule=cfg.schedule())
        assert np.allclose(r.mixed, np.real(r.e_out * np.exp(2j * math.pi * 1e6 * r.t)))


class TestEcho:
    def test_uncoupled_memory(self):
        bg = math.log(2) / 0.1
        setup = replace(ideal_setup(d_tilde=1e-9), params=replace(memory(1e-9, 2.8e7, alpha_bg=bg)))
        r = setup.run()
        assert r.efficiency_total < 1e-9
        assert r.leak_energy / r.input_energy == pytest.approx(0.5, rel=1e-6)

    def test_ideal_recall(self):
        r = ideal_setup().run()
        assert r.efficiency_total > 0.9 and r.reversal_fidelity > 0.9
        assert r.echo_centroid == pytest.approx(15e-6, abs=0.1e-6)

    def test_accounting(self):
        r = ideal_setup(d_tilde=1.0).run()
        assert r.efficiency_total <= 1 - r.leak_energy / r.input_energy + 1e-3
        assert r.coherent_absorbed == pytest.approx(r.input_energy - r.leak_energy)

    def test_requires_finite_flip(self):
        s = ideal_setup()
        with pytest.raises(ex.EchoWindowError):
            ex.echo_run(s.params, replace(s.schedule, t_flip=math.inf), s.pulse, s.grid)

    def test_input_overlapping_flip(self):
        s = ideal_setup()
        with pytest.raises(ex.EchoWindowError):
            ex.echo_run(s.params, s.schedule, replace(s.pulse, t_center=-0.5e-6), s.grid)

    def test_flip_outside_grid(self):
        s = ideal_setup()
        with pytest.raises(ex.EchoWindowError):
            ex.echo_run(s.params, replace(s.schedule, t_flip=30e-6), s.pulse, s.grid)

    def test_truncation_flagged(self):
        s = ideal_setup(d_tilde=1.0)
        short = Grid(100, 1000, 30e-6, t_start=-18e-6)  # ends at 12 us, echo due at 15 us
        assert ex.echo_run(s.params, s.schedule, s.pulse, short).truncated

    def test_control_off_during_storage(self):
        cfg = load_config("fig3")
        args = (cfg.params(), cfg.schedule(), cfg.probe(), cfg.make_grid())
        on = ex.echo_run(*args, control_during_storage=True)
        off = ex.echo_run(*args, control_during_storage=False)
        assert off.efficiency_total != on.efficiency_total
        assert off.leak_energy == pytest.approx(on.leak_energy, rel=1e-12)

    def test_three_level_solver_option(self):
        s = ideal_setup(d_tilde=1.0, nz=60, nt=1500)
        r = ex.echo_run(s.params, s.schedule, s.pulse, s.grid, solver="three-level")
        assert 0 < r.efficiency_total < 1
        with pytest.raises(DomainError):
            ex.echo_run(s.params, s.schedule, s.pulse, s.grid, solver="four-level")


@pytest.fixture(scope="module")
def ideal_series():
    p = replace(memory(d_tilde=1.0), length=0.2)
    s = GradientSchedule(eta0=1.4e7, t_flip=0.0)
    pulse = ProbePulse(t_center=-2.5e-6, fwhm=1e-6)
    grid = Grid(150, 3000, 14e-6, t_start=-5e-6)
    return p, s, pulse, grid, ex.delay_series(p, s, pulse, grid, [0.0, 400e-9, 800e-9, 1200e-9])


class TestDelaySeries:
    def test_timing_law(self, ideal_series):
        *_, grid, ds = ideal_series
        assert ds.slope == pytest.approx(2.0, abs=0.05)
        shifts = np.array([r.echo_centroid for r in ds.reports]) - ds.reports[0].echo_centroid
        assert np.max(np.abs(shifts - 2 * np.array(ds.delays))) <= 2 * grid.dt

    def test_zero_delay_matches_echo_run(self, ideal_series):
        p, s, pulse, grid, ds = ideal_series
        assert ds.reports[0].summary() == ex.echo_run(p, s, pulse, grid).summary()

    def test_fig3b_energy_decay(self):
        cfg = load_config("fig3b")
        e = cfg.experiment
        ds = ex.delay_series(cfg.params(), cfg.schedule(), cfg.probe(), cfg.make_grid(),
                             [k * e.delay_step for k in range(e.delay_count)])
        assert 0.75e-6 <= ds.decay_tau <= 2.25e-6
        assert not any(r.truncated for r in ds.reports)

    def test_parallel_matches_serial(self, ideal_series):
        p, s, pulse, grid, ds = ideal_series
        par = ex.delay_series(p, s, pulse, grid, [0.0, 400e-9], workers=2)
        assert [r.summary() for r in par.reports] == [r.summary() for r in ds.reports[:2]]


class TestSweep:
    def test_depth_axis(self):
        sw = ex.efficiency_sweep(ideal_setup(), "d_tilde", [0.5, 1, 2, 5])
        eff = [r.efficiency_total for r in sw.reports]
        assert sw.annotations["efficiency_total"] == "increasing"
        assert eff[-1] > 0.9

    def test_gamma0_axis(self):
        sw = ex.efficiency_sweep(ideal_setup(d_tilde=2.0), "gamma0", [40e3, 20e3, 5e3, 0.0])
        assert sw.annotations["efficiency_total"] == "increasing"

    def test_bandwidth_axis(self):
        # memory bandwidth eta L = 2.8 MHz; push the pulse bandwidth past it
        sw = ex.efficiency_sweep(ideal_setup(d_tilde=2.0, nt=8000), "bandwidth", [0.44e6, 2e6, 6e6])
        leak = [row[4] for row in sw.rows()]
        assert leak[0] < leak[1] < leak[2]
        assert sw.reports[2].efficiency_total < sw.reports[0].efficiency_total

    def test_invalid_axis(self):
        with pytest.raises(DomainError):
            ex.efficiency_sweep(ideal_setup(), "temperature", [1.0])

    def test_monotonicity_labels(self):
        assert ex.monotonicity([1, 2, 3]) == "increasing"
        assert ex.monotonicity([3, 2, 1]) == "decreasing"
        assert ex.monotonicity([1, 3, 2]) == "non-monotonic"


class TestCompare:
    def test_zero_input(self):
        cmp = ex.compare_models(memory(gamma0=10e3), GradientSchedule(eta0=1.4e7),
                                ProbePulse(t_center=0.5e-6, fwhm=0.2e-6, peak_amp=0.0), Grid(30, 300, 2e-6))
        assert cmp.l2 == 0.0 and cmp.peak == 0.0
