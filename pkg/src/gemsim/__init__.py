"""Simulator for Raman gradient echo memory in a Lambda-type atomic ensemble."""

from .analysis import (
    DecayFit,
    FitError,
    energy,
    fit_exp_decay,
    heterodyne_mix,
    reversal_fidelity,
)
from .config import ConfigError, RunConfig, emit_config, parse_config, parse_config_text
from .experiments import (
    EchoReport,
    EchoSetup,
    EchoWindowError,
    FidResult,
    SpectrumResult,
    compare_models,
    delay_series,
    echo_run,
    efficiency_sweep,
    fid_run,
    spectrum_scan,
)
from .params import (
    DomainError,
    GradientSchedule,
    PhysicalParams,
    ProbePulse,
    ZeemanMap,
    adiabatic_coupling,
    check_adiabatic,
    eta_of_t,
    light_shift,
    zeeman_to_detuning,
)
from .record import FieldRecord, Grid, NumericalError
from .solver2 import inject_coherence, solve_two_level
from .solver3 import solve_three_level

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DecayFit", "DomainError", "EchoReport", "EchoSetup", "EchoWindowError",
    "FidResult", "FieldRecord", "FitError", "GradientSchedule", "Grid", "NumericalError",
    "PhysicalParams", "ProbePulse", "RunConfig", "SpectrumResult", "ZeemanMap",
    "adiabatic_coupling", "check_adiabatic", "compare_models", "delay_series", "echo_run",
    "efficiency_sweep", "emit_config", "energy", "eta_of_t", "fid_run", "fit_exp_decay",
    "heterodyne_mix", "inject_coherence", "light_shift", "parse_config", "parse_config_text",
    "reversal_fidelity", "solve_three_level", "solve_two_level", "spectrum_scan",
    "zeeman_to_detuning",
]
