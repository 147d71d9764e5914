"""Pseudo-spectral solvers for the scaled Boussinesq equations and their hydrostatic limit."""

from .boussinesq import BoussinesqConfig, run_boussinesq, step_boussinesq
from .diagnostics import cancellation_checks, energy_balance, hydrostatic_residual
from .errors import (
    BlowUp,
    CFLViolation,
    ConfigError,
    ConstraintViolation,
    GridMismatch,
    NumericalFailure,
    StrataError,
)
from .fields import BoussinesqState, DifferenceNorms, PEState, PhysicalState, difference_norms
from .harness import SweepConfig, fit_rate, generate_initial_data, run_tau_sweep
from .pe import PEConfig, run_pe, step_pe
from .spectral import Field, Grid, SpectralField

__all__ = [
    "BlowUp", "BoussinesqConfig", "BoussinesqState", "CFLViolation", "ConfigError",
    "ConstraintViolation", "DifferenceNorms", "Field", "Grid", "GridMismatch",
    "NumericalFailure", "PEConfig", "PEState", "PhysicalState", "SpectralField",
    "StrataError", "SweepConfig", "cancellation_checks", "difference_norms",
    "energy_balance", "fit_rate", "generate_initial_data", "hydrostatic_residual",
    "run_boussinesq", "run_pe", "run_tau_sweep", "step_boussinesq", "step_pe",
]
