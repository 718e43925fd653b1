"""Numerical lab for the reversible four-species Gray-Scott system."""
from .core import (
    DomainError,
    Equilibrium,
    Parameters,
    State,
    detailed_balance_equilibrium,
    reaction_rates,
    total_mass,
    trivial_equilibrium,
)
from .grid import GridSpec
from .kernels import backend_name
from .stepper import BlowUpError, ModelVariant, NumericalAbort, StepConfig, integrate

__version__ = "0.1.0"
