"""Lagrangian solver for a radiative, reacting viscous gas outside the unit ball."""
from .constitutive import PhysParams, ThermoPoint
from .config import RunConfig, parse_config, serialize
from .diagnostics import History, decay_metric, entropy_roots
from .errors import ConfigError, ExogasError, StepFailure
from .grid_state import BoundaryConditions, Grid, State, make_initial_condition
from .runner import run
from .solver import Integrator, StepperConfig

__version__ = "0.1.0"

__all__ = [
    "BoundaryConditions", "ConfigError", "ExogasError", "Grid", "History", "Integrator",
    "PhysParams", "RunConfig", "State", "StepFailure", "StepperConfig", "ThermoPoint",
    "decay_metric", "entropy_roots", "make_initial_condition", "parse_config", "run", "serialize",
]
