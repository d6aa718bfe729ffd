"""Open quantum Brownian motion: position-space solver, moment hierarchy and
an (x, p) oracle for the momentum elimination."""
from .dynamics import (InternalState, NumericalError, ScenarioConfig, WignerField, cfl_check,
                       evolve, initial_field, rhs, step_rk4)
from .grid import PhaseGrid, SpatialGrid
from .params import CoefficientSet, PhysicalParams, RegimeError, coefficient_set

__all__ = [
    "CoefficientSet", "InternalState", "NumericalError", "PhaseGrid", "PhysicalParams",
    "RegimeError", "ScenarioConfig", "SpatialGrid", "WignerField", "cfl_check",
    "coefficient_set", "evolve", "initial_field", "rhs", "step_rk4",
]
