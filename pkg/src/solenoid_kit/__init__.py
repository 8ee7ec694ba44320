"""Transfer operators, solenoid martingales, path-space measures, scaling
functions and multiplicity functions on finite-to-one dynamical systems."""

from .dynamics import (AffineIFS, CircleMap, Point, Subshift, branch, cell_table,
                       circle_point, forward, parse_system, preimages)
from .errors import SolenoidKitError
from .steps import CircleFunction, MeasureVector, StepFunction
from .transfer import PerronData, ruelle_apply, solve_perron, standard_measure

__version__ = "0.1.0"

__all__ = [
    "AffineIFS", "CircleMap", "Subshift", "Point", "branch", "cell_table",
    "circle_point", "forward", "parse_system", "preimages", "SolenoidKitError",
    "CircleFunction", "MeasureVector", "StepFunction", "PerronData",
    "ruelle_apply", "solve_perron", "standard_measure",
]
