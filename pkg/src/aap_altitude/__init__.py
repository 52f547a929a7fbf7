"""Energy-efficient hover altitude of an aerial access point.

Two solvers maximize the bits-per-Joule efficiency of a drone base station
over its altitude: sequential convex programming (:mod:`.scp`) and monotonic
fractional programming with polyblock outer approximation (:mod:`.mfp`).
:mod:`.oracle` provides a brute-force reference.
"""

from .errors import (
    AltitudeError,
    ConfigError,
    DegenerateEnergy,
    DegenerateSegment,
    DomainError,
    Infeasible,
    InvalidParams,
)
from .mfp import MfpSettings, mfp_optimize
from .model import (
    DerivedCoefficients,
    EnergyConstants,
    ScenarioParams,
    default_scenario,
    derive_coefficients,
    gee,
)
from .oracle import grid_argmax
from .results import SolveResult, Termination
from .scp import ScpSettings, scp_optimize

__version__ = "0.1.0"
