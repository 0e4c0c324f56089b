"""Fixed-point learning, acceleration and convergence bounds for mean-field games."""

from .errors import MflError
from .fixpoint import IterationMap, Schedule, StopRule, Trajectory, detect_cycle, iterate

__all__ = ["IterationMap", "MflError", "Schedule", "StopRule", "Trajectory", "detect_cycle", "iterate"]
__version__ = "0.1.0"
