"""Planar neuromuscular walking simulator with spring-replaced plantar flexors."""

from .config import CostWeights, ExperimentConfig
from .params import ReflexGains
from .simulate import SimResult, simulate
from .springs import ExperimentKind, SpringConfig
from .trajectory import TrajectoryLog

__all__ = [
    "CostWeights",
    "ExperimentConfig",
    "ExperimentKind",
    "ReflexGains",
    "SimResult",
    "SpringConfig",
    "TrajectoryLog",
    "simulate",
]

__version__ = "0.1.0"
