"""Design-continuum engine for key-value storage layouts."""

from .continuum import (
    CostVector,
    DerivedDesign,
    DesignKnobs,
    DomainError,
    Environment,
    InsufficientMemory,
    LsbTreeModel,
    PRESET_NAMES,
    UnknownPreset,
    cost,
    derive,
    lsb_tree_cost,
    preset,
)
from .navigator import NavigationTrace, WorkloadMix, auto_design, navigate, theta
from .simulator import IOStats, SimConfig, SimState, run_trace
from .workloads import Operation, WorkloadSpec, generate, read_trace, write_trace

__all__ = [
    "CostVector", "DerivedDesign", "DesignKnobs", "DomainError", "Environment",
    "InsufficientMemory", "LsbTreeModel", "PRESET_NAMES", "UnknownPreset",
    "cost", "derive", "lsb_tree_cost", "preset",
    "NavigationTrace", "WorkloadMix", "auto_design", "navigate", "theta",
    "IOStats", "SimConfig", "SimState", "run_trace",
    "Operation", "WorkloadSpec", "generate", "read_trace", "write_trace",
]
