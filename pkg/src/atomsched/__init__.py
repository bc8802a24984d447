"""Pulse-level scheduling with absorption for neutral-atom quantum devices."""

from .circuit import (
    CCZ,
    CNOT,
    MCZ,
    SWAP,
    Circuit,
    H,
    SingleQubit,
    VirtualZ,
    X,
    layerize,
    optimize,
    validate_practical_form,
)
from .device import ConnectivityGraph, TimingParams, lattice_for, triangular_lattice
from .gate_scheduler import schedule_gate_level
from .pulse_scheduler import schedule_pulse_level
from .sequence import PulseSequence, check_wellformed, duration
from .transpiler import transpile
from .verifier import check_equivalence

__version__ = "0.1.0"

__all__ = [
    "CCZ", "CNOT", "MCZ", "SWAP", "Circuit", "H", "SingleQubit", "VirtualZ", "X",
    "layerize", "optimize", "validate_practical_form",
    "ConnectivityGraph", "TimingParams", "lattice_for", "triangular_lattice",
    "schedule_gate_level", "schedule_pulse_level",
    "PulseSequence", "check_wellformed", "duration",
    "transpile", "check_equivalence",
]
