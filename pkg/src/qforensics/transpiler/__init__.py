"""Basis decomposition, SWAP routing and fidelity-driven mapping selection."""

from .decompose import UnknownGateError, decompose
from .fidelity import FidelityScore, MissingCalibrationError, fidelity, fidelity_grouped, gate_counts
from .routing import Layout, LayoutError, RoutingContext, coupling_violations
from .transpile import (
    DEFAULT_CAP,
    DEFAULT_SLACK,
    DEFAULT_TRIALS,
    ExhaustiveCapError,
    TranspiledCircuit,
    count_layouts,
    route,
    transpile,
    transpile_exhaustive,
)

__all__ = [
    "DEFAULT_CAP", "DEFAULT_SLACK", "DEFAULT_TRIALS", "ExhaustiveCapError", "FidelityScore",
    "Layout", "LayoutError", "MissingCalibrationError", "RoutingContext", "TranspiledCircuit",
    "UnknownGateError", "count_layouts", "coupling_violations", "decompose", "fidelity",
    "fidelity_grouped", "gate_counts", "route", "transpile", "transpile_exhaustive",
]
