"""Elimination of intermediate species from multiscale mass-action networks."""

from ._kernels import BACKEND
from .assumptions import AssumptionVerdict, check_all
from .intermediates import (IntermediateDecomposition, IntermediateError, detect_intermediates,
                            validate_intermediates)
from .network import (NetworkError, ReactionNetwork, ScalingSpec, build_network, make_scaling,
                      parse_network, serialize_network)
from .reduction import (LimitingNetwork, ReducedNetwork, build_limiting, check_single_scale,
                        reduce, serialize_limiting, serialize_reduced)
from .scenarios import SCENARIOS, load_scenario
from .simulate import SimConfig, compare, convergence_sweep

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "AssumptionVerdict", "check_all", "IntermediateDecomposition",
    "IntermediateError", "detect_intermediates", "validate_intermediates", "NetworkError",
    "ReactionNetwork", "ScalingSpec", "build_network", "make_scaling", "parse_network",
    "serialize_network", "LimitingNetwork", "ReducedNetwork", "build_limiting",
    "check_single_scale", "reduce", "serialize_limiting", "serialize_reduced", "SCENARIOS",
    "load_scenario", "SimConfig", "compare", "convergence_sweep",
]
