"""Surface-code memory and stability experiments with and without qubit reset.

The package builds annotated syndrome-extraction circuits for rotated planar
patches, attaches circuit-level Pauli noise, samples detector outcomes with
a Pauli-frame simulator, extracts detector error models, decodes them with
exact minimum-weight perfect matching and fits logical error rates.
"""

from .analysis import (
    FailurePoint,
    FitResult,
    break_even,
    combine_memory,
    fit_log_linear,
    overhead_ratio,
)
from .builders import SchemeSpec, build, lower
from .circuit import CircuitProgram, total_duration, validate
from .decoder import build_graph, decode, decode_batch, match
from .dem import decompose, distance, extract
from .experiment import PointConfig, effective_distance, run_point
from .layout import memory_patch, stability_patch
from .noise import NoiseModel, apply, idle_pauli_probs
from .sampler import sample

__all__ = [
    "CircuitProgram", "FailurePoint", "FitResult", "NoiseModel", "PointConfig", "SchemeSpec",
    "apply", "break_even", "build", "build_graph", "combine_memory", "decode", "decode_batch",
    "decompose", "distance", "effective_distance", "extract", "fit_log_linear",
    "idle_pauli_probs", "lower", "match", "memory_patch", "overhead_ratio", "run_point",
    "sample", "stability_patch", "total_duration", "validate",
]
