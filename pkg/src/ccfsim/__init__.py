"""Dynamic common-cause failure simulation with the Atwood shock model."""

from .engine import MissionConfig, SequenceTrace, classify_sequence, simulate_sequence
from .montecarlo import (
    AggregateCounts,
    BatchConfig,
    CountingMode,
    EstimateReport,
    estimate_alpha,
    estimate_atwood,
    run_batch,
    verification_report,
)
from .params import AlphaParams, AtwoodParams, ParameterError, alpha_to_atwood, atwood_to_alpha, event_class_rates
from .sampling import RandomStream, derive_stream

__version__ = "0.1.0"

__all__ = [
    "AggregateCounts", "AlphaParams", "AtwoodParams", "BatchConfig", "CountingMode", "EstimateReport",
    "MissionConfig", "ParameterError", "RandomStream", "SequenceTrace", "alpha_to_atwood", "atwood_to_alpha",
    "classify_sequence", "derive_stream", "estimate_alpha", "estimate_atwood", "event_class_rates",
    "run_batch", "simulate_sequence", "verification_report",
]
