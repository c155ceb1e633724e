"""Monolith vs microservice latency scaling for recommendation serving."""

from .analytic import SweepConfig, SweepResult, crossover_n, eval_micro, eval_mono, run_sweep, sample_gaussian
from .domain import (
    Architecture,
    ItemVector,
    LatencyModelParams,
    LatencySample,
    NoiseSpec,
    PreferenceVector,
    RngStream,
    UserCount,
    validate_params,
)
from .recsys import PreferenceStore, assign_shards, generate_store, score, top_k
from .stats import fit_line, summarize

__all__ = [
    "Architecture",
    "ItemVector",
    "LatencyModelParams",
    "LatencySample",
    "NoiseSpec",
    "PreferenceStore",
    "PreferenceVector",
    "RngStream",
    "SweepConfig",
    "SweepResult",
    "UserCount",
    "assign_shards",
    "crossover_n",
    "eval_micro",
    "eval_mono",
    "fit_line",
    "generate_store",
    "run_sweep",
    "sample_gaussian",
    "score",
    "summarize",
    "top_k",
    "validate_params",
]
