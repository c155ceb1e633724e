"""Closed-form latency models, noise sampling and trial sweeps.

Monolith:      T_mono(n) = t_comp + alpha * n + eps,  eps ~ N(0, sigma_mono^2)
Microservice:  T_micro   = t_comp + t_local + eps,    eps ~ N(0, sigma_micro^2)

Both are clamped at zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

from .domain import (
    Architecture,
    LatencyModelParams,
    LatencySample,
    ModelError,
    NoiseSpec,
    RngStream,
    as_user_count,
)
from .stats import Summary, summarize

ANALYTIC_STREAM = "analytic"


class ZeroAlpha(ModelError):
    """alpha == 0: monolith latency never grows, so there is no crossover."""


def sample_gaussian(rng: RngStream, spec: NoiseSpec) -> float:
    """Box-Muller over two consecutive draws (u1 then u2); the sine branch
    is discarded."""
    u1 = rng.uniform_open_low()
    u2 = rng.uniform()
    z = math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)
    return spec.sigma * z


def eval_mono(n: int, p: LatencyModelParams, eps: float = 0.0) -> float:
    n = as_user_count(n)
    return max(0.0, p.t_comp + p.alpha * n + eps)


def eval_micro(p: LatencyModelParams, eps: float = 0.0) -> float:
    return max(0.0, p.t_comp + p.t_local + eps)


def eval_latency(arch: Architecture, n: int, p: LatencyModelParams, eps: float = 0.0) -> float:
    if arch is Architecture.MONOLITH:
        return eval_mono(n, p, eps)
    return eval_micro(p, eps)


def crossover_n(p: LatencyModelParams) -> float:
    if p.alpha == 0:
        raise ZeroAlpha("alpha is zero; expected monolith latency never overtakes")
    return p.t_local / p.alpha


@dataclass(frozen=True)
class SweepConfig:
    user_counts: tuple[int, ...]
    trials_per_point: int = 50
    params: LatencyModelParams = field(default_factory=LatencyModelParams)
    seed: int = 1

    def __post_init__(self) -> None:
        counts = tuple(as_user_count(n) for n in self.user_counts)
        if not counts:
            raise ModelError("user_counts must not be empty")
        if any(b <= a for a, b in zip(counts, counts[1:])):
            raise ModelError(f"user_counts must be strictly increasing, got {counts}")
        if self.trials_per_point < 1:
            raise ModelError(f"trials_per_point must be >= 1, got {self.trials_per_point}")
        object.__setattr__(self, "user_counts", counts)


@dataclass(frozen=True)
class SweepResult:
    samples: tuple[LatencySample, ...]
    summaries: dict[tuple[Architecture, int], Summary]

    def latencies(self, arch: Architecture, n: int) -> list[float]:
        return [s.latency for s in self.samples if s.architecture is arch and s.n == n]

    def means(self, arch: Architecture) -> list[tuple[int, float]]:
        return sorted((n, s.mean) for (a, n), s in self.summaries.items() if a is arch)


def draw_sample(cfg: SweepConfig, arch: Architecture, n: int, trial: int) -> LatencySample:
    rng = RngStream.substream(cfg.seed, ANALYTIC_STREAM, arch, n, trial)
    eps = sample_gaussian(rng, cfg.params.noise_for(arch))
    return LatencySample(arch, n, trial, eval_latency(arch, n, cfg.params, eps))


def summarize_samples(samples: Iterable[LatencySample]) -> dict[tuple[Architecture, int], Summary]:
    groups: dict[tuple[Architecture, int], list[float]] = {}
    for s in samples:
        groups.setdefault((s.architecture, s.n), []).append(s.latency)
    return {key: summarize(vals) for key, vals in sorted(groups.items())}


def run_sweep(cfg: SweepConfig) -> SweepResult:
    samples = tuple(
        draw_sample(cfg, arch, n, trial)
        for arch in Architecture
        for n in cfg.user_counts
        for trial in range(cfg.trials_per_point)
    )
    return SweepResult(samples=samples, summaries=summarize_samples(samples))
