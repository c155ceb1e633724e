"""Summary statistics and ordinary least squares line fits."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence


class EmptyInput(ValueError):
    pass


class DegenerateX(ValueError):
    pass


@dataclass(frozen=True)
class Summary:
    """Sample summary. ``std`` is the population standard deviation and the
    percentiles are nearest-rank (no interpolation)."""

    count: int
    mean: float
    std: float
    min: float
    max: float
    p50: float
    p95: float
    p99: float


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    r_squared: float


def nearest_rank(sorted_values: Sequence[float], q: int) -> float:
    """Value at 1-based rank ceil(q/100 * N) of an ascending sequence."""
    if not 0 < q <= 100:
        raise ValueError(f"percentile must be in (0, 100], got {q}")
    n = len(sorted_values)
    rank = -(-q * n // 100)
    return sorted_values[max(rank, 1) - 1]


def mean(samples: Sequence[float]) -> float:
    if not samples:
        raise EmptyInput("mean of empty sequence")
    return math.fsum(samples) / len(samples)


def summarize(samples: Iterable[float]) -> Summary:
    values = sorted(float(s) for s in samples)
    if not values:
        raise EmptyInput("cannot summarize an empty sample")
    n = len(values)
    mu = mean(values)
    var = math.fsum((x - mu) ** 2 for x in values) / n
    return Summary(
        count=n,
        mean=mu,
        std=math.sqrt(var),
        min=values[0],
        max=values[-1],
        p50=nearest_rank(values, 50),
        p95=nearest_rank(values, 95),
        p99=nearest_rank(values, 99),
    )


def fit_line(points: Iterable[tuple[float, float]]) -> LineFit:
    pts = [(float(x), float(y)) for x, y in points]
    if len({x for x, _ in pts}) < 2:
        raise DegenerateX("need at least two distinct x values")
    xm = mean([x for x, _ in pts])
    ym = mean([y for _, y in pts])
    sxx = math.fsum((x - xm) ** 2 for x, _ in pts)
    sxy = math.fsum((x - xm) * (y - ym) for x, y in pts)
    slope = sxy / sxx
    intercept = ym - slope * xm
    ss_tot = math.fsum((y - ym) ** 2 for _, y in pts)
    ss_res = math.fsum((y - (intercept + slope * x)) ** 2 for x, y in pts)
    # a flat response is fit perfectly by a flat line
    r2 = 1.0 if ss_tot == 0 else min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return LineFit(slope=slope, intercept=intercept, r_squared=r2)
