"""Sweep/simulation orchestration and the latency CSV format."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from . import analytic
from .config import RunConfig, ScenarioName
from .desim import collect_latencies
from .domain import Architecture, LatencySample, RngStream, derive_seed
from .stats import LineFit, Summary, fit_line, summarize
from .topology import GATEWAY, Options, Scenario, build, deploy, light_load_spacing

CSV_HEADER = ("source", "architecture", "n", "trial", "latency_ms")
SUMMARY_HEADER = ("source", "architecture", "n", "count", "mean", "std_pop", "min", "max", "p50", "p95", "p99")


class SchemaError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Row:
    source: str
    architecture: str
    n: int
    trial: int
    latency_ms: float


def options_for(cfg: RunConfig) -> Options:
    return Options(
        gateway_time=cfg.gateway_time,
        ranking_time=cfg.ranking_time,
        link_latency=cfg.link_latency,
        sidecar_overhead=cfg.sidecar_overhead,
        sidecar_enabled=cfg.sidecar,
        jitter=not cfg.params.is_noiseless,
    )


def sweep_config(cfg: RunConfig) -> analytic.SweepConfig:
    return analytic.SweepConfig(cfg.users, cfg.trials, cfg.params, cfg.seed)


def analytic_rows(cfg: RunConfig) -> list[Row]:
    result = analytic.run_sweep(sweep_config(cfg))
    return sorted(Row("analytic", s.architecture.value, s.n, s.trial, s.latency) for s in result.samples)


def simulate_latencies(cfg: RunConfig, scenario: Scenario, n: int) -> list[float]:
    """Desim latencies of ``cfg.trials`` light-load requests for one ``n``."""
    opts = options_for(cfg)
    graph, plan = build(scenario, n, cfg.params, cfg.shards, opts)
    engine = deploy(graph, plan, n, seed=derive_seed(cfg.seed, "desim", scenario.value, n))
    users = RngStream.substream(cfg.seed, "workload", scenario.value, n)
    engine.inject_workload(
        cfg.trials,
        light_load_spacing(cfg.params, n, opts),
        GATEWAY,
        users=[users.next_u64() % n for _ in range(cfg.trials)],
    )
    return collect_latencies(engine.run_until_drained())


def desim_rows(cfg: RunConfig, scenarios: Sequence[Scenario]) -> list[Row]:
    rows = []
    for scenario in scenarios:
        arch = Architecture.MONOLITH if scenario is Scenario.MONOLITH else Architecture.MICROSERVICE
        for n in cfg.users:
            for trial, latency in enumerate(simulate_latencies(cfg, scenario, n)):
                sample = LatencySample(arch, n, trial, latency)
                rows.append(Row("desim", arch.value, n, trial, sample.latency))
    return sorted(rows)


def simulate_scenarios(cfg: RunConfig) -> list[Scenario]:
    """Scenarios run by ``simulate``: the configured one, or the
    monolith/microservice pair when the config names the analytic sweep."""
    if cfg.scenario is ScenarioName.ANALYTIC_SWEEP:
        return [Scenario.MONOLITH, Scenario.MICROSERVICE]
    return [Scenario(cfg.scenario.value)]


def write_csv(rows: Iterable[Row], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(format_csv(rows).encode("utf-8"))
    return path


def format_csv(rows: Iterable[Row]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in sorted(rows):
        w.writerow((r.source, r.architecture, r.n, r.trial, f"{r.latency_ms:.6f}"))
    return buf.getvalue()


def read_csv(path: str | Path) -> list[Row]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_HEADER:
            raise SchemaError(f"{path}: expected header {','.join(CSV_HEADER)}, got {header}")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(CSV_HEADER):
                raise SchemaError(f"{path}:{lineno}: expected {len(CSV_HEADER)} fields, got {len(rec)}")
            try:
                rows.append(Row(rec[0], rec[1], int(rec[2]), int(rec[3]), float(rec[4])))
            except ValueError as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}") from None
    return rows


def group(rows: Iterable[Row]) -> dict[tuple[str, str, int], list[float]]:
    out: dict[tuple[str, str, int], list[float]] = {}
    for r in sorted(rows):
        out.setdefault((r.source, r.architecture, r.n), []).append(r.latency_ms)
    return out


def summaries(rows: Iterable[Row]) -> dict[tuple[str, str, int], Summary]:
    return {key: summarize(vals) for key, vals in group(rows).items()}


def format_summary_table(table: dict[tuple[str, str, int], Summary]) -> str:
    lines = [",".join(SUMMARY_HEADER)]
    for (source, arch, n), s in table.items():
        stats = (s.mean, s.std, s.min, s.max, s.p50, s.p95, s.p99)
        lines.append(",".join([source, arch, str(n), str(s.count)] + [f"{v:.6f}" for v in stats]))
    return "\n".join(lines) + "\n"


def mean_fit(table: dict[tuple[str, str, int], Summary], source: str, arch: str) -> LineFit | None:
    pts = [(n, s.mean) for (src, a, n), s in table.items() if src == source and a == arch]
    if len({n for n, _ in pts}) < 2:
        return None
    return fit_line(pts)


@dataclass(frozen=True)
class ComparisonRow:
    architecture: str
    n: int
    analytic_mean: float
    desim_mean: float

    @property
    def abs_delta(self) -> float:
        return self.desim_mean - self.analytic_mean

    @property
    def rel_delta(self) -> float:
        if self.abs_delta == 0:
            return 0.0
        if self.analytic_mean == 0:
            return math.inf
        return abs(self.abs_delta) / abs(self.analytic_mean)


@dataclass(frozen=True)
class Comparison:
    rows: tuple[ComparisonRow, ...]
    fits: dict[tuple[str, str], LineFit | None]
    tolerance: float

    @property
    def max_rel_delta(self) -> float:
        return max(r.rel_delta for r in self.rows)

    @property
    def ok(self) -> bool:
        return self.max_rel_delta <= self.tolerance

    def report(self) -> str:
        lines = ["architecture,n,analytic_mean,desim_mean,abs_delta,rel_delta"]
        for r in self.rows:
            lines.append(
                f"{r.architecture},{r.n},{r.analytic_mean:.6f},{r.desim_mean:.6f},{r.abs_delta:.6f},{r.rel_delta:.6f}"
            )
        lines.append("source,architecture,slope,intercept,r_squared")
        for (source, arch), fit in sorted(self.fits.items()):
            if fit is None:
                lines.append(f"{source},{arch},nan,nan,nan")
            else:
                lines.append(f"{source},{arch},{fit.slope:.9f},{fit.intercept:.6f},{fit.r_squared:.6f}")
        verdict = "PASS" if self.ok else "FAIL"
        lines.append(f"max_rel_delta={self.max_rel_delta:.6f} tolerance={self.tolerance:.6f} {verdict}")
        return "\n".join(lines) + "\n"


def compare(rows: Iterable[Row], tolerance: float) -> Comparison:
    table = summaries(rows)
    out = []
    for (source, arch, n), s in table.items():
        if source != "analytic":
            continue
        other = table.get(("desim", arch, n))
        if other is not None:
            out.append(ComparisonRow(arch, n, s.mean, other.mean))
    if not out:
        raise SchemaError("no (architecture, n) cell has both analytic and desim samples")
    fits = {(src, a.value): mean_fit(table, src, a.value) for src in ("analytic", "desim") for a in Architecture}
    return Comparison(tuple(out), fits, tolerance)
