"""Mean-latency-vs-users figures rendered with matplotlib."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .harness import Row, read_csv, summaries  # noqa: E402

X_LABEL = "Number of users"
Y_LABEL = "Mean response time (ms)"
TITLE = "Response time scaling: monolith vs microservices"

STYLE = {
    "svg.hashsalt": "mlservesim",
    "svg.fonttype": "none",
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.frameon": False,
}
COLORS = {"monolith": "#c0392b", "microservice": "#2471a3"}
MARKERS = {"analytic": "o", "desim": "s"}


@dataclass(frozen=True)
class Series:
    label: str
    source: str
    architecture: str
    n: tuple[int, ...]
    mean: tuple[float, ...]


def series_from_rows(rows: list[Row]) -> list[Series]:
    table = summaries(rows)
    sources = sorted({src for src, _, _ in table})
    keys = sorted({(src, arch) for src, arch, _ in table})
    out = []
    for src, arch in keys:
        pts = sorted((n, s.mean) for (s_, a, n), s in table.items() if s_ == src and a == arch)
        label = arch if len(sources) == 1 else f"{arch} ({src})"
        out.append(Series(label, src, arch, tuple(n for n, _ in pts), tuple(m for _, m in pts)))
    return out


def plot_series(series: list[Series], out_path: str | Path) -> Path:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        try:
            for s in series:
                ax.plot(
                    s.n,
                    s.mean,
                    marker=MARKERS.get(s.source, "o"),
                    color=COLORS.get(s.architecture),
                    linestyle="-" if s.source == "analytic" else "--",
                    label=s.label,
                )
            ax.set_xlabel(X_LABEL)
            ax.set_ylabel(Y_LABEL)
            ax.set_title(TITLE)
            ax.set_ylim(bottom=0)
            ax.legend(loc="upper left")
            fig.tight_layout()
            fmt = out_path.suffix.lstrip(".") or "svg"
            # no timestamp so identical input gives identical bytes
            fig.savefig(out_path, format=fmt, metadata={"Date": None} if fmt == "svg" else None)
        finally:
            plt.close(fig)
    return out_path


def render_plot(csv_path: str | Path, out_path: str | Path) -> list[Series]:
    """Plot the per-n mean latency of every (source, architecture) series in
    a latency CSV. Returns the plotted series."""
    series = series_from_rows(read_csv(csv_path))
    plot_series(series, out_path)
    return series
