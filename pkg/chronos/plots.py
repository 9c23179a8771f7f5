"""
Deterministic SVG plots of result tables.

:copyright: (c) 2026 by the Chronos developers.
:license: MPL-2.0, see LICENSE for more details.
"""

import logging
from enum import StrEnum
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import numpy as np  # noqa: E402
from matplotlib import rc_context  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

from chronos.dynamics import slope_fit  # noqa: E402
from chronos.errors import InputError  # noqa: E402
from chronos.results import read_csv  # noqa: E402

_LOG = logging.getLogger(__name__)

# SVG sizes are in points
CANVAS_INCHES = (960 / 72, 600 / 72)
CANVAS_DPI = 72
DENSITY_SLICES = 5

_RC = {
    "svg.hashsalt": "chronos",
    "svg.fonttype": "path",
    "font.family": "DejaVu Sans",
    "axes.grid": True,
    "grid.alpha": 0.3,
}

# axis labels with units (a.u.)
_LABELS = {
    "t": "t [a.u.]",
    "q": "q [a.u.]",
    "mean_q": "<q> [a.u.]",
    "var_q": "Var q [a.u.^2]",
    "density": "|psi(q, t)|^2 [1/a.u.]",
    "delta_tau": "delta_tau [a.u.]",
    "t_max": "t_max [a.u.]",
    "probability": "P(t)",
}


class PlotKind(StrEnum):
    TRAJECTORY = "trajectory"
    TRANSITIONS = "transitions"
    DENSITY = "density"


def _label(column: str) -> str:
    return _LABELS.get(column, column)


def _require(table: dict[str, np.ndarray], *columns: str, source: Path) -> None:
    missing = [column for column in columns if column not in table]
    if missing:
        raise InputError(f"{source.name} lacks columns {missing}")


def _trajectory(fig: Figure, table: dict[str, np.ndarray], source: Path) -> None:
    _require(table, "t", "var_q", source=source)
    ax = fig.add_subplot(1, 1, 1)
    ax.plot(table["t"], table["var_q"], color="tab:blue", linewidth=1.5, label="var_q")
    ax.set_xlabel(_label("t"))
    ax.set_ylabel(_label("var_q"))
    ax.legend(loc="best")


def _transitions(fig: Figure, table: dict[str, np.ndarray], source: Path) -> None:
    _require(table, "delta_tau", "t_max", source=source)
    x = np.abs(table["delta_tau"])
    y = table["t_max"]
    ax = fig.add_subplot(1, 1, 1)
    ax.scatter(x, y, color="tab:red", s=18, label="t_max", zorder=3)
    if np.unique(x).size >= 2:
        fit = slope_fit(list(zip(x, y)))
        line_x = np.array([x.min(), x.max()])
        ax.plot(
            line_x,
            fit.slope * line_x + fit.intercept,
            color="black",
            linewidth=1.0,
            label=f"fit: slope={fit.slope:.4f}, r^2={fit.r_squared:.4f}",
        )
    ax.set_xlabel(_label("delta_tau"))
    ax.set_ylabel(_label("t_max"))
    ax.legend(loc="best")


def _density(fig: Figure, table: dict[str, np.ndarray], source: Path) -> None:
    _require(table, "t", "q", "density", source=source)
    times = np.unique(table["t"])
    picks = np.unique(np.linspace(0, times.size - 1, DENSITY_SLICES).round().astype(int))
    ax = fig.add_subplot(1, 1, 1)
    for i in picks:
        mask = table["t"] == times[i]
        ax.plot(table["q"][mask], table["density"][mask], linewidth=1.2, label=f"t={times[i]:.5g}")
    ax.set_xlabel(_label("q"))
    ax.set_ylabel(_label("density"))
    ax.legend(loc="best")


_RENDERERS = {
    PlotKind.TRAJECTORY: _trajectory,
    PlotKind.TRANSITIONS: _transitions,
    PlotKind.DENSITY: _density,
}


def emit_svg(csv_path: Path, kind: PlotKind, svg_path: Path | None = None, title: str | None = None) -> Path:
    """
    Render a CSV written by this package to a 960x600 SVG.

    Identical inputs give byte-identical files.

    Raises:
        InputError: empty CSV or missing columns.
    """
    csv_path = Path(csv_path)
    svg_path = Path(svg_path) if svg_path else csv_path.with_suffix(".svg")
    table = read_csv(csv_path)
    with rc_context(_RC):
        fig = Figure(figsize=CANVAS_INCHES, dpi=CANVAS_DPI)
        _RENDERERS[PlotKind(kind)](fig, table, csv_path)
        if title:
            fig.suptitle(title)
        fig.savefig(svg_path, format="svg", dpi=CANVAS_DPI, metadata={"Date": None})
    _LOG.debug("Rendered %s plot %s", kind, svg_path.name)
    return svg_path
