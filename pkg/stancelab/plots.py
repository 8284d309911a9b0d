"""
Stancelab - Plots
Deterministic SVG scatter plots of 2-D user layouts and AMI heatmaps
"""

import logging
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import numpy as np
from matplotlib import colormaps, rc_context
from matplotlib.colors import Normalize
from matplotlib.figure import Figure
from matplotlib.patches import Circle, Rectangle

from .core.errors import PreconditionError
from .core.evaluate import UNKNOWN
from .core.project import Layout2D
from .utils import atomic_path

logger = logging.getLogger(__name__)

UNKNOWN_COLOR = "#9e9e9e"
PALETTE = colormaps["tab10"]
HEATMAP_CMAP = colormaps["viridis"]

# fixed ids and no timestamp so identical inputs give identical bytes
SVG_RC = {"svg.hashsalt": "stancelab", "svg.fonttype": "none"}
SVG_METADATA = {"Date": None, "Creator": "stancelab"}


def class_colors(classes: Sequence[str]) -> dict:
    """Color per class: palette in sorted class order, gray for unknown."""
    known = sorted(c for c in set(classes) if c != UNKNOWN)
    colors = {c: PALETTE(i % PALETTE.N) for i, c in enumerate(known)}
    colors[UNKNOWN] = UNKNOWN_COLOR
    return colors


def _save_svg(fig: Figure, path: Union[str, Path]) -> Path:
    with atomic_path(path) as tmp:
        with open(tmp, "wb") as f:
            fig.savefig(f, format="svg", metadata=SVG_METADATA)
    return Path(path)


def emit_scatter_svg(
    layout: Layout2D,
    labels: Optional[Mapping[str, Optional[str]]],
    path: Union[str, Path],
    title: str = "",
) -> Path:
    """One circle per user colored by class, with a legend.

    Users missing from ``labels`` (or labeled None) are drawn gray as
    "unknown". Circles carry ids ``point-<i>`` in layout order.
    Raises:
        PreconditionError: If the layout is empty.
        OSError: If ``path`` cannot be written.
    """
    if len(layout) == 0:
        raise PreconditionError("cannot plot an empty layout")
    labels = labels or {}
    classes = [labels.get(u) or UNKNOWN for u in layout.user_ids]
    colors = class_colors(classes)

    points = layout.points
    span = float(np.ptp(points, axis=0).max()) if len(layout) > 1 else 0.0
    radius = 0.01 * span if span > 0 else 0.05

    with rc_context(SVG_RC):
        fig = Figure(figsize=(6, 6))
        ax = fig.add_subplot()
        for i, ((x, y), cls) in enumerate(zip(points, classes)):
            circle = Circle((x, y), radius, facecolor=colors[cls], edgecolor="none", alpha=0.8)
            circle.set_gid(f"point-{i}")
            ax.add_patch(circle)
        ax.set_aspect("equal")
        ax.autoscale_view()
        ax.margins(0.05)

        present = sorted(set(classes), key=lambda c: (c == UNKNOWN, c))
        handles = [Circle((0, 0), 1, facecolor=colors[c], edgecolor="none") for c in present]
        legend = ax.legend(handles, present, loc="best", frameon=False)
        for text, cls in zip(legend.get_texts(), present):
            text.set_gid(f"legend-{cls}")
        if title:
            ax.set_title(title)
        ax.set_xticks([])
        ax.set_yticks([])
        return _save_svg(fig, path)


def emit_heatmap_svg(
    matrix: np.ndarray, path: Union[str, Path], names: Optional[Sequence[str]] = None, title: str = ""
) -> Path:
    """Annotated heatmap of a square matrix with values in [0, 1].

    Cells carry ids ``cell-<i>-<j>`` and a two-decimal annotation; NaN
    cells are drawn light gray and annotated "n/a".
    Raises:
        PreconditionError: If the matrix is not square.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] == 0:
        raise PreconditionError(f"heatmap needs a nonempty square matrix, got shape {matrix.shape}")
    n = matrix.shape[0]
    names = list(names) if names is not None else [str(i) for i in range(n)]
    if len(names) != n:
        raise PreconditionError(f"{len(names)} names for a {n}x{n} matrix")
    norm = Normalize(vmin=0.0, vmax=1.0, clip=True)

    with rc_context(SVG_RC):
        fig = Figure(figsize=(1.0 + 0.8 * n, 1.0 + 0.8 * n))
        ax = fig.add_subplot()
        for i in range(n):
            for j in range(n):
                value = matrix[i, j]
                if np.isnan(value):
                    face, annotation, ink = "#dddddd", "n/a", "black"
                else:
                    face = HEATMAP_CMAP(norm(value))
                    annotation = f"{value:.2f}"
                    ink = "white" if norm(value) < 0.5 else "black"
                cell = Rectangle((j, i), 1, 1, facecolor=face, edgecolor="white")
                cell.set_gid(f"cell-{i}-{j}")
                ax.add_patch(cell)
                ax.text(j + 0.5, i + 0.5, annotation, ha="center", va="center", color=ink, fontsize=9)
        ax.set_xlim(0, n)
        ax.set_ylim(n, 0)
        ax.set_aspect("equal")
        ax.set_xticks([k + 0.5 for k in range(n)], labels=names, rotation=45, ha="right")
        ax.set_yticks([k + 0.5 for k in range(n)], labels=names)
        if title:
            ax.set_title(title)
        fig.tight_layout()
        return _save_svg(fig, path)
