"""Deterministic SVG figures: pair clouds, metric heatmaps and triad clouds.

Figures are drawn with matplotlib's object API (no pyplot state) under a
fixed rc context so identical inputs give byte-identical SVG text.
"""
from __future__ import annotations

import io
from typing import Optional, Sequence

import matplotlib
from matplotlib.colors import LinearSegmentedColormap
from matplotlib.figure import Figure
from matplotlib.patches import Rectangle
import numpy as np

from .geometry import PairScore, ScoreMatrix
from .ordering import PairCloud

RED = "#d62728"
BLUE = "#1f77b4"

# odd table length so the midpoint (value 0) lands exactly on white
_DIVERGING = LinearSegmentedColormap.from_list("ordex_bwr", ["#0000ff", "#ffffff", "#ff0000"], N=257)

_RC = {
    "svg.hashsalt": "ordex",
    "svg.fonttype": "none",
    "font.family": "DejaVu Sans",
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def _to_svg(fig: Figure) -> str:
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
    return buf.getvalue()


def render_pair_svg(cloud: PairCloud, score: Optional[PairScore] = None) -> str:
    """Red/blue contribution scatter for one pair, annotated with the L-score."""
    a, b = cloud.names if all(cloud.names) else tuple(f"feature {i}" for i in cloud.pair)
    with matplotlib.rc_context(_RC):
        fig = Figure(figsize=(4.2, 4.0))
        ax = fig.add_subplot()
        ax.axhline(0.0, color="0.8", lw=0.6, zorder=0)
        ax.axvline(0.0, color="0.8", lw=0.6, zorder=0)
        if len(cloud.red):
            ax.scatter(cloud.red[:, 0], cloud.red[:, 1], s=10, c=RED, alpha=0.6, lw=0,
                       label=f"{a} added first", gid="red")
        if len(cloud.blue):
            ax.scatter(cloud.blue[:, 0], cloud.blue[:, 1], s=10, c=BLUE, alpha=0.6, lw=0,
                       label=f"{b} added first", gid="blue")
        ax.set_xlabel(f"{a} MSE reduction")
        ax.set_ylabel(f"{b} MSE reduction")
        if score is None:
            ax.text(0.5, 0.5, "insufficient data", transform=ax.transAxes, ha="center",
                    va="center", color="0.4")
        else:
            ax.set_title(f"L = {score.l_score:+.2f}   dominance = {score.dominance:+.2f}")
        if len(cloud.red) or len(cloud.blue):
            ax.legend(loc="best", frameon=False, fontsize=8)
        fig.tight_layout()
        return _to_svg(fig)


def render_heatmap_svg(values: np.ndarray, names: Sequence[str], title: str,
                       vmin: float = -1.0, vmax: float = 1.0, cmap: str = "bwr") -> str:
    """Upper triangle of a symmetric matrix, values printed to 2 decimals.

    The diagonal and lower triangle stay blank. Each drawn cell is its own
    rectangle with ``id="cell-<row>-<col>"``.
    """
    values = np.asarray(values, dtype=float)
    n = len(names)
    colormap = _DIVERGING if cmap == "bwr" else matplotlib.colormaps[cmap]
    span = vmax - vmin if vmax > vmin else 1.0
    with matplotlib.rc_context(_RC):
        side = max(3.0, 0.55 * n + 1.6)
        fig = Figure(figsize=(side + 0.8, side))
        ax = fig.add_subplot()
        for i in range(n):
            for j in range(i + 1, n):
                v = values[i, j]
                frac = min(max((v - vmin) / span, 0.0), 1.0) if np.isfinite(v) else 0.5
                color = colormap(frac)
                ax.add_patch(Rectangle((j, i), 1, 1, facecolor=color, edgecolor="white",
                                       lw=0.5, gid=f"cell-{i}-{j}"))
                ink = "white" if abs(frac - 0.5) > 0.35 else "black"
                label = f"{v:.2f}" if np.isfinite(v) else "n/a"
                ax.text(j + 0.5, i + 0.5, label, ha="center", va="center", fontsize=7, color=ink)
        ax.set_xlim(0, n)
        ax.set_ylim(n, 0)
        ax.set_aspect("equal")
        ax.set_xticks(np.arange(n) + 0.5, labels=list(names), rotation=45, ha="right")
        ax.set_yticks(np.arange(n) + 0.5, labels=list(names))
        ax.tick_params(length=0)
        for spine in ax.spines.values():
            spine.set_visible(False)
        sm = matplotlib.cm.ScalarMappable(norm=matplotlib.colors.Normalize(vmin, vmax), cmap=colormap)
        fig.colorbar(sm, ax=ax, fraction=0.046, pad=0.04)
        ax.set_title(title)
        fig.tight_layout()
        return _to_svg(fig)


def render_l_heatmap_svg(matrix: ScoreMatrix) -> str:
    return render_heatmap_svg(matrix.l_matrix(), matrix.feature_names, "L-score")


def render_triad_svg(points: np.ndarray, names: Sequence[str]) -> str:
    """3-D scatter of one triple's contributions, coloured by which feature entered last."""
    points = np.asarray(points, dtype=float)
    with matplotlib.rc_context(_RC):
        fig = Figure(figsize=(5.0, 4.6))
        ax = fig.add_subplot(projection="3d")
        if len(points):
            last = np.argmax(points, axis=1)
            for k, color in enumerate((RED, BLUE, "#2ca02c")):
                sel = last == k
                ax.scatter(points[sel, 0], points[sel, 1], points[sel, 2], s=8, c=color,
                           alpha=0.6, lw=0, label=f"largest: {names[k]}")
            ax.legend(loc="upper left", frameon=False, fontsize=7)
        ax.set_xlabel(f"{names[0]} MSE reduction")
        ax.set_ylabel(f"{names[1]} MSE reduction")
        ax.set_zlabel(f"{names[2]} MSE reduction")
        return _to_svg(fig)


def render_svg(obj, style: str = "auto", **kwargs) -> str:
    """Dispatch on input: a PairCloud draws a scatter, a ScoreMatrix an L-score heatmap."""
    if style in ("auto", "scatter") and isinstance(obj, PairCloud):
        return render_pair_svg(obj, kwargs.get("score"))
    if style in ("auto", "heatmap") and isinstance(obj, ScoreMatrix):
        return render_l_heatmap_svg(obj)
    if style == "heatmap":
        return render_heatmap_svg(obj, **kwargs)
    if style == "triad":
        return render_triad_svg(obj, **kwargs)
    raise TypeError(f"cannot render {type(obj).__name__} with style {style!r}")
