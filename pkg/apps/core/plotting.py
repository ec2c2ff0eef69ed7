"""Deterministic SVG figures for RD curves, strength sweeps and complexity scatters."""

import io
import logging
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import pandas as pd  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

from .exceptions import SchemaMismatchError  # noqa: E402

logger = logging.getLogger("clipforge.core")

FIGSIZE = (6.4, 4.8)
SVG_RC = {"svg.hashsalt": "clipforge", "svg.fonttype": "none", "path.simplify": False}

RD_COLUMNS = ("rate_kbps", "quality")
SWEEP_COLUMNS = ("psnr_level", "bitrate", "strength", "final_psnr")
SCATTER_COLUMNS = ("se_mean", "te_mean", "seconds")


def _require(frame: pd.DataFrame, columns, kind: str):
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise SchemaMismatchError(f"{kind} plot input lacks columns {missing}")


def rd_figure(frame: pd.DataFrame) -> Figure:
    """One line per `series` value (or a single line), rate on a log axis."""
    _require(frame, RD_COLUMNS, "rd")
    fig = Figure(figsize=FIGSIZE)
    ax = fig.add_subplot()
    groups = frame.groupby("series", sort=True) if "series" in frame.columns else [("curve", frame)]
    for name, group in groups:
        group = group.sort_values("rate_kbps")
        ax.plot(group["rate_kbps"].to_numpy(), group["quality"].to_numpy(), marker="o", label=str(name))
    ax.set_xscale("log")
    ax.set_xlabel("bitrate (kbps)")
    metric = frame["metric"].iloc[0] if "metric" in frame.columns and len(frame) else "quality"
    ax.set_ylabel(str(metric))
    if "series" in frame.columns:
        ax.legend()
    return fig


def sweep_figure(frame: pd.DataFrame, psnr_level: Optional[float] = None) -> Figure:
    """Final PSNR against strength, one line per bitrate, at one degradation level."""
    _require(frame, SWEEP_COLUMNS, "sweep")
    levels = sorted(frame["psnr_level"].unique())
    level = levels[0] if psnr_level is None else psnr_level
    rows = frame[frame["psnr_level"] == level]
    if rows.empty:
        raise SchemaMismatchError(f"sweep has no rows at psnr_level {level}; levels are {levels}")
    fig = Figure(figsize=FIGSIZE)
    ax = fig.add_subplot()
    for bitrate, group in rows.groupby("bitrate", sort=True):
        group = group.sort_values("strength")
        ax.plot(group["strength"].to_numpy(), group["final_psnr"].to_numpy(), marker="o", label=f"{bitrate:g} kbps")
    ax.set_xlabel("denoiser strength")
    ax.set_ylabel("PSNR vs clean source (dB)")
    ax.set_title(f"input degraded to {level:g} dB")
    ax.legend()
    return fig


def scatter_figure(frame: pd.DataFrame) -> Figure:
    """Encode seconds against spatial and temporal energy."""
    _require(frame, SCATTER_COLUMNS, "scatter")
    fig = Figure(figsize=(2 * FIGSIZE[0], FIGSIZE[1]))
    for index, column in enumerate(("se_mean", "te_mean"), start=1):
        ax = fig.add_subplot(1, 2, index)
        ax.scatter(frame[column].to_numpy(), frame["seconds"].to_numpy(), s=8)
        ax.set_yscale("log")
        ax.set_xlabel(column)
        ax.set_ylabel("encode seconds")
    return fig


def render_svg(fig: Figure) -> bytes:
    buffer = io.BytesIO()
    with matplotlib.rc_context(SVG_RC):
        fig.savefig(buffer, format="svg", metadata={"Date": None, "Creator": None})
    logger.debug(f"rendered SVG with {len(fig.axes)} axes, {buffer.tell()} bytes")
    return buffer.getvalue()


PLOTS = {"rd": rd_figure, "sweep": sweep_figure, "scatter": scatter_figure}
