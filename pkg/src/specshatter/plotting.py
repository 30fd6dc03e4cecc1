"""Static SVG figures for tail reports and pseudospectrum grids.

Figures are built on a bare :class:`~matplotlib.figure.Figure` (no pyplot
state), with a fixed hash salt, no date stamp and text kept as text, so the
same input always produces the same bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
from matplotlib.figure import Figure  # noqa: E402

import numpy as np  # noqa: E402

from .errors import MissingColumns  # noqa: E402
from .mc.stats import fit_loglog_slope  # noqa: E402
from .pseudospectrum import read_grid_csv  # noqa: E402
from .report import read_csv  # noqa: E402

TAIL_COLUMNS = ("eps", "empirical", "band", "theoretical")

_RC = {"svg.hashsalt": "specshatter", "svg.fonttype": "none", "path.simplify": False}


def _save(fig, path, description):
    with matplotlib.rc_context(_RC):
        fig.savefig(path, format="svg", metadata={"Date": None, "Description": description})
    return Path(path)


def _slope_from(meta_path, eps, emp, counts):
    if meta_path is not None and meta_path.exists():
        meta = json.loads(meta_path.read_text())
        slope = meta.get("slope")
        if isinstance(slope, (int, float)):
            return float(slope)
    try:
        return fit_loglog_slope(eps, emp, counts).slope
    except Exception:
        return None


def plot_loglog(report_csv, out_svg, title=None):
    """Empirical CDF, DKW band, bound curve and slope annotation on log-log axes."""
    meta, cols = read_csv(report_csv, required=TAIL_COLUMNS)
    eps = cols["eps"]
    emp, band, theo = cols["empirical"], cols["band"], cols["theoretical"]
    counts = cols.get("count")
    sidecar = Path(report_csv).with_suffix(".json")
    slope = _slope_from(sidecar, eps, emp, counts)

    fig = Figure(figsize=(6, 4.5))
    ax = fig.add_subplot()
    pos = emp > 0
    ax.loglog(eps[pos], emp[pos], "o-", label="empirical CDF")
    upper = emp + band
    ax.fill_between(eps, np.clip(emp - band, 1e-300, None), upper, alpha=0.25, label="DKW band")
    ax.loglog(eps, theo, "--", label="bound (clamped)")
    if slope is not None:
        ax.text(0.05, 0.92, f"slope={slope:.2f}", transform=ax.transAxes)
    ax.set_xlabel("eps")
    ax.set_ylabel("P[statistic <= eps]")
    if title:
        ax.set_title(title)
    ax.legend(loc="lower right")
    desc = " ".join(f"{k}={v}" for k, v in sorted(meta.items()))
    return _save(fig, out_svg, desc)


def plot_grid(grid_csv, out_svg, levels=None, title=None):
    """``log10 sigma_min`` contours with eigenvalue markers and coordinate labels."""
    try:
        grid = read_grid_csv(grid_csv)
    except (FileNotFoundError, KeyError, ValueError) as exc:
        raise MissingColumns(f"cannot read grid {grid_csv}: {exc}") from exc
    if grid.sigma_min.size == 0:
        raise MissingColumns(f"{grid_csv} is empty")
    logs = np.log10(np.maximum(grid.sigma_min, 1e-300))
    if levels is None:
        lo = max(np.floor(logs.min()), -12.0)
        hi = np.ceil(logs.max())
        levels = np.arange(lo, hi + 1.0)
        if levels.size < 2:
            levels = np.array([lo - 1.0, lo])

    fig = Figure(figsize=(6, 5))
    ax = fig.add_subplot()
    X, Y = np.meshgrid(grid.xs, grid.ys, indexing="ij")
    cs = ax.contour(X, Y, logs, levels=levels)
    ax.clabel(cs, fmt="%g")
    if grid.eigenvalues is not None:
        lam = grid.eigenvalues
        ax.plot(lam.real, lam.imag, "k+", markersize=9, label="eigenvalues")
        for z in lam:
            ax.annotate(f"({z.real:.3f}, {z.imag:.3f})", (z.real, z.imag), textcoords="offset points", xytext=(4, 4), fontsize=7)
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    ax.set_aspect("equal")
    if title:
        ax.set_title(title)
    desc = f"region={list(grid.region)} resolution={list(grid.resolution)}"
    return _save(fig, out_svg, desc)
