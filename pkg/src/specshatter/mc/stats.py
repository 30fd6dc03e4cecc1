"""Empirical CDFs, uniform confidence bands and log-log slope fits."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientTrials, TooFewPoints

ALPHA = 0.01


def dkw_band(trials, alpha=ALPHA):
    """Half-width ``sqrt(ln(2/alpha) / (2N))`` of the DKW band."""
    if trials < 1:
        raise InsufficientTrials("the DKW band needs at least one trial")
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * trials))


def ecdf_counts(samples, grid):
    """Number of samples ``<= g`` for each grid value ``g``."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    return np.searchsorted(x, np.asarray(grid, dtype=float), side="right").astype(np.int64)


def mean_and_stderr(x):
    x = np.asarray(x, dtype=float)
    N = x.size
    if N < 2:
        raise InsufficientTrials("need at least two samples for a standard error")
    mean = math.fsum(x) / N
    var = math.fsum((x - mean) ** 2) / (N - 1)
    return mean, math.sqrt(var / N)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float
    intercept: float
    points: int
    used: tuple  # indices of the qualifying grid points


def fit_loglog_slope(eps, cdf, counts=None, min_count=50, min_points=3):
    """Weighted least squares of ``log cdf`` against ``log eps``.

    With ``counts`` given, only points with at least ``min_count`` events are
    used and each is weighted by ``count / (1 - p)``, the inverse delta-method
    variance of ``log p``.  Without counts all positive points count equally.
    The standard error comes from the weighted residuals.

    Raises
    ------
    TooFewPoints
        If fewer than ``min_points`` grid points qualify.
    """
    eps = np.asarray(eps, dtype=float)
    p = np.asarray(cdf, dtype=float)
    if counts is None:
        keep = (p > 0) & (eps > 0)
        w = np.ones_like(p)
    else:
        c = np.asarray(counts, dtype=float)
        keep = (c >= min_count) & (p > 0) & (p < 1) & (eps > 0)
        w = np.where(keep, c / np.where(p < 1, 1.0 - p, 1.0), 0.0)
    idx = np.nonzero(keep)[0]
    if idx.size < min_points:
        raise TooFewPoints(f"{idx.size} qualifying points, need {min_points}")
    x = np.log(eps[idx])
    y = np.log(p[idx])
    w = w[idx]
    W = math.fsum(w)
    xm = math.fsum(w * x) / W
    ym = math.fsum(w * y) / W
    sxx = math.fsum(w * (x - xm) ** 2)
    slope = math.fsum(w * (x - xm) * (y - ym)) / sxx
    intercept = ym - slope * xm
    resid = y - (intercept + slope * x)
    dof = idx.size - 2
    s2 = math.fsum(w * resid**2) / dof if dof > 0 else 0.0
    stderr = math.sqrt(s2 / sxx)
    return SlopeFit(float(slope), float(stderr), float(intercept), int(idx.size), tuple(int(i) for i in idx))
