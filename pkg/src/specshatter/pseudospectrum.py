"""Geometry of the epsilon-pseudospectrum ``{z : sigma_min(z - M) <= eps}``.

Grid nodes are lower-left cell corners, ``x_i = x0 + (x1 - x0) * i / nx``,
so a grid of resolution ``2 nx`` contains every node of resolution ``nx``.
Arrays are indexed ``[i, j]`` with ``i`` along the real axis; flattened
output is row-major in that order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateRegion, RankTooHigh, ResolutionTooCoarse
from .report import read_csv, write_csv, write_json
from .spectral import _check_square, default_tau_real, eigen_decompose

CHUNK = 8192


def sigma_min_at(M, z):
    M = np.asarray(M)
    n = M.shape[0]
    return float(np.linalg.svd(z * np.eye(n) - M, compute_uv=False)[-1])


def sigma_min_many(M, zs):
    """``sigma_min(z - M)`` for every ``z`` in ``zs`` (any shape)."""
    M = np.asarray(M)
    n = M.shape[0]
    zs = np.asarray(zs)
    flat = zs.reshape(-1)
    out = np.empty(flat.shape[0])
    eye = np.eye(n)
    dtype = complex if (np.iscomplexobj(flat) or np.iscomplexobj(M)) else float
    for lo in range(0, flat.shape[0], CHUNK):
        z = flat[lo : lo + CHUNK].astype(dtype)
        stack = z[:, None, None] * eye - M
        out[lo : lo + CHUNK] = np.linalg.svd(stack, compute_uv=False)[:, -1]
    return out.reshape(zs.shape)


def _check_region(region, resolution):
    x0, x1, y0, y1 = (float(v) for v in region)
    nx, ny = (int(v) for v in resolution)
    if not (x1 > x0 and y1 > y0):
        raise DegenerateRegion(f"region {region} has empty interior")
    if nx < 2 or ny < 2:
        raise DegenerateRegion("resolution must be at least 2x2")
    return (x0, x1, y0, y1), (nx, ny)


def grid_nodes(region, resolution):
    (x0, x1, y0, y1), (nx, ny) = _check_region(region, resolution)
    xs = x0 + (x1 - x0) * np.arange(nx) / nx
    ys = y0 + (y1 - y0) * np.arange(ny) / ny
    return xs, ys


@dataclass(frozen=True)
class PseudospectrumGrid:
    region: tuple
    resolution: tuple
    xs: np.ndarray
    ys: np.ndarray
    sigma_min: np.ndarray  # shape (nx, ny)
    eigenvalues: np.ndarray = field(default=None)

    def points(self):
        return self.xs[:, None] + 1j * self.ys[None, :]

    def mask(self, eps):
        return self.sigma_min <= eps

    def count(self, eps):
        return int(np.count_nonzero(self.mask(eps)))

    def to_csv(self, path, meta=None):
        """Write ``re, im, sigma_min`` rows plus a ``.json`` sidecar."""
        path = Path(path)
        rows = (
            {"re": float(x), "im": float(y), "sigma_min": float(self.sigma_min[i, j])}
            for i, x in enumerate(self.xs)
            for j, y in enumerate(self.ys)
        )
        write_csv(path, rows, ("re", "im", "sigma_min"), meta)
        sidecar = {
            "region": list(self.region),
            "resolution": list(self.resolution),
            "ordering": "row-major over (re index, im index)",
        }
        if self.eigenvalues is not None:
            sidecar["eigenvalues"] = [[float(l.real), float(l.imag)] for l in self.eigenvalues]
        write_json(path.with_suffix(".json"), sidecar, meta)
        return path


def grid_sigma_min(M, region, resolution):
    M = _check_square(M)
    region, resolution = _check_region(region, resolution)
    xs, ys = grid_nodes(region, resolution)
    zs = xs[:, None] + 1j * ys[None, :]
    values = sigma_min_many(M, zs)
    return PseudospectrumGrid(
        region=region,
        resolution=resolution,
        xs=xs,
        ys=ys,
        sigma_min=values,
        eigenvalues=np.linalg.eigvals(M),
    )


def read_grid_csv(path):
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    _, cols = read_csv(path, required=("re", "im", "sigma_min"))
    nx, ny = meta["resolution"]
    re = cols["re"].reshape(nx, ny)
    im = cols["im"].reshape(nx, ny)
    eig = meta.get("eigenvalues")
    return PseudospectrumGrid(
        region=tuple(meta["region"]),
        resolution=(nx, ny),
        xs=re[:, 0].copy(),
        ys=im[0, :].copy(),
        sigma_min=cols["sigma_min"].reshape(nx, ny),
        eigenvalues=None if eig is None else np.array([complex(a, b) for a, b in eig]),
    )


# -- real axis ---------------------------------------------------------------


def _bisect_boundary(f, lo, hi, inside_lo, tol):
    """Shrink ``[lo, hi]`` around the sign change of ``f`` until width <= tol."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if (f(mid) <= 0) == inside_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def real_axis_intervals(M, eps, interval, rel_tol=1e-3):
    """Maximal subintervals of ``[a, b]`` on which ``sigma_min(x - M) <= eps``.

    The scan advances by ``max(eps/4, sigma_min(x) - eps)``.  Since
    ``sigma_min`` is 1-Lipschitz in ``x`` the long steps never skip a point
    of the pseudospectrum; boundaries are then bisected to ``rel_tol * eps``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    a, b = (float(v) for v in interval)
    if not a < b:
        raise ValueError("interval must satisfy a < b")
    M = _check_square(M)
    n = M.shape[0]
    eye = np.eye(n)

    def f(x):
        return float(np.linalg.svd(x * eye - M, compute_uv=False)[-1]) - eps

    tol = rel_tol * eps
    step_min = eps / 4.0
    intervals = []
    x = a
    fx = f(x)
    start = a if fx <= 0 else None
    while x < b:
        step = max(step_min, fx) if fx > 0 else step_min
        x_next = min(b, x + step)
        f_next = f(x_next)
        inside, inside_next = fx <= 0, f_next <= 0
        if inside != inside_next:
            edge = _bisect_boundary(f, x, x_next, inside, tol)
            if inside:
                intervals.append((start, edge))
                start = None
            else:
                start = edge
        x, fx = x_next, f_next
    if start is not None:
        intervals.append((start, b))
    return intervals


def real_axis_eps_length(M, eps, interval, rel_tol=1e-3):
    """Lebesgue measure of the pseudospectrum on ``[a, b]``."""
    return math.fsum(hi - lo for lo, hi in real_axis_intervals(M, eps, interval, rel_tol))


# -- complex area ------------------------------------------------------------


def _boundary_cells(inside):
    b = np.zeros_like(inside)
    b[1:, :] |= inside[1:, :] != inside[:-1, :]
    b[:-1, :] |= inside[:-1, :] != inside[1:, :]
    b[:, 1:] |= inside[:, 1:] != inside[:, :-1]
    b[:, :-1] |= inside[:, :-1] != inside[:, 1:]
    return b


@dataclass(frozen=True)
class AreaResult:
    area: float  # strip excluded
    area_with_strip: float
    strip: float
    windows: tuple
    edge_touched: bool


def _window_area(M, eps, window, resolution, subdivide, strip, sub=4):
    """Cell-count area of the pseudospectrum in one rectangle.

    Returns ``(area_excluding_strip, area_including_strip, edge_touched)``.
    """
    x0, x1, y0, y1 = window
    nx = ny = int(resolution)
    hx, hy = (x1 - x0) / nx, (y1 - y0) / ny
    xc = x0 + hx * (np.arange(nx) + 0.5)
    yc = y0 + hy * (np.arange(ny) + 0.5)
    values = sigma_min_many(M, xc[:, None] + 1j * yc[None, :])
    inside = values <= eps
    edge = bool(inside[0, :].any() or inside[-1, :].any() or inside[:, 0].any() or inside[:, -1].any())
    frac = inside.astype(float)
    if subdivide:
        bi, bj = np.nonzero(_boundary_cells(inside))
        if bi.size:
            offs = (np.arange(sub) + 0.5) / sub - 0.5
            sx = xc[bi][:, None, None] + hx * offs[None, :, None]
            sy = yc[bj][:, None, None] + hy * offs[None, None, :]
            sub_vals = sigma_min_many(M, sx + 1j * sy)
            frac[bi, bj] = (sub_vals <= eps).reshape(bi.size, -1).mean(axis=1)
    cell = hx * hy
    keep = np.abs(yc)[None, :] > strip
    per_cell = frac * cell
    with_strip = math.fsum(per_cell.ravel())
    without = math.fsum(np.where(keep, per_cell, 0.0).ravel())
    return without, with_strip, edge


def default_strip(eigenvalues, tau_real):
    """Half-width of the excluded band around the real axis.

    Half the smallest imaginary part among non-real eigenvalues, never below
    ``tau_real``; infinite when the spectrum is real.  Fixing the band as
    ``eps -> 0`` keeps the disks around real eigenvalues out of the area.
    """
    lam = np.asarray(eigenvalues)
    im = np.abs(lam.imag)
    nonreal = im > tau_real
    if not nonreal.any():
        return math.inf
    return max(float(tau_real), 0.5 * float(im[nonreal].min()))


def _merge_windows(windows):
    windows = [list(w) for w in windows]
    merged = True
    while merged:
        merged = False
        out = []
        while windows:
            w = windows.pop()
            for o in out:
                if w[0] <= o[1] and o[0] <= w[1] and w[2] <= o[3] and o[2] <= w[3]:
                    o[0], o[1] = min(o[0], w[0]), max(o[1], w[1])
                    o[2], o[3] = min(o[2], w[2]), max(o[3], w[3])
                    merged = True
                    break
            else:
                out.append(w)
        windows = out
    return sorted(tuple(float(v) for v in w) for w in windows)


def complex_eps_area(
    M,
    eps,
    region=None,
    resolution=512,
    subdivide=True,
    strip=None,
    tau_real=None,
    detail=False,
):
    """Area of the pseudospectrum off the real axis.

    With ``region=None`` the area is measured in square windows around each
    non-real eigenvalue, sized from the eigenvalue's condition number and
    doubled until the pseudospectrum no longer touches the window edge.  For
    real input only the upper half-plane is gridded and the result doubled.
    Cells whose centre satisfies ``|Im z| <= strip`` are excluded.

    Raises
    ------
    ResolutionTooCoarse
        If a cell is wider than ``eps / 3``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    M = _check_square(M)
    if tau_real is None:
        tau_real = default_tau_real(M)
    resolution = int(resolution[0] if np.ndim(resolution) else resolution)
    if resolution < 2:
        raise DegenerateRegion("resolution must be at least 2")
    real_input = not np.iscomplexobj(M)

    if region is not None:
        (x0, x1, y0, y1), _ = _check_region(region, (resolution, resolution))
        cell = max((x1 - x0), (y1 - y0)) / resolution
        if eps < 3 * cell:
            raise ResolutionTooCoarse(
                f"eps={eps:g} spans fewer than 3 cells of width {cell:g}"
            )
        lam = np.linalg.eigvals(M)
        if strip is None:
            strip = default_strip(lam, tau_real)
        a, a_all, edge = _window_area(M, eps, (x0, x1, y0, y1), resolution, subdivide, strip)
        res = AreaResult(a, a_all, float(strip), ((x0, x1, y0, y1),), edge)
        return res if detail else res.area

    S = eigen_decompose(M, tau_real=tau_real)
    if strip is None:
        strip = default_strip(S.eigenvalues, tau_real)
    targets = [
        (lam, kap)
        for lam, kap, isreal in zip(S.eigenvalues, S.kappas, S.real_mask)
        if not isreal and (lam.imag > 0 or not real_input)
    ]
    if not targets:
        res = AreaResult(0.0, 0.0, float(strip), (), False)
        return res if detail else 0.0

    half_widths = [1.5 * kap * eps + eps for _, kap in targets]
    total = total_all = 0.0
    used = []
    edge_any = False
    for _attempt in range(6):
        windows = _merge_windows(
            (lam.real - h, lam.real + h, lam.imag - h, lam.imag + h)
            for (lam, _), h in zip(targets, half_widths)
        )
        parts = []
        edge_any = False
        for w in windows:
            cell = max(w[1] - w[0], w[3] - w[2]) / resolution
            if eps < 3 * cell:
                raise ResolutionTooCoarse(
                    f"eps={eps:g} spans fewer than 3 cells of width {cell:g}"
                )
            a, a_all, edge = _window_area(M, eps, w, resolution, subdivide, strip)
            parts.append((a, a_all))
            edge_any |= edge
        if not edge_any:
            break
        half_widths = [2 * h for h in half_widths]
    total = math.fsum(p[0] for p in parts)
    total_all = math.fsum(p[1] for p in parts)
    used = tuple(windows)
    if real_input:
        total, total_all = 2 * total, 2 * total_all
    res = AreaResult(total, total_all, float(strip), used, edge_any)
    return res if detail else res.area


@dataclass(frozen=True)
class LimitingRatios:
    eps: tuple
    real_ratios: tuple
    complex_ratios: tuple
    real_target: float
    complex_target: float
    real_converging: bool
    complex_converging: bool


def _trend(ratios, target):
    if not ratios:
        return True
    errs = [abs(r - target) for r in ratios]
    return errs[-1] <= min(errs) + 1e-12 * max(1.0, abs(target))


def limiting_ratios(M, eps_list=(1e-3, 1e-4, 1e-5, 1e-6), resolution=512, subdivide=True, rel_tol=1e-3):
    """``length/eps`` and ``area/eps^2`` against the spectral targets
    ``2 * sum_real kappa`` and ``pi * sum_nonreal kappa^2``."""
    eps_list = [float(e) for e in eps_list]
    if any(e <= 0 for e in eps_list) or any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be positive and strictly decreasing")
    M = _check_square(M)
    S = eigen_decompose(M)
    real_target = 2.0 * math.fsum(S.kappas[S.real_mask])
    complex_target = math.pi * math.fsum(S.kappas[~S.real_mask] ** 2)
    bound = float(np.linalg.norm(M, 2))
    real_ratios, complex_ratios = [], []
    for eps in eps_list:
        pad = bound + 2 * eps
        real_ratios.append(real_axis_eps_length(M, eps, (-pad, pad), rel_tol) / eps)
        complex_ratios.append(complex_eps_area(M, eps, None, resolution, subdivide) / eps**2)
    return LimitingRatios(
        eps=tuple(eps_list),
        real_ratios=tuple(real_ratios),
        complex_ratios=tuple(complex_ratios),
        real_target=real_target,
        complex_target=complex_target,
        real_converging=_trend(real_ratios, real_target),
        complex_converging=_trend(complex_ratios, complex_target),
    )


# -- bounded-rank inclusion --------------------------------------------------


@dataclass(frozen=True)
class InclusionResult:
    holds: bool
    max_violation: float
    points: int


def rank_inclusion_check(A, r, M_pert, grid, atol=1e-10):
    """Check ``sigma_min(z - B - M) <= sigma_min(z - B) + atol`` with ``B = A (x) I_r``.

    ``grid`` is an array of complex points or a ``(region, resolution)`` pair.
    """
    A = _check_square(A)
    r = int(r)
    if r < 1:
        raise ValueError("r must be >= 1")
    B = np.kron(A, np.eye(r))
    M_pert = np.asarray(M_pert)
    if M_pert.shape != B.shape:
        raise ValueError(f"perturbation must be {B.shape}, got {M_pert.shape}")
    s = np.linalg.svd(M_pert, compute_uv=False)
    if s[0] > 0 and s[r - 1] > 1e-10 * s[0]:
        raise RankTooHigh(f"perturbation has numerical rank >= {r}")
    if isinstance(grid, tuple) and len(grid) == 2 and np.ndim(grid[0]) == 1 and len(grid[0]) == 4:
        xs, ys = grid_nodes(*grid)
        zs = (xs[:, None] + 1j * ys[None, :]).ravel()
    else:
        zs = np.asarray(grid).ravel()
    base = sigma_min_many(B, zs)
    pert = sigma_min_many(B + M_pert, zs)
    excess = pert - base
    worst = float(excess.max()) if excess.size else 0.0
    return InclusionResult(bool(worst <= atol), max(0.0, worst), int(zs.size))
