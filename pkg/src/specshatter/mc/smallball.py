"""Anticoncentration of bilinear forms ``X^T Z Y + X^T U + V^T Y + W`` and the
small-ball tail of ``sigma_k(V Y)`` for rectangular ``Y``.

Samples are vectors rather than matrices, so streams are keyed by
``(seed, chunk index)`` with a fixed chunk size; outputs therefore do not
depend on how chunks are spread over threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from ..ensembles import DENSITY_BOUNDS, draw_entries, trial_rng
from ..errors import ConfigError, InsufficientTrials
from . import bounds as B
from .engine import map_chunks
from .stats import ALPHA
from .tails import summarize_tail

SAMPLE_CHUNK = 8192
BIN_WIDTH = 0.01
_STREAM_FORM = 21
_STREAM_RECT = 22


@dataclass(frozen=True)
class QuadFormSpec:
    """Bilinear form with ``X, Y`` of shape ``n x k`` and unit-variance entries of ``family``."""

    Z: np.ndarray
    k: int = 1
    U: np.ndarray | None = None
    V: np.ndarray | None = None
    W: np.ndarray | None = None
    family: str = "real_ginibre"

    def __post_init__(self):
        Z = np.array(self.Z, dtype=float)
        if Z.ndim != 2 or Z.shape[0] != Z.shape[1]:
            raise ConfigError("Z must be square")
        object.__setattr__(self, "Z", Z)
        n, k = Z.shape[0], int(self.k)
        object.__setattr__(self, "k", k)
        if not 1 <= k <= n:
            raise ConfigError("k must satisfy 1 <= k <= n")
        for name, shape in (("U", (n, k)), ("V", (n, k)), ("W", (k, k))):
            val = getattr(self, name)
            if val is not None:
                val = np.array(val, dtype=float)
                if val.shape != shape:
                    raise ConfigError(f"{name} must have shape {shape}")
                object.__setattr__(self, name, val)
        if self.family not in DENSITY_BOUNDS or self.family == "complex_ginibre":
            raise ConfigError(f"unsupported entry family {self.family!r}")

    @property
    def n(self):
        return self.Z.shape[0]

    @property
    def K(self):
        return DENSITY_BOUNDS[self.family]


def sample_forms(spec: QuadFormSpec, samples, seed, threads=1):
    """``samples`` draws of ``q(X, Y)``, shape ``(samples, k, k)``."""
    n, k = spec.n, spec.k
    is_identity = np.array_equal(spec.Z, np.eye(n))

    def chunk(start, count):
        rng = trial_rng(seed, start // SAMPLE_CHUNK, stream=_STREAM_FORM)
        X = draw_entries(rng, spec.family, (count, n, k))
        Y = draw_entries(rng, spec.family, (count, n, k))
        ZY = Y if is_identity else np.matmul(spec.Z, Y)
        q = np.matmul(X.transpose(0, 2, 1), ZY)
        if spec.U is not None:
            q += np.matmul(X.transpose(0, 2, 1), spec.U)
        if spec.V is not None:
            q += np.matmul(spec.V.T, Y)
        if spec.W is not None:
            q += spec.W
        return q

    parts = map_chunks(chunk, samples, threads, chunk=SAMPLE_CHUNK)
    return np.concatenate(parts) if parts else np.empty((0, k, k))


def density_bound(spec: QuadFormSpec, constants=None):
    """Gaussian bound for Gaussian entries, otherwise the general bound."""
    constants = constants or B.BoundConstants()
    if spec.family == "real_ginibre":
        return B.quadratic_form_density_gaussian(spec.Z, spec.k), "gaussian"
    return B.quadratic_form_density_general(spec.Z, spec.k, spec.K, constants), "general"


def histogram_sup_density(x, width=BIN_WIDTH, alpha=ALPHA):
    """Largest histogram density and a Bonferroni upper band for it.

    Bin averages never exceed the sup of the density, so only sampling error
    needs a band: ``z * sqrt(f / (N h))`` with ``z`` at level ``alpha / m``
    over the ``m`` occupied bins.
    """
    x = np.asarray(x, dtype=float)
    N = x.size
    idx = np.floor(x / width).astype(np.int64)
    _, counts = np.unique(idx, return_counts=True)
    m = counts.size
    f = counts.max() / (N * width)
    z = float(stats.norm.isf(alpha / (2 * m)))
    return float(f), z * math.sqrt(f / (N * width)), int(m)


def ball_volume(dim, radius):
    return math.pi ** (dim / 2) / math.gamma(dim / 2 + 1) * radius**dim


def smallball_density(q, rho, centers, alpha=ALPHA):
    """Best ``P[||q - c||_F <= rho] / vol`` over candidate centres, with a band."""
    N, k, _ = q.shape
    flat = q.reshape(N, -1)
    vol = ball_volume(k * k, rho)
    best = (-1.0, None, 0)
    for c in centers:
        cnt = int(np.count_nonzero(np.linalg.norm(flat - np.asarray(c).ravel(), axis=1) <= rho))
        if cnt > best[0]:
            best = (cnt, c, cnt)
    cnt = best[0]
    p = cnt / N
    z = float(stats.norm.isf(alpha / (2 * len(centers))))
    band = z * math.sqrt(max(p, 1.0 / N) * (1 - p) / N) / vol
    return p / vol, band, best[1], cnt


@dataclass(frozen=True)
class SmallBallReport:
    samples: int
    bound: float
    bound_kind: str
    vacuous: bool
    estimate: float
    band: float
    passed: bool | None
    method: str
    details: dict = field(default_factory=dict)
    rectangular: object = None  # TailReport of the rectangular small-ball check

    @property
    def ok(self):
        rect_ok = self.rectangular is None or self.rectangular.ok
        return self.passed is not False and rect_ok


def run_smallball_experiment(spec: QuadFormSpec, samples, seed, constants=None, threads=1, rho=None, alpha=ALPHA):
    constants = constants or B.BoundConstants()
    if samples < 1000:
        raise InsufficientTrials("the density estimate needs at least 1000 samples")
    bound, kind = density_bound(spec, constants)
    vacuous = not math.isfinite(bound)
    q = sample_forms(spec, samples, seed, threads)
    details = {}
    if spec.k == 1:
        est, band, bins = histogram_sup_density(q[:, 0, 0], BIN_WIDTH, alpha)
        method = f"histogram sup, bin width {BIN_WIDTH}"
        details["bins"] = bins
    else:
        if rho is None:
            rho = 0.25 * float(np.median(np.linalg.norm(q.reshape(samples, -1), axis=1)))
        W = np.zeros((spec.k, spec.k)) if spec.W is None else spec.W
        centers = [W, np.median(q, axis=0)]
        est, band, c, cnt = smallball_density(q, rho, centers, alpha)
        method = f"Frobenius ball probability / volume, radius {rho:.6g}"
        details.update({"rho": rho, "center": np.asarray(c).tolist(), "count": cnt})
    passed = None if vacuous else bool(est <= bound + band)
    if vacuous:
        details["vacuous"] = "Z has too small a rank for the bound to have content"
    return SmallBallReport(samples, bound, kind, vacuous, est, band, passed, method, details)


# -- rectangular small-ball ---------------------------------------------------


@dataclass(frozen=True)
class RectangularConfig:
    n: int
    j: int
    k: int = 1
    family: str = "real_ginibre"
    s_grid: tuple = ()
    trials: int = 100_000
    seed: int = 0
    slope_range: tuple | None = None
    projector: np.ndarray | None = None  # j x n with orthonormal rows; default takes the first j coordinates

    def __post_init__(self):
        if not 1 <= self.k <= self.j <= self.n:
            raise ConfigError("needs 1 <= k <= j <= n")
        if not self.s_grid or any(s <= 0 for s in self.s_grid):
            raise ConfigError("s_grid must be a nonempty list of positive values")
        object.__setattr__(self, "s_grid", tuple(float(s) for s in self.s_grid))
        if self.projector is not None:
            P = np.array(self.projector, dtype=float)
            if P.shape != (self.j, self.n) or not np.allclose(P @ P.T, np.eye(self.j), atol=1e-10):
                raise ConfigError("projector must be j x n with orthonormal rows")
            object.__setattr__(self, "projector", P)


def rectangular_samples(config: RectangularConfig, threads=1):
    n, j, k = config.n, config.j, config.k

    def chunk(start, count):
        rng = trial_rng(config.seed, start // SAMPLE_CHUNK, stream=_STREAM_RECT)
        Y = draw_entries(rng, config.family, (count, n, k))
        VY = Y[:, :j, :] if config.projector is None else np.matmul(config.projector, Y)
        if k == 1:
            return np.linalg.norm(VY[:, :, 0], axis=1)
        return np.linalg.svd(VY, compute_uv=False)[:, k - 1]

    parts = map_chunks(chunk, config.trials, threads, chunk=SAMPLE_CHUNK)
    return np.concatenate(parts)


def run_rectangular_experiment(config: RectangularConfig, constants=None, threads=1):
    constants = constants or B.BoundConstants()
    K = DENSITY_BOUNDS[config.family]
    samples = rectangular_samples(config, threads)

    def theo(s, c=constants):
        return B.rectangular_smallball(config.j, config.k, K, s, c)

    big = constants.escalated(10.0)
    rep = summarize_tail(
        samples,
        config.s_grid,
        config.trials,
        theo,
        slope_range=config.slope_range,
        escalated=lambda s: theo(s, big),
    )
    notes = {
        "statistic": f"sigma_{config.k}(V Y), V a {config.j} x {config.n} projector",
        "C_jk": B.rectangular_smallball_constant(config.j, config.k, K, constants),
        "expected_exponent": config.j - config.k + 1,
    }
    return type(rep)(**{**rep.__dict__, "notes": notes})


