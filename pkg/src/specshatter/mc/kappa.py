"""Expected sums of eigenvalue condition numbers over a region."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..ensembles import EnsembleSpec, norm_samples, sample_matrix
from ..errors import ConfigError, DefectiveOrClustered, InapplicableBound, InsufficientTrials
from ..spectral import eigen_decompose, kappa_V_upper
from . import bounds as B
from .engine import concat_chunks
from .stats import dkw_band, mean_and_stderr

MIN_TRIALS = 100
QUANTILES = (0.5, 0.9, 0.99)


@dataclass(frozen=True)
class KappaExperimentConfig:
    """``real_interval`` is ``(a, b)``; ``complex_rect`` is ``(x0, x1, y0, y1)``
    with the band ``|Im z| < delta`` removed (both half-planes are used)."""

    ensemble: EnsembleSpec
    real_interval: tuple | None = (-2.0, 2.0)
    complex_rect: tuple | None = None
    delta: float = 0.1
    trials: int = 1000
    seed: int = 0
    eps1: float = 0.1
    eps2: float = 0.01

    def __post_init__(self):
        if self.trials < MIN_TRIALS:
            raise InsufficientTrials(f"need at least {MIN_TRIALS} trials, got {self.trials}")
        if self.real_interval is not None:
            a, b = (float(v) for v in self.real_interval)
            if not a < b:
                raise ConfigError("real_interval must satisfy a < b")
            object.__setattr__(self, "real_interval", (a, b))
        if self.complex_rect is not None:
            x0, x1, y0, y1 = (float(v) for v in self.complex_rect)
            if not (x0 < x1 and 0 <= y0 < y1):
                raise ConfigError("complex_rect must be (x0, x1, y0, y1) with x0 < x1 and 0 <= y0 < y1")
            object.__setattr__(self, "complex_rect", (x0, x1, y0, y1))
        if self.delta <= 0:
            raise ConfigError("delta must be positive")


@dataclass(frozen=True)
class KappaReport:
    trials: int
    real_mean: float | None
    real_stderr: float | None
    real_bound: float | None
    real_pass: bool | None
    complex_mean: float | None
    complex_stderr: float | None
    complex_bound: float | None
    complex_pass: bool | None
    quantiles: dict
    high_probability: dict
    skipped: int
    notes: dict = field(default_factory=dict)

    @property
    def ok(self):
        return (
            self.real_pass is not False
            and self.complex_pass is not False
            and self.high_probability.get("pass") is not False
        )


def _in_complex_region(lam, rect, delta):
    x0, x1, y0, y1 = rect
    ay = np.abs(lam.imag)
    return (lam.real > x0) & (lam.real < x1) & (ay > max(y0, delta)) & (ay < y1)


def kappa_samples(config: KappaExperimentConfig, threads=1):
    """Per trial: ``sum kappa`` over real eigenvalues in the interval,
    ``sum kappa^2`` over eigenvalues in the complex region, the three global
    sums and ``kappa_V``.  Trials whose spectrum is numerically clustered are
    marked with NaN."""
    spec, seed = config.ensemble, config.seed

    def chunk(start, count):
        out = np.full((count, 6), np.nan)
        for t in range(count):
            M = sample_matrix(spec, seed, start + t)
            try:
                S = eigen_decompose(M)
            except DefectiveOrClustered:
                continue
            lam, kap, real = S.eigenvalues, S.kappas, S.real_mask
            if config.real_interval is not None:
                a, b = config.real_interval
                sel = real & (lam.real > a) & (lam.real < b)
                out[t, 0] = math.fsum(kap[sel])
            if config.complex_rect is not None:
                sel = ~real & _in_complex_region(lam, config.complex_rect, config.delta)
                out[t, 1] = math.fsum(kap[sel] ** 2)
            out[t, 2] = math.fsum(kap[real])
            out[t, 3] = math.fsum(kap[~real] ** 2)
            out[t, 4] = kappa_V_upper(S)
            out[t, 5] = 1.0
        return out

    return concat_chunks(chunk, config.trials, threads, chunk=256)


def run_kappa_experiment(config: KappaExperimentConfig, constants=None, threads=1):
    constants = constants or B.BoundConstants()
    spec = config.ensemble
    if spec.is_complex:
        raise InapplicableBound("condition-number bounds are stated for real perturbations")
    if spec.gamma <= 0:
        raise InapplicableBound("gamma must be positive")
    data = kappa_samples(config, threads)
    ok = ~np.isnan(data[:, 5])
    skipped = int(np.count_nonzero(~ok))
    data = data[ok]
    gaussian = spec.family == "real_ginibre"
    notes = {}

    real_mean = real_se = real_bound = real_pass = None
    if config.real_interval is not None:
        a, b = config.real_interval
        real_mean, real_se = mean_and_stderr(data[:, 0])
        if gaussian:
            real_bound = B.real_kappa_mean_gaussian(spec.n, spec.gamma, b - a)
            notes["real_bound"] = "n / (2 gamma) * length"
        else:
            real_bound = B.real_kappa_mean_general(spec.n, spec.K, spec.gamma, b - a, constants)
            notes["real_bound"] = "C_RV K n^2 / (2 gamma) * length"
        real_pass = bool(real_mean <= real_bound + 3 * real_se)

    cm = cse = cbound = cpass = None
    if config.complex_rect is not None:
        cm, cse = mean_and_stderr(data[:, 1])
        if gaussian:
            cbound = B.nonreal_kappa_mean_gaussian(spec.n, spec.gamma, spec.norm_A, config.complex_rect, config.delta)
            notes["complex_bound"] = "sqrt(7e)/(4 pi) n^5/gamma^3 * quadrature, E||G|| <= 2"
        else:
            unit = EnsembleSpec(n=spec.n, family=spec.family, gamma=1.0)
            mean_norm = float(np.mean(norm_samples(unit, 1000, config.seed, stream=13)))
            cbound = B.nonreal_kappa_mean_general(
                spec.n, spec.K, spec.gamma, spec.norm_A, config.complex_rect, config.delta, mean_norm, constants
            )
            notes["complex_bound"] = f"C_complex_shift K^3 n^5/gamma^3 * quadrature, measured E||M|| = {mean_norm:.6g}"
        cpass = bool(cm <= cbound + 3 * cse)

    quantiles = {}
    for name, col in (("real_sum", 2), ("nonreal_sum", 3), ("kappa_V", 4)):
        quantiles[name] = {str(q): float(np.quantile(data[:, col], q)) for q in QUANTILES}

    hp = {}
    if gaussian:
        try:
            hb = B.kappa_high_probability_gaussian(spec.n, spec.gamma, spec.norm_A, config.eps1, config.eps2)
            exceed = {
                "real_sum": float(np.mean(data[:, 2] > hb.real_sum)),
                "nonreal_sum": float(np.mean(data[:, 3] > hb.nonreal_sum)),
                "kappa_V": float(np.mean(data[:, 4] > hb.kappa_V)),
            }
            union = float(
                np.mean((data[:, 2] > hb.real_sum) | (data[:, 3] > hb.nonreal_sum) | (data[:, 4] > hb.kappa_V))
            )
            band = dkw_band(data.shape[0])
            hp = {
                "applicable": True,
                "bounds": {"real_sum": hb.real_sum, "nonreal_sum": hb.nonreal_sum, "kappa_V": hb.kappa_V},
                "failure_probability": hb.failure_probability,
                "exceedance": exceed,
                "exceedance_any": union,
                "band": band,
                "pass": bool(union <= hb.failure_probability + band),
            }
        except InapplicableBound as exc:
            hp = {"applicable": False, "reason": str(exc)}
    else:
        hp = {"applicable": False, "reason": "only the Gaussian high-probability bounds carry explicit constants"}

    return KappaReport(
        trials=int(data.shape[0]),
        real_mean=real_mean,
        real_stderr=real_se,
        real_bound=real_bound,
        real_pass=real_pass,
        complex_mean=cm,
        complex_stderr=cse,
        complex_bound=cbound,
        complex_pass=cpass,
        quantiles=quantiles,
        high_probability=hp,
        skipped=skipped,
        notes=notes,
    )
