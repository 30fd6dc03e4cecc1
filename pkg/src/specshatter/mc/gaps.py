"""Minimum eigenvalue gap and ``Im_min`` tails, cross-checked by the disk certificate."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..ensembles import EnsembleSpec, moment_from_norms, norm_samples, sample_batch, sample_matrix
from ..errors import ConfigError, InapplicableBound, InsufficientTrials
from ..spectral import batch_gap_stats, default_tau_real, gap_certificate_check
from . import bounds as B
from .engine import concat_chunks
from .stats import ALPHA
from .tails import summarize_tail

MIN_TRIALS = 100


@dataclass(frozen=True)
class GapExperimentConfig:
    ensemble: EnsembleSpec
    s_grid: tuple
    trials: int = 10_000
    seed: int = 0
    delta_grid: tuple | None = None  # for Im_min; defaults to s_grid
    bound: str = "gaussian"  # gaussian | general
    R: float = 3.0  # radius for the general bound
    alpha: float = ALPHA
    norm_trials: int = 2000

    def __post_init__(self):
        s = tuple(float(v) for v in self.s_grid)
        if not s or any(v <= 0 for v in s):
            raise ConfigError("s_grid must be a nonempty list of positive values")
        object.__setattr__(self, "s_grid", s)
        d = s if self.delta_grid is None else tuple(float(v) for v in self.delta_grid)
        object.__setattr__(self, "delta_grid", d)
        if self.trials < MIN_TRIALS:
            raise InsufficientTrials(f"need at least {MIN_TRIALS} trials, got {self.trials}")
        if self.ensemble.n < 2:
            raise ConfigError("gaps need n >= 2")
        if self.bound not in ("gaussian", "general"):
            raise ConfigError("bound must be 'gaussian' or 'general'")


@dataclass(frozen=True)
class GapReport:
    gap: object  # TailReport for P[gap <= s]
    im_min: object  # TailReport for P[Im_min <= delta]
    flagged: int
    certificate_failures: int
    certificate_checked: int
    notes: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.gap.ok and self.im_min.ok and self.certificate_failures == 0


def gap_samples(config: GapExperimentConfig, threads=1):
    """Per-trial ``gap``, ``gap_real`` and ``Im_min`` with the closest pair."""
    spec, seed = config.ensemble, config.seed

    def chunk(start, count):
        X = sample_batch(spec, seed, start, count)
        lam = np.linalg.eigvals(X)
        tau = np.array([default_tau_real(x) for x in X])
        gap, gap_real, im_min, pi, pj = batch_gap_stats(lam, tau)
        li = lam[np.arange(count), pi]
        lj = lam[np.arange(count), pj]
        return gap, gap_real, im_min, li, lj

    return concat_chunks(chunk, config.trials, threads)


def certificate_cross_check(config: GapExperimentConfig, gap, li, lj, threshold):
    """Run the two-eigenvalue certificate on every trial with ``gap <= threshold``.

    The disk is centred at the midpoint of the closest pair with radius
    ``gap / 2`` inflated by ``1e-9`` relative so both eigenvalues lie inside.
    """
    flagged = np.nonzero(gap <= threshold)[0]
    failures = checked = 0
    for t in flagged:
        M = sample_matrix(config.ensemble, config.seed, int(t))
        z = 0.5 * (li[t] + lj[t])
        r = 0.5 * gap[t] * (1 + 1e-9) + 1e-15
        res = gap_certificate_check(M, z, r)
        checked += int(res.count_in_disk >= 2)
        failures += int(not res.holds)
    return int(flagged.size), failures, checked


def run_gap_experiment(config: GapExperimentConfig, constants=None, threads=1):
    constants = constants or B.BoundConstants()
    spec = config.ensemble
    if spec.is_complex:
        raise InapplicableBound("gap bounds are stated for real perturbations")
    gap, gap_real, im_min, li, lj = gap_samples(config, threads)
    notes = {"statistics": "gap, gap_real and Im_min share the same trials"}

    if config.bound == "gaussian":
        if spec.family != "real_ginibre":
            raise InapplicableBound("the Gaussian gap bound needs a real Ginibre perturbation")

        def gap_bound(s):
            return B.gap_gaussian(spec.n, spec.gamma, spec.norm_A, s)

        def im_bound(d):
            return B.im_min_gaussian(spec.n, spec.gamma, spec.norm_A, d)

        escalated_gap = escalated_im = None
    else:
        unit = EnsembleSpec(n=spec.n, family=spec.family, gamma=1.0)
        norms = norm_samples(unit, config.norm_trials, config.seed, stream=11)
        m8 = moment_from_norms(norms, 8)
        B8 = m8.mean_estimate + 3 * m8.stderr
        full = np.array(
            [np.linalg.norm(sample_matrix(spec, config.seed, t), 2) for t in range(min(config.trials, config.norm_trials))]
        )
        tail = float(np.mean(full >= config.R))
        pert_tail = float(np.mean(spec.gamma * norms >= config.R))
        notes["general"] = {"B8": B8, "R": config.R, "norm_tail": tail, "perturbation_norm_tail": pert_tail}

        def gap_bound(s, c=constants):
            return B.gap_general(spec.n, spec.K, spec.gamma, spec.norm_A, s, config.R, B8, tail, c)

        def im_bound(d, c=constants):
            raw = 8 * config.R * (c.C_RV * spec.K / spec.gamma) ** 1.6 * spec.n**2.8 * d**0.6 + pert_tail
            return B.probability(raw)

        big = constants.escalated(10.0)

        def escalated_gap(s):
            return gap_bound(s, big)

        def escalated_im(d):
            return im_bound(d, big)

    gap_rep = summarize_tail(gap, config.s_grid, config.trials, gap_bound, config.alpha, escalated=escalated_gap)
    im_rep = summarize_tail(im_min, config.delta_grid, config.trials, im_bound, config.alpha, escalated=escalated_im)
    flagged, failures, checked = certificate_cross_check(config, gap, li, lj, max(config.s_grid))
    notes["real_gap_le_max_s"] = int(np.count_nonzero(gap_real <= max(config.s_grid)))
    return GapReport(gap_rep, im_rep, flagged, failures, checked, notes)
