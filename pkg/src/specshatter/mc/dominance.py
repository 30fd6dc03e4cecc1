"""Stochastic ordering of singular values of ``A + t X`` under ordered ``sigma(A)``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..ensembles import trial_rng
from ..errors import ConfigError, InsufficientTrials, PreconditionViolated
from .engine import concat_chunks
from .stats import ALPHA, dkw_band, ecdf_counts

GRID_POINTS = 200
_STREAM = 31


@dataclass(frozen=True)
class DominanceReport:
    trials: int
    band: float
    max_deficit: tuple  # per i, max_s (F2 - F1)
    verdict: tuple  # per i, "pass" or "fail"

    @property
    def ok(self):
        return all(v == "pass" for v in self.verdict)


def _check_order(A1, A2, tol=1e-12):
    s1 = np.linalg.svd(A1, compute_uv=False)
    s2 = np.linalg.svd(A2, compute_uv=False)
    if np.any(s1 > s2 + tol * max(1.0, float(s2.max(initial=0.0)))):
        raise PreconditionViolated(
            f"singular values must satisfy sigma_i(A1) <= sigma_i(A2); got {s1} and {s2}"
        )


def dominance_samples(A1, A2, t, trials, seed, threads=1):
    """Singular values of ``A1 + t X`` and ``A2 + t X`` with the same ``X`` per trial."""
    A1 = np.asarray(A1, dtype=float)
    A2 = np.asarray(A2, dtype=float)
    n, k = A1.shape

    def chunk(start, count):
        X = np.empty((count, n, k))
        for i in range(count):
            X[i] = trial_rng(seed, start + i, stream=_STREAM).standard_normal((n, k))
        s1 = np.linalg.svd(A1 + t * X, compute_uv=False)
        s2 = np.linalg.svd(A2 + t * X, compute_uv=False)
        return s1, s2

    return concat_chunks(chunk, trials, threads)


def dominance_check(A1, A2, t, trials, seed, threads=1, alpha=ALPHA):
    """One-sided test ``F_{A1,i}(s) >= F_{A2,i}(s) - 2 * band`` on a grid of ``s``.

    ``F_{A,i}`` is the CDF of the ``i``-th largest singular value of
    ``A + t X``.  The grid is the pooled sample quantiles of both laws.

    Raises
    ------
    PreconditionViolated
        If ``sigma_i(A1) > sigma_i(A2)`` for some ``i``.
    """
    A1 = np.asarray(A1, dtype=float)
    A2 = np.asarray(A2, dtype=float)
    if A1.shape != A2.shape or A1.ndim != 2:
        raise ConfigError("A1 and A2 must be matrices of the same shape")
    if trials < 100:
        raise InsufficientTrials("dominance needs at least 100 trials")
    _check_order(A1, A2)
    s1, s2 = dominance_samples(A1, A2, t, trials, seed, threads)
    band = dkw_band(trials, alpha)
    deficit, verdict = [], []
    probs = np.linspace(0.0, 1.0, GRID_POINTS + 1)
    for i in range(s1.shape[1]):
        grid = np.quantile(np.concatenate([s1[:, i], s2[:, i]]), probs)
        F1 = ecdf_counts(s1[:, i], grid) / trials
        F2 = ecdf_counts(s2[:, i], grid) / trials
        d = float(np.max(F2 - F1))
        deficit.append(d)
        verdict.append("pass" if d <= 2 * band else "fail")
    return DominanceReport(int(trials), band, tuple(deficit), tuple(verdict))
