"""Random matrix laws ``A + gamma * M`` and norm-moment estimates.

Every draw is keyed by ``(seed, index)`` through a Philox counter-based
generator, so trial ``i`` is the same matrix no matter how trials are split
across workers.

Unscaled entry laws (``M = n^{-1/2} * Mhat``), with the density bound ``K``
of one entry of ``Mhat``:

=================  ===============================  ==================
family             entry of ``Mhat``                ``K``
=================  ===============================  ==================
real_ginibre       N(0, 1)                          1/sqrt(2 pi)
complex_ginibre    (N(0,1) + i N(0,1)) / sqrt(2)    1/sqrt(pi) (per part)
uniform            U[-sqrt 3, sqrt 3]               1/(2 sqrt 3)
laplace            Laplace(0, 1/sqrt 2)             1/sqrt 2
triangular         Tri(-sqrt 6, 0, sqrt 6)          1/sqrt 6
shifted_uniform    1 + U[-sqrt 3, sqrt 3]           1/(2 sqrt 3)
=================  ===============================  ==================

All families have unit variance, so entries of ``M`` have variance ``1/n``.
Only finite-variance laws are provided; for laws without a fourth moment the
``sqrt(n)`` scaling need not keep ``E||M||`` bounded.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, InsufficientTrials, UnknownFamily
from .matrixio import matrix_from_json, read_matrix

SQRT3 = math.sqrt(3.0)
SQRT6 = math.sqrt(6.0)

DENSITY_BOUNDS = {
    "real_ginibre": 1.0 / math.sqrt(2.0 * math.pi),
    "complex_ginibre": 1.0 / math.sqrt(math.pi),
    "uniform": 1.0 / (2.0 * SQRT3),
    "laplace": 1.0 / math.sqrt(2.0),
    "triangular": 1.0 / SQRT6,
    "shifted_uniform": 1.0 / (2.0 * SQRT3),
}
FAMILIES = tuple(DENSITY_BOUNDS)
SHIFTED_UNIFORM_MEAN = 1.0

_UINT64 = (1 << 64) - 1


def trial_rng(seed, index, stream=0):
    """Philox generator keyed by ``(seed, index)``.

    ``stream`` occupies the top counter word, giving independent sequences
    for auxiliary draws that share a seed and index.
    """
    key = np.array([int(seed) & _UINT64, int(index) & _UINT64], dtype=np.uint64)
    counter = np.array([0, 0, 0, int(stream) & _UINT64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def draw_entries(rng, family, shape):
    """Unit-variance unscaled entries of the given family."""
    if family == "real_ginibre":
        return rng.standard_normal(shape)
    if family == "complex_ginibre":
        re = rng.standard_normal(shape)
        im = rng.standard_normal(shape)
        return (re + 1j * im) / math.sqrt(2.0)
    if family == "uniform":
        return rng.uniform(-SQRT3, SQRT3, shape)
    if family == "laplace":
        return rng.laplace(0.0, 1.0 / math.sqrt(2.0), shape)
    if family == "triangular":
        return rng.triangular(-SQRT6, 0.0, SQRT6, shape)
    if family == "shifted_uniform":
        return SHIFTED_UNIFORM_MEAN + rng.uniform(-SQRT3, SQRT3, shape)
    raise UnknownFamily(f"unknown family {family!r}; expected one of {FAMILIES}")


@dataclass(frozen=True)
class EnsembleSpec:
    """Law of ``A + gamma * M`` with ``M`` an ``n x n`` matrix from ``family``."""

    n: int
    family: str = "real_ginibre"
    gamma: float = 1.0
    A: np.ndarray | None = field(default=None, compare=False)
    K: float | None = None

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValueError("n must be positive")
        object.__setattr__(self, "n", int(self.n))
        if self.family not in DENSITY_BOUNDS:
            raise UnknownFamily(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        object.__setattr__(self, "gamma", float(self.gamma))
        exact = DENSITY_BOUNDS[self.family]
        if self.K is None:
            object.__setattr__(self, "K", exact)
        elif not math.isclose(float(self.K), exact, rel_tol=1e-9):
            raise ConfigError(
                f"K={self.K} does not match the {self.family} density bound {exact}"
            )
        if self.A is not None:
            A = np.array(self.A, dtype=float)
            if A.shape != (self.n, self.n):
                raise ConfigError(f"A must be {self.n}x{self.n}, got {A.shape}")
            if not np.all(np.isfinite(A)):
                raise ConfigError("A has non-finite entries")
            A.setflags(write=False)
            object.__setattr__(self, "A", A)

    @property
    def is_complex(self):
        return self.family == "complex_ginibre"

    @property
    def shift(self):
        return np.zeros((self.n, self.n)) if self.A is None else self.A

    @property
    def norm_A(self):
        return 0.0 if self.A is None else float(np.linalg.norm(self.A, 2))

    def to_json(self):
        out = {"n": self.n, "family": self.family, "K": self.K, "gamma": self.gamma}
        if self.A is not None:
            out["A"] = {"n": self.n, "rows": self.A.tolist()}
        return out

    @classmethod
    def from_json(cls, obj, base_dir=None):
        """Build from a JSON object; ``A`` may be a path, inline rows or absent."""
        if not isinstance(obj, dict):
            raise ConfigError("ensemble must be a JSON object")
        A = obj.get("A")
        if isinstance(A, str):
            path = Path(A)
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            if not path.exists():
                raise ConfigError(f"shift matrix file {path} does not exist")
            A = read_matrix(path)
        elif A is not None:
            A = matrix_from_json(A)
        try:
            return cls(
                n=obj["n"],
                family=obj.get("family", "real_ginibre"),
                gamma=obj.get("gamma", 1.0),
                A=A,
                K=obj.get("K"),
            )
        except KeyError as exc:
            raise ConfigError(f"ensemble is missing field {exc}") from exc

    @classmethod
    def loads(cls, text):
        return cls.from_json(json.loads(text))

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True)


def sample_perturbation(spec: EnsembleSpec, rng):
    """``M`` alone (entries scaled by ``n^{-1/2}``)."""
    return draw_entries(rng, spec.family, (spec.n, spec.n)) / math.sqrt(spec.n)


def sample_matrix(spec: EnsembleSpec, seed, index):
    """``A + gamma * M`` for trial ``index``; a pure function of its arguments."""
    if spec.gamma == 0.0:
        out = spec.shift.astype(complex if spec.is_complex else float)
        return out
    M = sample_perturbation(spec, trial_rng(seed, index))
    return spec.shift + spec.gamma * M


def sample_batch(spec: EnsembleSpec, seed, start, count):
    """Stack of ``sample_matrix(spec, seed, i)`` for ``i`` in ``[start, start+count)``."""
    dtype = complex if spec.is_complex else float
    out = np.empty((count, spec.n, spec.n), dtype=dtype)
    for t in range(count):
        out[t] = sample_matrix(spec, seed, start + t)
    return out


@dataclass(frozen=True)
class MomentEstimate:
    p: float
    mean_estimate: float
    stderr: float
    trials: int


def moment_from_norms(norms, p):
    """``E[x^p]^{1/p}`` with a leave-one-out jackknife standard error."""
    x = np.asarray(norms, dtype=float)
    N = x.size
    scale = float(x.max()) if N and x.max() > 0 else 1.0
    y = (x / scale) ** p
    total = math.fsum(y)
    estimate = scale * (total / N) ** (1.0 / p)
    loo = scale * ((total - y) / (N - 1)) ** (1.0 / p)
    stderr = math.sqrt((N - 1) / N * math.fsum((loo - loo.mean()) ** 2))
    return MomentEstimate(p=p, mean_estimate=float(estimate), stderr=float(stderr), trials=N)


def norm_samples(spec: EnsembleSpec, trials, seed, stream=0):
    """Operator norms of ``trials`` independent draws of ``M``."""
    norms = np.empty(trials)
    for t in range(trials):
        M = sample_perturbation(spec, trial_rng(seed, t, stream=stream))
        norms[t] = np.linalg.svd(M, compute_uv=False)[0]
    return norms


def estimate_norm_moment(spec: EnsembleSpec, p, trials, seed, stream=0):
    """Monte Carlo estimate of ``B_{M,p} = E[||M||^p]^{1/p}``.

    Only the random part ``M`` is used; ``spec`` is expected to carry
    ``A = 0`` and ``gamma = 1``.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if trials < 100:
        raise InsufficientTrials(f"need at least 100 trials, got {trials}")
    if spec.A is not None and np.any(spec.A != 0):
        raise ConfigError("norm moments are defined for the centered perturbation (A = 0)")
    if spec.gamma != 1.0:
        raise ConfigError("norm moments are defined for gamma = 1")
    return moment_from_norms(norm_samples(spec, trials, seed, stream=stream), p)
