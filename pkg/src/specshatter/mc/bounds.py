"""Closed-form right-hand sides of the tail, gap, condition-number and
anticoncentration bounds.

Each bound is returned both raw and clamped to ``[0, 1]`` (probabilities) so
that reports can flag vacuous comparisons.  Bounds for the Gaussian
perturbation use explicit constants; the others depend on the projection
small-ball constant ``C_RV``, whose value is not known and defaults to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate, special

from ..errors import ConfigError, InapplicableBound

#: norm-moment bound used for Gaussian perturbations, ``B_{G_n, p} <= 9``
GAUSSIAN_NORM_MOMENT = 9.0
#: ``E ||G_n|| <= 2`` for the normalized real Ginibre matrix
GAUSSIAN_MEAN_NORM = 2.0

C_RV_NOTE = (
    "C_RV is the universal constant of the Rudelson-Vershynin projection "
    "small-ball theorem; its value is not stated, 1.0 is a placeholder"
)


@dataclass(frozen=True)
class BoundConstants:
    """Universal constants.  ``C_complex_shift`` and ``C_gap`` follow from ``C_RV``
    unless set explicitly; ``C_kappa`` only enters informational output."""

    C_RV: float = 1.0
    C_complex_shift: float | None = None
    C_gap: float | None = None
    C_kappa: float = 1.0
    note: str = field(default=C_RV_NOTE, compare=False)

    def __post_init__(self):
        if self.C_complex_shift is None:
            object.__setattr__(self, "C_complex_shift", complex_shift_constant(self.C_RV))
        if self.C_gap is None:
            object.__setattr__(self, "C_gap", gap_constant(self.C_RV, self.C_complex_shift))
        for name in ("C_RV", "C_complex_shift", "C_gap", "C_kappa"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
                raise ConfigError(f"constant {name} must be positive, got {v!r}")

    def escalated(self, factor=10.0):
        """Same constants with ``C_RV`` multiplied by ``factor`` and the
        derived constants recomputed."""
        return BoundConstants(C_RV=self.C_RV * factor, C_kappa=self.C_kappa, note=self.note + f"; C_RV escalated x{factor:g}")

    def to_json(self):
        return {
            "C_RV": self.C_RV,
            "C_complex_shift": self.C_complex_shift,
            "C_gap": self.C_gap,
            "C_kappa": self.C_kappa,
            "note": self.note,
        }

    @classmethod
    def from_json(cls, obj):
        if obj is None:
            return cls()
        if not isinstance(obj, dict):
            raise ConfigError("constants must be a JSON object")
        unknown = set(obj) - {"C_RV", "C_complex_shift", "C_gap", "C_kappa", "note"}
        if unknown:
            raise ConfigError(f"unknown constants {sorted(unknown)}")
        kwargs = {k: v for k, v in obj.items() if k != "note"}
        out = cls(**kwargs)
        if "note" in obj:
            out = replace(out, note=str(obj["note"]))
        return out


def complex_shift_constant(C_RV):
    return math.sqrt(6.0) * C_RV**2 * (2.0 * math.e * math.pi) ** 1.5


def gap_constant(C_RV, C_complex_shift):
    disks_away = 11.0 * C_complex_shift
    eigs_away = 6.0 * (5.0 / 4.0) ** 1.6 * disks_away
    return 2.0 * eigs_away ** (3 / 11) * 8.0 ** (8 / 11) * C_RV ** (64 / 55) + 9.0 * C_RV**1.6


@dataclass(frozen=True)
class BoundValue:
    raw: float
    value: float  # clamped to [0, 1] for probabilities
    vacuous: bool


def probability(raw):
    raw = float(raw)
    if math.isnan(raw):
        raw = math.inf
    return BoundValue(raw, min(1.0, max(0.0, raw)), raw >= 1.0)


def _log_binom(n, k):
    return special.gammaln(n + 1) - special.gammaln(k + 1) - special.gammaln(n - k + 1)


def _pow_safe(log_value):
    return math.exp(log_value) if log_value < 700 else math.inf


# -- singular value tails ----------------------------------------------------


def real_shift_gaussian(n, k, gamma, eps):
    """``P[sigma_{n-k+1}(z - (A + gamma G)) <= eps]`` for real ``z``: ``n eps / gamma``
    at ``k = 1`` and ``(sqrt(2e) n eps / (k gamma))^{k^2}`` otherwise."""
    if gamma <= 0:
        raise InapplicableBound("gamma must be positive")
    if k == 1:
        return probability(n * eps / gamma)
    base = math.sqrt(2 * math.e) * n * eps / (k * gamma)
    return probability(_pow_safe(k * k * math.log(base)) if base > 0 else 0.0)


def centered_gaussian_upper(n, k, gamma, eps):
    """Upper tail bound ``(sqrt(2e) n eps / (k gamma))^{k^2}`` for ``gamma G`` alone."""
    if gamma <= 0:
        raise InapplicableBound("gamma must be positive")
    base = math.sqrt(2 * math.e) * n * eps / (k * gamma)
    return probability(_pow_safe(k * k * math.log(base)) if base > 0 else 0.0)


def real_shift_general(n, k, K, gamma, eps, constants: BoundConstants):
    """``C(n,k) (C_RV K' eps sqrt(k n (n-k+1)))^{k^2}`` with ``K' = K / gamma``."""
    if gamma <= 0:
        raise InapplicableBound("gamma must be positive")
    base = constants.C_RV * (K / gamma) * eps * math.sqrt(k * n * (n - k + 1))
    if base <= 0:
        return probability(0.0)
    return probability(_pow_safe(_log_binom(n, k) + k * k * math.log(base)))


def complex_shift_gaussian(n, k, gamma, norm_A, z, eps):
    """``C(n,k)^2 (sqrt(7e) k^2 n^3 / (2 gamma^3) ((9 gamma + ||A|| + |Re z|)^2 + |Im z|^2) eps^2 / |Im z|)^{k^2}``."""
    if gamma <= 0:
        raise InapplicableBound("gamma must be positive")
    if z.imag == 0:
        raise InapplicableBound("the complex-shift bound needs Im z != 0")
    if k > n / 7:
        raise InapplicableBound(f"k={k} exceeds n/7")
    shape = ((GAUSSIAN_NORM_MOMENT * gamma + norm_A + abs(z.real)) ** 2 + z.imag**2) / abs(z.imag)
    base = math.sqrt(7 * math.e) * k * k * n**3 / (2 * gamma**3) * shape * eps * eps
    if base <= 0:
        return probability(0.0)
    return probability(_pow_safe(2 * _log_binom(n, k) + k * k * math.log(base)))


def complex_shift_general(n, k, K, gamma, norm_A, z, eps, norm_moment, constants: BoundConstants):
    """General complex-shift bound for ``A + gamma M``.

    ``norm_moment`` is ``B_{M, 2k^2}`` for the unscaled perturbation; the
    scaled matrix ``gamma M`` has density parameter ``K / gamma`` and moment
    ``gamma * B``.
    """
    if gamma <= 0:
        raise InapplicableBound("gamma must be positive")
    if z.imag == 0:
        raise InapplicableBound("the complex-shift bound needs Im z != 0")
    if k > math.sqrt(n) - 2:
        raise InapplicableBound(f"k={k} exceeds sqrt(n) - 2")
    K_eff = K / gamma
    B = gamma * norm_moment
    shape = ((B + norm_A + abs(z.real)) ** 2 + z.imag**2) / abs(z.imag)
    base = constants.C_complex_shift * k * k * (n * K_eff) ** 3 * shape * eps * eps
    if base <= 0:
        return probability(0.0)
    log_bound = math.log1p(k * k) + 2 * _log_binom(n, k) + k * k * math.log(base)
    return probability(_pow_safe(log_bound))


# -- gaps --------------------------------------------------------------------


def gap_gaussian(n, gamma, norm_A, s):
    """``15 (||A|| + 7)^3 n^3 gamma^{-5/2} s^{1/3} + e^{-2n}``, needs ``0 < gamma < 1``."""
    if not 0 < gamma < 1:
        raise InapplicableBound("the Gaussian gap bound needs 0 < gamma < 1")
    return probability(15 * (norm_A + 7) ** 3 * n**3 * gamma**-2.5 * s ** (1 / 3) + math.exp(-2 * n))


def im_min_gaussian(n, gamma, norm_A, delta):
    """``6 (||A|| + 4 gamma) (n / gamma)^{8/5} delta^{3/5}``."""
    if gamma <= 0:
        raise InapplicableBound("gamma must be positive")
    return probability(6 * (norm_A + 4 * gamma) * (n / gamma) ** 1.6 * delta**0.6)


def gap_general(n, K, gamma, norm_A, s, R, norm_moment_8, norm_tail, constants: BoundConstants):
    """``C_gap R^2 (gamma B_8 + ||A|| + R) (K/gamma)^{5/2} n^4 s^{1/3} + P[||A + gamma M|| >= R]``.

    ``norm_tail`` is the (measured) probability ``P[||A + gamma M|| >= R]``.
    """
    if n < 16:
        raise InapplicableBound("the general gap bound needs n >= 16")
    if not 0 < gamma < K:
        raise InapplicableBound("the general gap bound needs 0 < gamma < K")
    if R <= 1:
        raise InapplicableBound("the general gap bound needs R > 1")
    main = constants.C_gap * R**2 * (gamma * norm_moment_8 + norm_A + R) * (K / gamma) ** 2.5 * n**4 * s ** (1 / 3)
    return probability(main + norm_tail)


# -- condition numbers -------------------------------------------------------


def real_kappa_mean_gaussian(n, gamma, length):
    """``E sum_{lambda in Omega} kappa <= n / (2 gamma) * Leb(Omega)``."""
    return n / (2.0 * gamma) * length


def real_kappa_mean_general(n, K, gamma, length, constants: BoundConstants):
    return constants.C_RV * K * n * n / (2.0 * gamma) * length


def _strip_integral(a0, x0, x1, y0, y1):
    """``int_{x0}^{x1} int_{y0}^{y1} ((a0 + |x|)^2 + y^2) / y dy dx`` for ``0 < y0``."""

    def inner(x):
        a = a0 + abs(x)
        return a * a * math.log(y1 / y0) + 0.5 * (y1 * y1 - y0 * y0)

    points = [0.0] if x0 < 0 < x1 else None
    val, _ = integrate.quad(inner, x0, x1, points=points, epsabs=0, epsrel=1e-12)
    return val


def nonreal_kappa_integral(a0, rect, delta):
    """Integral of ``((a0 + |Re z|)^2 + Im z^2) / |Im z|`` over a rectangle
    ``[x0, x1] x [y0, y1]`` restricted to ``|Im z| >= delta``."""
    x0, x1, y0, y1 = rect
    total = 0.0
    lo, hi = max(y0, delta), y1
    if hi > lo:
        total += _strip_integral(a0, x0, x1, lo, hi)
    lo, hi = max(-y1, delta), -y0
    if hi > lo:
        total += _strip_integral(a0, x0, x1, lo, hi)
    return total


def nonreal_kappa_integral_2d(a0, rect, delta):
    """Same integral by direct 2-D quadrature (independent cross-check)."""
    x0, x1, y0, y1 = rect

    def f(y, x):
        return ((a0 + abs(x)) ** 2 + y * y) / abs(y)

    total = 0.0
    for lo, hi in ((max(y0, delta), y1), (max(-y1, delta), -y0)):
        if hi > lo:
            for xa, xb in ((x0, min(x1, 0.0)), (max(x0, 0.0), x1)):
                if xb > xa:
                    v, _ = integrate.dblquad(f, xa, xb, lo, hi, epsabs=0, epsrel=1e-10)
                    total += v
    return total


def nonreal_kappa_mean_gaussian(n, gamma, norm_A, rect, delta):
    """``sqrt(7e)/(4 pi) n^5 / gamma^3`` times the integral, with ``E||G|| <= 2``."""
    coeff = math.sqrt(7 * math.e) / (4 * math.pi) * n**5 / gamma**3
    return coeff * nonreal_kappa_integral(gamma * GAUSSIAN_MEAN_NORM + norm_A, rect, delta)


def nonreal_kappa_mean_general(n, K, gamma, norm_A, rect, delta, mean_norm, constants: BoundConstants):
    coeff = constants.C_complex_shift * K**3 * n**5 / gamma**3
    return coeff * nonreal_kappa_integral(gamma * mean_norm + norm_A, rect, delta)


@dataclass(frozen=True)
class HighProbabilityKappa:
    real_sum: float
    nonreal_sum: float
    kappa_V: float
    failure_probability: float


def kappa_high_probability_gaussian(n, gamma, norm_A, eps1, eps2):
    """Simultaneous high-probability bounds for a Gaussian perturbation.

    Needs ``n >= 7`` and ``0 < gamma < min(1, ||A||)``; in particular ``A``
    must be nonzero.
    """
    if n < 7:
        raise InapplicableBound("needs n >= 7")
    if not 0 < gamma < min(1.0, norm_A):
        raise InapplicableBound("needs 0 < gamma < min(1, ||A||)")
    if not (eps1 > 0 and 0 < eps2 < 1):
        raise InapplicableBound("needs eps1 > 0 and 0 < eps2 < 1")
    L = math.log(1.0 / eps2)
    return HighProbabilityKappa(
        real_sum=5.0 * n * norm_A / (gamma * eps1),
        nonreal_sum=1000.0 * L * n**5 * norm_A**3 / (gamma**3 * eps1),
        kappa_V=1000.0 * math.sqrt(L) * n**3 * norm_A**1.5 / (gamma**1.5 * eps1),
        failure_probability=min(
            1.0,
            2 * eps1 + 30 * norm_A**1.6 * n**1.6 * eps2**0.6 / gamma**1.6 + 2 * math.exp(-2 * n),
        ),
    )


# -- anticoncentration -------------------------------------------------------


def _min_over_j(sigma, j_min, offset):
    """``min_{j >= j_min} 1 / (sqrt(j - offset) sigma_j)`` with 1-based ``j``."""
    best = math.inf
    for j in range(j_min, len(sigma) + 1):
        s = sigma[j - 1]
        if s > 0:
            best = min(best, 1.0 / (math.sqrt(j - offset) * s))
    return best


def quadratic_form_density_gaussian(Z, k):
    """``(1/2 min_{j > 2k} 1 / (sqrt(j - 2k + 1) sigma_j(Z)))^{k^2}`` (``inf`` if vacuous)."""
    sigma = np.linalg.svd(np.asarray(Z, dtype=float), compute_uv=False)
    m = _min_over_j(sigma, 2 * k + 1, 2 * k - 1)
    return float((0.5 * m) ** (k * k)) if math.isfinite(m) else math.inf


def quadratic_form_density_general(Z, k, K, constants: BoundConstants):
    """``(1 + k^2) (C_RV^2 K^2 sqrt(2 e pi k) min_{j > k^2+k+1} 1/(sqrt(j-k+1) sigma_j))^{k^2}``."""
    sigma = np.linalg.svd(np.asarray(Z, dtype=float), compute_uv=False)
    m = _min_over_j(sigma, k * k + k + 2, k - 1)
    if not math.isfinite(m):
        return math.inf
    base = constants.C_RV**2 * K**2 * math.sqrt(2 * math.e * math.pi * k) * m
    return float((1 + k * k) * base ** (k * k))


def rectangular_smallball_constant(j, k, K, constants: BoundConstants):
    """``C_{j,k} = k (C_RV K sqrt(pi k))^{j-k+1} / Gamma((j-k+3)/2)``."""
    e = j - k + 1
    return k * (constants.C_RV * K * math.sqrt(math.pi * k)) ** e / math.gamma((j - k + 3) / 2)


def rectangular_smallball(j, k, K, s, constants: BoundConstants):
    """``P[sigma_k(V Y) <= s] <= C_{j,k} s^{j-k+1}``."""
    if not 1 <= k <= j:
        raise InapplicableBound("needs 1 <= k <= j")
    return probability(rectangular_smallball_constant(j, k, K, constants) * s ** (j - k + 1))
