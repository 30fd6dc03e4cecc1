"""Block decomposition of the inverse of a resolvent corner.

Let ``N_k`` be the leading ``k x k`` block of ``(delta i U - M)^{-1}`` with
``U`` a permutation matrix.  Writing ``P = M' + i delta U`` in ``2 x 2``
block form and ``X + iY = (M'_22 + i U_22)^{-1}`` (with ``U_ab`` the blocks of
``delta U``), the Schur complement gives

    Re N_k^{-1} = M'_11 - M'_12 X M'_21 + U_12 Y M'_21 + M'_12 Y U_21 + U_12 X U_21
    Im N_k^{-1} = U_11 - M'_12 Y M'_21 - M'_12 X U_21 - U_12 X M'_21 + U_12 Y U_21

where ``N_k`` is the corner of ``P^{-1}``.  Matching ``P`` to
``delta i U - M`` needs ``M' = -M``; :func:`calibrate_convention` settles this
on a scalar case instead of assuming it.

The imaginary part does not involve ``M'_11`` at all, which is checked
bitwise by :func:`m11_invariance_check`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ensembles import trial_rng
from .errors import SingularBlock

CONVENTIONS = ("negated", "as_written")
ILL_CONDITIONED = 1e8
TOL = 1e-9
TOL_ILL = 1e-6


def _inv(A, what):
    try:
        cond = float(np.linalg.cond(A))
    except np.linalg.LinAlgError as exc:
        raise SingularBlock(f"{what} is singular") from exc
    if not np.isfinite(cond) or cond > 1e15:
        raise SingularBlock(f"{what} is numerically singular (cond={cond:.3e})")
    return np.linalg.inv(A), cond


def _blocks(A, k):
    return A[:k, :k], A[:k, k:], A[k:, :k], A[k:, k:]


def schur_parts(Mp, dU, k, real_sign="corrected"):
    """Real and imaginary parts of ``N_k^{-1}`` from the block formulas.

    ``real_sign="printed"`` flips the sign of the ``M'_12 Y U_21`` term; that
    variant does not match the direct inverse whenever the term is nonzero and
    is kept only to demonstrate this.
    """
    M11, M12, M21, M22 = _blocks(Mp, k)
    U11, U12, U21, U22 = _blocks(dU, k)
    inner, _ = _inv(M22 + 1j * U22, "M22 + i U22")
    X, Y = inner.real, inner.imag
    s = 1.0 if real_sign == "corrected" else -1.0
    re = M11 - M12 @ X @ M21 + U12 @ Y @ M21 + s * (M12 @ Y @ U21) + U12 @ X @ U21
    im = U11 - M12 @ Y @ M21 - M12 @ X @ U21 - U12 @ X @ M21 + U12 @ Y @ U21
    return re, im


def _formula_matrix(M, convention):
    if convention == "negated":
        return -M
    if convention == "as_written":
        return M
    raise ValueError(f"convention must be one of {CONVENTIONS}")


@dataclass(frozen=True)
class CornerDecomposition:
    k: int
    N_k: np.ndarray
    direct_inverse: np.ndarray
    re_formula: np.ndarray
    im_formula: np.ndarray
    mismatch: float
    condition: float
    ill_conditioned: bool
    tolerance: float
    convention: str

    @property
    def ok(self):
        return self.mismatch <= self.tolerance


def corner_decomposition_check(M, U, delta, k, convention="negated"):
    """Compare the direct inverse of the resolvent corner with the block formulas.

    Raises
    ------
    SingularBlock
        If ``delta i U - M`` or ``M'_22 + i delta U_22`` cannot be inverted.
    """
    M = np.asarray(M, dtype=float)
    U = np.asarray(U, dtype=float)
    n = M.shape[0]
    k = int(k)
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < n={n}")
    if delta == 0:
        raise ValueError("delta must be nonzero")
    dU = delta * U
    Q = 1j * dU - M
    Qinv, cond_q = _inv(Q, "delta i U - M")
    N_k = Qinv[:k, :k]
    direct, cond_n = _inv(N_k, "corner N_k")
    Mp = _formula_matrix(M, convention)
    re, im = schur_parts(Mp, dU, k)
    formula = re + 1j * im
    mismatch = float(np.linalg.norm(formula - direct) / np.linalg.norm(direct))
    cond = max(cond_q, cond_n)
    ill = cond > ILL_CONDITIONED
    return CornerDecomposition(
        k=k,
        N_k=N_k,
        direct_inverse=direct,
        re_formula=re,
        im_formula=im,
        mismatch=mismatch,
        condition=cond,
        ill_conditioned=ill,
        tolerance=TOL_ILL if ill else TOL,
        convention=convention,
    )


def calibrate_convention(delta=0.7, diag=(0.3, -1.9)):
    """Pick the convention that reproduces the scalar resolvent ``1/(delta i - m_11)``."""
    M = np.diag(np.asarray(diag, dtype=float))
    U = np.eye(2)
    scores = {}
    for c in CONVENTIONS:
        scores[c] = corner_decomposition_check(M, U, delta, 1, convention=c).mismatch
    best = min(CONVENTIONS, key=lambda c: scores[c])
    return best, scores


@dataclass(frozen=True)
class XYResult:
    X: np.ndarray
    Y: np.ndarray
    identity_mismatch: float  # closed-form Y vs complex inversion; nan if M22 is singular
    embedding_mismatch: float  # real 2m x 2m inverse vs [[X, -Y], [Y, X]]


def xy_block_check(M22, U22):
    """``X + iY = (M22 + i U22)^{-1}``, checked against the closed form for ``Y``
    and against the real block embedding."""
    M22 = np.asarray(M22, dtype=float)
    U22 = np.asarray(U22, dtype=float)
    inner, _ = _inv(M22 + 1j * U22, "M22 + i U22")
    X, Y = inner.real.copy(), inner.imag.copy()

    identity = math.nan
    try:
        Minv, _ = _inv(M22, "M22")
    except SingularBlock:
        Minv = None
    if Minv is not None:
        S, _ = _inv(M22 + U22 @ Minv @ U22, "M22 + U22 M22^{-1} U22")
        Y_closed = -S @ U22 @ Minv
        scale = max(np.linalg.norm(Y), np.finfo(float).tiny)
        identity = 0.0 if not Y.any() and not Y_closed.any() else float(
            np.linalg.norm(Y_closed - Y) / max(scale, np.linalg.norm(Y_closed))
        )

    big = np.block([[M22, -U22], [U22, M22]])
    big_inv, _ = _inv(big, "real block embedding")
    expected = np.block([[X, -Y], [Y, X]])
    embedding = float(np.linalg.norm(big_inv - expected) / np.linalg.norm(expected))
    return XYResult(X, Y, identity, embedding)


# -- randomized batches ------------------------------------------------------

DELTAS = (0.1, 1.0, 10.0)


def random_case(seed, index, n_max=12, k_max=3):
    """One randomized ``(M, U, delta, k)`` drawn from the ``(seed, index)`` stream."""
    rng = trial_rng(seed, index)
    n = int(rng.integers(2, n_max + 1))
    k = int(rng.integers(1, min(k_max, n - 1) + 1))
    delta = DELTAS[int(rng.integers(len(DELTAS)))]
    M = rng.standard_normal((n, n)) / math.sqrt(n)
    U = np.eye(n)[rng.permutation(n)]
    return M, U, delta, k


@dataclass(frozen=True)
class ResolventBatch:
    trials: int
    max_mismatch: float
    max_mismatch_well: float
    ill_conditioned: int
    failures: int
    singular: int
    printed_sign_max_mismatch: float

    @property
    def ok(self):
        return self.failures == 0


def resolvent_batch(seed, start, count, convention="negated", n_max=12, k_max=3):
    worst = worst_well = worst_printed = 0.0
    ill = failures = singular = 0
    for t in range(start, start + count):
        M, U, delta, k = random_case(seed, t, n_max, k_max)
        try:
            res = corner_decomposition_check(M, U, delta, k, convention)
        except SingularBlock:
            singular += 1
            continue
        worst = max(worst, res.mismatch)
        if res.ill_conditioned:
            ill += 1
        else:
            worst_well = max(worst_well, res.mismatch)
        failures += int(not res.ok)
        re_p, im_p = schur_parts(_formula_matrix(M, convention), delta * U, k, real_sign="printed")
        printed = float(np.linalg.norm(re_p + 1j * im_p - res.direct_inverse) / np.linalg.norm(res.direct_inverse))
        worst_printed = max(worst_printed, printed)
    return ResolventBatch(count, worst, worst_well, ill, failures, singular, worst_printed)


def merge_batches(parts):
    parts = list(parts)
    return ResolventBatch(
        trials=sum(p.trials for p in parts),
        max_mismatch=max((p.max_mismatch for p in parts), default=0.0),
        max_mismatch_well=max((p.max_mismatch_well for p in parts), default=0.0),
        ill_conditioned=sum(p.ill_conditioned for p in parts),
        failures=sum(p.failures for p in parts),
        singular=sum(p.singular for p in parts),
        printed_sign_max_mismatch=max((p.printed_sign_max_mismatch for p in parts), default=0.0),
    )


@dataclass(frozen=True)
class InvarianceResult:
    trials: int
    bitwise_constant: bool
    direct_max_deviation: float  # same comparison through the direct inverse
    max_abs_correlation: float  # between M11 and Im N_k^{-1} entries over full resamples
    correlation_limit: float


def m11_invariance_check(n, k, delta, trials, seed, convention="negated"):
    """Resample ``M_11`` with the other blocks fixed and watch ``Im N_k^{-1}``.

    The formula route must be bitwise constant.  The direct route is compared
    in relative Frobenius norm.  A second pass resamples the whole matrix and
    records the largest sample correlation between entries of ``M_11`` and of
    ``Im N_k^{-1}``, which should be within ``4 / sqrt(trials)`` of zero.
    """
    base_rng = trial_rng(seed, 0, stream=1)
    M = base_rng.standard_normal((n, n)) / math.sqrt(n)
    U = np.eye(n)[base_rng.permutation(n)]
    dU = delta * U
    reference = None
    reference_direct = None
    bitwise = True
    direct_dev = 0.0
    for t in range(trials):
        rng = trial_rng(seed, t, stream=2)
        Mt = M.copy()
        Mt[:k, :k] = rng.standard_normal((k, k)) / math.sqrt(n)
        _, im = schur_parts(_formula_matrix(Mt, convention), dU, k)
        Qinv = np.linalg.inv(1j * dU - Mt)
        im_direct = np.linalg.inv(Qinv[:k, :k]).imag
        if reference is None:
            reference, reference_direct = im.copy(), im_direct.copy()
            continue
        bitwise &= bool(np.array_equal(im, reference))
        dev = np.linalg.norm(im_direct - reference_direct) / max(np.linalg.norm(reference_direct), 1e-300)
        direct_dev = max(direct_dev, float(dev))

    m11 = np.empty((trials, k * k))
    imv = np.empty((trials, k * k))
    for t in range(trials):
        rng = trial_rng(seed, t, stream=3)
        Mt = rng.standard_normal((n, n)) / math.sqrt(n)
        _, im = schur_parts(_formula_matrix(Mt, convention), dU, k)
        m11[t] = Mt[:k, :k].ravel()
        imv[t] = im.ravel()
    corr = np.corrcoef(m11.T, imv.T)[: k * k, k * k :]
    max_corr = float(np.nanmax(np.abs(corr))) if corr.size else 0.0
    return InvarianceResult(trials, bitwise, direct_dev, max_corr, 4.0 / math.sqrt(trials))
