"""Principal and row submatrices with a large k-th eigen/singular value.

For PSD ``X`` there is a ``k``-subset ``S`` with

    lambda_k(X[S, S]) >= Tr(X) / sum_{i<=k} lambda_i(X) * lambda_k(X) / (k (n-k+1))

and for an ``n x k`` matrix ``R`` a row subset with
``sigma_k(R[S]) >= sigma_k(R) / sqrt(k (n-k+1))``.  Exhaustive mode searches
all subsets and certifies these bounds; greedy mode uses pivoted
factorizations and makes no optimality claim.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NotPSD, TooManySubsets
from .spectral import _check_finite

MAX_SUBSETS = 10**6
PSD_TOL = 1e-10
_BATCH = 4096


@dataclass(frozen=True)
class SubmatrixResult:
    S: tuple
    T: tuple
    value: float
    bound: float
    mode: str
    subsets_checked: int = 0
    interlacing_violations: int = 0


def _subsets(n, k):
    count = math.comb(n, k)
    if count > MAX_SUBSETS:
        raise TooManySubsets(f"C({n},{k}) = {count} exceeds {MAX_SUBSETS}")
    return count


def _check_psd(X):
    X = _check_finite(np.asarray(X, dtype=float))
    if X.shape[0] != X.shape[1]:
        raise ValueError("X must be square")
    X = 0.5 * (X + X.T)
    lam = np.linalg.eigvalsh(X)[::-1]
    # the tolerance scales with the largest eigenvalue so that Gram matrices
    # of large entries are not rejected for rounding noise
    if lam.size and lam[-1] < -PSD_TOL * max(1.0, lam[0]):
        raise NotPSD(f"smallest eigenvalue {lam[-1]:.3e} is negative")
    return X, lam


def principal_bound(X, k, eigenvalues=None):
    """The guaranteed lower bound for ``max_S lambda_k(X[S, S])``."""
    X, lam = (X, eigenvalues) if eigenvalues is not None else _check_psd(X)
    n = X.shape[0]
    top = math.fsum(lam[:k])
    if top <= 0 or lam[k - 1] <= 0:
        return 0.0
    return float(np.trace(X)) / top * float(lam[k - 1]) / (k * (n - k + 1))


def pivoted_cholesky_indices(X, k):
    """Greedy diagonal pivoting: repeatedly take the largest Schur-complement diagonal."""
    X = np.array(X, dtype=float)
    n = X.shape[0]
    d = np.diag(X).copy()
    L = np.zeros((n, k))
    chosen = []
    for step in range(k):
        d_masked = d.copy()
        d_masked[chosen] = -np.inf
        p = int(np.argmax(d_masked))
        chosen.append(p)
        if d[p] <= 0:
            continue
        col = (X[:, p] - L[:, :step] @ L[p, :step]) / math.sqrt(d[p])
        L[:, step] = col
        d = d - col**2
    return tuple(sorted(chosen))


def best_principal_submatrix(X, k, mode="exhaustive"):
    """Principal ``k x k`` submatrix maximizing ``lambda_k``.

    Exhaustive mode returns the first maximizer in lexicographic order and
    counts subsets that break eigenvalue interlacing.

    Raises
    ------
    NotPSD
        If an eigenvalue of the symmetrized input is below ``-1e-10 max(1, lambda_max)``.
    TooManySubsets
        If exhaustive search would visit more than ``1e6`` subsets.
    """
    X, lam = _check_psd(X)
    n = X.shape[0]
    k = int(k)
    if not 1 <= k <= n:
        raise ValueError(f"k must satisfy 1 <= k <= {n}")
    bound = principal_bound(X, k, lam)

    if mode == "greedy":
        S = pivoted_cholesky_indices(X, k)
        value = float(np.linalg.eigvalsh(X[np.ix_(S, S)])[0])
        return SubmatrixResult(S, S, value, bound, "greedy", 1, 0)
    if mode != "exhaustive":
        raise ValueError(f"unknown mode {mode!r}")

    count = _subsets(n, k)
    lam_k = lam[k - 1]
    slack = 1e-10 * max(1.0, abs(lam[0]))
    best_value, best_S, violations = -math.inf, None, 0
    combos = itertools.combinations(range(n), k)
    while True:
        chunk = list(itertools.islice(combos, _BATCH))
        if not chunk:
            break
        idx = np.array(chunk)
        blocks = X[idx[:, :, None], idx[:, None, :]]
        # eigvalsh is ascending, so column 0 is the k-th largest of a k x k block
        values = np.linalg.eigvalsh(blocks)[:, 0]
        violations += int(np.count_nonzero(values > lam_k + slack))
        j = int(np.argmax(values))
        if values[j] > best_value:
            best_value, best_S = float(values[j]), tuple(int(i) for i in chunk[j])
    return SubmatrixResult(best_S, best_S, best_value, bound, "exhaustive", count, violations)


def best_rectangular_submatrix(R, mode="exhaustive"):
    """``k`` rows of an ``n x k`` matrix maximizing ``sigma_k``."""
    R = _check_finite(np.asarray(R, dtype=float))
    n, k = R.shape
    if n < k or k < 1:
        raise ValueError("R must be n x k with n >= k >= 1")
    s = np.linalg.svd(R, compute_uv=False)
    bound = float(s[k - 1]) / math.sqrt(k * (n - k + 1))
    cols = tuple(range(k))

    if mode == "greedy":
        _, _, piv = scipy.linalg.qr(R.T, pivoting=True, mode="economic")
        S = tuple(sorted(int(i) for i in piv[:k]))
        value = float(np.linalg.svd(R[list(S)], compute_uv=False)[-1])
        return SubmatrixResult(S, cols, value, bound, "greedy", 1, 0)
    if mode != "exhaustive":
        raise ValueError(f"unknown mode {mode!r}")

    count = _subsets(n, k)
    slack = 1e-10 * max(1.0, float(s[0]))
    best_value, best_S, violations = -math.inf, None, 0
    combos = itertools.combinations(range(n), k)
    while True:
        chunk = list(itertools.islice(combos, _BATCH))
        if not chunk:
            break
        blocks = R[np.array(chunk)]
        values = np.linalg.svd(blocks, compute_uv=False)[:, -1]
        violations += int(np.count_nonzero(values > s[k - 1] + slack))
        j = int(np.argmax(values))
        if values[j] > best_value:
            best_value, best_S = float(values[j]), tuple(int(i) for i in chunk[j])
    return SubmatrixResult(best_S, cols, best_value, bound, "exhaustive", count, violations)
