"""Dense spectral quantities of a single matrix.

Eigenvalue condition numbers, the overlap matrix, eigenvector condition
number upper bounds, eigenvalue gap statistics and the two-eigenvalue disk
certificate.  Left eigenvectors are taken as the rows of ``V^{-1}`` so that
``w_i^* v_i = 1`` holds by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DefectiveOrClustered, NonFinite

#: eigenvalues closer than this many machine epsilons times ||M|| are refused
SEPARATION_FACTOR = 1e3


def _check_finite(M):
    M = np.asarray(M)
    if M.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise NonFinite("matrix has non-finite entries")
    return M


def _check_square(M):
    M = _check_finite(M)
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    return M


def default_tau_real(M):
    """Imaginary-part threshold below which an eigenvalue counts as real."""
    return 1e-10 * max(1.0, float(np.linalg.norm(M, "fro")))


@dataclass(frozen=True)
class SpectralSummary:
    """Eigen-data of one diagonalizable matrix.

    Attributes
    ----------
    eigenvalues : (n,) complex array
    right_vectors : (n, n) complex array
        Columns are unit-norm right eigenvectors ``v_i``.
    left_rows : (n, n) complex array
        Row ``i`` is ``w_i^*``; equal to ``inv(right_vectors)``.
    kappas : (n,) float array
        ``kappa_i = ||v_i|| ||w_i||``.
    overlap : (n, n) complex array
        ``O[i, j] = (v_j^* v_i) * conj(w_j^* w_i)``; the diagonal is ``kappa**2``.
    real_mask : (n,) bool array
        ``|Im lambda_i| <= tau_real``.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    left_rows: np.ndarray
    kappas: np.ndarray
    overlap: np.ndarray
    real_mask: np.ndarray
    tau_real: float

    @property
    def n(self):
        return self.eigenvalues.shape[0]


def min_separation(eigenvalues):
    lam = np.asarray(eigenvalues)
    if lam.size < 2:
        return math.inf
    d = np.abs(lam[:, None] - lam[None, :])
    iu = np.triu_indices(lam.size, 1)
    return float(d[iu].min())


def eigen_decompose(M, tau_real=None):
    """Eigendecomposition with condition numbers and overlaps.

    Raises
    ------
    DefectiveOrClustered
        If two eigenvalues are closer than ``1e3 * eps * ||M||``.
    NonFinite
        On NaN or infinite input.
    """
    M = _check_square(M)
    n = M.shape[0]
    if tau_real is None:
        tau_real = default_tau_real(M)
    lam, V = np.linalg.eig(M)
    lam = lam.astype(complex)
    V = V.astype(complex)

    scale = float(np.linalg.norm(M, 2)) if n else 0.0
    threshold = SEPARATION_FACTOR * np.finfo(float).eps * scale
    sep = min_separation(lam)
    if n >= 2 and not sep > threshold:
        raise DefectiveOrClustered(
            f"eigenvalue separation {sep:.3e} is below {threshold:.3e}"
        )

    V = V / np.linalg.norm(V, axis=0)
    W = np.linalg.inv(V)
    kappas = np.linalg.norm(W, axis=1) * np.linalg.norm(V, axis=0)
    gram_right = V.conj().T @ V  # [j, i] = v_j^* v_i
    gram_left = W @ W.conj().T  # [j, i] = w_j^* w_i
    overlap = (gram_right * gram_left.conj()).T
    real_mask = np.abs(lam.imag) <= tau_real
    return SpectralSummary(
        matrix=M,
        eigenvalues=lam,
        right_vectors=V,
        left_rows=W,
        kappas=kappas,
        overlap=overlap,
        real_mask=real_mask,
        tau_real=float(tau_real),
    )


def kappa_V_upper(S: SpectralSummary):
    """Upper bound for the eigenvector condition number.

    The smaller of ``||V|| ||V^{-1}||`` with unit columns and
    ``sqrt(n * sum kappa_i^2)``.
    """
    unit_column = np.linalg.norm(S.right_vectors, 2) * np.linalg.norm(S.left_rows, 2)
    frobenius = math.sqrt(S.n * float(np.sum(S.kappas**2)))
    return max(1.0, float(min(unit_column, frobenius)))


@dataclass(frozen=True)
class GapStats:
    gap: float
    gap_real: float
    im_min: float
    delta: float
    gap_im_geq: float
    pair: tuple  # argmin (i, j), i < j, for ``gap``


def _masked_min(d, mask):
    if not mask.any():
        return math.inf, None
    masked = np.where(mask, d, np.inf)
    flat = int(np.argmin(masked))
    return float(masked.flat[flat]), divmod(flat, d.shape[1])


def gap_stats_from_eigenvalues(eigenvalues, delta=0.0, tau_real=0.0):
    """Gap statistics from a list of eigenvalues.

    Pairs are scanned in lexicographic ``(i, j)`` order, so ties resolve to
    the smallest pair.  Empty minimizations give ``inf``.
    """
    lam = np.asarray(eigenvalues, dtype=complex)
    n = lam.size
    if n < 2:
        raise ValueError("gap statistics need at least two eigenvalues")
    d = np.abs(lam[:, None] - lam[None, :])
    upper = np.triu(np.ones((n, n), dtype=bool), 1)
    real = np.abs(lam.imag) <= tau_real
    absim = np.abs(lam.imag)

    gap, pair = _masked_min(d, upper)
    gap_real, _ = _masked_min(d, upper & (real[:, None] | real[None, :]))
    nonreal = ~real
    im_min = float(absim[nonreal].min()) if nonreal.any() else math.inf
    far = absim >= delta
    gap_im, _ = _masked_min(d, upper & far[:, None] & far[None, :])
    return GapStats(
        gap=gap,
        gap_real=gap_real,
        im_min=im_min,
        delta=float(delta),
        gap_im_geq=gap_im,
        pair=tuple(int(p) for p in pair),
    )


def gap_stats(S: SpectralSummary, delta=0.0):
    return gap_stats_from_eigenvalues(S.eigenvalues, delta=delta, tau_real=S.tau_real)


def batch_gap_stats(eigenvalues, tau_real):
    """Vectorized ``gap``, ``gap_real`` and ``im_min`` over a stack of spectra.

    Parameters
    ----------
    eigenvalues : (T, n) complex array
    tau_real : float or (T,) array

    Returns
    -------
    gap, gap_real, im_min, pair_i, pair_j : arrays of length T
    """
    lam = np.asarray(eigenvalues, dtype=complex)
    T, n = lam.shape
    tau = np.broadcast_to(np.asarray(tau_real, dtype=float), (T,))
    d = np.abs(lam[:, :, None] - lam[:, None, :])
    upper = np.triu(np.ones((n, n), dtype=bool), 1)
    d_up = np.where(upper, d, np.inf).reshape(T, n * n)
    flat = np.argmin(d_up, axis=1)
    gap = d_up[np.arange(T), flat]
    pi, pj = np.divmod(flat, n)

    real = np.abs(lam.imag) <= tau[:, None]
    touches_real = (real[:, :, None] | real[:, None, :]) & upper
    gap_real = np.where(touches_real, d, np.inf).reshape(T, -1).min(axis=1)
    im_min = np.where(~real, np.abs(lam.imag), np.inf).min(axis=1)
    return gap, gap_real, im_min, pi, pj


def singular_values(M):
    """All singular values, descending."""
    M = _check_finite(M)
    return np.linalg.svd(M, compute_uv=False)


@dataclass(frozen=True)
class CertificateResult:
    holds: bool
    product: float
    count_in_disk: int
    radius: float


def gap_certificate_check(M, z, r, eigenvalues=None):
    """Two eigenvalues in ``D(z, r)`` force ``sigma_n * sigma_{n-1} <= r^2``.

    ``holds`` is computed with a floating-point slack
    ``1e-12 r^2 + 8 n eps ||zI - M|| sigma_{n-1}``.  When fewer than two
    eigenvalues lie in the disk the statement is vacuous and ``holds`` is
    True.  ``holds == False`` is a falsification event and is never
    suppressed.
    """
    if r < 0:
        raise ValueError("radius must be nonnegative")
    M = _check_square(M)
    n = M.shape[0]
    if n < 2:
        raise ValueError("the certificate needs n >= 2")
    if eigenvalues is None:
        eigenvalues = np.linalg.eigvals(M)
    count = int(np.sum(np.abs(np.asarray(eigenvalues) - z) <= r))
    s = singular_values(z * np.eye(n) - M)
    product = float(s[-1] * s[-2])
    if count < 2:
        return CertificateResult(True, product, count, float(r))
    slack = 1e-12 * r * r + 8 * n * np.finfo(float).eps * float(s[0]) * float(s[-2])
    return CertificateResult(bool(product <= r * r + slack), product, count, float(r))
