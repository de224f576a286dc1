"""Dense linear-algebra primitives shared by every fitting routine.

Thin, deterministic wrappers around LAPACK (via :mod:`scipy.linalg`):

* :func:`svd` and :func:`truncate_rank` for economy SVDs and rank selection,
* :func:`eig_general` for nonsymmetric eigenproblems with exact conjugate
  pairing and a fixed ordering,
* :func:`pinv` and :func:`lstsq` with a single reproducible singular-value
  cutoff.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .exceptions import ConvergenceError

__all__ = [
    "EigenDecomposition",
    "svd",
    "truncate_rank",
    "eig_general",
    "pair_conjugates",
    "pinv",
    "lstsq",
    "pinv_cutoff",
]


def _as_finite(M, name="M"):
    M = np.asarray(M)
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return M


def pinv_cutoff(shape, dtype=float):
    """Relative singular-value cutoff ``max(shape) * eps`` used everywhere."""
    return max(shape) * np.finfo(np.result_type(dtype, float)).eps


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenpairs of a square matrix; column ``i`` pairs with ``eigenvalues[i]``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __iter__(self):
        yield self.eigenvalues
        yield self.eigenvectors

    def residuals(self, M):
        """Per-pair ``||M v - lambda v||_2``."""
        R = M @ self.eigenvectors - self.eigenvectors * self.eigenvalues
        return np.linalg.norm(R, axis=0)


def svd(M):
    """Economy SVD ``M = U @ diag(S) @ V.T`` with ``S`` sorted descending.

    Falls back from the divide-and-conquer driver to ``gesvd`` before giving
    up; raises :class:`ConvergenceError` carrying the LAPACK ``info`` count.
    """
    M = _as_finite(M)
    try:
        U, S, Vh = sla.svd(M, full_matrices=False, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        try:
            U, S, Vh = sla.svd(M, full_matrices=False, lapack_driver="gesvd")
        except np.linalg.LinAlgError as exc:
            info = _lapack_info(exc)
            raise ConvergenceError("gesvd", info) from exc
    return U, S, Vh.conj().T


def _lapack_info(exc):
    digits = [int(tok) for tok in str(exc).replace(")", " ").split() if tok.isdigit()]
    return digits[0] if digits else -1


def truncate_rank(U, S, V, rank=None, tol=None):
    """Keep the leading singular triplets.

    Exactly one of ``rank`` (a count) or ``tol`` (an energy fraction in
    (0, 1)) must be given. With ``tol`` the smallest ``r`` satisfying
    ``sum(S[:r]**2) / sum(S**2) >= 1 - tol`` is kept.
    """
    if (rank is None) == (tol is None):
        raise ValueError("give exactly one of rank or tol")
    S = np.asarray(S)
    if rank is not None:
        rank = int(rank)
        if rank > S.size:
            raise ValueError(f"rank {rank} exceeds the {S.size} singular values")
        if rank < 0:
            raise ValueError("rank must be nonnegative")
        r = rank
    else:
        if not 0.0 < tol < 1.0:
            raise ValueError("tol must lie in (0, 1)")
        energy = np.cumsum(S**2)
        total = energy[-1] if energy.size else 0.0
        if total == 0.0:
            r = 0
        else:
            r = int(np.searchsorted(energy / total, 1.0 - tol, side="left")) + 1
            r = min(r, S.size)
    return U[:, :r], S[:r], V[:, :r]


def pair_conjugates(eigenvalues, eigenvectors, tol=None):
    """Snap the spectrum of a real matrix onto exact conjugate pairs.

    Eigenvalues with ``|imag| <= tol`` become real (and their eigenvectors
    real); every remaining eigenvalue with positive imaginary part is matched
    to the nearest unmatched eigenvalue in the lower half plane and the pair
    is replaced by ``(lam, conj(lam))`` with conjugate eigenvectors.
    """
    lam = np.array(eigenvalues, dtype=complex)
    vec = np.array(eigenvectors, dtype=complex)
    if lam.size == 0:
        return lam, vec
    scale = max(np.max(np.abs(lam)), 1.0)
    if tol is None:
        tol = 1e3 * np.finfo(float).eps * scale

    is_real = np.abs(lam.imag) <= tol
    lam[is_real] = lam[is_real].real
    vec[:, is_real] = vec[:, is_real].real

    upper = np.flatnonzero(~is_real & (lam.imag > 0))
    lower = list(np.flatnonzero(~is_real & (lam.imag < 0)))
    for i in upper:
        if not lower:
            break
        dist = np.abs(lam[lower] - np.conj(lam[i]))
        j = lower.pop(int(np.argmin(dist)))
        mid = 0.5 * (lam[i] + np.conj(lam[j]))
        lam[i], lam[j] = mid, np.conj(mid)
        # align the partner's phase before averaging the eigenvectors
        vi, vj = vec[:, i], np.conj(vec[:, j])
        phase = np.vdot(vj, vi)
        if abs(phase) > 0:
            vj = vj * (phase / abs(phase))
        v = 0.5 * (vi + vj)
        vec[:, i], vec[:, j] = v, np.conj(v)
    return lam, vec


def _normalize_columns(vec):
    norms = np.linalg.norm(vec, axis=0)
    norms[norms == 0] = 1.0
    vec = vec / norms
    # deterministic phase: largest-modulus entry real and positive
    k = np.argmax(np.abs(vec), axis=0)
    pivot = vec[k, np.arange(vec.shape[1])]
    phase = np.where(np.abs(pivot) > 0, pivot / np.abs(pivot), 1.0)
    return vec / phase


def _order(lam):
    # descending |lam|, ties by descending imaginary part
    mag = np.round(np.abs(lam), 12)
    return np.lexsort((-lam.imag, -mag))


def eig_general(M):
    """Eigendecomposition of a square (possibly nonsymmetric) matrix.

    Eigenvectors have unit 2-norm. For real input the spectrum is returned in
    exact conjugate pairs. Pairs are ordered by descending ``|lambda|`` with
    ties broken by descending imaginary part.
    """
    M = _as_finite(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("eig_general needs a square matrix")
    if M.shape[0] == 0:
        return EigenDecomposition(np.zeros(0, complex), np.zeros((0, 0), complex))
    try:
        lam, vec = sla.eig(M, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError("geev", _lapack_info(exc)) from exc
    lam = lam.astype(complex)
    vec = _normalize_columns(vec.astype(complex))
    if np.isrealobj(M):
        lam, vec = pair_conjugates(lam, vec)
        vec = _normalize_columns(vec)
        # re-impose exact conjugacy after the phase fix
        lam, vec = _reconjugate(lam, vec)
    order = _order(lam)
    return EigenDecomposition(lam[order], vec[:, order])


def _reconjugate(lam, vec):
    upper = np.flatnonzero(lam.imag > 0)
    lower = np.flatnonzero(lam.imag < 0)
    if lower.size == 0:
        return lam, vec
    for i in upper:
        j = lower[np.argmin(np.abs(lam[lower] - np.conj(lam[i])))]
        vec[:, j] = np.conj(vec[:, i])
    return lam, vec


def pinv(M):
    """Moore-Penrose pseudoinverse; singular values below
    ``max(rows, cols) * eps * s_max`` are treated as zero."""
    M = _as_finite(M)
    return np.linalg.pinv(M, rcond=pinv_cutoff(M.shape, M.dtype))


def lstsq(A, B):
    """Minimum-norm ``X`` minimizing ``||A X - B||_F`` (same cutoff as :func:`pinv`)."""
    A = _as_finite(A, "A")
    B = _as_finite(B, "B")
    X, *_ = sla.lstsq(A, B, cond=pinv_cutoff(A.shape, A.dtype), lapack_driver="gelsd")
    return X
