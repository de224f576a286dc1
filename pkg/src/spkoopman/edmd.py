"""Extended DMD in discrete and continuous time."""

import warnings

import numpy as np

from . import linalg
from .exceptions import ConditioningWarning
from .features import eval_dictionary, eval_dictionary_dot
from .model import KoopmanModel

__all__ = ["fit_edmd_discrete", "fit_edmd_continuous", "koopman_matrix", "regress_modes"]


def koopman_matrix(Psi, Psi_next, svd_rank=None, solver="normal"):
    """Least-squares Koopman matrix from features and their images.

    The minimal-norm minimizer of ``||Psi_next - Psi K||_F`` is
    ``K = G^+ A`` with ``G = Psi^H Psi`` and ``A = Psi^H Psi_next``.
    ``solver="normal"`` (default) forms ``G^+ A`` literally;
    ``solver="lstsq"`` computes ``Psi^+ Psi_next`` from an SVD of ``Psi``,
    which avoids squaring the condition number of ill-conditioned
    dictionaries. With ``svd_rank`` the
    features are first projected onto the leading right-singular directions
    ``Z_r`` of ``Psi`` and the reduced matrix is returned together with
    ``Z_r`` (otherwise ``Z_r`` is None).

    Returns
    -------
    K : ndarray
    Z : ndarray or None
    report : dict
        Conditioning diagnostics: condition numbers of ``Psi`` and ``G`` and the
        numerical rank of the matrix the solver inverts.
    """
    Z = None
    if svd_rank is not None:
        U, S, V = linalg.svd(Psi)
        _, _, Z = linalg.truncate_rank(U, S, V, rank=svd_rank)
        Psi = Psi @ Z
        Psi_next = Psi_next @ Z
    if solver == "lstsq":
        K = linalg.lstsq(Psi, Psi_next)
    elif solver == "normal":
        G = Psi.conj().T @ Psi
        K = linalg.pinv(G) @ (Psi.conj().T @ Psi_next)
    else:
        raise ValueError(f"unknown solver {solver!r}")

    # G = Psi^H Psi squares the singular values of Psi; rank is judged on the
    # matrix the chosen solver actually inverts
    s = np.linalg.svd(Psi, compute_uv=False)
    n = Psi.shape[1]
    s_eff = s**2 if solver == "normal" else s
    shape = (n, n) if solver == "normal" else Psi.shape
    cutoff = linalg.pinv_cutoff(shape) * (s_eff[0] if s.size else 0.0)
    rank = int(np.sum(s_eff > cutoff))
    cond = float(s[0] / s[-1]) if s.size and s[-1] > 0 else float("inf")
    report = {
        "effective_rank": rank,
        "n_features": int(n),
        "feature_condition": cond,
        "gram_condition": cond**2,
        "solver": solver,
    }
    if rank < n:
        what = "normal-equation matrix" if solver == "normal" else "feature matrix"
        report["warning"] = f"{what} is rank deficient ({rank} < {n}); consider svd_rank"
        warnings.warn(report["warning"], ConditioningWarning, stacklevel=3)
    return K, Z, report


def regress_modes(phi, X):
    """Koopman modes ``B = phi^+ X`` (ordinary least squares)."""
    return linalg.lstsq(phi, np.asarray(X, dtype=complex))


def _assemble(Psi, Psi_next, svd_rank, solver):
    K, Z, report = koopman_matrix(Psi, Psi_next, svd_rank, solver)
    lam, W = linalg.eig_general(K)
    V = W if Z is None else Z @ W
    if svd_rank is not None:
        report["svd_rank"] = int(svd_rank)
    return lam, V, report


def fit_edmd_discrete(X, dictionary, dt=1.0, svd_rank=None, solver="normal"):
    """Discrete-time EDMD on one uniformly sampled trajectory.

    Parameters
    ----------
    X : array, shape (M, N)
        Sequential snapshots, ``M >= 2``.
    dictionary : HermiteDictionary
    dt : float
        Sampling interval.
    svd_rank : int, optional
        Number of right-singular feature directions to retain. Default keeps
        the full dictionary.
    solver : {"lstsq", "normal"}
        How ``K = G^+ A`` is evaluated; see :func:`koopman_matrix`.
    """
    X = np.asarray(X, dtype=float)
    if X.shape[0] < 2:
        raise ValueError("need at least two snapshots")
    Psi_all = eval_dictionary(dictionary, X)
    lam, V, report = _assemble(Psi_all[:-1], Psi_all[1:], svd_rank, solver)
    B = regress_modes(Psi_all @ V, X)
    return KoopmanModel(
        method="edmd",
        continuous=False,
        eigenvalues=lam,
        eigenvectors=V,
        modes=B,
        dt=float(dt),
        dictionary=dictionary,
        info=report,
    )


def fit_edmd_continuous(X, Xdot, dictionary, svd_rank=None, dt=None, solver="normal"):
    """Continuous-time EDMD from paired states and time derivatives.

    ``A`` is assembled from the directional derivatives
    ``(xdot_m . grad) Psi(x_m)``; the samples need no time ordering. ``dt``
    is optional metadata used only for discrete conversions downstream.
    """
    X = np.asarray(X, dtype=float)
    Xdot = np.asarray(Xdot, dtype=float)
    if X.shape != Xdot.shape:
        raise ValueError("X and Xdot must have the same shape")
    Psi = eval_dictionary(dictionary, X)
    Psi_dot = eval_dictionary_dot(dictionary, X, Xdot)
    mu, V, report = _assemble(Psi, Psi_dot, svd_rank, solver)
    B = regress_modes(Psi @ V, X)
    return KoopmanModel(
        method="edmd",
        continuous=True,
        eigenvalues=mu,
        eigenvectors=V,
        modes=B,
        dt=None if dt is None else float(dt),
        dictionary=dictionary,
        info=report,
    )
