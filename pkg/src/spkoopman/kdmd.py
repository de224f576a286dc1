"""Kernel DMD in discrete and continuous time.

Both variants work purely with Gram matrices. With the symmetric
eigendecomposition ``G = Q diag(s**2) Q^H`` truncated to rank ``r``::

    K_hat = diag(1/s) Q^H  G'  Q diag(1/s)
    phi(x) = k(x, X) Q diag(1/s) v_hat

where ``G'[i, j] = k(x_{i+1}, x_j)`` in discrete time and
``G'[i, j] = xdot_i . grad_x k(x_i, x_j)`` in continuous time.
"""

import warnings

import numpy as np
import scipy.linalg as sla

from . import linalg
from .edmd import regress_modes
from .exceptions import RankTruncationWarning
from .features import gram, gram_dot
from .model import KoopmanModel

__all__ = [
    "fit_kdmd_discrete",
    "fit_kdmd_continuous",
    "fit_kdmd_from_grams",
    "gram_basis",
    "gram_spectrum",
    "GRAM_RTOL",
]

# Gram eigenvalues below this fraction of the largest are never retained.
GRAM_RTOL = 1e-12


def gram_spectrum(G):
    """Eigenpairs of a symmetrized Gram matrix, eigenvalues descending."""
    G = 0.5 * (G + G.conj().T)
    w, Q = sla.eigh(G)
    return w[::-1], Q[:, ::-1]


def gram_basis(G, rank, spectrum=None):
    """Leading eigenvectors ``Q_r`` and ``sigma_r = sqrt(eigenvalues)`` of a Gram matrix.

    Returns ``(Q_r, sigma_r, info)``; ``info["rank_used"]`` may be smaller than
    the requested rank when the Gram matrix is numerically rank deficient.
    ``spectrum`` may pass a precomputed :func:`gram_spectrum`.
    """
    w, Q = gram_spectrum(G) if spectrum is None else spectrum
    wmax = w[0] if w.size else 0.0
    numerical_rank = int(np.sum(w > GRAM_RTOL * wmax)) if wmax > 0 else 0
    info = {
        "rank_requested": int(rank),
        "gram_numerical_rank": numerical_rank,
        "gram_min_eigenvalue": float(w[-1]) if w.size else 0.0,
    }
    r = min(int(rank), numerical_rank)
    if r < rank:
        info["warning"] = (
            f"requested rank {rank} exceeds Gram numerical rank {numerical_rank}; "
            f"using r={r}"
        )
        warnings.warn(info["warning"], RankTruncationWarning, stacklevel=3)
    info["rank_used"] = r
    return Q[:, :r], np.sqrt(w[:r]), info


def _fit(G, G_next, centers, kernel, rank, X_states, continuous, dt, spectrum=None):
    Q, s, info = gram_basis(G, rank, spectrum)
    if s.size == 0:
        raise ValueError("Gram matrix is numerically zero; no kernel features to fit")
    P = Q / s
    K_hat = P.conj().T @ G_next @ P
    lam, V = linalg.eig_general(K_hat)
    model = KoopmanModel(
        method="kdmd",
        continuous=continuous,
        eigenvalues=lam,
        eigenvectors=V,
        modes=np.zeros((lam.size, X_states.shape[1]), dtype=complex),
        dt=dt,
        kernel=kernel,
        centers=centers,
        gram_vectors=Q,
        gram_sqrt=s,
        info=info,
    )
    return model.with_modes(regress_modes(model.eigenfunctions(X_states), X_states))


def fit_kdmd_discrete(X, kernel, rank, dt=1.0, Y=None):
    """Discrete-time KDMD.

    Parameters
    ----------
    X : array, shape (M, N)
        A uniformly sampled trajectory. If ``Y`` is given instead, ``X`` and
        ``Y`` are snapshot pairs (``Y[i]`` one step after ``X[i]``), which is
        what shuffled cross-validation needs.
    kernel : KernelSpec
    rank : int
        Requested truncation ``r``; capped at the Gram numerical rank.
    """
    X = np.asarray(X, dtype=float)
    if Y is None:
        if X.shape[0] < 2:
            raise ValueError("need at least two snapshots")
        X0, X1, states = X[:-1], X[1:], X
    else:
        X0, X1 = X, np.asarray(Y, dtype=float)
        if X0.shape != X1.shape:
            raise ValueError("snapshot pairs must have matching shapes")
        states = X0
    G = gram(kernel, X0, X0)
    G_next = gram(kernel, X1, X0)
    return _fit(G, G_next, X0, kernel, rank, states, continuous=False, dt=float(dt))


def fit_kdmd_continuous(X, Xdot, kernel, rank, dt=None):
    """Continuous-time KDMD from paired states and derivatives."""
    X = np.asarray(X, dtype=float)
    Xdot = np.asarray(Xdot, dtype=float)
    if X.shape != Xdot.shape:
        raise ValueError("X and Xdot must have the same shape")
    G = gram(kernel, X, X)
    G_dot = gram_dot(kernel, X, Xdot, X)
    return _fit(
        G, G_dot, X, kernel, rank, X, continuous=True, dt=None if dt is None else float(dt)
    )


def fit_kdmd_from_grams(G, G_next, centers, kernel, rank, continuous, dt=None, spectrum=None):
    """KDMD from precomputed Gram matrices (``G_next`` is the shifted or
    derivative Gram matrix); modes are regressed on ``centers``.

    Lets callers sweeping the rank reuse one :func:`gram_spectrum`.
    """
    return _fit(
        G, G_next, centers, kernel, rank, centers, continuous=continuous,
        dt=None if dt is None else float(dt), spectrum=spectrum,
    )
