"""DMD-family baselines: DMD, sparsity-promoting DMD, Kou's energy criterion
and weighted-l0 proximal gradient amplitude selection.

All of them share the a-posteriori amplitude model::

    X[m] ~ sum_i a_i lambda_i**m phi_i,      ||phi_i|| = 1

with per-step eigenvalues ``lambda_i`` and rows ``phi_i`` of the mode matrix.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import linalg
from .exceptions import NotConvergedWarning

__all__ = [
    "DmdModel",
    "SpdmdResult",
    "ProxResult",
    "fit_dmd",
    "koopman_as_dmd",
    "amplitude_problem",
    "spdmd_objective",
    "spdmd_gamma_max",
    "fit_spdmd",
    "kou_energy",
    "kou_weights",
    "hard_threshold",
    "prox_weighted_l0",
]

# ||lambda| - 1| below this uses the M-term branch of the geometric sum
UNIT_CIRCLE_TOL = 1e-9


@dataclass(frozen=True)
class DmdModel:
    """DMD terms ``a_i lambda_i**m phi_i`` stored with unit-norm mode rows ``phi_i``."""

    eigenvalues: np.ndarray
    modes: np.ndarray
    amplitudes: np.ndarray
    dt: float = 1.0
    info: dict = field(default_factory=dict, compare=False)

    @property
    def n_modes(self):
        return self.eigenvalues.size

    def vandermonde(self, n_samples):
        """``V[m, i] = lambda_i ** m`` for ``m = 0..n_samples-1``."""
        return self.eigenvalues[None, :] ** np.arange(n_samples)[:, None]

    def reconstruct(self, n_samples, amplitudes=None):
        a = self.amplitudes if amplitudes is None else np.asarray(amplitudes)
        return (self.vandermonde(n_samples) * a) @ self.modes

    def continuous_eigenvalues(self):
        with np.errstate(divide="ignore"):
            return np.log(self.eigenvalues.astype(complex)) / self.dt

    def with_amplitudes(self, amplitudes):
        return DmdModel(self.eigenvalues, self.modes, np.asarray(amplitudes), self.dt, self.info)


def amplitude_problem(eigenvalues, modes, X):
    """Quadratic form of ``||X - V diag(a) Phi||_F^2 = a^H P a - 2 Re(q^H a) + s``."""
    X = np.asarray(X, dtype=complex)
    V = np.asarray(eigenvalues)[None, :] ** np.arange(X.shape[0])[:, None]
    P = (V.conj().T @ V) * (modes @ modes.conj().T).conj()
    q = np.sum((V.conj().T @ X) * modes.conj(), axis=1)
    return P, q, float(np.vdot(X, X).real)


def fit_dmd(X, rank=None, dt=1.0):
    """SVD-projected DMD of a time-ordered trajectory.

    Parameters
    ----------
    X : array, shape (M, N)
        Snapshots as rows.
    rank : int, optional
        SVD truncation of the first ``M - 1`` snapshots; defaults to their
        numerical rank.

    Returns
    -------
    DmdModel
        Modes are ``U W`` (unit norm because ``U`` is orthonormal) and
        amplitudes solve the Vandermonde least-squares problem over all
        ``M`` snapshots.
    """
    X = np.asarray(X, dtype=float)
    if X.shape[0] < 2:
        raise ValueError("need at least two snapshots")
    X0, X1 = X[:-1].T, X[1:].T
    U, S, V = linalg.svd(X0)
    if rank is None:
        rank = int(np.sum(S > linalg.pinv_cutoff(X0.shape) * (S[0] if S.size else 0.0)))
    U, S, V = linalg.truncate_rank(U, S, V, rank=rank)
    A_tilde = U.T @ X1 @ V / S
    lam, W = linalg.eig_general(A_tilde)
    Phi = (U @ W).T
    Phi = Phi / np.linalg.norm(Phi, axis=1, keepdims=True)
    P, q, _ = amplitude_problem(lam, Phi, X)
    a = linalg.lstsq(P, q[:, None])[:, 0]
    return DmdModel(lam, Phi, a, float(dt), info={"rank": int(rank)})


def koopman_as_dmd(model, x0, dt=None):
    """Express a Koopman model's prediction from ``x0`` in amplitude form.

    ``x(t_m) = sum_i phi_i(x0) E_i(t_m) b_i`` gives unit modes
    ``b_i / ||b_i||`` with amplitudes ``phi_i(x0) ||b_i||``; the eigenvalues
    become per-step multipliers at ``dt``.
    """
    dt = model.dt if dt is None else dt
    phi0 = model.eigenfunctions(np.asarray(x0, dtype=float).reshape(1, -1))[0]
    B = np.asarray(model.modes)
    nb = np.linalg.norm(B, axis=1)
    safe = np.where(nb > 0, nb, 1.0)
    return DmdModel(
        eigenvalues=model.discrete_eigenvalues(dt),
        modes=B / safe[:, None],
        amplitudes=phi0 * nb,
        dt=float(dt),
        info={"source": model.method},
    )


def kou_energy(dmd, n_samples):
    """``I_i = sum_{j<M} |a_i lambda_i**j|`` in closed form.

    Uses ``M |a_i|`` when ``||lambda_i| - 1| < 1e-9``.
    """
    return np.abs(dmd.amplitudes) * _geometric(np.abs(dmd.eigenvalues), n_samples)


def _geometric(r, M):
    r = np.asarray(r, dtype=float)
    near = np.abs(r - 1.0) < UNIT_CIRCLE_TOL
    safe = np.where(near, 0.5, r)
    return np.where(near, float(M), (1.0 - safe**M) / (1.0 - safe))


def kou_weights(dmd, n_samples):
    """Weights ``w_i = 1 / beta_i**2`` with ``beta_i`` the geometric factor of :func:`kou_energy`."""
    return 1.0 / _geometric(np.abs(dmd.eigenvalues), n_samples) ** 2


def spdmd_objective(P, q, s, a, gamma, n_samples):
    return float(
        (np.vdot(a, P @ a).real - 2.0 * np.vdot(q, a).real + s) / (2.0 * n_samples)
        + gamma * np.sum(np.abs(a))
    )


def spdmd_gamma_max(dmd, X):
    """Smallest ``gamma`` for which all amplitudes vanish: ``max |q_i| / M``."""
    P, q, _ = amplitude_problem(dmd.eigenvalues, dmd.modes, X)
    return float(np.max(np.abs(q)) / np.asarray(X).shape[0])


@dataclass
class SpdmdResult:
    amplitudes: np.ndarray
    support: np.ndarray
    n_iter: int
    converged: bool
    primal_residual: float
    dual_residual: float
    objective_history: np.ndarray
    polished: np.ndarray = None


def _soft(v, t):
    mag = np.abs(v)
    return np.where(mag > t, (1.0 - t / np.where(mag > 0, mag, 1.0)) * v, 0.0)


def fit_spdmd(
    dmd, X, gamma, rho=1.0, abstol=1e-8, reltol=1e-6, max_iter=10_000, polish=False
):
    """Sparsity-promoting amplitudes by ADMM.

    Solves ``min_a ||X - V diag(a) Phi||^2 / (2M) + gamma sum |a_i|`` over the
    fixed DMD modes with the splitting ``a = z``. The modes are never refit;
    ``polish=True`` additionally returns least-squares amplitudes restricted
    to the selected support.
    """
    X = np.asarray(X, dtype=complex)
    M = X.shape[0]
    P, q, s = amplitude_problem(dmd.eigenvalues, dmd.modes, X)
    P, q = P / M, q / M
    n = q.size
    chol = sla.cho_factor(P + rho * np.eye(n))
    z = np.zeros(n, dtype=complex)
    u = np.zeros(n, dtype=complex)
    hist = []
    converged = False
    r_norm = s_norm = np.inf
    k = 0
    for k in range(1, max_iter + 1):
        a = sla.cho_solve(chol, q + rho * (z - u))
        z_old = z
        z = _soft(a + u, gamma / rho)
        u = u + a - z
        r_norm = np.linalg.norm(a - z)
        s_norm = rho * np.linalg.norm(z - z_old)
        hist.append(spdmd_objective(P * M, q * M, s, z, gamma, M))
        eps_pri = np.sqrt(n) * abstol + reltol * max(np.linalg.norm(a), np.linalg.norm(z))
        eps_dual = np.sqrt(n) * abstol + reltol * np.linalg.norm(rho * u)
        if r_norm < eps_pri and s_norm < eps_dual:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"ADMM stopped after {max_iter} iterations "
            f"(primal {r_norm:.2e}, dual {s_norm:.2e})",
            NotConvergedWarning,
            stacklevel=2,
        )
    support = np.flatnonzero(z != 0)
    polished = None
    if polish:
        polished = np.zeros(n, dtype=complex)
        if support.size:
            Ps = P[np.ix_(support, support)]
            polished[support] = linalg.lstsq(Ps, q[support, None])[:, 0]
    return SpdmdResult(
        amplitudes=z,
        support=support,
        n_iter=k,
        converged=converged,
        primal_residual=float(r_norm),
        dual_residual=float(s_norm),
        objective_history=np.asarray(hist),
        polished=polished,
    )


def hard_threshold(a, threshold, weights=None):
    """Keep ``a_i`` when ``|a_i / sqrt(w_i)| >= threshold`` and zero it otherwise.

    This is the exact proximal map of ``x -> (threshold**2 / 2) sum w_i [x_i != 0]``.
    """
    a = np.asarray(a)
    w = np.ones(a.shape) if weights is None else np.asarray(weights, dtype=float)
    return np.where(np.abs(a) / np.sqrt(w) >= threshold, a, 0.0)


@dataclass
class ProxResult:
    iterates: np.ndarray
    step_sizes: np.ndarray

    @property
    def amplitudes(self):
        return self.iterates[-1]

    @property
    def support(self):
        return np.flatnonzero(self.iterates[-1] != 0)


def prox_weighted_l0(
    dmd,
    penalty,
    steps=1,
    eta=1e-12,
    weights=None,
    X_dmd=None,
    n_samples=None,
    a0=None,
):
    """Proximal gradient iterations for the weighted-l0 amplitude problem.

    Minimizes ``Q(a) + (penalty / 2) sum_i w_i [a_i != 0]`` with
    ``Q(a) = ||X_dmd - V diag(a) Phi||_F^2 / 2`` by ::

        a <- hard_threshold(a - eta_k grad Q(a), sqrt(penalty eta_k), w)

    Parameters
    ----------
    dmd : DmdModel
    penalty : float
        ``lambda >= 0``; zero gives plain gradient descent.
    steps : int
    eta : float or sequence
        Step sizes ``eta_k``; a scalar is reused for all steps.
    weights : array, optional
        Defaults to :func:`kou_weights`, which makes the first step from the
        DMD amplitudes select exactly the modes with Kou energy at least
        ``sqrt(penalty eta_1)``.
    X_dmd : array, optional
        Target; defaults to the DMD reconstruction over ``n_samples``.
    a0 : array, optional
        Starting amplitudes; defaults to the DMD amplitudes.
    """
    if penalty < 0:
        raise ValueError("penalty must be nonnegative")
    if X_dmd is None:
        if n_samples is None:
            raise ValueError("give X_dmd or n_samples")
        X_dmd = dmd.reconstruct(n_samples)
    X_dmd = np.asarray(X_dmd, dtype=complex)
    M = X_dmd.shape[0]
    w = kou_weights(dmd, M) if weights is None else np.asarray(weights, dtype=float)
    etas = np.broadcast_to(np.asarray(eta, dtype=float), (steps,)) if np.ndim(eta) == 0 else (
        np.asarray(eta, dtype=float)[:steps]
    )
    if etas.size < steps:
        raise ValueError("eta schedule shorter than the number of steps")
    P, q, _ = amplitude_problem(dmd.eigenvalues, dmd.modes, X_dmd)
    a = np.array(dmd.amplitudes if a0 is None else a0, dtype=complex)
    out = [a.copy()]
    for k in range(steps):
        grad = P @ a - q
        a = hard_threshold(a - etas[k] * grad, np.sqrt(penalty * etas[k]), w)
        out.append(a.copy())
    return ProxResult(iterates=np.array(out), step_sizes=np.array(etas))
