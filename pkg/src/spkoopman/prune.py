"""A-posteriori screening of eigenmodes on a validation trajectory.

Each eigenfunction is evolved linearly from its value at the initial state
and compared with its actual values along the trajectory. The worst
normalized deviation ``Q_i`` ranks the modes; the reconstruction error
``R(L)`` of the ``L`` best modes guides the cut-off.
"""

import csv
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import linalg

__all__ = [
    "PruneReport",
    "q_error",
    "r_curve",
    "reconstruction_error",
    "prune",
    "select_top",
    "default_cutoff",
    "write_prune_csv",
]

DEGENERATE_NORM = 1e-14


@dataclass(frozen=True)
class PruneReport:
    q_errors: np.ndarray
    order: np.ndarray
    r_curve: np.ndarray
    chosen: int

    def ranked(self):
        """Rows ``(L, Q_{i_L}, R_L, mode_index)`` for ``L = 1..n_modes``."""
        return [
            (k + 1, float(self.q_errors[i]), float(self.r_curve[k]), int(i))
            for k, i in enumerate(self.order)
        ]


def q_error(model, traj, dt):
    """Maximal normalized deviation from linear evolution, one value per mode.

    ``Q_i = max_m |phi_i(x_m) - E_i(t_m) phi_i(x_0)| / rms_m |phi_i(x_m)|``
    with ``E_i`` the model's evolution factor. Modes whose RMS value is below
    ``1e-14`` get ``Q = inf``.
    """
    traj = np.atleast_2d(np.asarray(traj, dtype=float))
    phi = model.eigenfunctions(traj)
    E = model.evolution(traj.shape[0], dt)
    dev = np.abs(phi - E * phi[0])
    rms = np.sqrt(np.mean(np.abs(phi) ** 2, axis=0))
    Q = np.full(model.n_modes, np.inf)
    ok = rms >= DEGENERATE_NORM
    Q[ok] = np.max(dev[:, ok], axis=0) / rms[ok]
    return Q


def _order(q):
    # ascending Q, ties by ascending index
    return np.lexsort((np.arange(q.size), q))


def reconstruction_error(phi, X):
    """``||(I - phi phi^+) X||_F / ||X||_F`` for an arbitrary regressor set."""
    X = np.asarray(X)
    nx = np.linalg.norm(X)
    if phi.shape[1] == 0 or nx == 0:
        return 1.0
    coef = linalg.lstsq(phi, X.astype(complex))
    return float(np.linalg.norm(X - phi @ coef) / nx)


def r_curve(model, traj, order):
    """Normalized reconstruction error of the top-``L`` modes for ``L = 1..n``.

    Uses a single Householder QR of the ordered eigenfunction matrix so every
    prefix is projected exactly; columns that are numerically dependent on
    earlier ones contribute nothing, which keeps the curve nonincreasing.
    """
    traj = np.atleast_2d(np.asarray(traj, dtype=float))
    phi = model.eigenfunctions(traj)[:, np.asarray(order, dtype=int)]
    return _prefix_errors(phi, traj)


def _prefix_errors(phi, X):
    M, L = phi.shape
    nx2 = np.linalg.norm(X) ** 2
    if L == 0 or nx2 == 0:
        return np.ones(L)
    Qf, Rf = sla.qr(phi, mode="economic")
    diag = np.abs(np.diag(Rf))
    scale = np.linalg.norm(phi, axis=0)
    keep = (diag > linalg.pinv_cutoff(phi.shape) * scale) & (scale > 0)
    # explicit residual updates rather than ||X||^2 - captured, which would
    # cancel and floor R near sqrt(eps)
    resid = np.asarray(X, dtype=complex).copy()
    coef = Qf.conj().T @ resid
    out = np.empty(L)
    for k in range(L):
        if keep[k]:
            resid -= np.outer(Qf[:, k], coef[k])
        out[k] = np.linalg.norm(resid) ** 2
    return np.sqrt(out / nx2)


def default_cutoff(q_sorted, threshold=0.05):
    """Largest ``L`` whose ``L``-th best mode still has ``Q <= threshold`` (at least 1)."""
    return max(int(np.sum(np.asarray(q_sorted) <= threshold)), 1)


def prune(model, traj, dt, cutoff=None, q_threshold=0.05):
    """Full a-posteriori analysis; returns a :class:`PruneReport`."""
    q = q_error(model, traj, dt)
    order = _order(q)
    R = r_curve(model, traj, order)
    chosen = default_cutoff(q[order], q_threshold) if cutoff is None else int(cutoff)
    if not 1 <= chosen <= model.n_modes:
        raise ValueError(f"cutoff must lie in [1, {model.n_modes}]")
    return PruneReport(q_errors=q, order=order, r_curve=R, chosen=chosen)


def select_top(model, report, n=None):
    """Reduced model keeping the ``n`` lowest-Q modes (default ``report.chosen``).

    Modes are carried over unchanged; they are refit by the sparsification
    stage.
    """
    n = report.chosen if n is None else int(n)
    if not 1 <= n <= model.n_modes:
        raise ValueError(f"n must lie in [1, {model.n_modes}]")
    return model.subset(report.order[:n], q_errors=report.q_errors[report.order[:n]].tolist())


def write_prune_csv(report, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["L_hat", "Q", "R", "mode_index"])
        for row in report.ranked():
            w.writerow([row[0], repr(row[1]), repr(row[2]), row[3]])
