"""Proper orthogonal decomposition of full-field snapshots."""

from dataclasses import dataclass

import numpy as np

from .. import linalg
from .snapshots import SnapshotSet

__all__ = ["PodBasis", "pod_reduce"]


@dataclass(frozen=True)
class PodBasis:
    mean: np.ndarray
    basis: np.ndarray
    singular_values: np.ndarray
    energy_fraction: float

    @property
    def n_modes(self):
        return self.basis.shape[1]

    def project(self, X_full):
        return (np.asarray(X_full, dtype=float) - self.mean) @ self.basis

    def lift(self, coeffs):
        return np.asarray(coeffs) @ self.basis.T + self.mean


def pod_reduce(snap, rank=None, energy=None):
    """Mean-subtracted SVD truncated by ``rank`` or captured ``energy`` fraction.

    Energy is measured on squared singular values. Exactly one of ``rank``
    and ``energy`` should be given; with neither, all modes are kept.

    Returns ``(PodBasis, SnapshotSet)`` where the new set holds the POD
    coefficients (derivatives, if present, are projected too).
    """
    if rank is not None and energy is not None:
        raise ValueError("give rank or energy, not both")
    X = snap.states
    mean = X.mean(axis=0)
    U, S, V = linalg.svd(X - mean)
    if energy is not None and not 0 < energy <= 1:
        raise ValueError("energy must lie in (0, 1]")
    if energy is not None and energy < 1:
        _, S_r, V_r = linalg.truncate_rank(U, S, V, tol=1.0 - energy)
    else:
        _, S_r, V_r = linalg.truncate_rank(U, S, V, rank=S.size if rank is None else rank)
    total = float(np.sum(S**2))
    frac = float(np.sum(S_r**2) / total) if total > 0 else 1.0
    pod = PodBasis(mean=mean, basis=V_r, singular_values=S_r, energy_fraction=frac)
    coeffs = pod.project(X)
    dcoeffs = None if snap.derivatives is None else snap.derivatives @ V_r
    prov = dict(snap.provenance, pod_modes=int(V_r.shape[1]), pod_energy=frac)
    return pod, SnapshotSet(coeffs, dcoeffs, dt=snap.dt, provenance=prov)
