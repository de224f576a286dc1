"""The fitted Koopman model shared by EDMD, KDMD and the selection stages."""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .features import (
    HermiteDictionary,
    KernelSpec,
    eval_dictionary,
    eval_dictionary_dot,
    gram,
    gram_dot,
)

__all__ = ["KoopmanModel", "evolution_factors"]


@dataclass(frozen=True)
class KoopmanModel:
    """Koopman triplets (eigenvalues, eigenfunctions, modes).

    Eigenfunctions are ``phi(x) = features(x) @ eigenvectors`` where the
    features are the dictionary ``Psi(x)`` for EDMD, and
    ``k(x, centers) @ Q_r @ diag(1 / sigma_r)`` for KDMD. Reconstruction of
    the state is ``x ~ phi(x) @ modes``.

    ``eigenvalues`` hold continuous-time rates ``mu`` when ``continuous`` is
    True and per-step multipliers ``lambda`` otherwise (``dt`` is then the
    sampling interval of the training data).
    """

    method: str
    continuous: bool
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    modes: np.ndarray
    dt: Optional[float] = None
    dictionary: Optional[HermiteDictionary] = None
    kernel: Optional[KernelSpec] = None
    centers: Optional[np.ndarray] = None
    gram_vectors: Optional[np.ndarray] = None
    gram_sqrt: Optional[np.ndarray] = None
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.method not in ("edmd", "kdmd"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "edmd" and self.dictionary is None:
            raise ValueError("EDMD models need a dictionary")
        if self.method == "kdmd" and (self.kernel is None or self.centers is None):
            raise ValueError("KDMD models need a kernel and training centers")
        if not self.continuous and not (self.dt and self.dt > 0):
            raise ValueError("discrete-time models need dt > 0")

    @property
    def n_modes(self):
        return self.eigenvalues.size

    @property
    def state_dim(self):
        return self.modes.shape[1]

    @property
    def projection(self):
        """``Q_r diag(1/sigma_r)``, mapping kernel rows to reduced features."""
        # fixed layout keeps BLAS summation order (and so results) identical
        # for fitted and deserialized models
        return np.ascontiguousarray(self.gram_vectors / self.gram_sqrt)

    def features(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.method == "edmd":
            return eval_dictionary(self.dictionary, X)
        return gram(self.kernel, X, self.centers) @ self.projection

    def feature_derivative(self, X, Xdot):
        """Features differentiated along ``Xdot``: ``(xdot . grad) features``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.method == "edmd":
            return eval_dictionary_dot(self.dictionary, X, Xdot)
        return gram_dot(self.kernel, X, Xdot, self.centers) @ self.projection

    def eigenfunctions(self, X):
        """Eigenfunction values, shape ``(len(X), n_modes)``."""
        return self.features(X) @ self.eigenvectors

    def eigenfunction_derivative(self, X, Xdot):
        return self.feature_derivative(X, Xdot) @ self.eigenvectors

    def continuous_eigenvalues(self):
        """``mu``; for discrete models the principal branch ``Log(lambda)/dt``."""
        if self.continuous:
            return self.eigenvalues
        with np.errstate(divide="ignore"):
            return np.log(self.eigenvalues.astype(complex)) / self.dt

    def discrete_eigenvalues(self, dt=None):
        """Per-step multipliers over ``dt`` (defaults to the model's own)."""
        if self.continuous:
            if dt is None:
                raise ValueError("continuous models need dt for discrete eigenvalues")
            return np.exp(self.eigenvalues * dt)
        if dt is None or np.isclose(dt, self.dt, rtol=1e-12, atol=0):
            return self.eigenvalues.astype(complex)
        return np.exp(self.continuous_eigenvalues() * dt)

    def evolution(self, n_samples, dt=None):
        """Linear-evolution factors ``E[m, i]`` at ``t_m = m * dt``."""
        return evolution_factors(self, n_samples, dt)

    def subset(self, indices, modes=None, **info):
        """Model restricted to the given mode indices (order preserved)."""
        indices = np.asarray(indices, dtype=int)
        merged = dict(self.info)
        merged.update(info)
        merged["parent_indices"] = [
            int(self.info.get("parent_indices", range(self.n_modes))[i]) for i in indices
        ]
        return replace(
            self,
            eigenvalues=self.eigenvalues[indices],
            eigenvectors=self.eigenvectors[:, indices],
            modes=self.modes[indices] if modes is None else np.asarray(modes),
            info=merged,
        )

    def with_modes(self, modes, **info):
        merged = dict(self.info)
        merged.update(info)
        return replace(self, modes=np.asarray(modes), info=merged)


def evolution_factors(model, n_samples, dt=None):
    """``E[m, i] = exp(mu_i m dt)`` (continuous) or ``lambda_i ** m`` (discrete).

    Discrete models sampled at their own ``dt`` use exact integer powers, so
    negative real multipliers are handled without any branch choice.
    """
    m = np.arange(n_samples)
    if model.continuous:
        if dt is None:
            raise ValueError("continuous models need the sampling interval dt")
        return np.exp(np.outer(m * dt, model.eigenvalues))
    lam = model.eigenvalues.astype(complex)
    if dt is None:
        dt = model.dt
    ratio = dt / model.dt
    k = round(ratio)
    if abs(ratio - k) < 1e-9 and k >= 1:
        return lam[None, :] ** (k * m[:, None])
    return np.exp(np.outer(m * dt, model.continuous_eigenvalues()))
