"""Explicit dictionaries for EDMD and differentiable kernels for KDMD.

The dictionary is a tensor-product basis of normalized probabilists' Hermite
polynomials ``h_n = He_n / sqrt(n!)``, which have unit norm under the standard
Gaussian measure. Kernels follow the usual conventions::

    linear       k(x, y) = x . y
    polynomial   k(x, y) = (1 + x . y) ** degree
    gaussian     k(x, y) = exp(-||x - y||**2 / sigma**2)
"""

from dataclasses import dataclass
from functools import cached_property
from itertools import product
from math import comb, factorial, sqrt

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import eval_hermitenorm

__all__ = [
    "HermiteDictionary",
    "KernelSpec",
    "eval_dictionary",
    "eval_dictionary_grad",
    "eval_dictionary_dot",
    "gram",
    "gram_dot",
    "kernel_grad",
]


@dataclass(frozen=True)
class HermiteDictionary:
    """Tensor-product normalized Hermite dictionary.

    Parameters
    ----------
    max_order : int
        Highest polynomial order.
    state_dim : int
        Number of state components ``N``.
    per_dimension_order : bool
        If True (default) every component runs up to ``max_order``
        independently, giving ``(max_order + 1) ** N`` features. Otherwise
        only multi-indices of total degree ``<= max_order`` are kept,
        giving ``C(max_order + N, N)`` features.
    """

    max_order: int
    state_dim: int
    per_dimension_order: bool = True
    kind: str = "hermite"

    def __post_init__(self):
        if self.kind != "hermite":
            raise ValueError(f"unsupported dictionary kind {self.kind!r}")
        if self.max_order < 0 or self.state_dim < 1:
            raise ValueError("need max_order >= 0 and state_dim >= 1")

    @cached_property
    def multi_indices(self):
        """Exponent tuples, lexicographic with the first component slowest."""
        idx = product(range(self.max_order + 1), repeat=self.state_dim)
        if not self.per_dimension_order:
            idx = (a for a in idx if sum(a) <= self.max_order)
        return np.array(list(idx), dtype=int).reshape(-1, self.state_dim)

    @property
    def n_features(self):
        if self.per_dimension_order:
            return (self.max_order + 1) ** self.state_dim
        return comb(self.max_order + self.state_dim, self.state_dim)

    def to_dict(self):
        return {
            "kind": self.kind,
            "max_order": self.max_order,
            "state_dim": self.state_dim,
            "per_dimension_order": self.per_dimension_order,
        }


def _hermite_tables(X, order):
    """``H[m, d, n] = h_n(X[m, d])`` and its derivative table."""
    n = np.arange(order + 1)
    norm = np.array([sqrt(factorial(k)) for k in n])
    H = eval_hermitenorm(n[None, None, :], X[:, :, None]) / norm
    # d/dx h_n = sqrt(n) h_{n-1}
    dH = np.zeros_like(H)
    if order >= 1:
        dH[:, :, 1:] = np.sqrt(n[1:]) * H[:, :, :-1]
    return H, dH


def _check_states(spec, X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != spec.state_dim:
        raise ValueError(f"expected {spec.state_dim} state components, got {X.shape[1]}")
    return X


def eval_dictionary(spec, X):
    """Feature matrix ``Psi`` of shape ``(M, L)``; row ``m`` is ``Psi(X[m])``."""
    X = _check_states(spec, X)
    H, _ = _hermite_tables(X, spec.max_order)
    alpha = spec.multi_indices
    out = np.ones((X.shape[0], alpha.shape[0]))
    for d in range(spec.state_dim):
        out *= H[:, d, alpha[:, d]]
    return out


def eval_dictionary_grad(spec, X):
    """Gradient array of shape ``(M, L, N)``: ``[m, l, d] = d psi_l / d x_d``."""
    X = _check_states(spec, X)
    H, dH = _hermite_tables(X, spec.max_order)
    alpha = spec.multi_indices
    M, N = X.shape
    factors = np.stack([H[:, d, alpha[:, d]] for d in range(N)], axis=-1)
    grad = np.empty((M, alpha.shape[0], N))
    for d in range(N):
        g = dH[:, d, alpha[:, d]]
        for e in range(N):
            if e != d:
                g = g * factors[:, :, e]
        grad[:, :, d] = g
    return grad


def eval_dictionary_dot(spec, X, Xdot):
    """Directional derivative ``(xdot . grad) Psi`` of shape ``(M, L)``."""
    Xdot = np.atleast_2d(np.asarray(Xdot, dtype=float))
    return np.einsum("mld,md->ml", eval_dictionary_grad(spec, X), Xdot)


@dataclass(frozen=True)
class KernelSpec:
    """Kernel type and hyperparameters.

    ``degree`` is only used by the polynomial kernel and ``sigma`` only by the
    Gaussian kernel.
    """

    kind: str = "gaussian"
    sigma: float = 1.0
    degree: int = 2

    def __post_init__(self):
        if self.kind not in ("linear", "polynomial", "gaussian"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "gaussian" and not self.sigma > 0:
            raise ValueError("gaussian kernel needs sigma > 0")
        if self.kind == "polynomial" and (int(self.degree) != self.degree or self.degree < 1):
            raise ValueError("polynomial kernel needs an integer degree >= 1")

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind == "gaussian":
            d["sigma"] = float(self.sigma)
        elif self.kind == "polynomial":
            d["degree"] = int(self.degree)
        return d


def gram(spec, X, Y):
    """Kernel matrix ``K[i, j] = k(X[i], Y[j])``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if spec.kind == "linear":
        return X @ Y.T
    if spec.kind == "polynomial":
        return (1.0 + X @ Y.T) ** int(spec.degree)
    return np.exp(-cdist(X, Y, "sqeuclidean") / spec.sigma**2)


def kernel_grad(spec, x, y):
    """``grad_x k(x, y)`` for a single pair (used by tests and diagnostics)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if spec.kind == "linear":
        return y.copy()
    if spec.kind == "polynomial":
        p = int(spec.degree)
        return p * (1.0 + x @ y) ** (p - 1) * y
    k = np.exp(-np.sum((x - y) ** 2) / spec.sigma**2)
    return -2.0 * (x - y) / spec.sigma**2 * k


def gram_dot(spec, X, Xdot, Y):
    """``D[i, j] = Xdot[i] . grad_x k(x, y)`` at ``x = X[i]``, ``y = Y[j]``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Xdot = np.atleast_2d(np.asarray(Xdot, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    XdY = Xdot @ Y.T
    if spec.kind == "linear":
        return XdY
    if spec.kind == "polynomial":
        p = int(spec.degree)
        return p * (1.0 + X @ Y.T) ** (p - 1) * XdY
    K = gram(spec, X, Y)
    xdx = np.sum(Xdot * X, axis=1)[:, None]
    return -2.0 / spec.sigma**2 * (xdx - XdY) * K
