"""Synthetic systems with known Koopman spectra.

``fixed_point``: the two-state system with a quadratic slow manifold

    x1' = mu x1
    x2' = lam (x2 - x1**2)

whose Koopman eigenfunctions ``(x1, x2 - c x1**2, x1**2)`` have eigenvalues
``(mu, lam, 2 mu)`` with ``c = lam / (lam - 2 mu)``.

``hopf``: a three-state mean-field oscillator (Hopf normal form with a
slaved shift component)

    x' = mu x - omega y - x z
    y' = omega x + mu y - y z
    z' = -gamma (z - x**2 - y**2)

which has a stable limit cycle of radius ``sqrt(mu)`` at ``z = mu``.
"""

import numpy as np
from scipy.integrate import solve_ivp
from scipy.stats import qmc

from .snapshots import SnapshotSet

__all__ = [
    "FIXED_POINT_MU",
    "FIXED_POINT_LAM",
    "fixed_point_rhs",
    "fixed_point_solution",
    "fixed_point_eigenfunctions",
    "generate_fixed_point",
    "hopf_rhs",
    "generate_hopf",
    "lhs_box",
]

FIXED_POINT_MU = -0.05
FIXED_POINT_LAM = -1.0


def _slow_coef(mu, lam):
    return lam / (lam - 2.0 * mu)


def fixed_point_rhs(X, mu=FIXED_POINT_MU, lam=FIXED_POINT_LAM):
    X = np.atleast_2d(X)
    x1, x2 = X[:, 0], X[:, 1]
    return np.column_stack([mu * x1, lam * (x2 - x1**2)])


def fixed_point_solution(x0, t, mu=FIXED_POINT_MU, lam=FIXED_POINT_LAM):
    """Closed-form trajectory, shape ``(len(t), 2)``."""
    x10, x20 = map(float, x0)
    t = np.asarray(t, dtype=float)
    c = _slow_coef(mu, lam)
    x1 = x10 * np.exp(mu * t)
    x2 = (x20 - c * x10**2) * np.exp(lam * t) + c * x10**2 * np.exp(2 * mu * t)
    return np.column_stack([x1, x2])


def fixed_point_eigenfunctions(X, mu=FIXED_POINT_MU, lam=FIXED_POINT_LAM):
    """Analytic eigenfunctions and eigenvalues ``(Phi, (mu, lam, 2 mu))``.

    Columns of ``Phi`` are ``(x1, x2 - c x1**2, x1**2)``.
    """
    X = np.atleast_2d(X)
    c = _slow_coef(mu, lam)
    x1, x2 = X[:, 0], X[:, 1]
    return np.column_stack([x1, x2 - c * x1**2, x1**2]), np.array([mu, lam, 2 * mu])


def lhs_box(n, low, high, seed):
    """``n`` Latin hypercube samples in the box ``[low, high]``.

    Stratified random permutation sampling (one point per stratum in every
    coordinate) driven by a seeded PCG64 generator.
    """
    low = np.asarray(low, dtype=float)
    high = np.asarray(high, dtype=float)
    rng = np.random.Generator(np.random.PCG64(seed))
    sampler = qmc.LatinHypercube(d=low.size, seed=rng)
    return qmc.scale(sampler.random(n), low, high)


def _time_grid(dt, T):
    return dt * np.arange(int(np.floor(T / dt + 1e-9)) + 1)


def generate_fixed_point(
    sampler="lhs",
    n_samples=1600,
    box=(-0.5, 0.5),
    x0=(0.4, 0.4),
    dt=0.03754,
    T=30.0,
    seed=0,
    mu=FIXED_POINT_MU,
    lam=FIXED_POINT_LAM,
):
    """Fixed-point system data.

    ``sampler="lhs"`` returns a point cloud of ``n_samples`` states in the
    square ``box`` with exact derivatives. ``sampler="trajectory"`` returns
    the exact solution from ``x0`` sampled every ``dt`` on ``[0, T]``, with
    derivatives.
    """
    if sampler == "lhs":
        X = lhs_box(n_samples, [box[0]] * 2, [box[1]] * 2, seed)
        prov = {
            "kind": "generated", "system": "fixed_point", "sampler": "lhs",
            "n_samples": int(n_samples), "box": list(map(float, box)), "seed": int(seed),
            "rng": "PCG64", "mu": mu, "lam": lam,
        }
        return SnapshotSet(X, fixed_point_rhs(X, mu, lam), dt=None, provenance=prov)
    if sampler == "trajectory":
        X = fixed_point_solution(x0, _time_grid(dt, T), mu, lam)
        prov = {
            "kind": "generated", "system": "fixed_point", "sampler": "trajectory",
            "x0": list(map(float, x0)), "dt": float(dt), "T": float(T), "mu": mu, "lam": lam,
        }
        return SnapshotSet(X, fixed_point_rhs(X, mu, lam), dt=float(dt), provenance=prov)
    raise ValueError(f"unknown sampler {sampler!r}")


def hopf_rhs(X, mu=0.1, omega=1.0, gamma=1.0):
    X = np.atleast_2d(X)
    x, y, z = X[:, 0], X[:, 1], X[:, 2]
    return np.column_stack(
        [mu * x - omega * y - x * z, omega * x + mu * y - y * z, -gamma * (z - x**2 - y**2)]
    )


def generate_hopf(
    x0=None, dt=0.1, T=100.0, mu=0.1, omega=1.0, gamma=1.0, noise=0.0, seed=0
):
    """Trajectory of the mean-field Hopf oscillator.

    Without ``x0`` a seeded random start near the unstable fixed point is
    drawn; ``noise`` adds seeded Gaussian measurement noise of that standard
    deviation. Integrated with DOP853 at ``rtol=atol=1e-11``.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    if x0 is None:
        x0 = np.concatenate([0.05 * rng.standard_normal(2), [0.0]])
    t = _time_grid(dt, T)
    sol = solve_ivp(
        lambda _, s: hopf_rhs(s, mu, omega, gamma)[0],
        (0.0, t[-1]), np.asarray(x0, dtype=float), t_eval=t,
        method="DOP853", rtol=1e-11, atol=1e-11,
    )
    X = sol.y.T
    dX = hopf_rhs(X, mu, omega, gamma)
    if noise > 0:
        X = X + noise * rng.standard_normal(X.shape)
    prov = {
        "kind": "generated", "system": "hopf", "x0": list(map(float, x0)), "dt": float(dt),
        "T": float(T), "mu": mu, "omega": omega, "gamma": gamma, "noise": float(noise),
        "seed": int(seed), "rng": "PCG64",
    }
    return SnapshotSet(X, dX, dt=float(dt), provenance=prov)
