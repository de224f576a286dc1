"""Cross-validated selection of kernel hyperparameters for KDMD.

Each ``(sigma, r)`` grid point is scored by how many eigenfunctions satisfy
their eigenvalue equation (a-priori error below a threshold) on both the
training part and the held-out part of every fold.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .features import KernelSpec, gram, gram_dot
from .kdmd import fit_kdmd_from_grams, gram_spectrum

__all__ = ["apriori_error", "kfold_indices", "GridResult", "grid_search", "write_surface_csv"]

DEGENERATE_NORM = 1e-14


def apriori_error(model, X, Y=None, Xdot=None):
    """Mean normalized one-step (or derivative) residual per eigenfunction.

    Discrete models:  ``mean_j |phi(y_j) - lambda phi(x_j)| / rms_j |phi(x_j)|``
    with ``Y`` the successors of ``X`` (default: ``X`` is a trajectory and
    consecutive rows are used).

    Continuous models: ``mean_j |xdot_j . grad phi(x_j) - mu phi(x_j)| / rms``;
    kernel models differentiate the kernel against their training centers.

    Modes with RMS below ``1e-14`` get ``inf``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if model.continuous:
        if Xdot is None:
            raise ValueError("continuous models need Xdot")
        phi = model.eigenfunctions(X)
        resid = model.eigenfunction_derivative(X, Xdot) - phi * model.eigenvalues
    else:
        if Y is None:
            X, Y = X[:-1], X[1:]
        phi = model.eigenfunctions(X)
        resid = model.eigenfunctions(Y) - phi * model.eigenvalues
    rms = np.sqrt(np.mean(np.abs(phi) ** 2, axis=0))
    out = np.full(model.n_modes, np.inf)
    ok = rms >= DEGENERATE_NORM
    out[ok] = np.mean(np.abs(resid[:, ok]), axis=0) / rms[ok]
    return out


def kfold_indices(n, folds=5, shuffle=True, seed=0):
    """Contiguous blocks of a (seeded, optionally shuffled) index permutation."""
    if not 2 <= folds <= n:
        raise ValueError("need 2 <= folds <= number of samples")
    idx = np.arange(n)
    if shuffle:
        idx = np.random.Generator(np.random.PCG64(seed)).permutation(n)
    return np.array_split(idx, folds)


@dataclass
class GridResult:
    """Selection surface: ``mean_counts[s, k]`` for ``sigmas[s]``, ``ranks[k]``."""

    sigmas: np.ndarray
    ranks: np.ndarray
    mean_counts: np.ndarray
    counts: np.ndarray
    rank_used: np.ndarray
    notes: list = field(default_factory=list)

    def best(self):
        s, k = np.unravel_index(np.argmax(self.mean_counts), self.mean_counts.shape)
        return float(self.sigmas[s]), int(self.ranks[k])

    def rows(self):
        for s, sig in enumerate(self.sigmas):
            for k, r in enumerate(self.ranks):
                yield float(sig), int(r), float(self.mean_counts[s, k])


def _fold_counts(kernel, X, Z, train, test, ranks, threshold, continuous, dt):
    """Counts for one (kernel, fold) over every rank."""
    Xtr, Ztr = X[train], Z[train]
    G = gram(kernel, Xtr, Xtr)
    G_next = gram_dot(kernel, Xtr, Ztr, Xtr) if continuous else gram(kernel, Ztr, Xtr)
    spectrum = gram_spectrum(G)
    counts, used = [], []
    for r in ranks:
        r_fold = min(int(r), train.size)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            try:
                model = fit_kdmd_from_grams(
                    G, G_next, Xtr, kernel, r_fold, continuous, dt=dt, spectrum=spectrum
                )
            except ValueError:
                counts.append(0)
                used.append(0)
                continue
            if continuous:
                e_tr = apriori_error(model, Xtr, Xdot=Ztr)
                e_te = apriori_error(model, X[test], Xdot=Z[test])
            else:
                e_tr = apriori_error(model, Xtr, Y=Ztr)
                e_te = apriori_error(model, X[test], Y=Z[test])
        counts.append(int(np.sum((e_tr <= threshold) & (e_te <= threshold))))
        used.append(int(model.info["rank_used"]))
    return counts, used


def grid_search(
    X,
    sigmas,
    ranks,
    Y=None,
    Xdot=None,
    kernel_kind="gaussian",
    degree=2,
    threshold=0.05,
    folds=5,
    shuffle=True,
    seed=0,
    dt=1.0,
    n_jobs=1,
):
    """k-fold grid search over ``(sigma, r)``.

    Supply ``Xdot`` for continuous-time KDMD, ``Y`` for discrete snapshot
    pairs, or neither to treat ``X`` as one discrete trajectory. For
    non-Gaussian kernels ``sigmas`` is ignored beyond its length (pass a
    single placeholder value).

    Returns
    -------
    GridResult
        ``counts[s, k, f]`` is the number of modes passing on both the
        training and held-out part of fold ``f``; ``rank_used`` records the
        rank actually fitted (capped by fold size and Gram numerical rank).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    continuous = Xdot is not None
    if continuous:
        Z = np.asarray(Xdot, dtype=float)
    elif Y is not None:
        Z = np.asarray(Y, dtype=float)
    else:
        X, Z = X[:-1], X[1:]
    if Z.shape != X.shape:
        raise ValueError("paired arrays must have the same shape")
    sigmas = np.atleast_1d(np.asarray(sigmas, dtype=float))
    ranks = np.atleast_1d(np.asarray(ranks, dtype=int))
    splits = kfold_indices(X.shape[0], folds, shuffle, seed)
    tasks = []
    for s, sig in enumerate(sigmas):
        kernel = KernelSpec(kernel_kind, sigma=float(sig) if kernel_kind == "gaussian" else 1.0,
                            degree=degree)
        for f, test in enumerate(splits):
            train = np.concatenate([splits[g] for g in range(len(splits)) if g != f])
            tasks.append((s, f, kernel, np.sort(train), test))
    results = Parallel(n_jobs=n_jobs)(
        delayed(_fold_counts)(k, X, Z, tr, te, ranks, threshold, continuous, dt)
        for (_, _, k, tr, te) in tasks
    )
    counts = np.zeros((sigmas.size, ranks.size, len(splits)), dtype=int)
    used = np.zeros_like(counts)
    for (s, f, *_), (c, u) in zip(tasks, results):
        counts[s, :, f] = c
        used[s, :, f] = u
    notes = []
    min_train = min(X.shape[0] - t.size for t in splits)
    for r in ranks:
        if r > min_train:
            notes.append(f"rank {int(r)} exceeds the smallest training fold ({min_train}); "
                         f"fitted at reduced rank")
    return GridResult(
        sigmas=sigmas,
        ranks=ranks,
        mean_counts=counts.mean(axis=2),
        counts=counts,
        rank_used=used,
        notes=notes,
    )


def write_surface_csv(result, path):
    from .pipeline.io import write_table

    write_table(path, ["sigma", "r", "mean_count"], result.rows())
