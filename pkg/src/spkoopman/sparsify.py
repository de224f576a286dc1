"""Multi-task ElasticNet selection of a minimal Koopman mode set.

Given a pruned model, the a-posteriori feature matrix holds the linearly
evolved eigenfunctions along one trajectory, scaled so every column starts
at one::

    F[m, i] = exp(m dt mu_i)            (continuous)
    F[m, i] = lambda_i ** m             (discrete, at the model's own dt)

and the state trajectory is regressed on it with a row-sparse (l2,1)
penalty. A sweep over ``alpha`` exposes the trade-off between the number of
surviving rows (modes) and the reconstruction residual. The chosen solution
is hard-thresholded and the Koopman modes of the survivors are refit by
ordinary least squares.
"""

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import _cd, linalg
from .exceptions import DegenerateModeError, EmptySelectionError, NotConvergedWarning

__all__ = [
    "ElasticNetResult",
    "SparsePath",
    "SparsifyResult",
    "aposteriori_features",
    "l21_norm",
    "enet_objective",
    "alpha_max",
    "kkt_residuals",
    "conjugate_pairs",
    "multitask_elasticnet",
    "structured_elasticnet",
    "alpha_sweep",
    "select_alpha",
    "threshold_and_refit",
    "sparsify",
    "write_path_csv",
]

DEGENERATE_INIT = 1e-12


def aposteriori_features(model, x0, n_samples, dt=None):
    """Scaled a-posteriori feature matrix and the initial eigenfunction values.

    Returns ``(F, phi0)`` where ``F`` has shape ``(n_samples, n_modes)`` and
    ``F * phi0`` is the unscaled matrix of predicted eigenfunction values.

    Raises
    ------
    DegenerateModeError
        If ``|phi_i(x0)| < 1e-12`` for some mode.
    """
    x0 = np.asarray(x0, dtype=float).reshape(1, -1)
    phi0 = model.eigenfunctions(x0)[0]
    bad = np.flatnonzero(np.abs(phi0) < DEGENERATE_INIT)
    if bad.size:
        raise DegenerateModeError(int(bad[0]), float(abs(phi0[bad[0]])))
    return model.evolution(int(n_samples), dt), phi0


def l21_norm(W):
    """Sum of the Euclidean norms of the rows."""
    W = np.atleast_2d(np.asarray(W))
    return float(np.sum(np.linalg.norm(W, axis=1)))


def enet_objective(F, X, B, alpha, rho):
    """``||X - F B||^2 / (2M) + alpha rho ||B||_{2,1} + alpha (1 - rho) ||B||^2 / 2``."""
    M = F.shape[0]
    r = X - F @ B
    return float(
        0.5 * np.vdot(r, r).real / M
        + alpha * rho * l21_norm(B)
        + 0.5 * alpha * (1.0 - rho) * np.vdot(B, B).real
    )


def alpha_max(F, X, rho=0.99):
    """Smallest ``alpha`` at which the all-zero coefficient matrix is optimal."""
    M = F.shape[0]
    C = F.conj().T @ np.asarray(X, dtype=complex)
    return float(np.max(np.linalg.norm(C, axis=1)) / (M * rho))


def kkt_residuals(F, X, B, alpha, rho):
    """Optimality diagnostics for a candidate ``B``.

    Returns ``(zero_rows, active_rows)``: for zero rows the excess of the
    correlation norm over ``alpha * rho`` (``<= 0`` when optimal); for nonzero
    rows the norm of the objective gradient.
    """
    M = F.shape[0]
    grad = -(F.conj().T @ (X - F @ B)) / M + alpha * (1.0 - rho) * B
    norms = np.linalg.norm(B, axis=1)
    active = norms > 0
    zero_rows = np.linalg.norm(grad[~active], axis=1) - alpha * rho
    g_act = grad[active] + alpha * rho * B[active] / norms[active, None]
    return zero_rows, np.linalg.norm(g_act, axis=1)


def conjugate_pairs(F, rtol=1e-10):
    """Index pairs ``(i, j)``, ``i < j``, of columns with ``F[:, j] == conj(F[:, i])``."""
    F = np.asarray(F)
    scale = np.linalg.norm(F, axis=0)
    used = set()
    pairs = []
    for i in range(F.shape[1]):
        if i in used or np.max(np.abs(F[:, i].imag), initial=0.0) <= rtol * scale[i]:
            continue
        diff = np.linalg.norm(F[:, i + 1 :] - F[:, i : i + 1].conj(), axis=0)
        for off in np.argsort(diff):
            j = i + 1 + int(off)
            if diff[off] > rtol * max(scale[i], 1e-300):
                break
            if j not in used:
                pairs.append((i, j))
                used.update((i, j))
                break
    return pairs


@dataclass
class ElasticNetResult:
    coef: np.ndarray
    n_iter: int
    converged: bool
    max_update: float
    objective_history: np.ndarray = field(default_factory=lambda: np.empty(0))


def _gram_form(F, X):
    M = F.shape[0]
    F = np.ascontiguousarray(F, dtype=complex)
    X = np.asarray(X, dtype=complex)
    G = np.ascontiguousarray(F.conj().T @ F / M)
    C = np.ascontiguousarray(F.conj().T @ X / M)
    xx = float(np.vdot(X, X).real / M)
    return G, C, xx


def _check_penalty(alpha, rho):
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if not 0 < rho <= 1:
        raise ValueError("rho must lie in (0, 1]")


def _gram_objective(G, C, xx, B, l1, l2):
    return float(
        0.5 * (xx - 2.0 * np.vdot(C, B).real + np.vdot(B, G @ B).real)
        + l1 * np.sum(np.linalg.norm(B, axis=1))
        + 0.5 * l2 * np.vdot(B, B).real
    )


def _newton_support(R, c, v, rows, l1, max_steps=50):
    """Damped Newton for ``0.5 v'Rv - c'v + l1 sum ||v_r||`` with every row nonzero.

    Returns ``(v, converged)``; ``converged`` is False when the iteration
    stalls, which happens when the restricted optimum wants a row at zero.
    """

    def f(w):
        return 0.5 * w @ R @ w - c @ w + l1 * sum(np.linalg.norm(w[r]) for r in rows)

    fv = f(v)
    scale = max(abs(fv), float(c @ c), 1e-300)
    for _ in range(max_steps):
        g = R @ v - c
        H = R.copy()
        for r in rows:
            nv = np.linalg.norm(v[r])
            if nv == 0:
                return v, False
            u = v[r] / nv
            g[r] += l1 * u
            H[np.ix_(r, r)] += l1 * (np.eye(r.size) - np.outer(u, u)) / nv
        try:
            with warnings.catch_warnings():
                # near-singular directions are handled by the decrement test
                warnings.simplefilter("ignore", sla.LinAlgWarning)
                d = -sla.solve(H, g, assume_a="sym")
        except (np.linalg.LinAlgError, ValueError):
            d = -np.linalg.lstsq(H, g, rcond=None)[0]
        decrement = -(g @ d)
        if not np.all(np.isfinite(d)) or decrement < 0:
            return v, False
        # objective resolved to rounding level: the quadratic model is exact,
        # so the full step lands on the minimizer along flat directions too
        if decrement <= 1e-15 * scale:
            return v + d, True
        t = 1.0
        while t > 1e-12:
            trial = v + t * d
            ft = f(trial)
            if ft <= fv - 1e-4 * t * decrement:
                break
            t *= 0.5
        else:
            return v, False
        v, fv = trial, ft
    return v, False


def _newton_active(G, C, B, l1, l2):
    """Active-set Newton refinement of the nonzero rows of ``B``.

    On a fixed support the objective is smooth, so Newton removes the slow
    zig-zag of coordinate descent along nearly collinear features. When the
    iteration stalls the row that shrank the most is removed and the
    smaller support is solved again; coordinate descent afterwards re-adds
    any row whose optimality condition fails. Works in real coordinates
    ``(Re B_S, Im B_S)``.
    """
    S = np.flatnonzero(np.linalg.norm(B, axis=1) > 0)
    N = B.shape[1]
    out = B.copy()
    while S.size:
        n = S.size
        Gs = G[np.ix_(S, S)] + l2 * np.eye(n)
        Gr, Gi = np.kron(Gs.real, np.eye(N)), np.kron(Gs.imag, np.eye(N))
        R = np.block([[Gr, -Gi], [Gi, Gr]])
        c = np.concatenate([C[S].real.ravel(), C[S].imag.ravel()])
        rows = [np.r_[i * N : (i + 1) * N, (n + i) * N : (n + i + 1) * N] for i in range(n)]
        v0 = np.concatenate([out[S].real.ravel(), out[S].imag.ravel()])
        v, ok = _newton_support(R, c, v0, rows, l1)
        out[S] = v[: n * N].reshape(n, N) + 1j * v[n * N :].reshape(n, N)
        if ok:
            break
        shrink = [np.linalg.norm(v[r]) / max(np.linalg.norm(v0[r]), 1e-300) for r in rows]
        drop = S[int(np.argmin(shrink))]
        out[drop] = 0.0
        S = S[S != drop]
    return out


# coordinate-descent sweeps between active-set Newton refinements
_CD_CHUNK = 200


def _solve_gram(G, C, xx, alpha, rho, tol, max_iter, init, record, pairs):
    B = np.zeros(C.shape, dtype=complex) if init is None else np.array(init, dtype=complex)
    B = np.ascontiguousarray(B)
    l1, l2 = alpha * rho, alpha * (1.0 - rho)
    # zero is optimal once every correlation is inside the l2,1 ball; the slack
    # absorbs rounding between this test and alpha_max
    if np.max(np.linalg.norm(C, axis=1), initial=0.0) <= l1 * (1.0 + 1e-12):
        B = np.zeros(C.shape, dtype=complex)
        hist = np.array([xx / 2.0]) if record else np.empty(0)
        return ElasticNetResult(coef=B, n_iter=0, converged=True, max_update=0.0,
                                objective_history=hist)
    n_iter, upd, hists = 0, np.inf, []
    while n_iter < max_iter:
        chunk = min(_CD_CHUNK, max_iter - n_iter)
        k, upd, hist = _cd.group_bcd(G, C, B, xx, l1, l2, float(tol), int(chunk), bool(record))
        n_iter += k
        hists.append(hist if not hists else hist[1:])
        if upd <= tol or n_iter >= max_iter:
            break
        refined = _newton_active(G, C, B, l1, l2)
        if _gram_objective(G, C, xx, refined, l1, l2) <= _gram_objective(G, C, xx, B, l1, l2):
            B = np.ascontiguousarray(refined)
            if record:
                hists.append(np.array([_gram_objective(G, C, xx, B, l1, l2)]))
    hist = np.concatenate(hists) if record else np.empty(0)
    for i, j in pairs:
        avg = 0.5 * (B[i] + B[j].conj())
        B[i], B[j] = avg, avg.conj()
    return ElasticNetResult(
        coef=B, n_iter=int(n_iter), converged=bool(upd <= tol), max_update=float(upd),
        objective_history=hist,
    )


def multitask_elasticnet(
    F, X, alpha, rho=0.99, tol=1e-12, max_iter=100_000, init=None, record_objective=False
):
    """Row-sparse complex ElasticNet by cyclic block coordinate descent.

    Minimizes :func:`enet_objective`. Each row update is the exact block
    minimizer ``b_i = S(z_i, alpha rho) / (G_ii + alpha (1 - rho))`` with the
    group soft-threshold ``S(z, t) = z max(0, 1 - t / ||z||)``, where the
    complex row norm couples real and imaginary parts. Iteration stops when
    the largest row update in a sweep is at most ``tol``.

    Parameters
    ----------
    F : complex array, shape (M, L)
    X : real or complex array, shape (M, N)
    alpha : float
        Overall penalty strength, ``> 0``.
    rho : float
        l2,1 share of the penalty, in ``(0, 1]``.
    init : array, optional
        Warm start.
    record_objective : bool
        Keep the objective after every sweep in ``objective_history``.

    Returns
    -------
    ElasticNetResult
        ``converged`` is False (with a :class:`NotConvergedWarning`) when
        ``max_iter`` sweeps were exhausted. Rows belonging to conjugate
        feature columns are returned as exact conjugates.
    """
    _check_penalty(alpha, rho)
    F = np.asarray(F, dtype=complex)
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[0] != F.shape[0]:
        raise ValueError("X must be a 2-D array with one row per row of F")
    G, C, xx = _gram_form(F, X)
    res = _solve_gram(
        G, C, xx, alpha, rho, tol, max_iter, init, record_objective, conjugate_pairs(F)
    )
    if not res.converged:
        warnings.warn(
            f"coordinate descent stopped after {res.n_iter} sweeps "
            f"(last update {res.max_update:.3e} > tol {tol:.1e})",
            NotConvergedWarning,
            stacklevel=2,
        )
    return res


def structured_elasticnet(F, X, directions, alpha, rho=1.0, tol=1e-12, max_iter=100_000):
    """ElasticNet with every row constrained to ``B[i] = a_i * directions[i]``.

    With unit-norm ``directions`` the l2,1 norm reduces to ``sum |a_i|``, so
    for ``rho = 1`` this is exactly the sparsity-promoting DMD amplitude
    problem. Returns the complex amplitude vector ``a``.
    """
    _check_penalty(alpha, rho)
    F = np.asarray(F, dtype=complex)
    D = np.asarray(directions, dtype=complex)
    X = np.asarray(X, dtype=complex)
    M = F.shape[0]
    dnorm = np.linalg.norm(D, axis=1)
    P = np.ascontiguousarray((F.conj().T @ F) * (D @ D.conj().T).conj() / M)
    q = np.ascontiguousarray(np.sum((F.conj().T @ X) * D.conj(), axis=1) / M)
    # the l2,1 and l2 penalties of a_i * d_i scale with ||d_i|| and ||d_i||^2;
    # fold them into a rescaled variable c_i = a_i ||d_i||
    s = np.where(dnorm > 0, dnorm, 1.0)
    Ps = np.ascontiguousarray(P / np.outer(s, s))
    qs = np.ascontiguousarray(q / s)
    c = np.zeros(F.shape[1], dtype=complex)
    _cd.scalar_bcd(Ps, qs, c, alpha * rho, alpha * (1.0 - rho), float(tol), int(max_iter))
    return np.where(dnorm > 0, c / s, 0.0)


@dataclass
class SparsePath:
    """ElasticNet solutions along a descending ``alpha`` grid.

    Attributes
    ----------
    alphas : (K,) descending penalty values.
    coefs : (K, L, N) complex solutions ``B'``.
    nonzero : (K,) rows with nonzero norm before thresholding.
    retained : (K,) rows surviving the ``eps`` hard threshold.
    residual : (K,) ``||X - F B'||_F / ||X||_F``.
    refit_residual : (K,) residual after least-squares refit on the retained rows.
    n_iter, converged : solver diagnostics per ``alpha``.
    """

    alphas: np.ndarray
    coefs: np.ndarray
    nonzero: np.ndarray
    retained: np.ndarray
    residual: np.ndarray
    refit_residual: np.ndarray
    n_iter: np.ndarray
    converged: np.ndarray
    rho: float
    eps: float

    def row_norms(self):
        return np.linalg.norm(self.coefs, axis=2)

    def __len__(self):
        return self.alphas.size


def _support(B, eps):
    Bt = np.where(np.abs(B) < eps, 0.0, B)
    return Bt, np.flatnonzero(np.any(Bt != 0, axis=1))


def _rel_resid(F, B, X, nx):
    return float(np.linalg.norm(X - F @ B) / nx) if nx > 0 else 0.0


def alpha_sweep(
    F,
    X,
    rho=0.99,
    n_alphas=100,
    eps=1e-2,
    alpha_ratio=1e-7,
    alphas=None,
    tol=1e-12,
    max_iter=100_000,
):
    """Warm-started ElasticNet path from ``alpha_max`` down to ``alpha_ratio * alpha_max``.

    Parameters
    ----------
    F : complex array, shape (M, L)
        Scaled a-posteriori features.
    X : array, shape (M, N)
        Target trajectory.
    alphas : array, optional
        Explicit grid; sorted descending before use.
    eps : float
        Hard threshold used only for the ``retained`` and ``refit_residual``
        diagnostics.

    Returns
    -------
    SparsePath
    """
    F = np.asarray(F, dtype=complex)
    Xc = np.asarray(X, dtype=complex)
    if alphas is None:
        amax = alpha_max(F, Xc, rho)
        alphas = np.geomspace(amax, amax * alpha_ratio, int(n_alphas))
    alphas = np.sort(np.asarray(alphas, dtype=float))[::-1]
    G, C, xx = _gram_form(F, Xc)
    pairs = conjugate_pairs(F)
    nx = np.linalg.norm(Xc)
    K, (L, N) = alphas.size, C.shape
    coefs = np.zeros((K, L, N), dtype=complex)
    out = {k: np.zeros(K) for k in ("nonzero", "retained", "residual", "refit", "n_iter")}
    conv = np.zeros(K, dtype=bool)
    B = None
    for k, a in enumerate(alphas):
        res = _solve_gram(G, C, xx, a, rho, tol, max_iter, B, False, pairs)
        B = res.coef
        coefs[k] = B
        conv[k] = res.converged
        out["n_iter"][k] = res.n_iter
        out["nonzero"][k] = np.count_nonzero(np.linalg.norm(B, axis=1))
        out["residual"][k] = _rel_resid(F, B, Xc, nx)
        _, keep = _support(B, eps)
        out["retained"][k] = keep.size
        if keep.size:
            Fk = F[:, keep]
            out["refit"][k] = _rel_resid(Fk, linalg.lstsq(Fk, Xc), Xc, nx)
        else:
            out["refit"][k] = 1.0 if nx > 0 else 0.0
    if not conv.all():
        warnings.warn(
            f"{int((~conv).sum())} of {K} path points did not converge",
            NotConvergedWarning,
            stacklevel=2,
        )
    return SparsePath(
        alphas=alphas,
        coefs=coefs,
        nonzero=out["nonzero"].astype(int),
        retained=out["retained"].astype(int),
        residual=out["residual"],
        refit_residual=out["refit"],
        n_iter=out["n_iter"].astype(int),
        converged=conv,
        rho=float(rho),
        eps=float(eps),
    )


def select_alpha(path, rule="residual", rtol=0.1, atol=1e-3):
    """Index into ``path`` of the automatically chosen ``alpha``.

    ``rule="residual"`` (default): the largest ``alpha`` whose penalized
    residual is within ``(1 + rtol)`` of the path minimum.

    ``rule="sparsest"``: among path points with at least one retained mode
    whose refit residual is within ``max((1 + rtol) * min_residual, atol)``,
    take the fewest retained modes, breaking ties by the larger ``alpha``.
    Useful when the residual keeps creeping down along the whole path.
    """
    if rule == "sparsest":
        ok = path.retained > 0
        if not ok.any():
            raise EmptySelectionError("every path point thresholds all modes away")
        r = path.refit_residual
        bound = max((1.0 + rtol) * np.min(r[ok]), atol)
        cand = np.flatnonzero(ok & (r <= bound))
        # alphas are descending, so the first minimum has the largest alpha
        return int(cand[np.argmin(path.retained[cand])])
    if rule == "residual":
        r = path.residual
        return int(np.flatnonzero(r <= (1.0 + rtol) * np.min(r))[0])
    raise ValueError(f"unknown selection rule {rule!r}")


def threshold_and_refit(coef, F, phi0, X, eps=1e-2):
    """Hard-threshold ``B'`` entrywise and refit modes of the surviving rows.

    Parameters
    ----------
    coef : (L, N) ElasticNet solution on scaled features.
    F : (M, L) scaled features; ``F * phi0`` are the unscaled ones.
    phi0 : (L,) eigenfunction values at the initial state.

    Returns
    -------
    keep : indices of retained rows
    B_refit : (L_r, N) least-squares modes on the unscaled features
    B_direct : (L_r, N) thresholded ``B'`` rows divided by ``phi0``

    Raises
    ------
    EmptySelectionError
        If the threshold removes every row.
    """
    Bt, keep = _support(np.asarray(coef), eps)
    if keep.size == 0:
        raise EmptySelectionError(
            f"all modes thresholded away at eps={eps:g}; use a smaller alpha or eps"
        )
    Psi = F[:, keep] * phi0[keep]
    B_refit = linalg.lstsq(Psi, np.asarray(X, dtype=complex))
    B_direct = Bt[keep] / phi0[keep, None]
    return keep, B_refit, B_direct


@dataclass
class SparsifyResult:
    path: SparsePath
    selected: int
    alpha: float
    retained: np.ndarray
    model: object
    residual_refit: float
    residual_direct: float

    def summary(self):
        return {
            "selected_alpha": self.alpha,
            "L_r": int(self.retained.size),
            "R_refit": self.residual_refit,
            "R_direct": self.residual_direct,
            "retained_modes": self.retained.tolist(),
        }


def sparsify(
    model,
    traj,
    dt=None,
    rho=0.99,
    eps=1e-2,
    alpha=None,
    n_alphas=100,
    alphas=None,
    rule="residual",
    tol=1e-12,
    max_iter=100_000,
):
    """Sweep, select, threshold and refit on one trajectory.

    ``alpha`` forces the path point closest to the given value (on a log
    scale); otherwise :func:`select_alpha` with ``rule`` decides. The
    returned model keeps only the retained modes, with refit modes.
    """
    traj = np.atleast_2d(np.asarray(traj, dtype=float))
    F, phi0 = aposteriori_features(model, traj[0], traj.shape[0], dt)
    path = alpha_sweep(
        F, traj, rho=rho, n_alphas=n_alphas, eps=eps, alphas=alphas, tol=tol, max_iter=max_iter
    )
    if alpha is None:
        k = select_alpha(path, rule)
    else:
        k = int(np.argmin(np.abs(np.log(path.alphas) - np.log(alpha))))
    keep, B_refit, B_direct = threshold_and_refit(path.coefs[k], F, phi0, traj, eps)
    Psi = F[:, keep] * phi0[keep]
    nx = np.linalg.norm(traj)
    reduced = model.subset(
        keep,
        modes=B_refit,
        selected_alpha=float(path.alphas[k]),
        rho=float(rho),
        eps=float(eps),
        modes_direct=B_direct,
    )
    return SparsifyResult(
        path=path,
        selected=k,
        alpha=float(path.alphas[k]),
        retained=keep,
        model=reduced,
        residual_refit=_rel_resid(Psi, B_refit, traj, nx),
        residual_direct=_rel_resid(Psi, B_direct, traj, nx),
    )


def write_path_csv(path, filename):
    """Per-alpha table: alpha, residuals, counts, solver status and row norms."""
    norms = path.row_norms()
    with open(filename, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["alpha", "residual", "refit_residual", "nonzero", "retained", "n_iter", "converged"]
            + [f"row_norm_{i}" for i in range(norms.shape[1])]
        )
        for k in range(len(path)):
            w.writerow(
                [repr(float(path.alphas[k])), repr(float(path.residual[k])),
                 repr(float(path.refit_residual[k])), int(path.nonzero[k]),
                 int(path.retained[k]), int(path.n_iter[k]), int(path.converged[k])]
                + [repr(float(v)) for v in norms[k]]
            )
