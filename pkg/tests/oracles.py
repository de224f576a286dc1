"""Independent reference implementations used as test oracles."""

import numpy as np

from spkoopman import linalg
from spkoopman.features import gram, gram_dot


def fista_elasticnet(F, X, alpha, rho, n_iter=200_000, tol=1e-15):
    """Accelerated proximal gradient for the row-sparse complex ElasticNet.

    Smooth part ``||X - F B||^2 / (2M)``; the prox of
    ``alpha rho ||B||_{2,1} + alpha (1 - rho) / 2 ||B||^2`` is a row shrink
    followed by a ridge scaling. Uses gradient-based adaptive restart.
    """
    F = np.asarray(F, dtype=complex)
    X = np.asarray(X, dtype=complex)
    M = F.shape[0]
    G = F.conj().T @ F / M
    C = F.conj().T @ X / M
    step = 1.0 / np.linalg.eigvalsh(G).max()
    l1, l2 = alpha * rho, alpha * (1.0 - rho)

    def prox(V):
        nv = np.linalg.norm(V, axis=1, keepdims=True)
        shrink = np.maximum(0.0, 1.0 - step * l1 / np.where(nv > 0, nv, 1.0))
        return shrink * V / (1.0 + step * l2)

    B = np.zeros((F.shape[1], X.shape[1]), dtype=complex)
    Y, t = B.copy(), 1.0
    for _ in range(n_iter):
        B_new = prox(Y - step * (G @ Y - C))
        if np.vdot(Y - B_new, B_new - B).real > 0:  # restart
            Y, t = B.copy(), 1.0
            continue
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        Y = B_new + (t - 1.0) / t_new * (B_new - B)
        done = np.max(np.abs(B_new - B)) <= tol
        B, t = B_new, t_new
        if done:
            break
    return B


def analytic_fixed_point_model(mu=-0.05, lam=-1.0):
    """Closed-form 3-mode continuous Koopman model of the fixed-point system.

    Eigenfunctions ``(x1, x2 - c x1^2, x1^2)`` with rates ``(mu, lam, 2 mu)``
    and state reconstruction ``x1 = phi_1``, ``x2 = phi_2 + c phi_3``.
    Built as an EDMD model on a degree-2 Hermite dictionary
    ``h = (1, x2, h2(x2), x1, x1 x2, h2(x1), ...)`` via coefficient vectors.
    """
    from spkoopman import HermiteDictionary, KoopmanModel

    c = lam / (lam - 2 * mu)
    d = HermiteDictionary(2, 2, per_dimension_order=False)
    idx = {tuple(a): k for k, a in enumerate(d.multi_indices)}
    V = np.zeros((d.n_features, 3))
    V[idx[(1, 0)], 0] = 1.0
    # x1^2 = sqrt(2) h2(x1) + 1
    V[idx[(0, 1)], 1] = 1.0
    V[idx[(2, 0)], 1] = -c * np.sqrt(2.0)
    V[idx[(0, 0)], 1] = -c
    V[idx[(2, 0)], 2] = np.sqrt(2.0)
    V[idx[(0, 0)], 2] = 1.0
    B = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, c]], dtype=complex)
    return KoopmanModel(
        method="edmd", continuous=True, eigenvalues=np.array([mu, lam, 2 * mu], dtype=complex),
        eigenvectors=V.astype(complex), modes=B, dictionary=d,
    )


def random_enet_instance(seed):
    """Small complex ElasticNet problem with ``M <= 20, L <= 10, N <= 5``."""
    g = np.random.default_rng(seed)
    L = int(g.integers(1, 11))
    M = int(g.integers(max(L, 2), 21))
    N = int(g.integers(1, 6))
    F = g.standard_normal((M, L)) + 1j * g.standard_normal((M, L))
    X = g.standard_normal((M, N))
    rho = float(g.choice([0.5, 0.9, 0.99, 1.0]))
    C = F.conj().T @ X
    amax = np.max(np.linalg.norm(C, axis=1)) / (M * rho)
    alpha = float(amax * 10 ** g.uniform(-3, -0.1))
    return F, X, alpha, rho


def random_dmd_instance(seed, L=None, M=None, N=None):
    """Random ``DmdModel`` with stable conjugate-paired eigenvalues and noisy data."""
    from spkoopman.baselines import DmdModel

    g = np.random.default_rng(seed)
    L = int(g.integers(2, 9)) if L is None else L
    M = int(g.integers(10, 31)) if M is None else M
    N = int(g.integers(L, L + 4)) if N is None else N
    n_pairs = L // 2
    r = g.uniform(0.7, 1.0, n_pairs)
    th = g.uniform(0.1, 2.5, n_pairs)
    lam = np.concatenate([r * np.exp(1j * th), r * np.exp(-1j * th)])
    if L % 2:
        lam = np.append(lam, g.uniform(0.5, 1.0))
    Phi = g.standard_normal((L, N)) + 1j * g.standard_normal((L, N))
    if L % 2:
        Phi[-1] = Phi[-1].real
    Phi[n_pairs:2 * n_pairs] = Phi[:n_pairs].conj()
    Phi /= np.linalg.norm(Phi, axis=1, keepdims=True)
    a = g.standard_normal(L) * g.uniform(0.1, 2.0, L) + 0j
    a[n_pairs:2 * n_pairs] = a[:n_pairs]
    dmd = DmdModel(lam, Phi, a)
    X = dmd.reconstruct(M).real + 0.05 * g.standard_normal((M, N))
    return dmd, X


def projector_identity_residual(seed):
    """``A A^H Z (Z^H A A^H Z)^+ - Z`` when the columns of ``A`` span ``range(Z)``.

    ``Z`` is an orthonormal ``n x r`` basis and ``A = Z C`` mixes it with a
    random full-row-rank ``r x p`` matrix, ``p >= r``.
    """
    g = np.random.default_rng(seed)
    r = int(g.integers(1, 9))
    n = int(g.integers(r, r + 6))
    p = int(g.integers(r, r + 8))
    Z, _ = np.linalg.qr(g.standard_normal((n, r)) + 1j * g.standard_normal((n, r)))
    C = g.standard_normal((r, p)) + 1j * g.standard_normal((r, p))
    A = Z @ C
    AA = A @ A.conj().T
    lhs = AA @ Z @ linalg.pinv(Z.conj().T @ AA @ Z)
    return np.linalg.norm(lhs - Z)


def gram_dot_fd_error(spec, seed, step=1e-6):
    """Max relative deviation of gram_dot from a central difference along xdot."""
    g = np.random.default_rng(seed)
    N = int(g.integers(1, 5))
    X = g.uniform(-1, 1, (int(g.integers(2, 8)), N))
    Xd = g.standard_normal(X.shape)
    Y = g.uniform(-1, 1, (int(g.integers(2, 8)), N))
    D = gram_dot(spec, X, Xd, Y)
    fd = (gram(spec, X + step * Xd, Y) - gram(spec, X - step * Xd, Y)) / (2 * step)
    scale = np.maximum(np.abs(fd), 1.0)
    return float(np.max(np.abs(D - fd) / scale))


def kou_threshold_set(dmd, M, choice):
    """A top-k set by Kou energy and a threshold strictly between ranks k and k + 1.

    Conjugate pairs share their energy, so only cuts at a genuine gap are used.
    """
    from spkoopman.baselines import kou_energy

    energy = kou_energy(dmd, M)
    order = np.argsort(-energy)
    e = energy[order]
    e = np.concatenate([[2 * e[0]], e, [e[-1] / 2]])
    gaps = np.flatnonzero(e[:-1] > e[1:] * (1 + 1e-6))
    k = int(gaps[choice % gaps.size])
    thr = np.sqrt(e[k] * e[k + 1])
    return set(order[:k].tolist()), thr
