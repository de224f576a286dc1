"""Compiled block coordinate descent kernels (complex Gram form)."""

import numpy as np
from numba import njit


@njit(cache=True)
def _row_norm(v):
    s = 0.0
    for k in range(v.shape[0]):
        s += v[k].real * v[k].real + v[k].imag * v[k].imag
    return np.sqrt(s)


@njit(cache=True)
def _objective(G, C, B, H, xx, l1, l2):
    L, N = C.shape
    lin = 0.0
    quad = 0.0
    pen1 = 0.0
    pen2 = 0.0
    for i in range(L):
        r2 = 0.0
        for k in range(N):
            b = B[i, k]
            lin += (np.conj(C[i, k]) * b).real
            quad += (np.conj(b) * H[i, k]).real
            r2 += b.real * b.real + b.imag * b.imag
        pen1 += np.sqrt(r2)
        pen2 += r2
    return 0.5 * (xx - 2.0 * lin + quad) + l1 * pen1 + 0.5 * l2 * pen2


@njit(cache=True)
def group_bcd(G, C, B, xx, l1, l2, tol, max_iter, record):
    """Cyclic block coordinate descent on

        0.5 * (xx - 2 Re<C, B> + Re<B, G B>) + l1 * sum_i ||B_i|| + 0.5 * l2 * ||B||^2

    ``G = F^H F / M``, ``C = F^H X / M``, ``xx = ||X||^2 / M``. ``B`` is
    updated in place. Returns ``(n_sweeps, last_max_update, history)``.
    """
    L, N = C.shape
    H = np.zeros((L, N), dtype=np.complex128)
    for i in range(L):
        for j in range(L):
            gij = G[i, j]
            for k in range(N):
                H[i, k] += gij * B[j, k]
    hist = np.empty(max_iter + 1 if record else 1)
    if record:
        hist[0] = _objective(G, C, B, H, xx, l1, l2)
    z = np.empty(N, dtype=np.complex128)
    d = np.empty(N, dtype=np.complex128)
    max_upd = 0.0
    sweeps = 0
    for it in range(max_iter):
        max_upd = 0.0
        for i in range(L):
            gii = G[i, i].real
            for k in range(N):
                z[k] = C[i, k] - H[i, k] + gii * B[i, k]
            nz = _row_norm(z)
            denom = gii + l2
            if nz <= l1 or denom <= 0.0:
                shrink = 0.0
            else:
                shrink = (1.0 - l1 / nz) / denom
            for k in range(N):
                d[k] = shrink * z[k] - B[i, k]
            nd = _row_norm(d)
            if nd > 0.0:
                for k in range(N):
                    B[i, k] += d[k]
                for j in range(L):
                    gji = G[j, i]
                    for k in range(N):
                        H[j, k] += gji * d[k]
            if nd > max_upd:
                max_upd = nd
        sweeps = it + 1
        if record:
            hist[sweeps] = _objective(G, C, B, H, xx, l1, l2)
        if max_upd <= tol:
            break
    return sweeps, max_upd, hist[: sweeps + 1] if record else hist[:0]


@njit(cache=True)
def scalar_bcd(P, q, a, l1, l2, tol, max_iter):
    """Coordinate descent for ``0.5 a^H P a - Re(q^H a) + l1 |a|_1 + 0.5 l2 |a|^2``.

    The complex Lasso that remains once each row of the coefficient matrix
    is constrained to a fixed unit direction.
    """
    L = q.shape[0]
    g = np.zeros(L, dtype=np.complex128)
    for i in range(L):
        for j in range(L):
            g[i] += P[i, j] * a[j]
    max_upd = 0.0
    sweeps = 0
    for it in range(max_iter):
        max_upd = 0.0
        for i in range(L):
            pii = P[i, i].real
            z = q[i] - g[i] + pii * a[i]
            nz = abs(z)
            denom = pii + l2
            if nz <= l1 or denom <= 0.0:
                new = 0.0 + 0.0j
            else:
                new = z * (1.0 - l1 / nz) / denom
            dlt = new - a[i]
            if dlt != 0:
                a[i] = new
                for j in range(L):
                    g[j] += P[j, i] * dlt
            if abs(dlt) > max_upd:
                max_upd = abs(dlt)
        sweeps = it + 1
        if max_upd <= tol:
            break
    return sweeps, max_upd
