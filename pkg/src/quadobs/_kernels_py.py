"""Pure-Python/numpy fallback for the compiled co-simulation loop."""

from __future__ import annotations

import numpy as np


def _rhs(A, B, C, BtC, V, W_inv, theta, u, x, zhat, M):
    m = BtC.shape[0]
    n = A.shape[0]
    Bu = B @ u
    dx = A @ x + Bu
    y = 0.5 * (x @ (C @ x))
    Au = np.zeros((m + n, m + n))
    Au[: m - 1, 1:m] += np.eye(m - 1)
    Au[:m, m:] = np.einsum("j,ijk->ik", u, BtC)
    Au[m:, m:] = A
    dz = Au @ zhat
    dz[m:] += Bu
    dz += M[:, 0] * W_inv * (y - zhat[0])
    dM = Au @ M + M @ Au.T - np.outer(M[:, 0], M[0, :]) * W_inv + V + theta * M
    return dx, dz, dM


def simulate_loop(A, B, C, BtC, u_fine, h, x0, zhat0, M0, V, W_inv, theta):
    """Same contract as the compiled ``simulate_loop``."""
    # overflow is reported through the status code, not as warnings
    with np.errstate(over="ignore", invalid="ignore"):
        return _loop(A, B, C, BtC, u_fine, h, x0, zhat0, M0, V, W_inv, theta)


def _loop(A, B, C, BtC, u_fine, h, x0, zhat0, M0, V, W_inv, theta):
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    C = np.asarray(C, dtype=float)
    BtC = np.asarray(BtC, dtype=float)
    V = np.asarray(V, dtype=float)
    u_fine = np.asarray(u_fine, dtype=float)
    steps = (u_fine.shape[0] - 1) // 2
    n = A.shape[0]
    d = BtC.shape[0] + n

    x_hist = np.empty((steps + 1, n))
    z_hist = np.empty((steps + 1, d))
    M_hist = np.empty((steps + 1, d, d))
    x = np.array(x0, dtype=float)
    z = np.array(zhat0, dtype=float)
    M = np.array(M0, dtype=float)
    x_hist[0], z_hist[0], M_hist[0] = x, z, M

    def f(u, x, z, M):
        return _rhs(A, B, C, BtC, V, W_inv, theta, u, x, z, M)

    for k in range(steps):
        u0, u_mid, u1 = u_fine[2 * k], u_fine[2 * k + 1], u_fine[2 * k + 2]
        k1 = f(u0, x, z, M)
        k2 = f(u_mid, *(s + 0.5 * h * ds for s, ds in zip((x, z, M), k1)))
        k3 = f(u_mid, *(s + 0.5 * h * ds for s, ds in zip((x, z, M), k2)))
        k4 = f(u1, *(s + h * ds for s, ds in zip((x, z, M), k3)))
        x, z, M = (s + h / 6.0 * (a + 2.0 * b + 2.0 * c + e)
                   for s, a, b, c, e in zip((x, z, M), k1, k2, k3, k4))
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(z)) and np.all(np.isfinite(M))):
            return x_hist[: k + 1], z_hist[: k + 1], M_hist[: k + 1], 1, k + 1
        M = 0.5 * (M + M.T)
        try:
            np.linalg.cholesky(M)
        except np.linalg.LinAlgError:
            return x_hist[: k + 1], z_hist[: k + 1], M_hist[: k + 1], 2, k + 1
        x_hist[k + 1], z_hist[k + 1], M_hist[k + 1] = x, z, M
    return x_hist, z_hist, M_hist, 0, -1
