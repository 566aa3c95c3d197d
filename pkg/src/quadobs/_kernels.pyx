# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled plant/observer co-simulation loop.

Mirrors ``quadobs._kernels_py.simulate_loop`` operation for operation.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport isfinite, sqrt

cnp.import_array()


cdef struct Dims:
    int n
    int m
    int p
    int d


cdef void _rhs(Dims D, const double[:, ::1] A, const double[:, ::1] B, const double[:, ::1] C,
               const double[:, :, ::1] BtC, const double[:, ::1] V, double W_inv, double theta,
               const double[::1] u, const double[::1] s, double[::1] ds,
               double[:, ::1] Au, double[:, ::1] T, double[::1] Bu) noexcept nogil:
    cdef int n = D.n, m = D.m, p = D.p, d = D.d
    cdef int i, j, k, off_z = n, off_M = n + d
    cdef double acc, y, innov, w

    # plant: x' = A x + B u
    for i in range(n):
        acc = 0.0
        for j in range(p):
            acc = acc + B[i, j] * u[j]
        Bu[i] = acc
        for j in range(n):
            acc = acc + A[i, j] * s[j]
        ds[i] = acc

    y = 0.0
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc = acc + C[i, j] * s[j]
        y = y + s[i] * acc
    y = 0.5 * y

    # extended matrix A(u)
    for i in range(d):
        for j in range(d):
            Au[i, j] = 0.0
    for i in range(m - 1):
        Au[i, i + 1] = 1.0
    for i in range(m):
        for k in range(n):
            acc = 0.0
            for j in range(p):
                acc = acc + u[j] * BtC[i, j, k]
            Au[i, m + k] = acc
    for i in range(n):
        for j in range(n):
            Au[m + i, m + j] = A[i, j]

    # estimate: zhat' = A(u) zhat + B_ext u + K (y - zhat_0)
    innov = y - s[off_z]
    for i in range(d):
        acc = 0.0
        for j in range(d):
            acc = acc + Au[i, j] * s[off_z + j]
        if i >= m:
            acc = acc + Bu[i - m]
        ds[off_z + i] = acc + s[off_M + i * d] * W_inv * innov

    # Riccati: M' = A M + M A^T - M c c^T M / W + V + theta M
    for i in range(d):
        for j in range(d):
            acc = 0.0
            for k in range(d):
                acc = acc + Au[i, k] * s[off_M + k * d + j]
            T[i, j] = acc
    for i in range(d):
        for j in range(d):
            acc = 0.0
            for k in range(d):
                acc = acc + s[off_M + i * d + k] * Au[j, k]
            w = s[off_M + i * d] * s[off_M + j]
            ds[off_M + i * d + j] = (T[i, j] + acc - w * W_inv + V[i, j]
                                     + theta * s[off_M + i * d + j])


cdef bint _chol_pd(const double[::1] s, int off, int d, double[:, ::1] L) noexcept nogil:
    cdef int i, j, k
    cdef double acc
    for j in range(d):
        acc = s[off + j * d + j]
        for k in range(j):
            acc = acc - L[j, k] * L[j, k]
        if not acc > 0.0:
            return False
        L[j, j] = sqrt(acc)
        for i in range(j + 1, d):
            acc = s[off + i * d + j]
            for k in range(j):
                acc = acc - L[i, k] * L[j, k]
            L[i, j] = acc / L[j, j]
    return True


def simulate_loop(A, B, C, BtC, u_fine, double h, x0, zhat0, M0, V, double W_inv, double theta):
    """RK4 co-integration of plant and observer over ``len(u_fine) // 2`` steps.

    ``u_fine`` holds the input at every node and interval midpoint. Returns
    ``(x, zhat, M, status, index)``; ``status`` is 0 on success, 1 on a
    non-finite state and 2 on loss of positive definiteness, with ``index``
    the offending node.
    """
    cdef const double[:, ::1] A_ = np.ascontiguousarray(A, dtype=np.float64)
    cdef const double[:, ::1] B_ = np.ascontiguousarray(B, dtype=np.float64)
    cdef const double[:, ::1] C_ = np.ascontiguousarray(C, dtype=np.float64)
    cdef const double[:, :, ::1] BtC_ = np.ascontiguousarray(BtC, dtype=np.float64)
    cdef const double[:, ::1] uf = np.ascontiguousarray(u_fine, dtype=np.float64)
    cdef const double[:, ::1] V_ = np.ascontiguousarray(V, dtype=np.float64)

    cdef Dims D
    D.n = A_.shape[0]
    D.p = B_.shape[1]
    D.m = BtC_.shape[0]
    D.d = D.m + D.n
    cdef int n = D.n, d = D.d
    cdef int steps = (uf.shape[0] - 1) // 2
    cdef int size = n + d + d * d
    cdef int k, i, j, off_M = n + d
    cdef int status = 0, bad = -1
    cdef double a, b

    x_hist = np.empty((steps + 1, n))
    z_hist = np.empty((steps + 1, d))
    M_hist = np.empty((steps + 1, d, d))
    cdef double[:, ::1] xh = x_hist
    cdef double[:, ::1] zh = z_hist
    cdef double[:, :, ::1] Mh = M_hist

    cdef double[::1] s = np.concatenate([np.asarray(x0, dtype=np.float64),
                                         np.asarray(zhat0, dtype=np.float64),
                                         np.asarray(M0, dtype=np.float64).ravel()])
    cdef double[::1] tmp = np.empty(size)
    cdef double[::1] k1 = np.empty(size)
    cdef double[::1] k2 = np.empty(size)
    cdef double[::1] k3 = np.empty(size)
    cdef double[::1] k4 = np.empty(size)
    cdef double[:, ::1] Au = np.empty((d, d))
    cdef double[:, ::1] T = np.empty((d, d))
    cdef double[:, ::1] L = np.zeros((d, d))
    cdef double[::1] Bu = np.empty(n)

    with nogil:
        for i in range(n):
            xh[0, i] = s[i]
        for i in range(d):
            zh[0, i] = s[n + i]
            for j in range(d):
                Mh[0, i, j] = s[off_M + i * d + j]

        for k in range(steps):
            _rhs(D, A_, B_, C_, BtC_, V_, W_inv, theta, uf[2 * k], s, k1, Au, T, Bu)
            for i in range(size):
                tmp[i] = s[i] + 0.5 * h * k1[i]
            _rhs(D, A_, B_, C_, BtC_, V_, W_inv, theta, uf[2 * k + 1], tmp, k2, Au, T, Bu)
            for i in range(size):
                tmp[i] = s[i] + 0.5 * h * k2[i]
            _rhs(D, A_, B_, C_, BtC_, V_, W_inv, theta, uf[2 * k + 1], tmp, k3, Au, T, Bu)
            for i in range(size):
                tmp[i] = s[i] + h * k3[i]
            _rhs(D, A_, B_, C_, BtC_, V_, W_inv, theta, uf[2 * k + 2], tmp, k4, Au, T, Bu)
            for i in range(size):
                s[i] = s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                if not isfinite(s[i]):
                    status = 1
            if status:
                bad = k + 1
                break
            for i in range(d):
                for j in range(i + 1, d):
                    a = s[off_M + i * d + j]
                    b = s[off_M + j * d + i]
                    s[off_M + i * d + j] = 0.5 * (a + b)
                    s[off_M + j * d + i] = 0.5 * (a + b)
            if not _chol_pd(s, off_M, d, L):
                status = 2
                bad = k + 1
                break
            for i in range(n):
                xh[k + 1, i] = s[i]
            for i in range(d):
                zh[k + 1, i] = s[n + i]
                for j in range(d):
                    Mh[k + 1, i, j] = s[off_M + i * d + j]

    if status:
        return x_hist[:bad], z_hist[:bad], M_hist[:bad], status, bad
    return x_hist, z_hist, M_hist, 0, -1
