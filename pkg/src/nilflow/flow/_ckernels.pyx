# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled relaxation kernels on real symmetric positive definite fields.

Field layout: ``F[ix, iy, :, :]`` with shape ``(nx, ny, n, n)``, C-contiguous.
Rows ``iy = 0`` and ``iy = ny - 1`` are Dirichlet data. The x direction is
periodic up to the twist: the +x neighbor of column ``nx - 1`` is
``G F[0] G^T`` and the -x neighbor of column 0 is ``Gi F[nx - 1] Gi^T``.
"""

import numpy as np
from cython.parallel cimport parallel, prange
from libc.math cimport atan2, cos, exp, fabs, hypot, log, sin, sqrt
from libc.stdlib cimport free, malloc

cdef int MAXN = 16


cdef inline void _mm(int n, const double* A, const double* B, double* C) noexcept nogil:
    cdef int i, j, k
    cdef double s
    for i in range(n):
        for j in range(n):
            s = 0.0
            for k in range(n):
                s += A[i * n + k] * B[k * n + j]
            C[i * n + j] = s


cdef inline void _congruence(int n, const double* G, const double* Q, double* out, double* tmp) noexcept nogil:
    # out = G Q G^T
    cdef int i, j, k
    cdef double s
    _mm(n, G, Q, tmp)
    for i in range(n):
        for j in range(n):
            s = 0.0
            for k in range(n):
                s += tmp[i * n + k] * G[j * n + k]
            out[i * n + j] = s


cdef inline void _sandwich(int n, const double* Si, const double* Q, double* out, double* tmp) noexcept nogil:
    # out = Si Q Si for symmetric Si, symmetrized
    cdef int i, j
    cdef double s
    _mm(n, Si, Q, tmp)
    _mm(n, tmp, Si, out)
    for i in range(n):
        for j in range(i + 1, n):
            s = 0.5 * (out[i * n + j] + out[j * n + i])
            out[i * n + j] = s
            out[j * n + i] = s


cdef void _eig2(const double* A, double* w, double* V) noexcept nogil:
    cdef double a = A[0], c = A[3], b = 0.5 * (A[1] + A[2])
    cdef double t, d, dt, phi
    if b == 0.0:
        if a <= c:
            w[0] = a; w[1] = c
            V[0] = 1.0; V[1] = 0.0; V[2] = 0.0; V[3] = 1.0
        else:
            w[0] = c; w[1] = a
            V[0] = 0.0; V[1] = 1.0; V[2] = 1.0; V[3] = 0.0
        return
    t = 0.5 * (a + c)
    d = hypot(0.5 * (a - c), b)
    dt = a * c - b * b
    # the eigenvalue of larger modulus directly, the other through the determinant
    if t >= 0.0:
        w[1] = t + d
        w[0] = dt / w[1]
    else:
        w[0] = t - d
        w[1] = dt / w[0]
    phi = 0.5 * atan2(2.0 * b, a - c)
    # columns: V[:, 0] for w[0], V[:, 1] for w[1]
    V[0] = -sin(phi); V[2] = cos(phi)
    V[1] = cos(phi); V[3] = sin(phi)


cdef void _jacobi(int n, const double* A, double* w, double* V, double* a) noexcept nogil:
    cdef int i, j, k, p, q, sweep
    cdef double off, scale, apq, theta, t, c, s, x, y
    for i in range(n * n):
        a[i] = A[i]
        V[i] = 0.0
    for i in range(n):
        V[i * n + i] = 1.0
    for sweep in range(100):
        off = 0.0
        scale = 0.0
        for i in range(n):
            scale += a[i * n + i] * a[i * n + i]
            for j in range(i + 1, n):
                off += a[i * n + j] * a[i * n + j]
        if off <= 1e-34 * scale or off == 0.0:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = 0.5 * (a[p * n + q] + a[q * n + p])
                if apq == 0.0:
                    continue
                theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq)
                if fabs(theta) > 1e150:
                    t = 0.5 / theta
                elif theta >= 0.0:
                    t = 1.0 / (theta + sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + sqrt(theta * theta + 1.0))
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    x = a[k * n + p]; y = a[k * n + q]
                    a[k * n + p] = c * x - s * y
                    a[k * n + q] = s * x + c * y
                for k in range(n):
                    x = a[p * n + k]; y = a[q * n + k]
                    a[p * n + k] = c * x - s * y
                    a[q * n + k] = s * x + c * y
                a[p * n + q] = 0.0
                a[q * n + p] = 0.0
                for k in range(n):
                    x = V[k * n + p]; y = V[k * n + q]
                    V[k * n + p] = c * x - s * y
                    V[k * n + q] = s * x + c * y
    for i in range(n):
        w[i] = a[i * n + i]


cdef inline void _eig(int n, const double* A, double* w, double* V, double* work) noexcept nogil:
    if n == 1:
        w[0] = A[0]
        V[0] = 1.0
    elif n == 2:
        _eig2(A, w, V)
    else:
        _jacobi(n, A, w, V, work)


cdef inline void _recompose(int n, const double* V, const double* f, double* out) noexcept nogil:
    # out = V diag(f) V^T
    cdef int i, j, k
    cdef double s
    for i in range(n):
        for j in range(i, n):
            s = 0.0
            for k in range(n):
                s += V[i * n + k] * f[k] * V[j * n + k]
            out[i * n + j] = s
            out[j * n + i] = s


cdef inline double* _neighbor(double[:, :, :, ::1] F, const double* G, const double* Gi,
                              int ix, int iy, int side, double* buf, double* tmp) noexcept nogil:
    # side: 0 = +x, 1 = -x, 2 = +y, 3 = -y
    cdef int nx = F.shape[0]
    cdef int n = F.shape[2]
    if side == 0:
        if ix + 1 < nx:
            return &F[ix + 1, iy, 0, 0]
        _congruence(n, G, &F[0, iy, 0, 0], buf, tmp)
        return buf
    if side == 1:
        if ix > 0:
            return &F[ix - 1, iy, 0, 0]
        _congruence(n, Gi, &F[nx - 1, iy, 0, 0], buf, tmp)
        return buf
    if side == 2:
        return &F[ix, iy + 1, 0, 0]
    return &F[ix, iy - 1, 0, 0]


cdef inline int _roots(int n, const double* P, double* S, double* Si, double* w, double* V,
                       double* f, double* work, double* logdet) noexcept nogil:
    cdef int k
    _eig(n, P, w, V, work)
    logdet[0] = 0.0
    for k in range(n):
        if not w[k] > 0.0:
            return -1
        logdet[0] += log(w[k])
        f[k] = sqrt(w[k])
    _recompose(n, V, f, S)
    for k in range(n):
        f[k] = 1.0 / f[k]
    _recompose(n, V, f, Si)
    return 0


cdef inline int _log_tangent(int n, double[:, :, :, ::1] F, const double* G, const double* Gi,
                             int ix, int iy, double wx, double wy, double* ws, double* T) noexcept nogil:
    # T = sum_k w_k log(Si Q_k Si) at node (ix, iy); returns -1 on a non-SPD input.
    # Leaves Si in ws[n2:2 n2] and S in ws[0:n2]; logdet of P in ws[9 n2 + 3 n].
    cdef int n2 = n * n
    cdef double* S = ws
    cdef double* Si = ws + n2
    cdef double* Q = ws + 2 * n2
    cdef double* M = ws + 3 * n2
    cdef double* tmp = ws + 4 * n2
    cdef double* V = ws + 5 * n2
    cdef double* L = ws + 6 * n2
    cdef double* work = ws + 7 * n2
    cdef double* w = ws + 9 * n2
    cdef double* f = w + n
    cdef double* logdet = w + 3 * n
    cdef double* nb
    cdef double wk
    cdef int side, k
    if _roots(n, &F[ix, iy, 0, 0], S, Si, w, V, f, work, logdet) < 0:
        return -1
    for k in range(n2):
        T[k] = 0.0
    for side in range(4):
        wk = wx if side < 2 else wy
        nb = _neighbor(F, G, Gi, ix, iy, side, Q, tmp)
        _sandwich(n, Si, nb, M, tmp)
        _eig(n, M, w, V, work)
        for k in range(n):
            if not w[k] > 0.0:
                return -1
            f[k] = log(w[k])
        _recompose(n, V, f, L)
        for k in range(n2):
            T[k] += wk * L[k]
    return 0


cdef double _update(int n, double[:, :, :, ::1] F, const double* G, const double* Gi,
                    int ix, int iy, double wx, double wy, double omega, double* ws) noexcept nogil:
    # damped Karcher step towards the weighted geodesic mean of the four neighbors
    cdef int n2 = n * n
    cdef double* T = ws + 8 * n2
    cdef double* S = ws
    cdef double* M = ws + 3 * n2
    cdef double* tmp = ws + 4 * n2
    cdef double* V = ws + 5 * n2
    cdef double* E = ws + 6 * n2
    cdef double* work = ws + 7 * n2
    cdef double* w = ws + 9 * n2
    cdef double* f = w + n
    cdef double logdet, tr, move, scale
    cdef double* P = &F[ix, iy, 0, 0]
    cdef int k, j
    if _log_tangent(n, F, G, Gi, ix, iy, wx, wy, ws, T) < 0:
        return -1.0
    logdet = w[3 * n]
    move = 0.0
    tr = 0.0
    for k in range(n2):
        T[k] *= omega / (2.0 * wx + 2.0 * wy)
        move += T[k] * T[k]
    if move == 0.0:
        return 0.0
    for k in range(n):
        tr += T[k * n + k]
    _eig(n, T, w, V, work)
    for k in range(n):
        f[k] = exp(w[k])
    _recompose(n, V, f, E)
    _mm(n, S, E, tmp)
    _mm(n, tmp, S, M)
    # det(P_new) = det(P) exp(tr T); rescale back to det 1
    scale = exp(-(logdet + tr) / n)
    for k in range(n2):
        P[k] = scale * M[k]
    for k in range(n):
        for j in range(k + 1, n):
            tr = 0.5 * (P[k * n + j] + P[j * n + k])
            P[k * n + j] = tr
            P[j * n + k] = tr
    return sqrt(move)


cdef inline int _wsize(int n) noexcept nogil:
    return 10 * n * n + 4 * n + 8


def sweep(double[:, :, :, ::1] F, double[:, ::1] G, double[:, ::1] Gi,
          double wx, double wy, double omega, int order=0, int nthreads=0):
    """One full sweep; returns the largest nodal geodesic movement.

    ``order`` 0 is red-black (two colors, each half-sweep reads only the
    other color), 1 is lexicographic Gauss-Seidel. ``nthreads > 0`` runs
    the red-black half-sweeps with OpenMP; results match the serial path
    exactly since nodes of one color never read each other.
    """
    cdef int nx = F.shape[0], ny = F.shape[1], n = F.shape[2]
    cdef int color, ix, iy, idx, m, half
    cdef double* ws
    cdef double mv
    cdef double best = 0.0
    cdef double[:, ::1] moves = np.zeros((nx, ny))
    if n > MAXN:
        raise ValueError("matrix size too large for the compiled kernel")
    if order == 0 and nx % 2:
        raise ValueError("red-black ordering needs an even number of columns")
    if ny < 3:
        return 0.0
    m = ny - 2
    half = nx * m
    if order == 1:
        ws = <double*> malloc(_wsize(n) * sizeof(double))
        try:
            with nogil:
                for iy in range(1, ny - 1):
                    for ix in range(nx):
                        moves[ix, iy] = _update(n, F, &G[0, 0], &Gi[0, 0], ix, iy, wx, wy, omega, ws)
        finally:
            free(ws)
    elif nthreads <= 0:
        ws = <double*> malloc(_wsize(n) * sizeof(double))
        try:
            with nogil:
                for color in range(2):
                    for iy in range(1, ny - 1):
                        for ix in range((iy + color) % 2, nx, 2):
                            moves[ix, iy] = _update(n, F, &G[0, 0], &Gi[0, 0], ix, iy, wx, wy, omega, ws)
        finally:
            free(ws)
    else:
        for color in range(2):
            with nogil, parallel(num_threads=nthreads):
                ws = <double*> malloc(_wsize(n) * sizeof(double))
                for idx in prange(half, schedule="static"):
                    iy = 1 + idx // nx
                    ix = idx % nx
                    if (ix + iy) % 2 == color:
                        moves[ix, iy] = _update(n, F, &G[0, 0], &Gi[0, 0], ix, iy, wx, wy, omega, ws)
                free(ws)
    for iy in range(1, ny - 1):
        for ix in range(nx):
            mv = moves[ix, iy]
            if mv < 0.0:
                raise FloatingPointError(f"node ({ix}, {iy}) left the positive cone")
            if mv > best:
                best = mv
    return best


def tension(double[:, :, :, ::1] F, double[:, ::1] G, double[:, ::1] Gi, double wx, double wy):
    """Per-node norm of ``sum_k w_k log_P(Q_k)``; zero on the Dirichlet rows."""
    cdef int nx = F.shape[0], ny = F.shape[1], n = F.shape[2]
    cdef int ix, iy, k, n2 = n * n
    cdef double s
    out = np.zeros((nx, ny))
    cdef double[:, ::1] o = out
    cdef double* ws = <double*> malloc(_wsize(n) * sizeof(double))
    cdef double* T = ws + 8 * n2
    try:
        with nogil:
            for iy in range(1, ny - 1):
                for ix in range(nx):
                    if _log_tangent(n, F, &G[0, 0], &Gi[0, 0], ix, iy, wx, wy, ws, T) < 0:
                        o[ix, iy] = -1.0
                        continue
                    s = 0.0
                    for k in range(n2):
                        s += T[k] * T[k]
                    o[ix, iy] = sqrt(s)
    finally:
        free(ws)
    if (out < 0).any():
        raise FloatingPointError("field left the positive cone")
    return out


def energy(double[:, :, :, ::1] F, double[:, ::1] G, double cx, double cy):
    """``1/2 sum_edges c_e dist^2``; x-edges on the two Dirichlet rows get half weight."""
    cdef int nx = F.shape[0], ny = F.shape[1], n = F.shape[2]
    cdef int ix, iy, k, n2 = n * n
    cdef double total = 0.0, d2, c
    cdef double* ws = <double*> malloc(_wsize(n) * sizeof(double))
    cdef double* S = ws
    cdef double* Si = ws + n2
    cdef double* Q = ws + 2 * n2
    cdef double* M = ws + 3 * n2
    cdef double* tmp = ws + 4 * n2
    cdef double* V = ws + 5 * n2
    cdef double* work = ws + 7 * n2
    cdef double* w = ws + 9 * n2
    cdef double* f = w + n
    cdef double* logdet = w + 3 * n
    cdef double* nb
    cdef int bad = 0
    try:
        with nogil:
            for ix in range(nx):
                for iy in range(ny):
                    if _roots(n, &F[ix, iy, 0, 0], S, Si, w, V, f, work, logdet) < 0:
                        bad = 1
                        break
                    nb = _neighbor(F, &G[0, 0], &G[0, 0], ix, iy, 0, Q, tmp)
                    _sandwich(n, Si, nb, M, tmp)
                    _eig(n, M, w, V, work)
                    d2 = 0.0
                    for k in range(n):
                        d2 += log(w[k]) * log(w[k])
                    c = cx if 0 < iy < ny - 1 else 0.5 * cx
                    total += c * d2
                    if iy + 1 < ny:
                        _sandwich(n, Si, &F[ix, iy + 1, 0, 0], M, tmp)
                        _eig(n, M, w, V, work)
                        d2 = 0.0
                        for k in range(n):
                            d2 += log(w[k]) * log(w[k])
                        total += cy * d2
                if bad:
                    break
    finally:
        free(ws)
    if bad:
        raise FloatingPointError("field left the positive cone")
    return 0.5 * total
