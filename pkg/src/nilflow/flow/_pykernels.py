"""Pure numpy versions of the relaxation kernels (same API as ``_ckernels``).

Red-black sweeps are batched over a whole color; the lexicographic order
has to visit nodes one at a time and is slow.
"""

import numpy as np


def _fn(A, f):
    w, V = np.linalg.eigh(A)
    return (V * f(w)[..., None, :]) @ np.swapaxes(V, -1, -2)


def _sym(A):
    return 0.5 * (A + np.swapaxes(A, -1, -2))


def _roots(P):
    w, V = np.linalg.eigh(P)
    if not np.all(w > 0):
        raise FloatingPointError("field left the positive cone")
    Vt = np.swapaxes(V, -1, -2)
    s = np.sqrt(w)
    S = (V * s[..., None, :]) @ Vt
    Si = (V * (1 / s)[..., None, :]) @ Vt
    return S, Si, np.sum(np.log(w), axis=-1)


def _logs(Si, Q):
    M = _sym(Si @ Q @ Si)
    w, V = np.linalg.eigh(M)
    if not np.all(w > 0):
        raise FloatingPointError("field left the positive cone")
    return (V * np.log(w)[..., None, :]) @ np.swapaxes(V, -1, -2)


def _neighbors(F, G, Gi, ix, iy):
    nx = F.shape[0]
    right = F[(ix + 1) % nx, iy].copy()
    left = F[(ix - 1) % nx, iy].copy()
    wrap_r = ix == nx - 1
    wrap_l = ix == 0
    right[wrap_r] = G @ right[wrap_r] @ G.T
    left[wrap_l] = Gi @ left[wrap_l] @ Gi.T
    return right, left, F[ix, iy + 1], F[ix, iy - 1]


def _tangent(F, G, Gi, ix, iy, wx, wy):
    P = F[ix, iy]
    S, Si, logdet = _roots(P)
    right, left, up, down = _neighbors(F, G, Gi, ix, iy)
    T = wx * (_logs(Si, right) + _logs(Si, left)) + wy * (_logs(Si, up) + _logs(Si, down))
    return S, T, logdet


def _update(F, G, Gi, ix, iy, wx, wy, omega):
    S, T, logdet = _tangent(F, G, Gi, ix, iy, wx, wy)
    T = T * (omega / (2 * wx + 2 * wy))
    n = F.shape[-1]
    tr = np.trace(T, axis1=-2, axis2=-1)
    P = _sym(S @ _fn(T, np.exp) @ S) * np.exp(-(logdet + tr) / n)[..., None, None]
    F[ix, iy] = P
    return np.sqrt(np.sum(T * T, axis=(-2, -1)))


def sweep(F, G, Gi, wx, wy, omega, order=0, nthreads=0):
    nx, ny = F.shape[:2]
    if order == 0 and nx % 2:
        raise ValueError("red-black ordering needs an even number of columns")
    if ny < 3:
        return 0.0
    G = np.asarray(G)
    Gi = np.asarray(Gi)
    best = 0.0
    if order == 1:
        for iy in range(1, ny - 1):
            for ix in range(nx):
                mv = _update(F, G, Gi, np.array([ix]), np.array([iy]), wx, wy, omega)
                best = max(best, float(mv[0]))
        return best
    IX, IY = np.meshgrid(np.arange(nx), np.arange(1, ny - 1), indexing="ij")
    for color in range(2):
        mask = (IX + IY) % 2 == color
        mv = _update(F, G, Gi, IX[mask], IY[mask], wx, wy, omega)
        best = max(best, float(mv.max(initial=0.0)))
    return best


def tension(F, G, Gi, wx, wy):
    nx, ny = F.shape[:2]
    out = np.zeros((nx, ny))
    if ny < 3:
        return out
    IX, IY = np.meshgrid(np.arange(nx), np.arange(1, ny - 1), indexing="ij")
    _, T, _ = _tangent(F, np.asarray(G), np.asarray(Gi), IX, IY, wx, wy)
    out[:, 1:-1] = np.sqrt(np.sum(T * T, axis=(-2, -1)))
    return out


def energy(F, G, cx, cy):
    nx, ny = F.shape[:2]
    G = np.asarray(G)
    _, Si, _ = _roots(F)
    right = np.roll(F, -1, axis=0)
    right[-1] = G @ F[0] @ G.T
    ex = np.sum(_logs(Si, right) ** 2, axis=(-2, -1))
    ey = np.sum(_logs(Si[:, :-1], F[:, 1:]) ** 2, axis=(-2, -1))
    wrow = np.full(ny, cx)
    wrow[[0, -1]] *= 0.5
    return 0.5 * (float(np.sum(ex * wrow)) + cy * float(np.sum(ey)))
