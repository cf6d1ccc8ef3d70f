"""Geometry of positive definite Hermitian matrices of determinant one.

Points are Hermitian positive definite arrays ``H`` with ``det H = 1``;
tangent vectors at ``H`` are Hermitian ``A`` with ``tr(H^{-1} A) = 0``.
The invariant metric is ``<A, B>_H = tr(H^{-1} A H^{-1} B)`` and
``SL(r, C)`` acts by congruence ``g . H = g H g^*``.

Flat sections are transported by ``v -> g^{-T} v`` so that
``section_norm(g . H, g^{-T} v) == section_norm(H, v)`` for real ``g``.
"""

import numpy as np

from .errors import DetNotOne, InputError, NotPositiveDefinite
from .numlin import hpd_geig, to_float

__all__ = [
    "act",
    "as_point",
    "dist",
    "endo_norm",
    "exp_map",
    "log_map",
    "normalize_det",
    "riem_inner",
    "section_norm",
]

_HERM_RTOL = 1e-12
_DET_RTOL = 1e-10


def _herm(M):
    return (M + M.conj().T) / 2


def _eigh(H):
    w, V = np.linalg.eigh(_herm(H))
    if w[0] <= 0:
        raise NotPositiveDefinite(f"smallest eigenvalue {w[0]:.3e} is not positive")
    return w, V


def _fn(w, V, f):
    out = (V * f(w)) @ V.conj().T
    return out


def normalize_det(H):
    """Rescale a positive definite matrix to determinant one (principal real root)."""
    H = _herm(np.asarray(to_float(H)))
    sign, logdet = np.linalg.slogdet(H)
    if sign.real <= 0:
        raise NotPositiveDefinite("determinant is not positive")
    return H * np.exp(-logdet.real / H.shape[0])


def as_point(H, rtol=_DET_RTOL):
    """Validate ``H`` as a point of the symmetric space and return it as floats."""
    H = np.asarray(to_float(H))
    scale = max(np.max(np.abs(H)), 1e-300)
    if np.max(np.abs(H - H.conj().T)) > _HERM_RTOL * scale:
        raise InputError("matrix is not Hermitian")
    w, _ = _eigh(H)
    if abs(np.sum(np.log(w))) > rtol * H.shape[0]:
        raise DetNotOne(f"det = {np.exp(np.sum(np.log(w))):.12g}")
    return _herm(H)


def act(g, H):
    """Congruence action ``g H g^*`` renormalized to determinant one."""
    g = np.asarray(to_float(g))
    d = np.linalg.det(g)
    if abs(abs(d) - 1) > _DET_RTOL:
        raise DetNotOne(f"|det g| = {abs(d):.12g}")
    return normalize_det(g @ np.asarray(to_float(H)) @ g.conj().T)


def riem_inner(H, A, B):
    """``tr(H^{-1} A H^{-1} B)`` for tangent vectors ``A, B`` at ``H``."""
    Hi_A = np.linalg.solve(H, A)
    Hi_B = np.linalg.solve(H, B)
    return float(np.real(np.trace(Hi_A @ Hi_B)))


def _sqrt_pair(H):
    w, V = _eigh(H)
    s = np.sqrt(w)
    return _fn(s, V, lambda x: x), _fn(s, V, lambda x: 1 / x)


def exp_map(H, A):
    """Riemannian exponential ``H^{1/2} expm(H^{-1/2} A H^{-1/2}) H^{1/2}``."""
    S, Si = _sqrt_pair(H)
    M = _herm(Si @ A @ Si)
    w, V = np.linalg.eigh(M)
    return normalize_det(S @ _fn(w, V, np.exp) @ S)


def log_map(H, K):
    """Inverse of :func:`exp_map`: the tangent at ``H`` pointing to ``K``."""
    S, Si = _sqrt_pair(H)
    M = _herm(Si @ np.asarray(to_float(K)) @ Si)
    w, V = _eigh(M)
    return _herm(S @ _fn(w, V, np.log) @ S)


def dist(H1, H2):
    """Geodesic distance ``sqrt(sum log^2 lambda_i)`` over eigenvalues of ``H1^{-1} H2``."""
    lam = hpd_geig(H1, H2)
    return float(np.sqrt(np.sum(np.log(lam) ** 2)))


def endo_norm(H, M):
    """Hilbert-Schmidt norm of the endomorphism ``M`` in an ``H``-orthonormal frame."""
    M = np.asarray(to_float(M))
    val = np.trace(np.linalg.solve(H, M.conj().T) @ H @ M)
    return float(np.sqrt(max(np.real(val), 0.0)))


def section_norm(H, v):
    v = np.asarray(to_float(v))
    return float(np.sqrt(max(np.real(v.conj() @ H @ v), 0.0)))
