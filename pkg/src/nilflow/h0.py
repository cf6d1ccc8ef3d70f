"""The model metric on a product of punctured disks and its diagnostics.

For chart coordinates ``theta_i`` (angle) and ``L_i = |log r_i| > 1`` the
model is the Gram matrix

    H0 = U D U^T,   U = expm(sum theta_i N_i / 2pi),   D = expm(sum log(L_i) Y_i)

i.e. ``exp(sum theta_i N_i / 2pi)`` acting on ``exp(sum log(L_i) Y_i / 2)``
acting on the identity. A vector in the ``Y``-weight ``a`` piece therefore has
squared norm ``~ L^a``. Twisting by the monodromy: ``H0(theta_i + 2pi) =
gamma_i . H0(theta_i)``.
"""

from dataclasses import dataclass
from math import factorial, pi

import numpy as np

from . import lie, numlin, psym
from .errors import InvalidChartPoint, ZeroVector

__all__ = [
    "CONVENTIONS",
    "ChartModel",
    "ChartPoint",
    "DH0Parts",
    "NormLawVerdict",
    "asymptotic_exponents",
    "cross_term_exponents",
    "dh0_parts",
    "equivariance_residual",
    "eval_h0",
    "eval_h0_batch",
    "eval_h0_conformal",
    "nilpotent_decay",
    "sample_points",
    "section_norm_law",
    "transversal_energy_density",
]

CONVENTIONS = {
    "orientation": "[Y,N]=2N, [Y,N-]=-2N-, [N,N-]=Y",
    "model": "H0 = U D U^T, U = expm(sum theta_i N_i/(2 pi)), D = expm(sum log(L_i) Y_i); squared norms scale as L^a",
    "theta_period": "2 pi",
    "chart": "L_i = |log r_i|; ds_P^2 = sum (dtheta_i^2 + dL_i^2)/L_i^2",
    "transport": "flat sections move by v -> gamma^{-T} v; section-level nilpotent is -N^T",
    "point_metric": "<A,B>_H = tr(H^-1 A H^-1 B)",
}


@dataclass(frozen=True)
class ChartPoint:
    """Angles and log-radii; entries past the model's ``k`` are ignored."""

    theta: tuple
    L: tuple

    def __post_init__(self):
        object.__setattr__(self, "theta", tuple(float(t) for t in np.atleast_1d(self.theta)))
        object.__setattr__(self, "L", tuple(float(v) for v in np.atleast_1d(self.L)))
        if len(self.theta) != len(self.L):
            raise InvalidChartPoint("theta and L must have equal length")
        if any(not np.isfinite(v) for v in self.theta + self.L):
            raise InvalidChartPoint("non-finite chart coordinate")
        if any(v <= 1 for v in self.L):
            raise InvalidChartPoint(f"L must exceed 1, got {self.L}")

    def moved(self, i, dtheta=0.0, L=None):
        theta = list(self.theta)
        Ls = list(self.L)
        theta[i] += dtheta
        if L is not None:
            Ls[i] = L
        return ChartPoint(tuple(theta), tuple(Ls))


@dataclass(frozen=True)
class ChartModel:
    """Data defining the model: nilpotents ``N``, diagonal ``Y``, monodromies.

    Matrices are stored exactly (``*_exact``) and as floats, all in the
    grading basis.
    """

    N_exact: tuple
    Y_exact: tuple
    gammas_exact: tuple
    basis: object = None

    def __post_init__(self):
        for i, (N, Y, g) in enumerate(zip(self.N_exact, self.Y_exact, self.gammas_exact)):
            if any(v != 0 for v in (numlin.expm(N) - g).flat):
                raise ValueError(f"expm(N_{i}) != gamma_{i}")
            if any(Y[a, b] != 0 for a in range(Y.shape[0]) for b in range(Y.shape[1]) if a != b):
                raise ValueError(f"Y_{i} is not diagonal")

    @classmethod
    def from_grading(cls, grading):
        gammas = tuple(numlin.expm(N) for N in grading.N)
        return cls(tuple(grading.N), tuple(grading.Y), gammas, grading.basis)

    @classmethod
    def from_generators(cls, gammas, budget=32):
        _, fam = lie.validate_family(gammas)
        return cls.from_grading(lie.commuting_grading(fam, budget=budget))

    @classmethod
    def from_nilpotents(cls, Ns, Ys):
        Ns = tuple(numlin.rational(N) for N in Ns)
        Ys = tuple(numlin.rational(Y) for Y in Ys)
        return cls(Ns, Ys, tuple(numlin.expm(N) for N in Ns))

    @property
    def r(self):
        return self.N_exact[0].shape[0]

    @property
    def k(self):
        return len(self.N_exact)

    @property
    def N(self):
        return tuple(numlin.to_float(N) for N in self.N_exact)

    @property
    def Y(self):
        return tuple(numlin.to_float(Y) for Y in self.Y_exact)

    @property
    def gammas(self):
        return tuple(numlin.to_float(g) for g in self.gammas_exact)

    @property
    def weights(self):
        """``weights[i, j]``: the j-th diagonal entry of ``Y_i``."""
        return np.array([np.diag(Y) for Y in self.Y], dtype=float)

    def section_nilpotent(self, i):
        return -self.N[i].T


def _point(p, k):
    if not isinstance(p, ChartPoint):
        p = ChartPoint(*p)
    if len(p.theta) < k:
        raise InvalidChartPoint(f"chart point has {len(p.theta)} coordinates, model needs {k}")
    return p


def eval_h0_batch(model, theta, L):
    """Vectorized model: ``theta`` and ``L`` have shape ``(..., k)``."""
    theta = np.asarray(theta, dtype=float)
    L = np.asarray(L, dtype=float)
    Ns = np.stack(model.N)
    r = model.r
    X = np.einsum("...i,iab->...ab", theta[..., : model.k], Ns) / (2 * pi)
    U = np.broadcast_to(np.eye(r), X.shape).copy()
    P = U.copy()
    for j in range(1, r):
        P = P @ X
        U = U + P / factorial(j)
    d = np.exp(np.log(L[..., : model.k]) @ model.weights)
    return (U * d[..., None, :]) @ np.swapaxes(U, -1, -2)


def eval_h0(model, p):
    p = _point(p, model.k)
    return eval_h0_batch(model, np.array(p.theta[: model.k]), np.array(p.L[: model.k]))


def eval_h0_conformal(model, p):
    """The model with each ``L_i`` replaced by ``L_i / 2pi``.

    This representative makes ``theta_i / 2pi + sqrt(-1) L_i / 2pi`` a
    holomorphic function of ``w_i = theta_i + sqrt(-1) L_i``, so it is
    harmonic on every transversal disk. It stays at constant distance
    ``log(2pi) * |Y|`` from :func:`eval_h0`.
    """
    p = _point(p, model.k)
    return eval_h0_batch(model, np.array(p.theta[: model.k]), np.array(p.L[: model.k]) / (2 * pi))


def sample_points(model, n_theta=20, n_L=20, L_range=(10.0, 1e4), i=0, base=None):
    """Grid of chart points sweeping direction ``i`` (others held at ``base``)."""
    base = base or ChartPoint((0.0,) * model.k, (10.0,) * model.k)
    out = []
    for t in np.linspace(0.0, 2 * pi, n_theta, endpoint=False):
        for L in np.geomspace(*L_range, n_L):
            out.append(base.moved(i, dtheta=t - base.theta[i], L=L))
    return out


def equivariance_residual(model, samples, twists=None):
    """Max over samples and directions of ``dist(H0(theta_i + 2pi), gamma_i . H0)``."""
    twists = model.gammas if twists is None else [numlin.to_float(g) for g in twists]
    worst = 0.0
    for p in samples:
        p = _point(p, model.k)
        H = eval_h0(model, p)
        for i in range(model.k):
            shifted = eval_h0(model, p.moved(i, dtheta=2 * pi))
            worst = max(worst, psym.dist(shifted, psym.act(twists[i], H)))
    return worst


def _hnorm2(H, X):
    # |X|_H^2 = tr(H^-1 X H^-1 X^*) through the Cholesky whitening of H
    C = np.linalg.cholesky(H)
    Z = np.linalg.solve(C, np.linalg.solve(C, X.conj().T).conj().T)
    return float(np.real(np.sum(Z * Z.conj())))


def _richardson(f, x, h):
    d1 = (f(x + h) - f(x - h)) / (2 * h)
    d2 = (f(x + h / 2) - f(x - h / 2)) / h
    return (4 * d2 - d1) / 3


def _derivatives(model, p, i, step):
    theta = np.array(p.theta[: model.k])
    logL = np.log(np.array(p.L[: model.k]))

    def along_theta(t):
        th = theta.copy()
        th[i] = t
        return eval_h0_batch(model, th, np.exp(logL))

    def along_logL(s):
        ls = logL.copy()
        ls[i] = s
        return eval_h0_batch(model, theta, np.exp(ls))

    d_theta = _richardson(along_theta, theta[i], step)
    d_logL = _richardson(along_logL, logL[i], step)
    return d_theta, d_logL


def transversal_energy_density(model, i, p, step=1e-4):
    """``L_i^2 (|d_theta_i H0|^2 + |d_L_i H0|^2)`` by Richardson central differences."""
    p = _point(p, model.k)
    H = eval_h0(model, p)
    d_theta, d_logL = _derivatives(model, p, i, step)
    L = p.L[i]
    # L d/dL == d/dlog L
    return L**2 * _hnorm2(H, d_theta) + _hnorm2(H, d_logL)


def _slope(model, v, i, base, L_range, n):
    Ls = np.geomspace(*L_range, n)
    vals = []
    for L in Ls:
        H = eval_h0(model, base.moved(i, L=L))
        vals.append(psym.section_norm(H, v) ** 2)
    return float(np.polyfit(np.log(Ls), np.log(vals), 1)[0])


def asymptotic_exponents(model, v, base=None, L_range=(10.0, 1e4), n=31):
    """Least-squares slopes of ``log |v|^2_{H0}`` against ``log L_i``, one per direction."""
    v = np.asarray(numlin.to_float(v), dtype=float)
    if not np.any(v):
        raise ZeroVector("exponent of the zero vector is undefined")
    base = base or ChartPoint((0.0,) * model.k, (10.0,) * model.k)
    return np.array([_slope(model, v, i, base, L_range, n) for i in range(model.k)])


def nilpotent_decay(model, i, samples):
    """Empirical ``sup |N_sec,i|^2_{H0} L_i^2`` over the samples."""
    M = model.section_nilpotent(i)
    worst = 0.0
    for p in samples:
        p = _point(p, model.k)
        worst = max(worst, psym.endo_norm(eval_h0(model, p), M) ** 2 * p.L[i] ** 2)
    return worst


@dataclass(frozen=True)
class DH0Parts:
    y_part: float
    n_part: float
    residual: float


def dh0_parts(model, p, step=1e-4):
    """Split the (1,0)-derivative of the model into radial and angular parts.

    With ``w_i = theta_i + sqrt(-1) L_i`` the derivative is
    ``d/dw_i = (d/dtheta_i - sqrt(-1) d/dL_i) / 2``. The radial part carries
    ``U (Y_i / L_i) D U^T``, the angular part ``N_i H0 + H0 N_i^T`` (over
    2pi). Norms are taken in the chart metric, i.e. each ``dw_i`` has length
    ``L_i``. ``residual`` compares their sum with finite differences.
    """
    p = _point(p, model.k)
    theta = np.array(p.theta[: model.k])
    L = np.array(p.L[: model.k])
    H = eval_h0(model, p)
    X = sum(t * N for t, N in zip(theta, model.N)) / (2 * pi)
    U = numlin.expm(X)
    D = np.diag(np.exp(np.log(L) @ model.weights))
    y2 = n2 = res2 = 0.0
    for i in range(model.k):
        Ni = model.N[i] / (2 * pi)
        ang = 0.5 * (Ni @ H + H @ Ni.T)
        rad = -0.5j * (U @ (model.Y[i] / L[i]) @ D @ U.T)
        d_theta, d_logL = _derivatives(model, p, i, step)
        fd = 0.5 * (d_theta - 1j * d_logL / L[i])
        y2 += L[i] ** 2 * _hnorm2(H, rad)
        n2 += L[i] ** 2 * _hnorm2(H, ang)
        res2 += L[i] ** 2 * _hnorm2(H, ang + rad - fd)
    return DH0Parts(float(np.sqrt(y2)), float(np.sqrt(n2)), float(np.sqrt(res2)))


@dataclass(frozen=True)
class NormLawVerdict:
    weight: float
    slope: float
    lowered_slope: float
    vacuous: bool
    passed: bool

    @property
    def drop(self):
        return self.slope - self.lowered_slope


def section_norm_law(model, i, v, tol=0.01, **fit):
    """Check that the section-level nilpotent lowers the norm exponent by >= 2."""
    v = np.asarray(numlin.to_float(v), dtype=float)
    if not np.any(v):
        raise ZeroVector("norm law needs a nonzero vector")
    a_vals = {model.weights[i, j] for j in np.flatnonzero(v)}
    if len(a_vals) != 1:
        raise ValueError("v is not an eigenvector of Y_i")
    a = a_vals.pop()
    slope = asymptotic_exponents(model, v, **fit)[i]
    w = model.section_nilpotent(i) @ v
    if np.max(np.abs(w)) <= 1e-14 * np.max(np.abs(v)):
        return NormLawVerdict(a, slope, float("-inf"), True, True)
    lowered = asymptotic_exponents(model, w, **fit)[i]
    return NormLawVerdict(a, slope, lowered, False, bool(lowered <= a - 2 + tol))


def cross_term_exponents(model):
    """Growth exponents of the angular energy in the other directions.

    ``out[i][j]`` is the largest power of ``L_j`` (j != i) multiplying any
    entry of ``N_i`` in ``L_i^2 |d_theta_i H0|^2``. Positive values flag a
    transversal energy density that grows towards the j-th divisor.
    """
    W = model.weights
    out = np.zeros((model.k, model.k))
    for i, N in enumerate(model.N):
        nz = np.argwhere(np.abs(N) > 0)
        for j in range(model.k):
            if j == i or len(nz) == 0:
                continue
            out[i, j] = max(W[j, b] - W[j, a] for a, b in nz)
    return out
