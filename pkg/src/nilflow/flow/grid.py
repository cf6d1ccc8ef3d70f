"""Grids and fields on the twisted half-cylinder ``[0, 2pi) x [alpha, ymax]``.

The flat cylinder with coordinates ``(x, y) = (theta, L)`` is conformal to a
punctured disk, so harmonic maps and their energy can be computed there
without metric coefficients.
"""

import csv
from dataclasses import dataclass, field
from math import pi

import numpy as np

from .. import psym
from ..errors import GeometryViolation, ModelArityMismatch, NotPositiveDefinite
from ..h0 import eval_h0_batch
from . import _backend

__all__ = [
    "EquivariantField",
    "HalfCylinderGrid",
    "SupDist",
    "discrete_energy",
    "field_distance",
    "init_field",
    "sample_field",
    "seam_residual",
    "sup_dist",
    "sup_dist_to_model",
    "tension_field",
    "tension_residual",
    "write_csv",
]


@dataclass(frozen=True)
class HalfCylinderGrid:
    alpha: float
    ymax: float
    nx: int
    ny: int

    def __post_init__(self):
        if not self.alpha > 0:
            raise GeometryViolation(f"alpha must be positive, got {self.alpha}")
        if not self.ymax > self.alpha:
            raise GeometryViolation(f"ymax={self.ymax} must exceed alpha={self.alpha}")
        if self.nx < 8 or self.ny < 8:
            raise GeometryViolation(f"grid needs nx, ny >= 8, got {self.nx}x{self.ny}")

    @classmethod
    def with_spacing(cls, alpha, ymax, nx, hy):
        ny = (ymax - alpha) / hy + 1
        if abs(ny - round(ny)) > 1e-9:
            raise GeometryViolation(f"(ymax - alpha) = {ymax - alpha} is not a multiple of hy = {hy}")
        return cls(alpha, ymax, nx, int(round(ny)))

    @property
    def hx(self):
        return 2 * pi / self.nx

    @property
    def hy(self):
        return (self.ymax - self.alpha) / (self.ny - 1)

    @property
    def x(self):
        return np.arange(self.nx) * self.hx

    @property
    def y(self):
        return self.alpha + np.arange(self.ny) * self.hy

    def rows(self, y0, y1):
        """Row indices with ``y0 <= y <= y1`` (small tolerance)."""
        y = self.y
        tol = 1e-9 * self.hy
        return np.flatnonzero((y >= y0 - tol) & (y <= y1 + tol))


@dataclass
class EquivariantField:
    """Values on the fundamental domain plus the twist ``gamma``.

    ``values[ix, iy]`` is the point at ``(x_ix, y_iy)``. The value at
    ``x + 2pi`` is ``gamma . values[ix]``.
    """

    grid: HalfCylinderGrid
    values: np.ndarray
    gamma: np.ndarray = field(default=None)

    def __post_init__(self):
        self.values = np.asarray(self.values)
        nx, ny = self.grid.nx, self.grid.ny
        if self.values.ndim != 4 or self.values.shape[:2] != (nx, ny) or self.values.shape[2] != self.values.shape[3]:
            raise GeometryViolation(f"values must have shape ({nx}, {ny}, r, r), got {self.values.shape}")
        r = self.values.shape[2]
        if self.gamma is None:
            self.gamma = np.eye(r)
        else:
            g = np.asarray(self.gamma)
            self.gamma = g.astype(complex if np.iscomplexobj(g) else float)
        if self.gamma.shape != (r, r):
            raise GeometryViolation("twist has the wrong size")

    @property
    def r(self):
        return self.values.shape[2]

    def copy(self):
        return EquivariantField(self.grid, self.values.copy(), self.gamma.copy())

    def virtual_column(self):
        """The column at ``x = 2pi`` implied by the twist."""
        g = self.gamma
        return np.einsum("ab,ybc,dc->yad", g, self.values[0], g.conj())

    def check(self, rtol=1e-8):
        w = np.linalg.eigvalsh(self.values)
        if not np.all(w > 0):
            raise NotPositiveDefinite("field has a non positive definite node")
        logdet = np.sum(np.log(w), axis=-1)
        return float(np.max(np.abs(logdet)))


def sample_field(fn, grid, gamma):
    """Field from a vectorized ``fn(x, y) -> (..., r, r)``."""
    X, Y = np.meshgrid(grid.x, grid.y, indexing="ij")
    return EquivariantField(grid, np.ascontiguousarray(fn(X, Y)), gamma)


def init_field(model, grid, conformal=False):
    """Sample the model metric with ``theta = x`` and ``L = y``.

    ``conformal=True`` samples ``L = y / 2pi`` instead (see
    :func:`nilflow.h0.eval_h0_conformal`).
    """
    if model.k != 1:
        raise ModelArityMismatch(f"the cylinder solver needs a one-puncture model, got k={model.k}")
    scale = 2 * pi if conformal else 1.0
    return sample_field(
        lambda X, Y: eval_h0_batch(model, X[..., None], Y[..., None] / scale),
        grid,
        model.gammas[0],
    )


def seam_residual(field, model, conformal=False):
    """Max distance between the twisted column 0 and the model at ``x = 2pi``."""
    g = field.grid
    scale = 2 * pi if conformal else 1.0
    ref = eval_h0_batch(model, np.full((g.ny, 1), 2 * pi), g.y[:, None] / scale)
    return float(np.max(field_distance_arrays(field.virtual_column(), ref)))


# --- kernel plumbing -------------------------------------------------------


def _embed(A):
    # complex Hermitian -> real symmetric [[Re, -Im], [Im, Re]]
    re, im = A.real, A.imag
    top = np.concatenate([re, -im], axis=-1)
    bot = np.concatenate([im, re], axis=-1)
    return np.concatenate([top, bot], axis=-2)


def _unembed(E, r):
    return E[..., :r, :r] + 1j * E[..., r:, :r]


def _kernel_view(field):
    """Real contiguous arrays for the kernels and the factor on squared distances."""
    V = field.values
    g = field.gamma
    if np.iscomplexobj(V) or np.iscomplexobj(g):
        V = _embed(np.asarray(V, dtype=complex))
        g = _embed(np.asarray(g, dtype=complex))
        factor = 2.0
    else:
        factor = 1.0
    F = np.ascontiguousarray(V, dtype=float)
    G = np.ascontiguousarray(g, dtype=float)
    Gi = np.ascontiguousarray(np.linalg.inv(G))
    return F, G, Gi, factor


def _store(field, F):
    if np.iscomplexobj(field.values):
        field.values = _unembed(F, field.r)
    else:
        field.values = F


def _weights(grid):
    return 1 / grid.hx**2, 1 / grid.hy**2


def discrete_energy(field, backend=None):
    """``1/2 sum_edges (dual length / edge length) dist^2``.

    This is the Dirichlet energy of the piecewise-geodesic interpolant,
    approximating ``1/2 int |dH|^2 dx dy``. Along the two boundary rows the
    x-edges carry half a dual cell.
    """
    kern = backend or _backend.DEFAULT
    F, G, _, factor = _kernel_view(field)
    g = field.grid
    return kern.energy(F, G, g.hy / g.hx, g.hx / g.hy) / factor


def tension_field(field, scaled=True, backend=None):
    """Per-node discrete tension (zero on the Dirichlet rows).

    ``scaled=True``: ``|sum_k log_P(Q_k) / h_k^2|``, the five-point
    Laplacian of the map, which converges to the continuum tension field.
    ``scaled=False``: the neighbor log-mean ``|sum_k w_k log_P(Q_k) / sum_k w_k|``,
    i.e. the Karcher step the relaxation would take (``O(h^2)`` times the
    scaled value).
    """
    kern = backend or _backend.DEFAULT
    F, G, Gi, factor = _kernel_view(field)
    wx, wy = _weights(field.grid)
    t = kern.tension(F, G, Gi, wx, wy) / np.sqrt(factor)
    if not scaled:
        t = t / (2 * wx + 2 * wy)
    return t


def tension_residual(field, scaled=True, backend=None):
    return float(np.max(tension_field(field, scaled=scaled, backend=backend)))


# --- distances -------------------------------------------------------------


def field_distance_arrays(A, B):
    """Nodewise ``dist(A, B)`` for stacks of positive definite matrices."""
    C = np.linalg.cholesky(A)
    X = np.linalg.solve(C, B)
    M = np.linalg.solve(C, np.swapaxes(X.conj(), -1, -2))
    M = 0.5 * (M + np.swapaxes(M.conj(), -1, -2))
    lam = np.linalg.eigvalsh(M)
    return np.sqrt(np.sum(np.log(lam) ** 2, axis=-1))


def field_distance(f1, f2):
    if f1.grid != f2.grid:
        raise GeometryViolation("fields live on different grids")
    return field_distance_arrays(f1.values, f2.values)


@dataclass(frozen=True)
class SupDist:
    sup: float
    argmax: tuple
    boundary_sup: float
    passed: bool


def sup_dist(d, rtol=0.02, atol=1e-6):
    """Interior sup of a nodal function against its sup on the two boundary rows."""
    interior = d[:, 1:-1]
    idx = np.unravel_index(np.argmax(interior), interior.shape)
    sup = float(interior[idx])
    bsup = float(max(d[:, 0].max(), d[:, -1].max()))
    return SupDist(sup, (int(idx[0]), int(idx[1]) + 1), bsup, sup <= bsup * (1 + rtol) + atol)


def sup_dist_to_model(field, model, conformal=False, rtol=0.02, atol=1e-6):
    """Discrete maximum-principle report for ``dist(field, H0)``."""
    ref = init_field(model, field.grid, conformal=conformal)
    return sup_dist(field_distance(field, ref), rtol=rtol, atol=atol)


def write_csv(field, path):
    """One row per node: ``ix, iy, x, y`` then the entries as interleaved (re, im)."""
    g = field.grid
    V = np.asarray(field.values, dtype=complex)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        head = ["ix", "iy", "x", "y"]
        for a in range(field.r):
            for b in range(field.r):
                head += [f"re{a}{b}", f"im{a}{b}"]
        w.writerow(head)
        for iy in range(g.ny):
            for ix in range(g.nx):
                row = [ix, iy, repr(float(g.x[ix])), repr(float(g.y[iy]))]
                for z in V[ix, iy].ravel():
                    row += [repr(float(z.real)), repr(float(z.imag))]
                w.writerow(row)
