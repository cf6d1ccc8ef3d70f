"""Scalar Laplace problems on the periodic half-cylinder."""

from dataclasses import dataclass

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from ..errors import GeometryViolation, NumericalError
from .grid import HalfCylinderGrid

__all__ = [
    "CutoffCheck",
    "ScalarField",
    "band_sup_sequence",
    "cutoff_inequality_check",
    "cutoff_profile",
    "scalar_harmonic_solve",
    "separable_solution",
]


@dataclass
class ScalarField:
    grid: HalfCylinderGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.nx, self.grid.ny):
            raise GeometryViolation("scalar field has the wrong shape")
        if not np.all(np.isfinite(self.values)):
            raise NumericalError("scalar field has non-finite values")


def _row(data, grid):
    if callable(data):
        return np.broadcast_to(np.asarray(data(grid.x), dtype=float), (grid.nx,)).copy()
    return np.broadcast_to(np.asarray(data, dtype=float), (grid.nx,)).copy()


def scalar_harmonic_solve(grid, g0=0.0, g1=0.0):
    """Five-point Laplace solution with ``u = g0`` at ``y = alpha`` and ``g1`` at ``ymax``.

    ``g0``, ``g1`` are scalars, arrays over the columns, or callables of ``x``.
    Periodic in ``x``.
    """
    nx, ny = grid.nx, grid.ny
    wx, wy = 1 / grid.hx**2, 1 / grid.hy**2
    m = ny - 2
    u = np.zeros((nx, ny))
    u[:, 0] = _row(g0, grid)
    u[:, -1] = _row(g1, grid)
    # unknowns ordered (ix, iy - 1) row-major
    ix, iy = np.meshgrid(np.arange(nx), np.arange(m), indexing="ij")
    k = (ix * m + iy).ravel()
    rows = [k, k, k]
    cols = [k, (((ix + 1) % nx) * m + iy).ravel(), (((ix - 1) % nx) * m + iy).ravel()]
    vals = [np.full(k.size, 2 * wx + 2 * wy), np.full(k.size, -wx), np.full(k.size, -wx)]
    up = (iy < m - 1).ravel()
    down = (iy > 0).ravel()
    rows += [k[up], k[down]]
    cols += [k[up] + 1, k[down] - 1]
    vals += [np.full(up.sum(), -wy), np.full(down.sum(), -wy)]
    A = scipy.sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(nx * m, nx * m)
    )
    b = np.zeros((nx, m))
    b[:, 0] += wy * u[:, 0]
    b[:, -1] += wy * u[:, -1]
    sol = scipy.sparse.linalg.spsolve(A.tocsc(), b.ravel())
    if not np.all(np.isfinite(sol)):
        raise NumericalError("sparse solve failed")
    u[:, 1:-1] = sol.reshape(nx, m)
    return ScalarField(grid, u)


def separable_solution(grid, mode=1):
    """``sin(mode x) sinh(y - alpha) / sinh(ymax - alpha)``, harmonic in the continuum."""
    X, Y = np.meshgrid(grid.x, grid.y, indexing="ij")
    return np.sin(mode * X) * np.sinh(mode * (Y - grid.alpha)) / np.sinh(mode * (grid.ymax - grid.alpha))


def cutoff_profile(y, r, rho):
    """Piecewise-linear cut-off: 1 below ``r``, 0 above ``r + rho``."""
    return np.clip((r + rho - np.asarray(y)) / rho, 0.0, 1.0)


@dataclass(frozen=True)
class CutoffCheck:
    lhs: float
    rhs: float
    ratio: float


def cutoff_inequality_check(u, r, rho):
    """``lhs = int |grad u|^2 psi^2`` and ``rhs = int |grad psi|^2 u^2`` on the grid.

    Edge-based quadrature: every edge contributes its squared difference
    quotient times the dual cell area, with the cut-off evaluated at the
    edge midpoint. For harmonic ``u`` vanishing on ``y = alpha`` the ratio
    is at most 4.
    """
    g = u.grid
    if not rho > 0:
        raise GeometryViolation("cut-off width must be positive")
    if r < g.alpha or r + rho > g.ymax + 1e-12:
        raise GeometryViolation(f"cut-off [{r}, {r + rho}] does not fit in [{g.alpha}, {g.ymax}]")
    v = u.values
    hx, hy = g.hx, g.hy
    y = g.y
    psi = cutoff_profile(y, r, rho)
    ym = 0.5 * (y[1:] + y[:-1])
    psi_mid = cutoff_profile(ym, r, rho)
    # x-edges at each row, half cells on the boundary rows
    dx = (np.roll(v, -1, axis=0) - v) / hx
    wrow = np.full(g.ny, hx * hy)
    wrow[[0, -1]] *= 0.5
    lhs = float(np.sum(dx**2 * (psi**2 * wrow)[None, :]))
    dy = (v[:, 1:] - v[:, :-1]) / hy
    lhs += float(np.sum(dy**2 * psi_mid[None, :] ** 2) * hx * hy)
    dpsi = (psi[1:] - psi[:-1]) / hy
    u2 = 0.5 * (v[:, 1:] ** 2 + v[:, :-1] ** 2)
    rhs = float(np.sum(u2 * dpsi[None, :] ** 2) * hx * hy)
    if rhs == 0.0:
        return CutoffCheck(lhs, rhs, 0.0 if lhs == 0.0 else float("inf"))
    return CutoffCheck(lhs, rhs, lhs / rhs)


def band_sup_sequence(ymax_values, alpha=1.0, band=1.0, nx=32, hy=0.125, top=np.sin):
    """``sup |u_n|`` over ``[alpha, alpha + band]`` for solutions with ``u = top`` at ``ymax_n``.

    The top data has fixed energy; the band values decay like
    ``sinh(band) / sinh(ymax - alpha)``.
    """
    out = []
    for ymax in ymax_values:
        grid = HalfCylinderGrid.with_spacing(alpha, ymax, nx, hy)
        u = scalar_harmonic_solve(grid, 0.0, top)
        rows = grid.rows(alpha, alpha + band)
        out.append(float(np.max(np.abs(u.values[:, rows]))))
    return out
