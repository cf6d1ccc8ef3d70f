"""Dirichlet relaxation and the exhaustion scheme."""

from dataclasses import dataclass, field
from math import pi

import numpy as np

from ..errors import GeometryViolation, InputError, NonConvergence
from ..h0 import eval_h0_batch
from . import _backend
from .grid import (
    HalfCylinderGrid,
    _kernel_view,
    _store,
    _weights,
    discrete_energy,
    field_distance_arrays,
    init_field,
    tension_residual,
)

__all__ = ["ExhaustionResult", "RelaxResult", "Stage", "exhaustion_solve", "relax"]

ORDERS = {"red-black": 0, "lexicographic": 1}


@dataclass
class RelaxResult:
    field: object
    converged: bool
    sweeps: int
    movement: list
    energy_history: list
    energy_sweeps: list
    tension: float
    backend: str

    def energy_monotone(self, tol=1e-12):
        e = np.asarray(self.energy_history)
        return bool(np.all(np.diff(e) <= tol * max(1.0, abs(e[0]))))

    def summary(self):
        return {
            "backend": self.backend,
            "converged": self.converged,
            "sweeps": self.sweeps,
            "final_movement": self.movement[-1] if self.movement else 0.0,
            "energy_initial": self.energy_history[0],
            "energy_final": self.energy_history[-1],
            "energy_monotone": self.energy_monotone(),
            "tension": self.tension,
        }


def relax(
    field,
    omega=0.8,
    order="red-black",
    tol=1e-8,
    max_sweeps=100_000,
    energy_every=1,
    parallel=False,
    backend=None,
    raise_on_failure=True,
):
    """Relax the interior nodes towards a discrete harmonic map.

    Each node moves to ``Exp_P(omega * mean_k w_k log_P(Q_k))``, a damped
    step towards the weighted geodesic mean of its four neighbors
    (``w = 1/hx^2`` across, ``1/hy^2`` along). Rows ``y = alpha`` and
    ``y = ymax`` stay fixed; the seam reads twisted neighbors. Stops once a
    full sweep moves no node by ``tol`` or more; that last sweep is not
    counted in ``sweeps``. Energy is recorded every ``energy_every`` sweeps
    and after the last one.
    """
    if not 0 < omega <= 1:
        raise InputError(f"damping must lie in (0, 1], got {omega}")
    if not tol > 0:
        raise InputError("tolerance must be positive")
    if order not in ORDERS:
        raise InputError(f"unknown order {order!r}; choose from {sorted(ORDERS)}")
    if order == "red-black" and field.grid.nx % 2:
        raise GeometryViolation("red-black ordering needs an even nx")
    kern = backend or _backend.DEFAULT
    out = field.copy()
    F, G, Gi, factor = _kernel_view(out)
    wx, wy = _weights(out.grid)
    cx, cy = out.grid.hy / out.grid.hx, out.grid.hx / out.grid.hy
    nthreads = min(_backend.thread_cap(), 64) if parallel else 0
    scale = np.sqrt(factor)

    def energy():
        return kern.energy(F, G, cx, cy) / factor

    energies = [energy()]
    energy_sweeps = [0]
    movement = []
    converged = False
    sweeps = 0
    while sweeps < max_sweeps:
        mv = kern.sweep(F, G, Gi, wx, wy, omega, ORDERS[order], nthreads) / scale
        movement.append(mv)
        if mv < tol:
            converged = True
            break
        sweeps += 1
        if energy_every and sweeps % energy_every == 0:
            energies.append(energy())
            energy_sweeps.append(sweeps)
    if energy_sweeps[-1] != sweeps or len(movement) > sweeps:
        energies.append(energy())
        energy_sweeps.append(len(movement))
    _store(out, F)
    res = RelaxResult(
        out,
        converged,
        sweeps,
        movement,
        energies,
        energy_sweeps,
        tension_residual(out, backend=kern),
        _backend.name_of(kern),
    )
    if not converged and raise_on_failure:
        raise NonConvergence(
            f"no convergence after {sweeps} sweeps (last movement {movement[-1]:.3e})",
            result=res,
        )
    return res


@dataclass
class Stage:
    ymax: float
    result: RelaxResult
    energy: float
    init_energy: float

    @property
    def field(self):
        return self.result.field


@dataclass
class ExhaustionResult:
    stages: list
    band: tuple
    gaps: list = field(default_factory=list)

    @property
    def gaps_decreasing(self):
        return all(b < a for a, b in zip(self.gaps, self.gaps[1:]))

    def energy_bounded(self, tol=1e-6):
        return all(s.energy <= s.init_energy + tol for s in self.stages)


def _inner_row(inner, grid, r):
    if inner is None:
        return None
    if callable(inner):
        row = np.asarray(inner(grid.x))
    else:
        row = np.asarray(inner)
    if row.shape != (grid.nx, r, r):
        raise GeometryViolation(f"inner boundary data must have shape ({grid.nx}, {r}, {r})")
    return row


def exhaustion_solve(
    model,
    schedule=(8.0, 16.0, 32.0),
    alpha=2.0,
    nx=16,
    hy=0.5,
    inner=None,
    band=4.0,
    conformal=False,
    **relax_kw,
):
    """Dirichlet problems on ``[alpha, ymax]`` for each ``ymax`` in ``schedule``.

    The bottom row carries ``inner`` (default: the model row), the top row
    is clamped to the model. Every stage starts from the model field and
    shares the spacing ``hy``, so the band ``[alpha, alpha + band]`` is
    sampled at the same nodes; ``gaps[j]`` is the sup distance there between
    stages ``j`` and ``j + 1``.
    """
    schedule = [float(s) for s in schedule]
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise InputError("ymax schedule must be increasing")
    if schedule[0] < alpha + band:
        raise GeometryViolation("band does not fit in the first truncation")
    stages = []
    for ymax in schedule:
        grid = HalfCylinderGrid.with_spacing(alpha, ymax, nx, hy)
        f0 = init_field(model, grid, conformal=conformal)
        row = _inner_row(inner, grid, model.r)
        if row is not None:
            f0.values[:, 0] = row
        res = relax(f0, **relax_kw)
        stages.append(Stage(ymax, res, discrete_energy(res.field), discrete_energy(f0)))
    rows = stages[0].field.grid.rows(alpha, alpha + band)
    gaps = [
        float(np.max(field_distance_arrays(a.field.values[:, rows], b.field.values[:, rows])))
        for a, b in zip(stages, stages[1:])
    ]
    return ExhaustionResult(stages, (alpha, alpha + band), gaps)


def model_row(model, grid, y, conformal=False):
    """Model values along the row at height ``y`` (useful boundary data)."""
    scale = 2 * pi if conformal else 1.0
    return eval_h0_batch(model, grid.x[:, None], np.full((grid.nx, 1), y / scale))
