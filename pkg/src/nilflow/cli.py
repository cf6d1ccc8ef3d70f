"""Command-line front end.

    nilflow triples --input family.json
    nilflow verify  --input family.json --out reports/
    nilflow solve   --input family.json --grid 64,64 --alpha 2 --ymax 10
    nilflow scalar  --grid 64,256

Reports are JSON with sorted keys (byte-identical across serial runs); grid
dumps go to CSV side-files next to them. Exit codes: 0 success, 1 invalid
input, 2 numerical failure.
"""

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, flow, h0, lie
from .errors import InputError, ModelArityMismatch, NilflowError, NumericalError

COMMANDS = ("triples", "h0-eval", "verify", "solve", "scalar")


# --- input -----------------------------------------------------------------


def load_family(path):
    """Parse and check ``{"r": int, "k": int, "generators": [[[int]]]}``."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict) or not {"r", "k", "generators"} <= data.keys():
        raise InputError('input must be an object with keys "r", "k", "generators"')
    r, k, gens = data["r"], data["k"], data["generators"]
    if not _is_int(r) or not _is_int(k) or r < 1 or k < 1:
        raise InputError("r and k must be positive integers")
    if not isinstance(gens, list) or len(gens) != k:
        raise InputError(f"expected {k} generators")
    for i, g in enumerate(gens):
        if (
            not isinstance(g, list)
            or len(g) != r
            or any(not isinstance(row, list) or len(row) != r for row in g)
        ):
            raise InputError(f"generator {i} is not a {r}x{r} matrix")
        if any(not _is_int(v) for row in g for v in row):
            raise InputError(f"generator {i} has non-integer entries")
    return [np.array(g, dtype=object) for g in gens]


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


# --- serialization ---------------------------------------------------------


def _rat(M):
    """Exact matrix as nested lists: integers stay plain, other rationals become [num, den]."""
    M = np.asarray(M)
    if M.ndim == 0:
        f = Fraction(M.item())
        return f.numerator if f.denominator == 1 else [f.numerator, f.denominator]
    return [_rat(row) for row in M]


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    if isinstance(obj, Fraction):
        return obj.numerator if obj.denominator == 1 else [obj.numerator, obj.denominator]
    return obj


def dumps(report):
    return json.dumps(_plain(report), sort_keys=True) + "\n"


def _emit(report, out, name="report.json"):
    text = dumps(report)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text)
    sys.stdout.write(text)


def _base(command):
    return {"command": command, "conventions": h0.CONVENTIONS, "version": __version__}


# --- commands --------------------------------------------------------------


def _model(args):
    gammas = load_family(args.input)
    return h0.ChartModel.from_generators(gammas), gammas


def cmd_triples(args):
    gammas = load_family(args.input)
    _, fam = lie.validate_family(gammas)
    grading = lie.commuting_grading(fam)
    rep = _base("triples")
    rep.update(
        {
            "r": fam.N[0].shape[0],
            "k": len(fam.N),
            "tier": grading.tier,
            "basis": _rat(grading.basis),
            "weights": _rat(np.array([[Y[j, j] for j in range(Y.shape[0])] for Y in grading.Y])),
            "triples": [
                {
                    "N": _rat(t.N),
                    "Y": _rat(t.Y),
                    "Nminus": _rat(t.Nminus),
                    "residuals": {k: _rat(v) for k, v in t.residuals().items()},
                    "valid": t.is_valid(),
                }
                for t in grading.triples
            ],
        }
    )
    return rep


def _grid(args):
    nx, ny = args.grid
    return flow.HalfCylinderGrid(args.alpha, args.ymax, nx, ny)


def cmd_h0_eval(args):
    model, _ = _model(args)
    if model.k != 1:
        raise ModelArityMismatch("h0-eval samples the one-puncture model on the cylinder")
    grid = _grid(args)
    f = flow.init_field(model, grid, conformal=args.conformal)
    rep = _base("h0-eval")
    rep["grid"] = _grid_info(grid)
    rep["seam_residual"] = flow.seam_residual(f, model, conformal=args.conformal)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        flow.write_csv(f, args.out / "h0.csv")
        rep["csv"] = "h0.csv"
    return rep


def _grid_info(grid):
    return {"alpha": grid.alpha, "ymax": grid.ymax, "nx": grid.nx, "ny": grid.ny, "hx": grid.hx, "hy": grid.hy}


def cmd_verify(args):
    model, _ = _model(args)
    rep = _base("verify")
    rep["weights"] = model.weights
    rep["cross_term_exponents"] = h0.cross_term_exponents(model)
    directions = []
    for i in range(model.k):
        pts = h0.sample_points(model, args.samples, args.samples, i=i)
        dens = np.array([h0.transversal_energy_density(model, i, p) for p in pts])
        parts = [h0.dh0_parts(model, p) for p in pts[:: max(1, len(pts) // 25)]]
        basis = np.eye(model.r)
        exps = [h0.asymptotic_exponents(model, e)[i] for e in basis]
        laws = []
        for j, e in enumerate(basis):
            v = h0.section_norm_law(model, i, e)
            laws.append(
                {
                    "vector": j,
                    "weight": v.weight,
                    "slope": v.slope,
                    "lowered_slope": v.lowered_slope if not v.vacuous else None,
                    "vacuous": v.vacuous,
                    "passed": v.passed,
                }
            )
        directions.append(
            {
                "direction": i,
                "density_mean": float(dens.mean()),
                "density_relstd": float(dens.std() / dens.mean()) if dens.mean() else 0.0,
                "exponents": exps,
                "exponent_error": float(np.max(np.abs(np.array(exps) - model.weights[i]))),
                "nilpotent_decay": h0.nilpotent_decay(model, i, pts),
                "dh0_y_part_max": max(p.y_part for p in parts),
                "dh0_n_part_max": max(p.n_part for p in parts),
                "dh0_residual_max": max(p.residual for p in parts),
                "norm_law": laws,
            }
        )
    rep["equivariance_residual"] = h0.equivariance_residual(model, h0.sample_points(model, 8, 8))
    rep["directions"] = directions
    return rep


def cmd_solve(args):
    model, _ = _model(args)
    if model.k != 1:
        raise ModelArityMismatch("solve handles one-puncture models")
    relax_kw = {
        "omega": args.omega,
        "order": args.order,
        "tol": args.tol,
        "max_sweeps": args.max_sweeps,
        "energy_every": args.energy_every,
        "parallel": args.parallel,
    }
    rep = _base("solve")
    if args.schedule:
        nx = args.grid[0]
        ex = flow.exhaustion_solve(
            model, schedule=args.schedule, alpha=args.alpha, nx=nx, hy=args.hy, band=args.band,
            conformal=args.conformal, **relax_kw,
        )
        rep["exhaustion"] = {
            "band": ex.band,
            "gaps": ex.gaps,
            "gaps_decreasing": ex.gaps_decreasing,
            "energy_bounded": ex.energy_bounded(),
            "stages": [
                {"ymax": s.ymax, "energy": s.energy, "init_energy": s.init_energy, "relax": s.result.summary()}
                for s in ex.stages
            ],
        }
        return rep
    grid = _grid(args)
    f0 = flow.init_field(model, grid, conformal=args.conformal)
    res = flow.relax(f0, **relax_kw)
    sd = flow.sup_dist_to_model(res.field, model, conformal=args.conformal)
    rep["grid"] = _grid_info(grid)
    rep["relax"] = res.summary()
    rep["energy_history"] = {"sweeps": res.energy_sweeps, "energy": res.energy_history}
    rep["sup_dist_to_model"] = {"sup": sd.sup, "argmax": sd.argmax, "boundary_sup": sd.boundary_sup, "passed": sd.passed}
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        flow.write_csv(res.field, args.out / "field.csv")
        rep["csv"] = "field.csv"
    return rep


def cmd_scalar(args):
    nx, ny = args.grid
    grid = flow.HalfCylinderGrid(args.alpha, args.ymax, nx, ny)
    u = flow.scalar_harmonic_solve(grid, 0.0, np.sin)
    exact = flow.separable_solution(grid)
    r = args.alpha + 0.25 * (args.ymax - args.alpha)
    rho = 0.5 * (args.ymax - args.alpha)
    cut = flow.cutoff_inequality_check(u, r, rho)
    ymaxs = [args.alpha + 2.0**j for j in range(1, 6)]
    seq = flow.band_sup_sequence(ymaxs, alpha=args.alpha, band=1.0)
    rep = _base("scalar")
    rep.update(
        {
            "grid": _grid_info(grid),
            "separable_max_error": float(np.max(np.abs(u.values - exact))),
            "maximum_principle": bool(u.values.max() <= 1.0 + 1e-12 and u.values.min() >= -1.0 - 1e-12),
            "cutoff": {"r": r, "rho": rho, "lhs": cut.lhs, "rhs": cut.rhs, "ratio": cut.ratio},
            "band_sup": {"ymax": ymaxs, "sup": seq},
        }
    )
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        with open(args.out / "scalar.csv", "w") as fh:
            fh.write("ix,iy,x,y,u\n")
            for iy in range(grid.ny):
                for ix in range(grid.nx):
                    fh.write(f"{ix},{iy},{grid.x[ix]!r},{grid.y[iy]!r},{u.values[ix, iy]!r}\n")
        rep["csv"] = "scalar.csv"
    return rep


HANDLERS = {
    "triples": cmd_triples,
    "h0-eval": cmd_h0_eval,
    "verify": cmd_verify,
    "solve": cmd_solve,
    "scalar": cmd_scalar,
}


# --- argument parsing ------------------------------------------------------


def _pair(text):
    try:
        a, b = (int(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError("expected NX,NY") from exc
    return a, b


def _floats(text):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError("expected comma-separated numbers") from exc


def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def build_parser():
    p = _Parser(prog="nilflow", description="sl2 data, model metrics and harmonic-map solves for nilpotent monodromy")
    p.add_argument("command", nargs="?", choices=COMMANDS)
    p.add_argument("--command", dest="command_flag", choices=COMMANDS)
    p.add_argument("--input", help="monodromy JSON")
    p.add_argument("--out", type=Path, help="directory for report.json and CSV side-files")
    p.add_argument("--grid", type=_pair, default=(64, 64), help="NX,NY (default 64,64)")
    p.add_argument("--alpha", type=_positive, default=2.0)
    p.add_argument("--ymax", type=_positive, default=10.0)
    p.add_argument("--tol", type=_positive, default=1e-8)
    p.add_argument("--omega", type=_positive, default=0.8)
    p.add_argument("--order", choices=("red-black", "lexicographic"), default="red-black")
    p.add_argument("--max-sweeps", type=int, default=100_000)
    p.add_argument("--energy-every", type=int, default=100)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--serial", dest="parallel", action="store_false", help="serial deterministic sweeps (default)")
    mode.add_argument("--parallel", dest="parallel", action="store_true", help="OpenMP red-black sweeps, capped by NILFLOW_THREADS")
    p.set_defaults(parallel=False)
    p.add_argument("--conformal", action="store_true", help="use the L/2pi representative of the model")
    p.add_argument("--schedule", type=_floats, help="ymax values for an exhaustion run, e.g. 8,16,32")
    p.add_argument("--hy", type=_positive, default=0.5, help="row spacing for exhaustion runs")
    p.add_argument("--band", type=_positive, default=4.0)
    p.add_argument("--samples", type=int, default=20, help="verify: samples per axis")
    p.add_argument("--version", action="version", version=__version__)
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        command = args.command or args.command_flag
        if command is None:
            raise InputError("no command given; choose from " + ", ".join(COMMANDS))
        if args.command and args.command_flag and args.command != args.command_flag:
            raise InputError("conflicting commands")
        if command != "scalar" and not args.input:
            raise InputError("--input is required")
        _emit(HANDLERS[command](args), args.out)
        return 0
    except InputError as exc:
        code, kind = 1, "input"
        err = exc
    except NumericalError as exc:
        code, kind = 2, "numerical"
        err = exc
    except NilflowError as exc:
        code, kind = 2, "numerical"
        err = exc
    body = {"error": {"kind": kind, "type": type(err).__name__, "message": str(err)}, "exit_code": code}
    sys.stdout.write(dumps(body))
    return code


if __name__ == "__main__":
    sys.exit(main())
