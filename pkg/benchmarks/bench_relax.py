"""Time relaxation sweeps with the compiled and numpy kernels.

    python benchmarks/bench_relax.py [--sizes 32,64,128] [--sweeps 20]
"""

import argparse
import time

import numpy as np

from nilflow import flow
from nilflow.flow import _backend
from nilflow.h0 import ChartModel


def bench(kern, field, sweeps, order):
    F, G, Gi, _ = flow.grid._kernel_view(field.copy())
    wx, wy = flow.grid._weights(field.grid)
    code = 0 if order == "red-black" else 1
    kern.sweep(F, G, Gi, wx, wy, 0.8, code, 0)
    t0 = time.perf_counter()
    for _ in range(sweeps):
        kern.sweep(F, G, Gi, wx, wy, 0.8, code, 0)
    return (time.perf_counter() - t0) / sweeps, F


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="32,64,128")
    ap.add_argument("--sweeps", type=int, default=20)
    ap.add_argument("--order", default="red-black", choices=["red-black", "lexicographic"])
    args = ap.parse_args()
    model = ChartModel.from_generators([[[1, 1], [0, 1]]])
    names = _backend.available()
    print(f"backends: {', '.join(names)}; order {args.order}; {args.sweeps} sweeps")
    print(f"{'grid':>9} " + " ".join(f"{n + ' ms':>12}" for n in names) + f" {'speedup':>8} {'max diff':>9}")
    for n in (int(s) for s in args.sizes.split(",")):
        field = flow.init_field(model, flow.HalfCylinderGrid(2.0, 10.0, n, n))
        times, outs = [], []
        for name in names:
            sweeps = args.sweeps if name == "compiled" or args.order == "red-black" else max(1, args.sweeps // 10)
            dt, F = bench(_backend.load(name), field, sweeps, args.order)
            times.append(dt)
            outs.append(F)
        speed = times[-1] / times[0] if len(times) > 1 else 1.0
        diff = float(np.max(np.abs(outs[0] - outs[-1]))) if len(outs) > 1 and args.order == "red-black" else float("nan")
        print(f"{n:>4}x{n:<4} " + " ".join(f"{t * 1e3:12.2f}" for t in times) + f" {speed:8.1f} {diff:9.1e}")


if __name__ == "__main__":
    main()
