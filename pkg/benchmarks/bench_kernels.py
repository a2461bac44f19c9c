"""Compare the compiled and numpy moment kernels.

Usage::

    python benchmarks/bench_kernels.py [--grid 64] [--repeat 3]

Times the raw kernels on graphene eigenvalues and the full Verdet and
sigma21(0) evaluations with each backend forced in turn.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from tbverdet import kernels
from tbverdet.bloch import bz_grid, fiber_stack
from tbverdet.contour import ThermoOpticalParams, build_contour, fermi_dirac
from tbverdet.kubo import sigma21_first_derivative, sigma_zero
from tbverdet.lattice import graphene_model


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    model = graphene_model()
    params = ThermoOpticalParams(beta=10.0, mu=1.0, omega0=7.0)
    grid = bz_grid(model, args.grid)
    lam = np.linalg.eigvalsh(fiber_stack(model, grid.nodes[:256])[0])
    contour = build_contour((-3.0, 3.0), params)
    z = contour.nodes
    c = fermi_dirac(z, params) * contour.weights

    backends = kernels.available_backends()
    print(f"contour nodes {contour.size}, k-chunk 256, BZ grid {args.grid}x{args.grid}")
    print(f"{'task':<28}" + "".join(f"{name:>12}" for name in backends) + f"{'speedup':>10}")
    rows = [
        ("pair_moment (256 k)", lambda m: m.pair_moment(lam, z - 7.0, z, c)),
        ("verdet_moments (256 k)", lambda m: m.verdet_moments(lam, z - 7.0, z, c)),
    ]
    saved = kernels._impl, kernels.BACKEND
    try:
        for name, fn in rows:
            times = {b: best_of(lambda: fn(mod), args.repeat)[0] for b, mod in backends.items()}
            _print_row(name, times)
        for name, fn in (
            ("sigma21(0)", lambda: sigma_zero(model, params, (1, 2), grid=grid, workers=1)),
            ("sigma21^(1)", lambda: sigma21_first_derivative(model, params, grid=grid, workers=1)),
        ):
            times, values = {}, {}
            for b, mod in backends.items():
                kernels._impl, kernels.BACKEND = mod, b
                times[b], res = best_of(fn, 1)
                values[b] = res.value
            _print_row(name, times)
            if len(values) > 1:
                spread = max(values.values()) - min(values.values())
                print(f"{'':<28}values agree to {spread:.1e}")
    finally:
        kernels._impl, kernels.BACKEND = saved


def _print_row(name, times):
    line = f"{name:<28}" + "".join(f"{t:>11.3f}s" for t in times.values())
    if "cython" in times and "numpy" in times:
        line += f"{times['numpy'] / times['cython']:>9.1f}x"
    print(line)


if __name__ == "__main__":
    main()
