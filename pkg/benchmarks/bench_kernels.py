"""Benchmark the compiled kernels against the pure-numpy fallback.

Times the three hot kernels in isolation and one end-to-end propagation
interval.  Run from the repository root:

    python benchmarks/bench_kernels.py [--states 400] [--terms 120]
"""

import argparse
import time

import numpy as np

from itvolt._kernels import _numpy as knp

try:
    from itvolt._kernels import _ext as kext
except ImportError:
    kext = None


def time_call(fn, *args, repeats=5, min_time=0.2):
    best = np.inf
    for _ in range(repeats):
        n = 0
        t0 = time.perf_counter()
        elapsed = 0.0
        while elapsed < min_time:
            fn(*args)
            n += 1
            elapsed = time.perf_counter() - t0
        best = min(best, elapsed / n)
    return best


def bench_kernels(d, terms):
    rng = np.random.default_rng(0)
    bands = np.zeros((2, d))
    bands[0] = np.arange(d) + 0.5
    bands[1, : d - 1] = rng.standard_normal(d - 1)
    bands = np.ascontiguousarray(bands / np.abs(bands).max())
    x = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    x = np.ascontiguousarray(x)
    coeffs = np.ascontiguousarray(rng.standard_normal(terms) + 1j * rng.standard_normal(terms))

    rows = []
    for label, mod in (("numpy", knp), ("ext", kext)):
        if mod is None:
            continue
        rows.append(
            (
                label,
                time_call(mod.sb_matvec, bands, x),
                time_call(mod.cheb_apply, bands, coeffs, 1.0, x),
                time_call(mod.bessel_j_table, 60.0, terms),
            )
        )
    print(f"\nkernels (d={d}, {terms} terms)")
    print(f"{'backend':>8s} {'sb_matvec':>12s} {'cheb_apply':>12s} {'bessel_table':>12s}")
    for label, t1, t2, t3 in rows:
        print(f"{label:>8s} {t1 * 1e6:>10.2f}us {t2 * 1e6:>10.2f}us {t3 * 1e6:>10.2f}us")
    if len(rows) == 2:
        print(f"{'speedup':>8s} {rows[0][1] / rows[1][1]:>11.1f}x "
              f"{rows[0][2] / rows[1][2]:>11.1f}x {rows[0][3] / rows[1][3]:>11.1f}x")


def bench_interval(d):
    import importlib
    import os

    def run_with(backend_name):
        # the numerical modules look kernels up through the _kernels module
        # attributes, so reloading that one module swaps the backend
        os.environ["ITVOLT_KERNELS"] = backend_name
        import itvolt._kernels
        importlib.reload(itvolt._kernels)
        from itvolt import expm, models, propagator

        model = models.OscillatorModel(e0=1.0, t_final=100.0, omega0=1.0, states=d)
        ham = model.hamiltonian()
        settings = propagator.SolverSettings(scheme="gauss-seidel", tol=1e-10)
        t0 = time.perf_counter()
        propagator.propagate(ham, model.initial_state(), 0.0, 2.0, 0.1, 10,
                             settings, expm.Chebyshev())
        return time.perf_counter() - t0

    print(f"\nend-to-end: 20 oscillator intervals (states={d}, Chebyshev exponentials)")
    t_np = run_with("numpy")
    print(f"{'numpy':>8s} {t_np:>10.2f}s")
    if kext is not None:
        t_ext = run_with("ext")
        print(f"{'ext':>8s} {t_ext:>10.2f}s")
        print(f"{'speedup':>8s} {t_np / t_ext:>9.1f}x")
    os.environ.pop("ITVOLT_KERNELS", None)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--states", type=int, default=400)
    parser.add_argument("--terms", type=int, default=120)
    args = parser.parse_args()
    if kext is None:
        print("compiled kernels not built; showing numpy timings only")
    bench_kernels(args.states, args.terms)
    bench_interval(args.states)


if __name__ == "__main__":
    main()
