"""Timing comparison of the compiled and pure-numpy stencil kernels.

Usage: python3 benchmarks/bench_kernels.py [--n 256] [--repeats 200]

Reports per-call wall time for every kernel on both backends plus one full
coupled solve each way. Numbers are medians over --repeats calls.
"""

import argparse
import statistics
import time

import numpy as np

from mfglab import backend, kernels_numpy

try:
    from mfglab import kernels_numba
except ImportError:
    kernels_numba = None


def time_call(fn, args, repeats):
    samples = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        samples.append(time.perf_counter() - start)
    return statistics.median(samples)


def bench_kernels(n, repeats):
    rng = np.random.default_rng(0)
    h = 1.0 / n
    f1 = rng.standard_normal(n)
    f2 = rng.standard_normal((n, n))
    v1 = rng.standard_normal((1, n))
    v2 = rng.standard_normal((2, n, n))
    cases = [
        ("gradient_1d", (f1, h)),
        ("gradient_2d", (f2, h)),
        ("laplacian_1d", (f1, h)),
        ("laplacian_2d", (f2, h)),
        ("divergence_faces_1d", (v1, h)),
        ("divergence_faces_2d", (v2, h)),
        ("upwind_divergence_1d", (f1, v1, h)),
        ("upwind_divergence_2d", (f2, v2, h)),
        ("central_divergence_1d", (f1, v1, h)),
        ("central_divergence_2d", (f2, v2, h)),
    ]
    print(f"stencil kernels, n={n}, median of {repeats} calls")
    print(f"{'kernel':<24}{'numpy':>12}{'numba':>12}{'speedup':>10}")
    for name, args in cases:
        t_np = time_call(getattr(kernels_numpy, name), args, repeats)
        if kernels_numba is None:
            print(f"{name:<24}{t_np * 1e6:>10.1f}us{'-':>12}{'-':>10}")
            continue
        t_nb = time_call(getattr(kernels_numba, name), args, repeats)
        print(
            f"{name:<24}{t_np * 1e6:>10.1f}us{t_nb * 1e6:>10.1f}us"
            f"{t_np / t_nb:>9.1f}x"
        )


def bench_solve():
    from mfglab import MfgProblem, SolverConfig, TorusGrid, make_kernel
    from mfglab import make_nonconvex_sine, solve_mfg

    grid = TorusGrid(dim=1, n=128, t_final=0.5, nt=200)
    x = grid.coords()[0]
    mT = 1.0 + 0.5 * np.cos(2 * np.pi * x - 1.1)
    mT = mT / grid.integrate(mT)
    problem = MfgProblem(
        grid=grid,
        hamiltonian=make_nonconvex_sine(c=0.02, dim=1),
        kernel=make_kernel(grid, width=0.25),
        u0=0.1 * np.cos(2 * np.pi * x),
        m_terminal=mT,
    )
    cfg = SolverConfig(theta=0.5, tol=1e-9, max_iter=50)
    names = ["numpy"] + (["numba"] if kernels_numba is not None else [])
    print(f"\nfull solve, n={grid.n}, nt={grid.nt}")
    for name in names:
        backend.set_backend(name)
        backend.warm_up()
        start = time.perf_counter()
        sol = solve_mfg(problem, cfg)
        wall = time.perf_counter() - start
        print(f"{name:<8} {wall:.3f}s  ({sol.iterations} sweeps)")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=256)
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()
    if kernels_numba is None:
        print("numba not importable; timing the numpy backend only")
    else:
        backend.set_backend("numba")
        backend.warm_up()
    bench_kernels(args.n, args.repeats)
    bench_solve()


if __name__ == "__main__":
    main()
