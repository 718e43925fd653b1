#!/usr/bin/env python3
"""Compare the compiled and numpy kernel backends.

Usage:
    python benchmarks/bench_kernels.py [--n 128] [--dim 2] [--repeat 20]

Prints the median wall time per call for each kernel and the speed-up of the
compiled backend.  Both backends are checked to agree before timing.
"""
import argparse
import statistics
import time

import numpy as np

from revgs import kernels
from revgs.core import Parameters, State, detailed_balance_equilibrium
from revgs.grid import GridSpec, gradient_sq, laplacian
from revgs.initial import perturbed_equilibrium
from revgs.stepper import ModelVariant, StepConfig, Stepper


def timed(fn, repeat):
    fn()
    samples = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def cases(grid, state, params):
    k = params.rates
    flat = np.ascontiguousarray(state.fields.reshape(4, -1))
    stepper = Stepper(grid, params, ModelVariant.regs(), StepConfig(dt=1e-3, t_end=1.0))
    return {
        "laplacian": lambda: laplacian(state.u, grid),
        "gradient_sq": lambda: gradient_sq(state.u, grid),
        "reaction_rk4": lambda: kernels.reaction_rk4(flat, k, 1e-3, 1e-12),
        "strang_step": lambda: stepper.step(state),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=128)
    ap.add_argument("--dim", type=int, default=2)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()

    grid = GridSpec.uniform(args.dim, args.n)
    params = Parameters(k1p=2.0, k2m=0.5)
    state = perturbed_equilibrium(grid, detailed_balance_equilibrium(params), 0.1, seed=0)
    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled backend not built; timing numpy only")

    results = {}
    for name in backends:
        kernels.use_backend(name)
        results[name] = {key: timed(fn, args.repeat) for key, fn in cases(grid, state, params).items()}

    if len(backends) == 2:
        kernels.use_backend("cython")
        a = laplacian(state.u, grid)
        kernels.use_backend("numpy")
        b = laplacian(state.u, grid)
        assert np.allclose(a, b, rtol=1e-14, atol=1e-10), "backends disagree"

    print(f"grid {grid.shape}, median of {args.repeat} runs")
    header = f"{'kernel':<14}" + "".join(f"{b + ' [ms]':>16}" for b in backends)
    if len(backends) == 2:
        header += f"{'speed-up':>12}"
    print(header)
    for key in results[backends[0]]:
        row = f"{key:<14}" + "".join(f"{results[b][key] * 1e3:>16.3f}" for b in backends)
        if len(backends) == 2:
            row += f"{results['numpy'][key] / results['cython'][key]:>11.2f}x"
        print(row)
    kernels.use_backend(backends[0])


if __name__ == "__main__":
    main()
