"""Compare the compiled and pure-Python simulation kernels.

Usage: python benchmarks/bench_kernels.py [--t 9] [--replicates 5]

Both kernels simulate the same trees (the script checks that the results are
identical) and the throughput is reported in nanoseconds per individual.
"""

import argparse
import time

from branchscope import engine, kernel
from branchscope.malthus import solve_malthus
from branchscope.model import catalogue


def bench(model, profile, cfg, replicates, backend):
    start = time.perf_counter()
    runs = engine.run_replicates(model, profile, cfg, replicates, backend=backend)
    elapsed = time.perf_counter() - start
    born = sum(r.n_born for r in runs)
    return runs, elapsed, born


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--t", type=float, default=9.0)
    parser.add_argument("--replicates", type=int, default=5)
    parser.add_argument("--models", nargs="*", default=["exp", "correlated", "pareto_geometric"])
    args = parser.parse_args(argv)

    if kernel.compiled_kernel is None:
        print("compiled kernel not built; only the Python fallback is available")
    models = catalogue()
    print(f"{'model':<18} {'order':<6} {'backend':<8} {'individuals':>12} {'seconds':>9} {'ns/ind':>9}")
    for name in args.models:
        model = models[name]
        profile = solve_malthus(model)
        t = args.t if name != "pareto_geometric" else 2.5 * args.t
        for order in ("event", "depth"):
            cfg = engine.SimulationConfig(horizon=t, seed=1, order=order)
            reference = None
            for backend in ("cython", "python"):
                if backend == "cython" and kernel.compiled_kernel is None:
                    continue
                runs, elapsed, born = bench(model, profile, cfg, args.replicates, backend)
                if reference is None:
                    reference = runs
                elif runs != reference:
                    raise SystemExit(f"backends disagree on {name}")
                print(f"{name:<18} {order:<6} {backend:<8} {born:>12} {elapsed:>9.3f} {1e9 * elapsed / born:>9.1f}")


if __name__ == "__main__":
    main()
