"""Times the compiled simulation kernels against the pure numpy fallback.

Both backends must produce bit-identical results on the polynomial-gradient
families; this script asserts that while measuring the speedup on a
full-size regression run and the quartic recipe.

Usage: python benchmarks/compare_backends.py [--iters N] [--trials M]
"""

import argparse
import time

import numpy as np

from noiseball import backends
from noiseball.engine import RunConfig, simulate
from noiseball.problems import (SyntheticLinRegConfig, generate_linreg_dataset,
                                quartic_problem)


def bench(name, problem, config):
    rows = []
    results = {}
    for impl_name in ("pure", "compiled"):
        try:
            impl = backends.get_backend(impl_name)
        except ImportError:
            print(f"{name}: backend {impl_name!r} unavailable, skipping")
            continue
        start = time.perf_counter()
        results[impl_name] = simulate(problem, config, impl=impl)
        rows.append((impl_name, time.perf_counter() - start))
    for impl_name, seconds in rows:
        print(f"{name:>10s}  {impl_name:>8s}  {seconds:8.3f} s")
    if len(rows) == 2:
        print(f"{name:>10s}   speedup  {rows[0][1] / rows[1][1]:8.2f} x")
        a, b = results["pure"], results["compiled"]
        assert np.array_equal(a.series.r_hat, b.series.r_hat), \
            f"{name}: backends disagree on the error series"
        assert np.array_equal(a.final_theta, b.final_theta), \
            f"{name}: backends disagree on the final iterates"
        print(f"{name:>10s}   results bit-identical")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--iters", type=int, default=50000)
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=20240501)
    args = ap.parse_args()

    linreg = generate_linreg_dataset(SyntheticLinRegConfig(
        J=30, d=2, theta_star=np.array([-1.27, -0.49]), noise_std=0.1,
        seed=args.seed))
    bench("linreg", linreg, RunConfig(
        eta=0.01, iters=args.iters, trials=args.trials,
        theta0=np.zeros(2), seed=args.seed))

    bench("quartic", quartic_problem(), RunConfig(
        eta=1.0 / 216.0, iters=500, trials=max(args.trials, 500),
        theta0=np.array([2.0]), seed=args.seed))


if __name__ == "__main__":
    main()
