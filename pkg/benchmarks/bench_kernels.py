"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--n 100000] [--repeat 5]

Results of both backends are compared as well as timed.
"""
import argparse
import time

import numpy as np

from mixcop import _accel, simulation as sim
from mixcop.estimator import estimate_matrix, estimate_pair, pair_objective
from mixcop.gauss import bvn_cdf
from mixcop.marginals import MarginalKind


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(n, rng):
    a = rng.normal(size=n) * 2
    b = rng.normal(size=n) * 2
    r = rng.uniform(-0.99, 0.99, size=n)
    z = rng.normal(size=(n, 2)) @ np.linalg.cholesky([[1, 0.6], [0.6, 1]]).T
    x_cont = z[:, 0]
    x_disc = np.floor(2 * (z[:, 1] > 0) + (z[:, 1] > 1))
    data = sim.sample_dataset(sim.gen_sigma_blocks(permute_seed=0),
                              sim.thirds_margins(30), 200, seed=1)
    K, D = MarginalKind.CONTINUOUS, MarginalKind.DISCRETE
    return {
        "bvn_cdf": lambda: bvn_cdf(a, b, r),
        "pair CC": lambda: estimate_pair(pair_objective(x_cont, z[:, 1], K, K)).rho,
        "pair CD": lambda: estimate_pair(pair_objective(x_cont, x_disc, K, D)).rho,
        "matrix d=30 n=200": lambda: estimate_matrix(data).values,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<20}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}{'max |diff|':>14}")
    for name, fn in cases(args.n, rng).items():
        out = {}
        for be in ("numba", "numpy"):
            with _accel.use_backend(be):
                fn()  # warm-up, includes jit compilation
                out[be] = best_of(fn, args.repeat)
        (tn, vn), (tp, vp) = out["numba"], out["numpy"]
        diff = float(np.nanmax(np.abs(np.asarray(vn) - np.asarray(vp))))
        print(f"{name:<20}{tn:>12.4f}{tp:>12.4f}{tp / tn:>10.1f}{diff:>14.2e}")


if __name__ == "__main__":
    main()
