"""Time the compiled kernels against the pure-Python twins.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--sizes 1000 3000 10000]

Both backends get identical inputs and must agree before anything is timed.
"""

import argparse
import timeit

import numpy as np

from boolperc import _pykernels, kernels

try:
    from boolperc import _ckernels
except ImportError:
    _ckernels = None


def boolean_inputs(n, rng):
    # unit intensity in a square, Pareto(3) radii: roughly the estimate workload
    side = float(np.sqrt(n))
    centers = rng.uniform(0, side, size=(n, 2))
    radii = 0.3 * (rng.pareto(3.0, size=n) + 1.0)
    return centers, radii


def net_inputs(n, rng):
    return rng.uniform(-1, 1, size=(n, 2)), 0.05


def same_partition(a, b):
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    pairs = set(zip(ia.tolist(), ib.tolist()))
    return len(pairs) == len(set(ia.tolist())) == len(set(ib.tolist()))


def bench(name, fn, repeat):
    t = min(timeit.repeat(fn, number=1, repeat=repeat))
    return name, t


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[1000, 3000, 10_000])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if _ckernels is None:
        raise SystemExit("compiled extension not built; run `python3 setup.py build_ext --inplace`")

    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<12}{'n':>8}{'python s':>12}{'cython s':>12}{'speedup':>10}")
    for n in args.sizes:
        centers, radii = boolean_inputs(n, rng)
        cell = 2 * float(radii.max())
        lp = kernels.grid_labels(centers, radii, cell, impl=_pykernels)
        lc = kernels.grid_labels(centers, radii, cell, impl=_ckernels)
        assert same_partition(lp, lc), "backends disagree on grid_labels"
        tp = bench("py", lambda: kernels.grid_labels(centers, radii, cell, impl=_pykernels), args.repeat)[1]
        tc = bench("c", lambda: kernels.grid_labels(centers, radii, cell, impl=_ckernels), args.repeat)[1]
        print(f"{'grid_labels':<12}{n:>8}{tp:>12.4f}{tc:>12.4f}{tp / tc:>10.1f}")

        probes, sep = net_inputs(n, rng)
        np_ = kernels.greedy_net(probes, sep, impl=_pykernels)
        nc = kernels.greedy_net(probes, sep, impl=_ckernels)
        assert np.array_equal(np.asarray(np_), np.asarray(nc)), "backends disagree on greedy_net"
        tp = bench("py", lambda: kernels.greedy_net(probes, sep, impl=_pykernels), args.repeat)[1]
        tc = bench("c", lambda: kernels.greedy_net(probes, sep, impl=_ckernels), args.repeat)[1]
        print(f"{'greedy_net':<12}{n:>8}{tp:>12.4f}{tc:>12.4f}{tp / tc:>10.1f}")


if __name__ == "__main__":
    main()
