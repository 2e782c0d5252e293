"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--paths 20000] [--order 24] [--repeat 3]

Both backends are checked for identical output before timing is reported.
"""
import argparse
import time

import numpy as np

from duelfuel import _pykernel
from duelfuel.model import canonical_spec
from duelfuel.simulate import simulate_paths

try:
    from duelfuel import _ckernel
except ImportError:
    _ckernel = None


def best_of(fn, repeat):
    best = float("inf")
    result = None
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--paths", type=int, default=20_000)
    parser.add_argument("--order", type=int, default=24, help="series truncation order per variable")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if _ckernel is None:
        raise SystemExit("compiled kernel not built; run `pip install -e . --no-build-isolation` first")

    spec = canonical_spec()
    rng = np.random.default_rng(0)
    a = rng.normal(size=(args.order + 1, args.order + 1))
    b = rng.normal(size=(args.order + 1, args.order + 1))

    cases = [
        (f"simulate_batch ({args.paths} paths)",
         lambda k: simulate_paths(spec, args.paths, 1, threads=1, kernel=k).nu),
        (f"trunc_conv2d ({args.order + 1}x{args.order + 1})",
         lambda k: k.trunc_conv2d(a, b)),
    ]
    print(f"{'kernel':<32}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}")
    for name, run in cases:
        t_py, r_py = best_of(lambda: run(_pykernel), args.repeat)
        t_c, r_c = best_of(lambda: run(_ckernel), args.repeat)
        if not np.array_equal(r_py, r_c):
            raise SystemExit(f"{name}: backends disagree")
        print(f"{name:<32}{t_py:>12.4f}{t_c:>12.4f}{t_py / t_c:>9.1f}x")


if __name__ == "__main__":
    main()
