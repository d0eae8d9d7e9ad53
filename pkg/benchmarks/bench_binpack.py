"""Compare the compiled packing kernel against the pure-Python fallback.

Run with: python3 benchmarks/bench_binpack.py [--items N] [--repeats R]
"""

import argparse
import random
import statistics
import time

from streambin.binpack import _pure

try:
    from streambin.binpack import _ffcore
except ImportError:
    _ffcore = None


def time_fn(fn, repeats):
    samples = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return min(samples), statistics.median(samples)


def bench_first_fit(kernel, sizes, repeats):
    return time_fn(lambda: kernel.first_fit(sizes, [], 1e-9), repeats)


def bench_oracle(kernel, instances, repeats):
    def run():
        for sizes in instances:
            kernel.min_bins(sizes, 1e-9)

    return time_fn(run, repeats)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--items", type=int, default=20000,
                        help="sequence length for the first-fit benchmark")
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    sizes = [rng.uniform(0.01, 1.0) for _ in range(args.items)]
    oracle_instances = [
        [rng.uniform(0.05, 1.0) for _ in range(12)] for _ in range(50)
    ]

    kernels = [("pure", _pure)]
    if _ffcore is not None:
        kernels.append(("compiled", _ffcore))
    else:
        print("compiled kernel not built; benchmarking pure only")

    print(f"first_fit over {args.items} items (best of {args.repeats}):")
    results = {}
    for name, kernel in kernels:
        best, median = bench_first_fit(kernel, sizes, args.repeats)
        results[name] = best
        print(f"  {name:9s} {best * 1e3:8.2f} ms (median {median * 1e3:.2f} ms)")
    if len(results) == 2:
        print(f"  speedup   {results['pure'] / results['compiled']:.1f}x")

    print(f"min_bins oracle over {len(oracle_instances)} instances of n=12:")
    results = {}
    for name, kernel in kernels:
        best, median = bench_oracle(kernel, oracle_instances, args.repeats)
        results[name] = best
        print(f"  {name:9s} {best * 1e3:8.2f} ms (median {median * 1e3:.2f} ms)")
    if len(results) == 2:
        print(f"  speedup   {results['pure'] / results['compiled']:.1f}x")


if __name__ == "__main__":
    main()
