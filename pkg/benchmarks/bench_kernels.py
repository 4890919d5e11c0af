"""Compare the compiled and pure-Python integer kernels.

Usage: python3 benchmarks/bench_kernels.py [--sizes 20 40 80] [--repeat 3]

Each workload runs on identical random inputs for every available backend;
the ranks are cross-checked before timings are reported.
"""

import argparse
import random
import time

from cohmm.kernels import available_backends


def random_vectors(rng, n, count, bound=50):
    return [[rng.randint(-bound, bound) for _ in range(n)] for _ in range(count)]


def random_sparse_matrices(rng, n, letters, density=0.3, bound=9):
    mats = []
    for _ in range(letters):
        rows = []
        for _ in range(n):
            rows.append([(j, rng.randint(1, bound)) for j in range(n) if rng.random() < density])
        mats.append(rows)
    return mats


def echelon_workload(mod, vectors, n):
    ech = mod.Echelon(n)
    for v in vectors:
        r = ech.reduce(v)
        if any(r):
            ech.insert(r)
    return ech.rank


def closure_workload(mod, mats, seed, n):
    """Breadth-first span closure, the shape used by the equivalence check."""
    ech = mod.Echelon(n)
    ech.insert(ech.reduce(seed))
    frontier = [seed]
    i = 0
    while i < len(frontier) and ech.rank < n:
        for g in mats:
            cand = mod.sparse_matvec(g, frontier[i])
            res = ech.reduce(cand)
            if any(res):
                ech.insert(res)
                frontier.append(mod.primitive(cand))
        i += 1
    return ech.rank


def best_of(fn, repeat):
    times, result = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return min(times), result


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[20, 40, 80])
    ap.add_argument("--letters", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = available_backends()
    if "cython" not in backends:
        print("compiled kernels not built; timing the pure-Python backend only")
    names = sorted(backends)
    print(f"{'workload':<12}{'n':>5}" + "".join(f"{b + ' (s)':>16}" for b in names) + f"{'speedup':>10}")
    for n in args.sizes:
        rng = random.Random(args.seed + n)
        vectors = random_vectors(rng, n, 2 * n)
        mats = random_sparse_matrices(rng, n, args.letters)
        seed = [rng.randint(-5, 5) for _ in range(n)]
        workloads = {
            "echelon": lambda mod: echelon_workload(mod, vectors, n),
            "closure": lambda mod: closure_workload(mod, mats, seed, n),
        }
        for label, work in workloads.items():
            timings, ranks = {}, set()
            for b in names:
                timings[b], r = best_of(lambda: work(backends[b]), args.repeat)
                ranks.add(r)
            if len(ranks) != 1:
                raise SystemExit(f"backends disagree on {label} n={n}: ranks {ranks}")
            speed = f"{timings['python'] / timings['cython']:.1f}x" if "cython" in timings else "-"
            print(f"{label:<12}{n:>5}" + "".join(f"{timings[b]:>16.4f}" for b in names) + f"{speed:>10}")


if __name__ == "__main__":
    main()
