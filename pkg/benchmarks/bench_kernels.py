#!/usr/bin/env python3
"""Benchmark the compiled token-Levenshtein kernel against the pure-Python twin.

Three workloads:
  pairs      random id sequences, one kernel call per pair
  scan       one query against a corpus (the baseline repair full scan)
  pairwise   all-pairs similarity over lexed formulas (the retrieval
             fine-tuning target computation, the expensive quadratic step)

Usage: python benchmarks/bench_kernels.py [--pairs 20000] [--corpus 2000]
"""

import argparse
import random
import time

from formulakit import _speedups_fallback
from formulakit.similarity import formula_token_ids
from formulakit.synth import synth_corpus

try:
    from formulakit import _speedups
except ImportError:
    _speedups = None


def bench(fn, *args, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def workload_pairs(impl, pairs):
    lev = impl.levenshtein_ids
    for a, b in pairs:
        lev(a, b)


def workload_scan(impl, queries, corpus):
    sims = impl.similarities_to_many
    for q in queries:
        sims(q, corpus)


def workload_pairwise(impl, seqs):
    sims = impl.similarities_to_many
    for i, q in enumerate(seqs):
        sims(q, seqs[i + 1:])


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--pairs", type=int, default=20_000)
    parser.add_argument("--corpus", type=int, default=2_000)
    parser.add_argument("--formulas", type=int, default=400)
    args = parser.parse_args()

    rng = random.Random(0)
    pairs = [([rng.randrange(40) for _ in range(rng.randrange(5, 40))],
              [rng.randrange(40) for _ in range(rng.randrange(5, 40))])
             for _ in range(args.pairs)]
    corpus = [[rng.randrange(40) for _ in range(rng.randrange(5, 30))]
              for _ in range(args.corpus)]
    queries = [[rng.randrange(40) for _ in range(15)] for _ in range(20)]
    intern = {}
    formula_ids = [formula_token_ids(f, intern)
                   for f in synth_corpus(args.formulas, seed=1)]

    workloads = [
        (f"pairs ({args.pairs} random pairs)", workload_pairs, (pairs,)),
        (f"scan (20 queries x {args.corpus} corpus)", workload_scan, (queries, corpus)),
        (f"pairwise ({args.formulas} formulas, "
         f"{args.formulas * (args.formulas - 1) // 2} pairs)",
         workload_pairwise, (formula_ids,)),
    ]

    backends = [("python", _speedups_fallback)]
    if _speedups is not None:
        backends.insert(0, ("c", _speedups))
    else:
        print("compiled kernel not built; benchmarking the fallback only\n")

    print(f"{'workload':<44} " + "".join(f"{name:>12} " for name, _ in backends)
          + ("speedup" if _speedups else ""))
    for label, fn, data in workloads:
        times = [bench(fn, impl, *data) for _, impl in backends]
        row = f"{label:<44} " + "".join(f"{t * 1000:>10.1f}ms " for t in times)
        if len(times) == 2:
            row += f"{times[1] / times[0]:>6.1f}x"
        print(row)

    if _speedups is not None:
        # sanity: both backends must agree bit-for-bit
        for a, b in pairs[:200]:
            assert _speedups.levenshtein_ids(a, b) == \
                _speedups_fallback.levenshtein_ids(a, b)
        print("\nbackends agree on a 200-pair sample")


if __name__ == "__main__":
    main()
