#!/usr/bin/env python3
"""Compare the compiled hot-loop kernels with their pure-Python fallbacks.

Both implementations are bit-compatible (the test suite asserts equal
counters and near-identical weights); this script only measures speed.

    python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from disambig import kernels


def best_of(fn, repeats=3):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def sgns_workload(seed=0, vocab=2000, dim=64, sentences=400):
    rng = np.random.default_rng(seed)
    freq = (1.0 / np.arange(1, vocab + 1)) ** 0.75
    cum = np.cumsum(freq / freq.sum())
    cum[-1] = 1.0
    flat, offsets = [], [0]
    for _ in range(sentences):
        length = int(rng.integers(10, 41))
        ids = np.searchsorted(cum, rng.random(length), side="right")
        flat.extend(int(v) for v in np.clip(ids, 0, vocab - 1))
        offsets.append(len(flat))
    sents = np.asarray(flat, dtype=np.int32)
    offsets = np.asarray(offsets, dtype=np.int64)
    w_in = (rng.random((vocab, dim)) - 0.5) / dim
    w_out = np.zeros((vocab, dim))
    return sents, offsets, w_in, w_out, cum


def bench_sgns(fn):
    sents, offsets, w_in, w_out, cum = sgns_workload()
    tokens_total = len(sents) * 3

    def run():
        fn(sents, offsets, w_in.copy(), w_out.copy(), cum,
           5, 5, 0.025, 2.5e-6, 0, tokens_total, 12345)

    return best_of(run)


def overlap_workload(seed=1, rows=500, pool=800):
    rng = np.random.default_rng(seed)
    flat, indptr = [], [0]
    for _ in range(rows):
        size = int(rng.integers(5, 26))
        flat.extend(sorted(rng.choice(pool, size=size, replace=False).tolist()))
        indptr.append(len(flat))
    return np.asarray(indptr, dtype=np.int64), np.asarray(flat, dtype=np.int32)


def bench_overlap(fn):
    indptr, tokens = overlap_workload()
    return best_of(lambda: fn(indptr, tokens))


def main():
    rows = [
        ("sgns_epoch", bench_sgns, kernels.sgns_epoch, kernels.sgns_epoch_pure),
        ("token_overlap_pairs", bench_overlap,
         kernels.token_overlap_pairs, kernels.token_overlap_pairs_pure),
    ]
    print("compiled kernels available: %s" % kernels.COMPILED)
    print()
    print("%-22s %12s %12s %10s" % ("kernel", "pure (s)", "compiled (s)", "speedup"))
    for name, bench, fast, pure in rows:
        t_pure = bench(pure)
        if kernels.COMPILED:
            t_fast = bench(fast)
            print("%-22s %12.4f %12.4f %9.1fx" % (name, t_pure, t_fast, t_pure / t_fast))
        else:
            print("%-22s %12.4f %12s %10s" % (name, t_pure, "-", "-"))


if __name__ == "__main__":
    main()
