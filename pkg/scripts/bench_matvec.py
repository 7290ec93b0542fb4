#!/usr/bin/env python3
"""Benchmark the two ranking matvec routes: compiled widening kernel vs
the numpy float64-cache route.  Run single-threaded for stable numbers:

    OMP_NUM_THREADS=1 OPENBLAS_NUM_THREADS=1 python3 scripts/bench_matvec.py
"""
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from captain._kernels import HAVE_COMPILED, matvec64, matvec64_reference  # noqa: E402
from captain.index import BLOCKS, CompositionModel  # noqa: E402


def best_of(fn, repeats=9):
    best = float("inf")
    for _ in range(repeats):
        started = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - started)
    return best * 1000.0


def main() -> None:
    rng = np.random.default_rng(0)
    n = 10_000
    blocks = {name: rng.normal(size=(n, dim)).astype(np.float32)
              for name, dim in BLOCKS.items()}
    model = CompositionModel(ids=tuple(f"i{k}" for k in range(n)), blocks=blocks)

    print(f"compiled kernel available: {HAVE_COMPILED}")
    print(f"rows: {n}")
    for name in ("vgg", "arpose", "iod"):
        q = rng.normal(size=BLOCKS[name])
        matvec64(model, name, q)            # warm JIT
        matvec64_reference(model, name, q)  # warm f64 cache
        fast = best_of(lambda: matvec64(model, name, q))
        reference = best_of(lambda: matvec64_reference(model, name, q))
        deviation = float(np.max(np.abs(
            matvec64(model, name, q) - matvec64_reference(model, name, q))))
        print(f"{name:8s} kernel {fast:7.2f} ms   numpy {reference:7.2f} ms   "
              f"max |diff| {deviation:.2e}")


if __name__ == "__main__":
    main()
