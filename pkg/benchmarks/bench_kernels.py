"""Descriptor-kernel benchmark: numba JIT vs the pure-numpy fallback.

Usage (after `pip install -e .`):

    python3 benchmarks/bench_kernels.py

Sizes mirror one live frame: a 500-feature local map matched against a view
of similar size, 256-bit descriptors. The last section times a whole
register() pass with each backend patched in. With LONGNAV_NUMBA=0 only the
numpy rows appear.
"""

import math
import time

import numpy as np
from numpy.random import default_rng

from longnav import kernels
from longnav.features import Descriptor, Feature
from longnav.registration import register

N_MAP, N_VIEW, WORDS = 500, 530, 4
REPEAT = 7

rng = default_rng(0)
A = rng.integers(0, 2**64, size=(N_MAP, WORDS), dtype=np.uint64)
# view descriptors: map descriptors with a couple of bits flipped, plus clutter
B = A.copy()
for i in range(N_MAP):
    B[i, rng.integers(0, WORDS)] ^= np.uint64(1) << np.uint64(rng.integers(0, 64))
B = np.vstack([B, rng.integers(0, 2**64, size=(N_VIEW - N_MAP, WORDS),
                               dtype=np.uint64)])


def best_of(fn, *args):
    fn(*args)  # warm-up; first call also pays any JIT cost
    best = math.inf
    for _ in range(REPEAT):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def feature_list(words, shift):
    xs = rng.uniform(20.0, 620.0, len(words))
    return [Feature(float(x + shift), 240.0, Descriptor(w, 64 * WORDS))
            for x, w in zip(xs, words)]


CALLS = {
    "hamming_matrix": (A, B),
    "mutual_nearest_pairs": (A, B, 64),
    "nearest_distances": (A, B),
    "self_nearest_distances": (A,),
}

impls = kernels.implementations()
print(f"backends: {', '.join(impls)}   map={N_MAP} view={N_VIEW} "
      f"words={WORDS} repeat={REPEAT}")
print(f"{'kernel':24s}" + "".join(f"{name:>12s}" for name in impls)
      + ("     speedup" if len(impls) > 1 else ""))
for kname, args in CALLS.items():
    times = [best_of(impl[kname], *args) for impl in impls.values()]
    row = f"{kname:24s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times)
    if len(times) > 1:
        row += f"{times[0] / times[-1]:11.1f}x"
    print(row)

# whole registration pass: patch each backend's matcher into the live module
map_feats = feature_list(A, 0.0)
view_feats = feature_list(B, 12.0)
saved = kernels.mutual_nearest_pairs
print()
full = []
for name, impl in impls.items():
    kernels.mutual_nearest_pairs = impl["mutual_nearest_pairs"]
    try:
        t = best_of(register, map_feats, view_feats)
    finally:
        kernels.mutual_nearest_pairs = saved
    full.append(t)
    print(f"register() full pass     {name:>8s} {t * 1e3:10.2f}ms")
if len(full) > 1:
    print(f"register() speedup       {full[0] / full[-1]:19.1f}x")
