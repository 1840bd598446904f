"""Distance kernels against a naive per-bit oracle, and backend equivalence."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from longnav import kernels
from longnav.features import Descriptor


def bit_loop_distance(a_words, b_words, width):
    """Independent oracle: compare bit by bit."""
    d = 0
    for i in range(width):
        wa = (int(a_words[i // 64]) >> (i % 64)) & 1
        wb = (int(b_words[i // 64]) >> (i % 64)) & 1
        d += wa != wb
    return d


def random_words(rng, n, width):
    nw = (width + 63) // 64
    w = rng.integers(0, np.iinfo(np.uint64).max, size=(n, nw),
                     dtype=np.uint64, endpoint=True)
    tail = width % 64
    if tail:
        w[:, -1] &= np.uint64((1 << tail) - 1)
    return w


def test_popcount_words_matches_python():
    rng = np.random.default_rng(0)
    for _ in range(200):
        w = random_words(rng, 1, 256)[0]
        assert kernels.popcount_words(w) == sum(bin(int(x)).count("1") for x in w)


def test_hamming_exhaustive_width4():
    for a in range(16):
        for b in range(16):
            da = Descriptor.from_int(a, 4).words
            db = Descriptor.from_int(b, 4).words
            m = kernels.hamming_matrix_np(da[None, :], db[None, :])
            assert m[0, 0] == bit_loop_distance(da, db, 4) == bin(a ^ b).count("1")


def test_hamming_randomized_width256_against_bit_loop():
    rng = np.random.default_rng(1)
    a = random_words(rng, 100, 256)
    b = random_words(rng, 100, 256)
    m = kernels.hamming_matrix(a, b)
    # 10^4 pairs, each checked against the per-bit loop
    for i in range(100):
        for j in range(100):
            assert m[i, j] == bit_loop_distance(a[i], b[j], 256)


_rows = st.lists(st.integers(0, 2**64 - 1), min_size=4, max_size=4)


@given(st.lists(_rows, min_size=1, max_size=8),
       st.lists(_rows, min_size=1, max_size=8))
@settings(max_examples=40, deadline=None)
def test_hamming_matrix_matches_oracle_property(aw, bw):
    a = np.array(aw, dtype=np.uint64)
    b = np.array(bw, dtype=np.uint64)
    m = kernels.hamming_matrix_np(a, b)
    for i in range(len(aw)):
        for j in range(len(bw)):
            assert m[i, j] == bit_loop_distance(a[i], b[j], 256)
    impls = kernels.implementations()
    if "numba" in impls:
        assert np.array_equal(impls["numba"]["hamming_matrix"](a, b), m)


@pytest.mark.parametrize("na,nb", [(0, 5), (5, 0), (0, 0), (1, 1), (7, 3)])
def test_hamming_matrix_shapes(na, nb):
    rng = np.random.default_rng(2)
    a = random_words(rng, na, 256)
    b = random_words(rng, nb, 256)
    assert kernels.hamming_matrix_np(a, b).shape == (na, nb)


def test_backends_agree_on_all_kernels():
    impls = kernels.implementations()
    if "numba" not in impls:
        pytest.skip("numba backend not available")
    rng = np.random.default_rng(3)
    for trial in range(20):
        na = int(rng.integers(1, 60))
        nb = int(rng.integers(1, 60))
        a = random_words(rng, na, 256)
        b = random_words(rng, nb, 256)
        # plant a few near-duplicates so matches exist below the threshold
        k = min(na, nb, 10)
        b[:k] = a[:k]
        np_i = impls["numpy"]
        nb_i = impls["numba"]
        assert np.array_equal(np_i["hamming_matrix"](a, b),
                              nb_i["hamming_matrix"](a, b))
        p1 = np_i["mutual_nearest_pairs"](a, b, 64)
        p2 = nb_i["mutual_nearest_pairs"](a, b, 64)
        for x, y in zip(p1, p2):
            assert np.array_equal(x, y)
        assert np.array_equal(np_i["nearest_distances"](a, b),
                              nb_i["nearest_distances"](a, b))
        if na >= 2:
            assert np.array_equal(np_i["self_nearest_distances"](a),
                                  nb_i["self_nearest_distances"](a))


def test_mutual_nearest_pairs_is_one_to_one_and_thresholded():
    rng = np.random.default_rng(4)
    a = random_words(rng, 40, 256)
    b = random_words(rng, 50, 256)
    b[:25] = a[:25]  # exact copies must match at distance 0
    ai, bi, dd = kernels.mutual_nearest_pairs(a, b, 64)
    assert len(set(ai.tolist())) == len(ai)
    assert len(set(bi.tolist())) == len(bi)
    assert (dd <= 64).all()
    matched = dict(zip(ai.tolist(), bi.tolist()))
    for i in range(25):
        assert matched.get(i) == i


def test_mutual_nearest_ties_keep_first_index():
    # two identical map rows competing for one view row: index 0 must win
    a = np.zeros((2, 4), dtype=np.uint64)
    b = np.zeros((1, 4), dtype=np.uint64)
    for name, impl in kernels.implementations().items():
        ai, bi, dd = impl["mutual_nearest_pairs"](a, b, 64)
        assert ai.tolist() == [0], name
        assert bi.tolist() == [0]
        assert dd.tolist() == [0]


def test_self_nearest_excludes_self():
    rng = np.random.default_rng(5)
    a = random_words(rng, 12, 256)
    d = kernels.self_nearest_distances(a)
    assert (d > 0).all()  # random 256-bit rows never collide here
    a2 = a.copy()
    a2[7] = a2[3]
    d2 = kernels.self_nearest_distances(a2)
    assert d2[3] == 0 and d2[7] == 0


def test_numpy_fallback_env_flag():
    import subprocess
    import sys

    code = ("import longnav.kernels as k; "
            "print(k.BACKEND, k.USING_NUMBA)")
    out = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True, text=True,
        env={"PATH": "/usr/bin:/bin", "LONGNAV_NUMBA": "0"},
    )
    assert out.returncode == 0, out.stderr
    assert out.stdout.split() == ["numpy", "False"]
