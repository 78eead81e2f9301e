import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cascaded_cdc import gf256

byte = st.integers(0, 255)
nonzero = st.integers(1, 255)


def slow_mul(a, b):
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        if a & 0x100:
            a ^= gf256.POLY
        b >>= 1
    return out


def test_mul_table_matches_shift_and_add():
    a, b = np.meshgrid(np.arange(256), np.arange(256), indexing="ij")
    ref = np.vectorize(slow_mul)(a, b)
    assert np.array_equal(gf256.MUL, ref)


def test_generator_has_full_order():
    assert len(set(gf256.EXP[:255].tolist())) == 255


@given(nonzero)
def test_inverse(a):
    assert gf256.mul(a, gf256.inv(a)) == 1


def test_inverse_of_zero():
    with pytest.raises(ZeroDivisionError):
        gf256.inv(0)


@given(byte, byte, byte)
def test_distributive(a, b, c):
    assert gf256.mul(a, b ^ c) == gf256.mul(a, b) ^ gf256.mul(a, c)


def naive_matmul(a, b):
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.uint8)
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            v = 0
            for k in range(a.shape[1]):
                v ^= slow_mul(int(a[i, k]), int(b[k, j]))
            out[i, j] = v
    return out


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_matmul_matches_naive(r, m, n, seed):
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 256, (r, m), dtype=np.uint8)
    b = rng.integers(0, 256, (3, m, n), dtype=np.uint8)
    got = gf256.matmul_batched(a, b)
    for p in range(3):
        assert np.array_equal(got[p], naive_matmul(a, b[p]))


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_solve_roundtrip(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 256, (n, n), dtype=np.uint8)
    if gf256.rank(a) < n:
        with pytest.raises(gf256.SingularMatrixError):
            gf256.inverse(a)
        return
    x = rng.integers(0, 256, (n, 5), dtype=np.uint8)
    assert np.array_equal(gf256.solve(a, gf256.matmul(a, x)), x)
    assert np.array_equal(gf256.matmul(a, gf256.inverse(a)), np.eye(n, dtype=np.uint8))


def test_rank_of_dependent_rows():
    a = np.array([[1, 2, 3], [2, 4, 6], [0, 0, 0]], dtype=np.uint8)
    # second row is 2 * first row over GF(256)
    a[1] = gf256.mul(2, a[0])
    assert gf256.rank(a) == 1
    assert gf256.rank(np.zeros((0, 3), dtype=np.uint8)) == 0


def test_shape_errors():
    with pytest.raises(ValueError):
        gf256.matmul(np.zeros((2, 3), np.uint8), np.zeros((2, 2), np.uint8))
    with pytest.raises(ValueError):
        gf256.solve(np.zeros((2, 3), np.uint8), np.zeros((2, 1), np.uint8))
