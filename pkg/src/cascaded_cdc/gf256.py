"""Vectorised GF(2^8) arithmetic over uint8 numpy arrays.

Field polynomial x^8 + x^4 + x^3 + x^2 + 1 (0x11d), generator 2.
Addition is XOR; multiplication goes through a full 256x256 product table.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

POLY = 0x11D


class SingularMatrixError(ArithmeticError):
    pass


def _tables():
    exp = np.zeros(512, dtype=np.uint8)
    log = np.zeros(256, dtype=np.int64)
    v = 1
    for i in range(255):
        exp[i] = v
        log[v] = i
        v <<= 1
        if v & 0x100:
            v ^= POLY
    exp[255:510] = exp[:255]
    mul = np.zeros((256, 256), dtype=np.uint8)
    nz = np.arange(1, 256)
    mul[1:, 1:] = exp[(log[nz][:, None] + log[nz][None, :]) % 255]
    inv = np.zeros(256, dtype=np.uint8)
    inv[1:] = exp[(255 - log[nz]) % 255]
    return exp, log, mul, inv


EXP, LOG, MUL, INV = _tables()


def mul(a, b):
    return MUL[np.asarray(a, dtype=np.uint8), np.asarray(b, dtype=np.uint8)]


def inv(a):
    a = np.asarray(a, dtype=np.uint8)
    if np.any(a == 0):
        raise ZeroDivisionError("0 has no inverse in GF(256)")
    return INV[a]


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product of ``a`` (r x m) and ``b`` (m x n) over GF(256)."""
    b = np.asarray(b, dtype=np.uint8)
    if b.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {b.shape}")
    return matmul_batched(a, b[None])[0]


def matmul_batched(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``a`` (r x m) times each ``b[p]`` (m x n) for a stack ``b`` of shape (P, m, n)."""
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    P, m, n = b.shape
    if a.ndim != 2 or a.shape[1] != m:
        raise ValueError(f"shape mismatch {a.shape} @ {b.shape}")
    out = np.zeros((a.shape[0], P, n), dtype=np.uint8)
    for k in range(m):
        col = a[:, k]
        if col.any():
            # row c of MUL is multiplication by c; index it with the packet bytes
            out ^= MUL[col][:, b[:, k, :]]
    return out.transpose(1, 0, 2)


def _eliminate(a: np.ndarray, b: np.ndarray | None):
    """Gauss-Jordan on copies of ``a`` (and ``b``); returns (reduced a, b, rank)."""
    a = np.array(a, dtype=np.uint8, copy=True)
    b = None if b is None else np.array(b, dtype=np.uint8, copy=True)
    rows, cols = a.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(a[r:, c])
        if nz.size == 0:
            continue
        p = r + nz[0]
        if p != r:
            a[[r, p]] = a[[p, r]]
            if b is not None:
                b[[r, p]] = b[[p, r]]
        f = INV[a[r, c]]
        a[r] = MUL[f, a[r]]
        if b is not None:
            b[r] = MUL[f, b[r]]
        others = np.flatnonzero(a[:, c])
        others = others[others != r]
        if others.size:
            fac = a[others, c]
            a[others] ^= MUL[fac[:, None], a[r][None, :]]
            if b is not None:
                b[others] ^= MUL[fac[:, None], b[r][None, :]]
        r += 1
    return a, b, r


def rank(a: np.ndarray) -> int:
    a = np.asarray(a, dtype=np.uint8)
    if a.size == 0:
        return 0
    return _eliminate(a, None)[2]


def solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``a @ x = b`` for square non-singular ``a``; ``b`` is (n x width)."""
    a = np.asarray(a, dtype=np.uint8)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError(f"expected a square system, got {a.shape}")
    return matmul(inverse(a), b)


def inverse(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.uint8)
    return _cached_inverse(a.shape[0], a.tobytes()).copy()


@lru_cache(maxsize=256)
def _cached_inverse(n: int, raw: bytes) -> np.ndarray:
    # coefficient matrices repeat across plans of the same shape
    a = np.frombuffer(raw, dtype=np.uint8).reshape(n, n)
    reduced, out, r = _eliminate(a, np.eye(n, dtype=np.uint8))
    if r < n:
        raise SingularMatrixError(f"matrix of size {n} has rank {r}")
    return out
