"""Small exact integer linear algebra: column HNF, kernels, ranks.

Matrices are lists of rows of Python ints. Lattices are spanned by columns.
"""

from __future__ import annotations

from math import gcd
from typing import Sequence

import numpy as np

from .errors import InputError

Matrix = list[list[int]]


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def columns(mat: Sequence[Sequence[int]]) -> list[list[int]]:
    if not mat:
        return []
    return [[int(row[j]) for row in mat] for j in range(len(mat[0]))]


def from_columns(cols: Sequence[Sequence[int]], n: int) -> Matrix:
    return [[int(c[i]) for c in cols] for i in range(n)]


def hnf(gens: Sequence[Sequence[int]], n: int) -> Matrix:
    """Upper-triangular column Hermite form of the full-rank lattice spanned by `gens`.

    `gens` is a list of column vectors of length n. The result H has positive
    diagonal and 0 <= H[i][j] < H[i][i] for j > i.
    """
    cols = [[int(v) for v in g] for g in gens if any(g)]
    pivots: list[list[int] | None] = [None] * n
    for row in range(n - 1, -1, -1):
        live = [c for c in cols if c[row] != 0]
        rest = [c for c in cols if c[row] == 0]
        if not live:
            raise InputError("generators do not span a full-rank lattice")
        piv = live[0]
        for other in live[1:]:
            g, x, y = _xgcd(piv[row], other[row])
            u, v = piv[row] // g, other[row] // g
            new_piv = [x * p + y * o for p, o in zip(piv, other)]
            other = [u * o - v * p for p, o in zip(piv, other)]
            piv = new_piv
            if any(other):
                rest.append(other)
        if piv[row] < 0:
            piv = [-v for v in piv]
        pivots[row] = piv
        cols = rest
    H = from_columns(pivots, n)  # type: ignore[arg-type]
    for j in range(n):
        for i in range(j - 1, -1, -1):
            q = H[i][j] // H[i][i]
            if q:
                for r in range(n):
                    H[r][j] -= q * H[r][i]
    return H


def integer_kernel(A: Matrix, k: int) -> list[list[int]]:
    """Basis of {x in Z^k : A x = 0} by unimodular column reduction."""
    m = len(A)
    # augmented columns: top part A e_j, bottom part e_j
    cols = [[A[i][j] for i in range(m)] + [int(i == j) for i in range(k)] for j in range(k)]
    done: list[list[int]] = []
    for row in range(m):
        live = [c for c in cols if c[row] != 0]
        zero = [c for c in cols if c[row] == 0]
        while len(live) > 1:
            live.sort(key=lambda c: abs(c[row]))
            piv = live[0]
            nxt = []
            for c in live[1:]:
                q = c[row] // piv[row]
                c = [a - q * b for a, b in zip(c, piv)]
                (nxt if c[row] != 0 else zero).append(c)
            live = [piv] + nxt
        if live:
            done.append(live[0])
        cols = zero
    return [c[m:] for c in cols]


def kernel_mod(A: Matrix, D: int) -> Matrix:
    """HNF of the lattice {x in Z^k : A x = 0 mod D}."""
    if D < 1:
        raise InputError("modulus must be positive")
    m = len(A)
    k = len(A[0]) if m else 0
    wide = [list(A[i]) + [D * int(i == j) for j in range(m)] for i in range(m)]
    ker = integer_kernel(wide, k + m)
    gens = [v[:k] for v in ker]
    gens += [[D * int(i == j) for i in range(k)] for j in range(k)]
    return hnf(gens, k)


def det_upper(H: Matrix) -> int:
    out = 1
    for i in range(len(H)):
        out *= H[i][i]
    return out


def solve_upper(H: Matrix, x: Sequence[int]) -> list[int] | None:
    """Integer y with H y = x, or None if x is not in the lattice."""
    n = len(H)
    x = [int(v) for v in x]
    y = [0] * n
    for i in range(n - 1, -1, -1):
        rem = x[i] - sum(H[i][j] * y[j] for j in range(i + 1, n))
        if rem % H[i][i]:
            return None
        y[i] = rem // H[i][i]
    return y


def rank_exact(A: Matrix) -> int:
    """Rank over Q via fraction-free (Bareiss) elimination."""
    M = [list(map(int, row)) for row in A]
    if not M or not M[0]:
        return 0
    rows, cols = len(M), len(M[0])
    rank, prev, r = 0, 1, 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if M[i][c] != 0), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        for i in range(r + 1, rows):
            for j in range(c + 1, cols):
                M[i][j] = (M[i][j] * M[r][c] - M[i][c] * M[r][j]) // prev
            M[i][c] = 0
        prev = M[r][c]
        r += 1
        rank += 1
        if r == rows:
            break
    return rank


def rank_mod_p(A: Matrix, p: int) -> int:
    """Rank over the prime field F_p."""
    M = [[int(v) % p for v in row] for row in A]
    if not M or not M[0]:
        return 0
    rows, cols = len(M), len(M[0])
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if M[i][c]), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = pow(M[r][c], -1, p)
        M[r] = [(v * inv) % p for v in M[r]]
        for i in range(rows):
            if i != r and M[i][c]:
                f = M[i][c]
                M[i] = [(a - f * b) % p for a, b in zip(M[i], M[r])]
        r += 1
        if r == rows:
            break
    return r


def content(vals: Sequence[int]) -> int:
    g = 0
    for v in vals:
        g = gcd(g, int(v))
    return g


# Batched exact rank. Ranks are computed modulo several primes near 2^31 whose
# product exceeds the Hadamard bound, so the largest modular rank is the rank over Q.

_PRIMES = (2147483647, 2147483629, 2147483587, 2147483579, 2147483563, 2147483549)


def _inv_mod(x: np.ndarray, p: int) -> np.ndarray:
    out = np.ones_like(x)
    base = x % p
    e = p - 2
    while e:
        if e & 1:
            out = (out * base) % p
        base = (base * base) % p
        e >>= 1
    return out


def rank_batch_mod_p(A: np.ndarray, p: int) -> np.ndarray:
    """Ranks over F_p of a stack of square matrices, shape (B, n, n)."""
    A = np.asarray(A, dtype=np.int64) % p
    B, n, m = A.shape
    rank = np.zeros(B, dtype=np.int64)
    idx = np.arange(B)
    rows = np.arange(n)
    for c in range(m):
        below = rows[None, :] >= rank[:, None]
        cand = (A[:, :, c] != 0) & below
        has = cand.any(axis=1)
        if not has.any():
            continue
        piv = np.argmax(cand, axis=1)
        b = idx[has]
        r, pr = rank[has], piv[has]
        top, pv = A[b, r, :].copy(), A[b, pr, :].copy()
        A[b, r, :], A[b, pr, :] = pv, top
        inv = _inv_mod(A[b, r, c], p)
        A[b, r, :] = (A[b, r, :] * inv[:, None]) % p
        f = A[b, :, c].copy()
        f[rows[None, :] <= r[:, None]] = 0
        A[b] = (A[b] - (f[:, :, None] * A[b, r, :][:, None, :]) % p) % p
        rank[has] += 1
    return rank


def rank_batch_exact(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=np.int64)
    B, n, _ = A.shape
    if B == 0:
        return np.zeros(0, dtype=np.int64)
    E = max(int(np.abs(A).max()), 1)
    log_bound = n * (0.5 * np.log2(n) + np.log2(E))
    k = int(np.ceil((log_bound + 2) / 30.9)) or 1
    if k > len(_PRIMES):
        raise InputError("matrix entries too large for batched modular rank")
    return np.max([rank_batch_mod_p(A, p) for p in _PRIMES[:k]], axis=0)
