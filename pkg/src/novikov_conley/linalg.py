"""Exact integer / rational / modular matrix kernels.

Matrices are plain lists of rows.  Nothing here touches floating point.
"""
from __future__ import annotations

from fractions import Fraction
from math import lcm
from typing import Sequence

Matrix = list[list[int]]


def zeros(m: int, n: int) -> Matrix:
    return [[0] * n for _ in range(m)]


def identity(n: int) -> Matrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def shape(M: Sequence[Sequence], ncols: int = 0) -> tuple[int, int]:
    """Shape of M; ``ncols`` disambiguates matrices with no rows."""
    return (len(M), len(M[0]) if M else ncols)


def matmul(A: Sequence[Sequence], B: Sequence[Sequence], inner: int | None = None) -> list[list]:
    if not A:
        return []
    n = len(B[0]) if B else 0
    if inner is None:
        inner = len(B)
    out = []
    for row in A:
        acc = [0] * n
        for k in range(inner):
            a = row[k]
            if a:
                brow = B[k]
                for j in range(n):
                    b = brow[j]
                    if b:
                        acc[j] += a * b
        out.append(acc)
    return out


def is_zero(M: Sequence[Sequence]) -> bool:
    return all(not x for row in M for x in row)


def transpose(M: Sequence[Sequence], ncols: int = 0) -> list[list]:
    m, n = shape(M, ncols)
    return [[M[i][j] for i in range(m)] for j in range(n)]


def smith_normal_form(M: Sequence[Sequence[int]]) -> tuple[Matrix, Matrix, Matrix]:
    """Return ``(D, U, V)`` with ``U @ M @ V == D`` in Smith normal form.

    ``U`` and ``V`` are unimodular, the nonzero diagonal entries of ``D`` are
    positive and each divides the next.  The pivot is always a nonzero entry
    of minimal absolute value in the active block, which keeps intermediate
    growth modest on small inputs.
    """
    A = [list(map(int, row)) for row in M]
    m = len(A)
    n = len(A[0]) if m else 0
    U = identity(m)
    V = identity(n)

    def swap_rows(i, j):
        A[i], A[j] = A[j], A[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for row in A:
            row[i], row[j] = row[j], row[i]
        for row in V:
            row[i], row[j] = row[j], row[i]

    def add_row(dst, src, c):
        # row_dst += c * row_src
        A[dst] = [x + c * y for x, y in zip(A[dst], A[src])]
        U[dst] = [x + c * y for x, y in zip(U[dst], U[src])]

    def add_col(dst, src, c):
        for row in A:
            row[dst] += c * row[src]
        for row in V:
            row[dst] += c * row[src]

    t = 0
    while t < min(m, n):
        best = None
        for i in range(t, m):
            for j in range(t, n):
                v = A[i][j]
                if v and (best is None or abs(v) < best[0]):
                    best = (abs(v), i, j)
        if best is None:
            break
        _, i, j = best
        swap_rows(t, i)
        swap_cols(t, j)
        while True:
            p = A[t][t]
            clean = True
            for i in range(t + 1, m):
                if A[i][t]:
                    add_row(i, t, -(A[i][t] // p))
                    if A[i][t]:
                        clean = False
            for j in range(t + 1, n):
                if A[t][j]:
                    add_col(j, t, -(A[t][j] // p))
                    if A[t][j]:
                        clean = False
            if not clean:
                # a remainder smaller than the pivot survived; promote it
                best = (abs(p), t, t)
                for i in range(t + 1, m):
                    if A[i][t] and abs(A[i][t]) < best[0]:
                        best = (abs(A[i][t]), i, t)
                for j in range(t + 1, n):
                    if A[t][j] and abs(A[t][j]) < best[0]:
                        best = (abs(A[t][j]), t, j)
                swap_rows(t, best[1])
                swap_cols(t, best[2])
                continue
            bad = None
            for i in range(t + 1, m):
                for j in range(t + 1, n):
                    if A[i][j] % p:
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            add_row(t, bad, 1)
        if A[t][t] < 0:
            A[t] = [-x for x in A[t]]
            U[t] = [-x for x in U[t]]
        t += 1
    return A, U, V


def invariant_factors(M: Sequence[Sequence[int]]) -> list[int]:
    """Nonzero diagonal of the Smith normal form, in divisibility order."""
    D, _, _ = smith_normal_form(M)
    out = []
    for i in range(min(len(D), len(D[0]) if D else 0)):
        if D[i][i]:
            out.append(D[i][i])
    return out


def _integer_rows(M: Sequence[Sequence]) -> Matrix:
    rows = []
    for row in M:
        den = 1
        for x in row:
            if isinstance(x, Fraction):
                den = lcm(den, x.denominator)
        rows.append([int(x * den) if isinstance(x, Fraction) else int(x) * den for x in row])
    return rows


def rank_rational(M: Sequence[Sequence]) -> int:
    """Rank over Q by fraction-free (Bareiss) elimination.

    Entries may be ints or Fractions; each row is scaled to integers first.
    """
    A = _integer_rows(M)
    m = len(A)
    n = len(A[0]) if m else 0
    r = 0
    prev = 1
    for c in range(n):
        piv = next((i for i in range(r, m) if A[i][c]), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        pr = A[r]
        for i in range(r + 1, m):
            row = A[i]
            a = row[c]
            p = pr[c]
            for j in range(c + 1, n):
                row[j] = (p * row[j] - a * pr[j]) // prev
            row[c] = 0
        prev = pr[c]
        r += 1
        if r == m:
            break
    return r


def rank_mod_p(M: Sequence[Sequence[int]], p: int) -> int:
    """Rank over the prime field Z/p."""
    A = [[int(x) % p for x in row] for row in M]
    m = len(A)
    n = len(A[0]) if m else 0
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, m) if A[i][c]), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        inv = pow(A[r][c], -1, p)
        A[r] = [(x * inv) % p for x in A[r]]
        for i in range(m):
            if i != r and A[i][c]:
                f = A[i][c]
                A[i] = [(x - f * y) % p for x, y in zip(A[i], A[r])]
        r += 1
        if r == m:
            break
    return r


def determinant(M: Sequence[Sequence[int]]) -> int:
    """Exact determinant of a square integer matrix (Bareiss)."""
    A = [list(map(int, row)) for row in M]
    n = len(A)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for c in range(n - 1):
        piv = next((i for i in range(c, n) if A[i][c]), None)
        if piv is None:
            return 0
        if piv != c:
            A[c], A[piv] = A[piv], A[c]
            sign = -sign
        for i in range(c + 1, n):
            for j in range(c + 1, n):
                A[i][j] = (A[c][c] * A[i][j] - A[i][c] * A[c][j]) // prev
            A[i][c] = 0
        prev = A[c][c]
    return sign * A[n - 1][n - 1]


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def inverse_unimodular(M: Sequence[Sequence[int]]) -> Matrix:
    """Integer inverse of a square matrix with determinant ±1."""
    n = len(M)
    A = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(M)]
    for c in range(n):
        piv = next((i for i in range(c, n) if A[i][c]), None)
        if piv is None:
            raise ValueError("matrix is singular")
        A[c], A[piv] = A[piv], A[c]
        inv = 1 / A[c][c]
        A[c] = [x * inv for x in A[c]]
        for i in range(n):
            if i != c and A[i][c]:
                f = A[i][c]
                A[i] = [x - f * y for x, y in zip(A[i], A[c])]
    out = [row[n:] for row in A]
    if any(x.denominator != 1 for row in out for x in row):
        raise ValueError("matrix is not unimodular")
    return [[int(x) for x in row] for row in out]
