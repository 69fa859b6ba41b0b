"""Small exact integer linear algebra (row-vector conventions)."""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

Vec = tuple[int, ...]
Mat = list[list[int]]


def identity(n: int) -> Mat:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def matmul(A: Sequence[Sequence[int]], B: Sequence[Sequence[int]]) -> Mat:
    return [[sum(A[i][k] * B[k][j] for k in range(len(B))) for j in range(len(B[0]))] for i in range(len(A))]


def vecmat(v: Sequence[int], M: Sequence[Sequence[int]]) -> Vec:
    return tuple(sum(v[i] * M[i][j] for i in range(len(v))) for j in range(len(M[0])))


def det(M: Sequence[Sequence[int]]) -> int:
    n = len(M)
    A = [[Fraction(x) for x in row] for row in M]
    d = Fraction(1)
    for c in range(n):
        p = next((r for r in range(c, n) if A[r][c] != 0), None)
        if p is None:
            return 0
        if p != c:
            A[c], A[p] = A[p], A[c]
            d = -d
        d *= A[c][c]
        for r in range(c + 1, n):
            f = A[r][c] / A[c][c]
            if f:
                A[r] = [x - f * y for x, y in zip(A[r], A[c])]
    return int(d)


def inverse_unimodular(M: Sequence[Sequence[int]]) -> Mat:
    n = len(M)
    A = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(M)]
    for c in range(n):
        p = next(r for r in range(c, n) if A[r][c] != 0)
        A[c], A[p] = A[p], A[c]
        piv = A[c][c]
        A[c] = [x / piv for x in A[c]]
        for r in range(n):
            if r != c and A[r][c]:
                f = A[r][c]
                A[r] = [x - f * y for x, y in zip(A[r], A[c])]
    out = [[A[i][n + j] for j in range(n)] for i in range(n)]
    if any(x.denominator != 1 for row in out for x in row):
        raise ValueError("matrix is not unimodular")
    return [[int(x) for x in row] for row in out]


def solve_combination(basis: Sequence[Sequence[int]], v: Sequence[int]) -> Vec | None:
    """Integer ``c`` with ``sum c_j basis_j == v``, or ``None``.

    ``basis`` rows must be linearly independent.
    """
    k = len(basis)
    if k == 0:
        return () if not any(v) else None
    n = len(v)
    # columns are basis vectors: solve (n x k) system
    A = [[Fraction(basis[j][i]) for j in range(k)] + [Fraction(v[i])] for i in range(n)]
    row = 0
    pivots = []
    for c in range(k):
        p = next((r for r in range(row, n) if A[r][c] != 0), None)
        if p is None:
            raise ValueError("basis vectors are dependent")
        A[row], A[p] = A[p], A[row]
        piv = A[row][c]
        A[row] = [x / piv for x in A[row]]
        for r in range(n):
            if r != row and A[r][c]:
                f = A[r][c]
                A[r] = [x - f * y for x, y in zip(A[r], A[row])]
        pivots.append(row)
        row += 1
    if any(A[r][k] != 0 for r in range(row, n)):
        return None
    sol = [A[r][k] for r in pivots]
    if any(x.denominator != 1 for x in sol):
        return None
    return tuple(int(x) for x in sol)


def rank(rows: Sequence[Sequence[int]]) -> int:
    if not rows:
        return 0
    A = [[Fraction(x) for x in r] for r in rows]
    n = len(A[0])
    rk = 0
    for c in range(n):
        p = next((r for r in range(rk, len(A)) if A[r][c] != 0), None)
        if p is None:
            continue
        A[rk], A[p] = A[p], A[rk]
        for r in range(len(A)):
            if r != rk and A[r][c]:
                f = A[r][c] / A[rk][c]
                A[r] = [x - f * y for x, y in zip(A[r], A[rk])]
        rk += 1
    return rk


def hnf_rows(rows: Sequence[Sequence[int]]) -> list[list[int]]:
    """Row Hermite normal form of the lattice spanned by ``rows`` (zero rows dropped)."""
    A = [list(r) for r in rows if any(r)]
    if not A:
        return []
    n = len(A[0])
    r0 = 0
    for c in range(n):
        # gcd-combine column c among rows r0..
        while True:
            nz = [r for r in range(r0, len(A)) if A[r][c] != 0]
            if len(nz) <= 1:
                break
            m = min(nz, key=lambda r: abs(A[r][c]))
            for r in nz:
                if r != m:
                    q = A[r][c] // A[m][c]
                    A[r] = [x - q * y for x, y in zip(A[r], A[m])]
        nz = [r for r in range(r0, len(A)) if A[r][c] != 0]
        if not nz:
            continue
        p = nz[0]
        A[r0], A[p] = A[p], A[r0]
        if A[r0][c] < 0:
            A[r0] = [-x for x in A[r0]]
        for r in range(r0):
            q = A[r][c] // A[r0][c]
            A[r] = [x - q * y for x, y in zip(A[r], A[r0])]
        r0 += 1
    return [row for row in A[:r0]]


def reduce_mod_lattice(v: Sequence[int], hnf: Sequence[Sequence[int]]) -> Vec:
    """Canonical representative of ``v`` modulo the lattice with row HNF ``hnf``."""
    v = list(v)
    for row in hnf:
        c = next(i for i, x in enumerate(row) if x)
        q = v[c] // row[c]
        v = [x - q * y for x, y in zip(v, row)]
    return tuple(v)


def saturation_basis(rows: Sequence[Sequence[int]], n: int) -> tuple[Mat, int]:
    """A unimodular ``n x n`` matrix whose first ``r`` rows span the saturation
    of the lattice spanned by ``rows`` (``r`` its rank); the remaining rows
    complete it to a basis of ``Z^n``.
    """
    A = [list(r) for r in rows]
    V = identity(n)  # columns ops: A <- A V, tracked in V
    col = 0
    for i in range(len(A)):
        if col >= n:
            break
        while True:
            nz = [j for j in range(col, n) if A[i][j] != 0]
            if len(nz) <= 1:
                break
            m = min(nz, key=lambda j: abs(A[i][j]))
            for j in nz:
                if j != m:
                    q = A[i][j] // A[i][m]
                    for R in A:
                        R[j] -= q * R[m]
                    for R in V:
                        R[j] -= q * R[m]
        nz = [j for j in range(col, n) if A[i][j] != 0]
        if not nz:
            continue
        j = nz[0]
        for R in A:
            R[col], R[j] = R[j], R[col]
        for R in V:
            R[col], R[j] = R[j], R[col]
        col += 1
    return inverse_unimodular(V), col
