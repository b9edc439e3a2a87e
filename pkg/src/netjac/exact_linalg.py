"""Exact integer and rational linear algebra.

Everything here works on plain nested lists of Python ``int`` or
``fractions.Fraction``; nothing is ever rounded.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import List, Optional, Sequence

IntMatrix = List[List[int]]
RationalMatrix = List[List[Fraction]]


def _check_rectangular(A: Sequence[Sequence]) -> int:
    cols = len(A[0]) if A else 0
    for row in A:
        if len(row) != cols:
            raise ValueError("ragged matrix")
    return cols


def det_int(A: Sequence[Sequence[int]]) -> int:
    """Determinant of a square integer matrix by Bareiss elimination.

    Every intermediate value is itself a minor of ``A``, so all divisions
    are exact and the entries stay integral. The empty 0x0 matrix has
    determinant 1.
    """
    n = len(A)
    if _check_rectangular(A) != n and n:
        raise ValueError(f"det_int needs a square matrix, got {n}x{len(A[0])}")
    M = [[int(v) for v in row] for row in A]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if M[k][k] == 0:
            for i in range(k + 1, n):
                if M[i][k] != 0:
                    M[k], M[i] = M[i], M[k]
                    sign = -sign
                    break
            else:
                return 0
        pivot = M[k][k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * pivot - M[i][k] * M[k][j]) // prev
            M[i][k] = 0
        prev = pivot
    return sign * M[n - 1][n - 1] if n else 1


def rref(A: Sequence[Sequence]) -> tuple[RationalMatrix, list[int]]:
    """Reduced row echelon form over the rationals and the pivot columns."""
    cols = _check_rectangular(A)
    R = [[Fraction(v) for v in row] for row in A]
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, len(R)) if R[i][c] != 0), None)
        if piv is None:
            continue
        R[r], R[piv] = R[piv], R[r]
        p = R[r][c]
        R[r] = [v / p for v in R[r]]
        for i in range(len(R)):
            if i != r and R[i][c] != 0:
                f = R[i][c]
                R[i] = [a - f * b for a, b in zip(R[i], R[r])]
        pivots.append(c)
        r += 1
        if r == len(R):
            break
    return R, pivots


def rank(A: Sequence[Sequence]) -> int:
    return len(rref(A)[1]) if A else 0


def rational_nullspace(A: Sequence[Sequence], cols: Optional[int] = None) -> list[list[Fraction]]:
    """Basis of the exact right kernel of ``A``.

    One vector per free column of the reduced echelon form. ``cols`` is only
    needed when ``A`` has no rows.
    """
    if not A:
        n = cols or 0
        return [[Fraction(int(i == k)) for i in range(n)] for k in range(n)]
    n = _check_rectangular(A)
    R, pivots = rref(A)
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * n
        v[f] = Fraction(1)
        for row, pc in enumerate(pivots):
            v[pc] = -R[row][f]
        basis.append(v)
    return basis


def mat_vec(A: Sequence[Sequence], v: Sequence) -> list:
    return [sum((a * b for a, b in zip(row, v)), Fraction(0)) for row in A]


def primitive_integer_vector(v: Sequence[Fraction]) -> list[int]:
    """Scale a rational vector to the unique primitive integer multiple of the same sign."""
    den = 1
    for x in v:
        den = den * Fraction(x).denominator // gcd(den, Fraction(x).denominator)
    ints = [int(Fraction(x) * den) for x in v]
    g = 0
    for x in ints:
        g = gcd(g, x)
    return [x // g for x in ints] if g else ints


def maximize_lp(c: Sequence, A: Sequence[Sequence], b: Sequence) -> Optional[tuple[Fraction, list[Fraction]]]:
    """Exact simplex for ``max c.x  s.t.  A x <= b, x >= 0`` with ``b >= 0``.

    The slack basis is feasible because ``b`` is nonnegative, so no phase one
    is needed. Bland's rule rules out cycling. Returns ``(value, x)`` or
    ``None`` if the program is unbounded.
    """
    m, n = len(A), len(c)
    if any(Fraction(v) < 0 for v in b):
        raise ValueError("maximize_lp requires b >= 0")
    # tableau rows: [A | I | b], objective row: [-c | 0 | 0]
    T = [
        [Fraction(v) for v in A[i]] + [Fraction(int(i == k)) for k in range(m)] + [Fraction(b[i])]
        for i in range(m)
    ]
    obj = [-Fraction(v) for v in c] + [Fraction(0)] * (m + 1)
    basis = [n + i for i in range(m)]
    while True:
        entering = next((j for j in range(n + m) if obj[j] < 0), None)
        if entering is None:
            break
        leave, best = None, None
        for i in range(m):
            if T[i][entering] > 0:
                ratio = T[i][-1] / T[i][entering]
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    leave, best = i, ratio
        if leave is None:
            return None
        p = T[leave][entering]
        T[leave] = [v / p for v in T[leave]]
        for i in range(m):
            if i != leave and T[i][entering] != 0:
                f = T[i][entering]
                T[i] = [a - f * q for a, q in zip(T[i], T[leave])]
        f = obj[entering]
        obj = [a - f * q for a, q in zip(obj, T[leave])]
        basis[leave] = entering
    x = [Fraction(0)] * n
    for i, var in enumerate(basis):
        if var < n:
            x[var] = T[i][-1]
    return obj[-1], x
