"""Independent brute-force oracles used across the test suite.

These deliberately avoid the library's own algorithms: the dense Smith
reduction below was written first and is kept as the reference the sparse
engine must agree with.
"""

from fractions import Fraction
from math import gcd


def dense_invariant_factors(data):
    """Invariant factors of an integer matrix by naive dense reduction.

    Textbook elementary row/column reduction: move the smallest nonzero
    entry to the corner, clear its row and column, restart when
    divisibility fails, recurse into the submatrix.  Returns the full
    chain including unit factors.
    """
    m = [list(map(int, row)) for row in data]
    if not m or not m[0]:
        return []
    rows, cols = len(m), len(m[0])
    factors = []
    top, left = 0, 0
    while top < rows and left < cols:
        best = None
        for i in range(top, rows):
            for j in range(left, cols):
                if m[i][j] and (best is None or abs(m[i][j]) < abs(m[best[0]][best[1]])):
                    best = (i, j)
        if best is None:
            break
        bi, bj = best
        m[top], m[bi] = m[bi], m[top]
        for row in m:
            row[left], row[bj] = row[bj], row[left]
        pivot = m[top][left]
        dirty = False
        for i in range(top + 1, rows):
            if m[i][left] % pivot:
                q = m[i][left] // pivot
                for j in range(left, cols):
                    m[i][j] -= q * m[top][j]
                dirty = True
        for j in range(left + 1, cols):
            if m[top][j] % pivot:
                q = m[top][j] // pivot
                for i in range(top, rows):
                    m[i][j] -= q * m[i][left]
                dirty = True
        if dirty:
            continue
        for i in range(top + 1, rows):
            q = m[i][left] // pivot
            if q:
                for j in range(left, cols):
                    m[i][j] -= q * m[top][j]
        for j in range(left + 1, cols):
            q = m[top][j] // pivot
            if q:
                for i in range(top, rows):
                    m[i][j] -= q * m[i][left]
        offender = None
        for i in range(top + 1, rows):
            for j in range(left + 1, cols):
                if m[i][j] % pivot:
                    offender = i
                    break
            if offender is not None:
                break
        if offender is not None:
            for j in range(left, cols):
                m[top][j] += m[offender][j]
            continue
        factors.append(abs(pivot))
        top += 1
        left += 1
    return factors


def dense_rank_over_q(data):
    """Rank by rational Gaussian elimination (independent of any SNF)."""
    m = [[Fraction(v) for v in row] for row in data]
    if not m or not m[0]:
        return 0
    rows, cols = len(m), len(m[0])
    rank = 0
    for j in range(cols):
        piv = next((i for i in range(rank, rows) if m[i][j]), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        pv = m[rank][j]
        for i in range(rows):
            if i != rank and m[i][j]:
                f = m[i][j] / pv
                for k in range(cols):
                    m[i][k] -= f * m[rank][k]
        rank += 1
        if rank == rows:
            break
    return rank


def chain_of(factors):
    """Normalize a diagonal multiset into the nontrivial invariant chain."""
    tor = sorted(d for d in factors if d > 1)
    changed = True
    while changed:
        changed = False
        for i in range(len(tor)):
            for j in range(i + 1, len(tor)):
                a, b = tor[i], tor[j]
                if b % a:
                    g = gcd(a, b)
                    tor[i], tor[j] = g, a // g * b
                    changed = True
        tor = sorted(d for d in tor if d > 1)
    return tuple(tor)


def reduced_euler_characteristic(simplex_counts):
    """Alternating sum (-1) + sum_d (-1)^d * count_d over nonempty simplices."""
    chi = -1
    for dim, count in simplex_counts.items():
        chi += (-1) ** dim * count
    return chi
