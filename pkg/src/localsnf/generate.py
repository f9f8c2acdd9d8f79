"""Planted-instance builders.

Ground truth for most tests comes from matrices with a known invariant
structure: M = U * S * V where S is a diagonal of uniformizer powers and
zeros and U, V are unimodular.  Unit triangular factors (optionally with a
random unit diagonal) keep the determinant a unit, so M provably has the
invariant factors written into S.

Two shapes are provided.  The dense builder mixes thoroughly and is meant
for desk-scale cross-checks against the dense oracle.  The sparse builder
controls the nonzero budget per row so that large instances stay genuinely
sparse: support columns of U are scattered down the matrix and support rows
of V are spread to the right, which lands the product near a target
density instead of filling in.
"""

from __future__ import annotations

import numpy as np

from .operators import TripletMatrix
from .vecops import UnsupportedRing, engine_for, int64_matmul_mod


def spaced_valuations(counts, e: int) -> list:
    """Valuation list from multiplicity counts [r_0, ..., r_{e-1}, r_zero].

    None marks a zero invariant.
    """
    if len(counts) != e + 1:
        raise ValueError(f"expected {e + 1} counts")
    out = []
    for v, c in enumerate(counts[:-1]):
        out.extend([v] * c)
    out.extend([None] * counts[-1])
    return out


def _diag_value(ring, v):
    if v is None:
        return ring.zero
    return ring.uniformizer_pow(v)


def unit_triangular_dense(n: int, ring, rng, upper: bool,
                          unit_diag: bool = False):
    """Dense unimodular triangular matrix as a row-of-lists grid."""
    M = [[ring.zero] * n for _ in range(n)]
    for i in range(n):
        M[i][i] = ring.one if unit_diag else ring.random_unit(rng)
        js = range(i + 1, n) if upper else range(i)
        for j in js:
            M[i][j] = ring.random(rng)
    return M


def _planted_limbwise(m: int, n: int, ring, valuations, rng):
    """Vectorized U * S * V for integer-element rings; None when unsupported."""
    from .rings import LocalIntRing, PrimeField

    if not isinstance(ring, (PrimeField, LocalIntRing)):
        return None
    try:
        eng = engine_for(ring)
    except UnsupportedRing:
        return None
    if eng.w != 1:
        return None
    q = eng.q
    p = ring.p
    k = min(m, n)

    def tri(size: int, upper: bool) -> np.ndarray:
        T = rng.integers(0, q, size=(size, size), dtype=np.int64)
        T = np.triu(T, 1) if upper else np.tril(T, -1)
        diag = rng.integers(0, q, size=size, dtype=np.int64)
        while True:
            bad = diag % p == 0
            if not bad.any():
                break
            diag[bad] = rng.integers(0, q, size=int(bad.sum()), dtype=np.int64)
        T[np.arange(size), np.arange(size)] = diag
        return T

    U = tri(m, upper=False)
    V = tri(n, upper=True)
    svals = np.array(
        [0 if v is None else ring.uniformizer_pow(v) for v in valuations],
        dtype=np.int64)
    left = U[:, :k] * svals[None, :] % q
    return int64_matmul_mod(left, V[:k, :], q)


def planted_dense(m: int, n: int, ring, valuations, rng):
    """m x n grid U * S * V with the given invariant-factor valuations.

    valuations: one entry per min(m, n) diagonal slot, an exponent or None
    for a planted zero.  U and V are dense unimodular triangulars.
    """
    k = min(m, n)
    if len(valuations) != k:
        raise ValueError(f"need {k} valuations, got {len(valuations)}")
    fast = _planted_limbwise(m, n, ring, valuations, rng)
    if fast is not None:
        from_l = ring.from_limbs
        return [[from_l((int(x),)) for x in row] for row in fast]
    U = unit_triangular_dense(m, ring, rng, upper=False)
    V = unit_triangular_dense(n, ring, rng, upper=True)
    # scale columns of U by the diagonal, then multiply by V: avoids
    # materializing the rectangular S
    out = [[ring.zero] * n for _ in range(m)]
    diag = [_diag_value(ring, v) for v in valuations]
    for i in range(m):
        for t in range(k):
            c = ring.mul(U[i][t], diag[t])
            if c == ring.zero:
                continue
            row = V[t]
            for j in range(n):
                if row[j] != ring.zero:
                    out[i][j] = ring.add(out[i][j], ring.mul(c, row[j]))
    return out


def planted_triplets(m: int, n: int, ring, valuations, rng) -> TripletMatrix:
    """planted_dense packaged as a TripletMatrix (1-based indices)."""
    M = planted_dense(m, n, ring, valuations, rng)
    trips = [(i + 1, j + 1, M[i][j]) for i in range(m) for j in range(n)
             if M[i][j] != ring.zero]
    return TripletMatrix(m, n, ring, trips)


def planted_sparse(m: int, n: int, ring, valuations, rng,
                   row_hits: int = 2, col_spread: int = 10) -> TripletMatrix:
    """Large sparse planted instance with controlled row density.

    The q nonzero diagonal slots sit at positions 1..q.  U is unit lower
    triangular with about row_hits extra entries per row, all in the first
    q columns; V is unit upper triangular with about col_spread extra
    entries in each of its first q rows.  The product then averages about
    row_hits * col_spread nonzeros per row while keeping exactly the
    planted invariant factors.
    """
    k = min(m, n)
    if len(valuations) != k:
        raise ValueError(f"need {k} valuations, got {len(valuations)}")
    order = sorted(range(k), key=lambda i: (valuations[i] is None, i))
    vals = [valuations[i] for i in order]
    q = sum(1 for v in vals if v is not None)
    diag = [_diag_value(ring, v) for v in vals]

    # U columns restricted to nonzero support, scattered over all rows
    U = {}
    for i in range(m):
        U[(i, i)] = ring.one
        pool = min(i, q)
        if pool > 0:
            picks = rng.choice(pool, size=min(row_hits, pool), replace=False)
            for j in picks:
                U[(i, int(j))] = ring.random_unit(rng)
    V = {}
    for t in range(n):
        V[(t, t)] = ring.one
    for t in range(q):
        room = n - t - 1
        take = min(col_spread, room)
        if take > 0:
            picks = rng.choice(room, size=take, replace=False)
            for off in picks:
                V[(t, t + 1 + int(off))] = ring.random(rng)

    # M = (U scaled by diag) * V, accumulated sparsely
    by_row_V = {}
    for (r, c), x in V.items():
        by_row_V.setdefault(r, []).append((c, x))
    acc = {}
    for (i, t), u in U.items():
        if t >= k or diag[t] == ring.zero:
            continue
        c0 = ring.mul(u, diag[t])
        for (j, x) in by_row_V.get(t, []):
            key = (i, j)
            prev = acc.get(key, ring.zero)
            acc[key] = ring.add(prev, ring.mul(c0, x))
    trips = [(i + 1, j + 1, x) for (i, j), x in acc.items() if x != ring.zero]
    return TripletMatrix(m, n, ring, trips)
