"""Exact dense Smith forms over local principal ideal rings.

This is the ground truth the probabilistic pipeline is tested against, and
also the finishing step applied to the small nullspace-image matrix inside
the p-adic solver.  The method is classical valuation-pivot elimination:
over a local PIR every entry is unit * uniformizer^v, so an entry of
minimal valuation divides everything left in its row and column and one
exact clearing step strips a whole invariant factor.

A brute-force determinantal-divisor computation for tiny matrices is kept
alongside as an independent cross-check; it knows nothing about
elimination and just enumerates minors.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .smith_poly import SmithMultiplicities
from .vecops import UnsupportedRing, engine_for


@dataclass
class DenseMatrix:
    rows: int
    cols: int
    ring: object
    data: list  # row-major grid of canonical ring elements

    def __post_init__(self):
        if len(self.data) != self.rows or any(len(r) != self.cols
                                              for r in self.data):
            raise ValueError("grid shape does not match declared dimensions")

    @classmethod
    def from_rows(cls, ring, rows):
        grid = [[ring.element(x) for x in row] for row in rows]
        m = len(grid)
        n = len(grid[0]) if grid else 0
        return cls(m, n, ring, grid)

    @classmethod
    def from_triplet_matrix(cls, M):
        return cls(M.rows, M.cols, M.ring, M.to_dense())


def _scalar_smith(M: DenseMatrix) -> SmithMultiplicities:
    ring = M.ring
    e = ring.e
    W = [list(row) for row in M.data]
    rows_left = list(range(M.rows))
    cols_left = list(range(M.cols))
    pivots = []
    while rows_left and cols_left:
        best = None
        for i in rows_left:
            for j in cols_left:
                x = W[i][j]
                if x == ring.zero:
                    continue
                v = ring.valuation(x)
                if best is None or v < best[0]:
                    best = (v, i, j)
        if best is None:
            break
        v, pi, pj = best
        # minimal-valuation pivoting makes the sequence non-decreasing
        assert not pivots or v >= pivots[-1]
        pivots.append(v)
        inv = ring.invert(ring.div_uniformizer(W[pi][pj], v))
        for j in cols_left:
            W[pi][j] = ring.mul(inv, W[pi][j])
        for i in rows_left:
            if i == pi or W[i][pj] == ring.zero:
                continue
            f = ring.div_uniformizer(W[i][pj], v)
            for j in cols_left:
                W[i][j] = ring.sub(W[i][j], ring.mul(f, W[pi][j]))
        rows_left.remove(pi)
        cols_left.remove(pj)
    mults = [0] * e
    for v in pivots:
        mults[v] += 1
    return SmithMultiplicities(ring=ring.descriptor(),
                               multiplicities=tuple(mults),
                               r_zero=min(M.rows, M.cols) - len(pivots))


def _engine_smith(M: DenseMatrix, eng) -> SmithMultiplicities:
    """Vectorized elimination on the limb representation.

    Valid whenever valuations are limbwise (integer and Galois rings): the
    whole update is W -= outer(column / p^v, scaled pivot row) computed as
    one batched limb convolution per pivot.
    """
    ring = M.ring
    e, q, w, p = ring.e, eng.q, eng.w, eng.p
    m, n = M.rows, M.cols
    W = np.empty((m, w, n), dtype=np.int64)
    for i, row in enumerate(M.data):
        W[i] = eng.to_array(row).T
    row_dead = np.zeros(m, dtype=bool)
    col_dead = np.zeros(n, dtype=bool)
    pivots = []
    for _ in range(min(m, n)):
        vals = eng.valuations(W)
        vals[row_dead, :] = e
        vals[:, col_dead] = e
        pi, pj = np.unravel_index(np.argmin(vals), vals.shape)
        v = int(vals[pi, pj])
        if v >= e:
            break
        assert not pivots or v >= pivots[-1]
        pivots.append(v)
        unit = ring.from_limbs(tuple(int(x) for x in W[pi, :, pj] // p ** v))
        inv = eng.to_array([ring.invert(unit)])
        prow = eng.ew_mul(inv, np.ascontiguousarray(W[pi].T))  # (n, w)
        F = W[:, :, pj] // p ** v
        F[pi] = 0
        raw = np.zeros((m, 2 * w - 1, n), dtype=np.int64)
        prowT = prow.T  # (w, n)
        for a in range(w):
            raw[:, a:a + w, :] += F[:, a, None, None] * prowT[None, :, :]
        W = (W - eng.reduce_conv(raw % q)) % q
        W[pi] = prowT
        row_dead[pi] = True
        col_dead[pj] = True
    mults = [0] * e
    for v in pivots:
        mults[v] += 1
    return SmithMultiplicities(ring=ring.descriptor(),
                               multiplicities=tuple(mults),
                               r_zero=min(m, n) - len(pivots))


def dense_smith_local(M: DenseMatrix) -> SmithMultiplicities:
    """Smith multiplicities by valuation-pivot elimination.

    Pivot selection takes the minimal-valuation entry, ties broken by
    lowest row then lowest column index, so results are deterministic.
    """
    eng = engine_for(M.ring)
    if eng is not None and M.rows and M.cols:
        try:
            return _engine_smith(M, eng)
        except UnsupportedRing:
            pass
    return _scalar_smith(M)


def _det(grid, ring):
    n = len(grid)
    if n == 1:
        return grid[0][0]
    acc = ring.zero
    for j in range(n):
        x = grid[0][j]
        if x == ring.zero:
            continue
        minor = [[grid[i][t] for t in range(n) if t != j]
                 for i in range(1, n)]
        term = ring.mul(x, _det(minor, ring))
        acc = ring.sub(acc, term) if j % 2 else ring.add(acc, term)
    return acc


def determinantal_divisor_valuations(M: DenseMatrix, k: int) -> list:
    """v_t = minimal valuation over all t x t minors, for t = 1..k.

    Brute force by cofactor expansion; the t-th invariant factor has
    valuation v_t - v_{t-1} while those stay below e.  Capped at k <= 4 and
    dimensions <= 8 because minor enumeration explodes combinatorially.
    """
    if k > 4 or max(M.rows, M.cols) > 8:
        raise ValueError("divisor enumeration is capped at k <= 4, dims <= 8")
    if k > min(M.rows, M.cols):
        raise ValueError("k exceeds the matrix dimensions")
    ring = M.ring
    e = ring.e
    out = []
    for t in range(1, k + 1):
        best = e
        for rows in combinations(range(M.rows), t):
            for cols in combinations(range(M.cols), t):
                sub = [[M.data[i][j] for j in cols] for i in rows]
                d = _det(sub, ring)
                if d != ring.zero:
                    best = min(best, ring.valuation(d))
        out.append(best)
    return out
