"""Wiedemann machinery over fields.

Berlekamp-Massey on projected Krylov sequences gives minimal polynomials of
black-box operators; ranks come from the degree of the minimal polynomial of
a preconditioned operator; kernel vectors come from evaluating the shifted
minimal polynomial at the operator.  All of it is probabilistic with
explicit seeds and repetition, and all of it works over prime fields,
extension fields, and the residue fields of the local rings.

Preconditioning detail: trials alternate between two-sided random diagonal
scaling and the same scaling with unit triangular Toeplitz factors wrapped
around the operator.  Pure diagonals keep the classical cost but provably
fail on shift-nilpotent matrices (conjugating N by diagonals never mixes the
one nonzero stripe, so the minimal polynomial stays x^2 while the rank can
be anything); the triangular sandwich restores genericity on exactly those
inputs, and taking the max over trials keeps both worlds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import (
    BlackBoxOperator,
    compose,
    diagonal_operator,
)
from .polynomials import (
    gpoly_divmod,
    gpoly_gcd,
    gpoly_mul,
    gpoly_root,
)
from .rings import ExtField, PrimeField
from .vecops import KernelConv, engine_for


class InsufficientNullity(RuntimeError):
    """Could not certify the requested number of independent kernel vectors."""


@dataclass
class RankResult:
    rank: int
    confidence: float  # failure probability bound actually parameterized
    trials: int
    ext_degree: int    # extension degree over the operating field (1 = none)


# ---------------------------------------------------------------------------
# Berlekamp-Massey
# ---------------------------------------------------------------------------


class _BMState:
    """Incremental Berlekamp-Massey over a field object."""

    def __init__(self, field):
        self.field = field
        self.seq = []
        self.C = [field.one]
        self.B = [field.one]
        self.L = 0
        self.m = 1
        self.b = field.one
        self.stable = 0

    def update(self, s):
        F = self.field
        i = len(self.seq)
        self.seq.append(s)
        d = s
        for j in range(1, self.L + 1):
            if j < len(self.C):
                d = F.add(d, F.mul(self.C[j], self.seq[i - j]))
        if d == F.zero:
            self.m += 1
            self.stable += 1
            return
        coef = F.mul(d, F.invert(self.b))
        shifted = [F.zero] * self.m + [F.mul(coef, x) for x in self.B]
        newC = list(self.C) + [F.zero] * max(0, len(shifted) - len(self.C))
        for t, x in enumerate(shifted):
            newC[t] = F.sub(newC[t], x)
        if 2 * self.L <= i:
            self.B = list(self.C)
            self.b = d
            self.L = i + 1 - self.L
            self.m = 1
            self.stable = 0
        else:
            self.m += 1
            self.stable += 1
        self.C = newC

    def annihilator(self) -> tuple:
        """Monic minimal recurrence of the prefix seen so far, lowest first."""
        F = self.field
        C = list(self.C) + [F.zero] * (self.L + 1 - len(self.C))
        return tuple(C[self.L - k] for k in range(self.L + 1))

    def update_limbs(self, limbs):
        self.update(self.field.from_limbs(tuple(int(x) for x in limbs)))

    @property
    def count(self):
        return len(self.seq)


class _BMArrayState:
    """Berlekamp-Massey on canonical limb rows, vectorized.

    Same recurrence as _BMState but coefficients live in (len, m) int64
    arrays: addition is limbwise mod p, products go through the field's
    discrete-log tables (or plain modular products over a prime field).
    Only built for fields _bm_state_for approves.
    """

    def __init__(self, field):
        self.field = field
        self.p = field.p
        self.m = getattr(field, "m", 1)
        if self.m > 1:
            self.log, self.alog, self.order = field._log
        else:
            self.log = None
        self.enc_pows = self.p ** np.arange(self.m, dtype=np.int64)
        self.seq = np.zeros((64, self.m), dtype=np.int64)
        self.count = 0
        self.C = np.zeros((1, self.m), dtype=np.int64)
        self.C[0, 0] = 1
        self.B = self.C.copy()
        self.L = 0
        self.shift = 1
        self.b = self.C[0].copy()
        self.stable = 0

    def _mul_rows(self, rows, scalar):
        if self.m == 1:
            return rows * (int(scalar[0]) % self.p) % self.p
        out = np.zeros_like(rows)
        es = int(scalar @ self.enc_pows)
        if es == 0:
            return out
        ea = rows @ self.enc_pows
        nz = ea > 0
        if nz.any():
            ls = int(self.log[es])
            out[nz] = self.alog[(self.log[ea[nz]] + ls) % self.order]
        return out

    def update_limbs(self, s):
        i = self.count
        if i == len(self.seq):
            grown = np.zeros((2 * i, self.m), dtype=np.int64)
            grown[:i] = self.seq
            self.seq = grown
        s = np.asarray(s, dtype=np.int64) % self.p
        self.seq[i] = s
        self.count = i + 1
        d = s.copy()
        k = min(self.L, len(self.C) - 1)
        if k > 0:
            Cs = self.C[1:k + 1]
            Ss = self.seq[i - k:i][::-1]
            if self.m == 1:
                prods = Cs * Ss % self.p
            else:
                ea = Cs @ self.enc_pows
                eb = Ss @ self.enc_pows
                nz = (ea > 0) & (eb > 0)
                prods = np.zeros((k, self.m), dtype=np.int64)
                if nz.any():
                    prods[nz] = self.alog[
                        (self.log[ea[nz]] + self.log[eb[nz]]) % self.order]
            d = (d + prods.sum(axis=0)) % self.p
        if not d.any():
            self.shift += 1
            self.stable += 1
            return
        if self.m == 1:
            coef = np.array(
                [d[0] * pow(int(self.b[0]), -1, self.p) % self.p],
                dtype=np.int64)
        else:
            ed = int(d @ self.enc_pows)
            eb = int(self.b @ self.enc_pows)
            le = (int(self.log[ed]) - int(self.log[eb])) % self.order
            coef = self.alog[le].astype(np.int64)
        shifted = self._mul_rows(self.B, coef)
        new_len = max(len(self.C), self.shift + len(shifted))
        newC = np.zeros((new_len, self.m), dtype=np.int64)
        newC[:len(self.C)] = self.C
        newC[self.shift:self.shift + len(shifted)] -= shifted
        newC %= self.p
        if 2 * self.L <= i:
            self.B = self.C.copy()
            self.b = d.copy()
            self.L = i + 1 - self.L
            self.shift = 1
            self.stable = 0
        else:
            self.shift += 1
            self.stable += 1
        self.C = newC

    def annihilator(self) -> tuple:
        F = self.field
        C = np.zeros((self.L + 1, self.m), dtype=np.int64)
        take = min(len(self.C), self.L + 1)
        C[:take] = self.C[:take]
        elems = [F.from_limbs(tuple(int(x) for x in row)) for row in C]
        return tuple(elems[self.L - j] for j in range(self.L + 1))


def _bm_state_for(field):
    """Vectorized BM when the field supports it, scalar state otherwise."""
    if isinstance(field, PrimeField):
        return _BMArrayState(field)
    if isinstance(field, ExtField) and field._log is not None:
        return _BMArrayState(field)
    return _BMState(field)


def berlekamp_massey(seq, field) -> tuple:
    """Minimal-degree monic linear recurrence annihilating the sequence.

    Coefficients are returned lowest degree first; the all-zero sequence
    yields the constant polynomial 1.
    """
    bm = _BMState(field)
    for s in seq:
        bm.update(s)
    return bm.annihilator()


# ---------------------------------------------------------------------------
# Krylov projections and minimal polynomials
# ---------------------------------------------------------------------------

_STABLE_TERMS = 16


def _krylov_minpolys(op: BlackBoxOperator, rng, pairs: int) -> list:
    """Annihilators of u^T op^i v for ``pairs`` random (u, v) pairs.

    Chains are generated incrementally and stop early once every recurrence
    has survived 16 consecutive terms unchanged, with a hard cap of 2n terms
    per pair.
    """
    field = op.ring
    n = op.rows
    cap = 2 * n
    eng = op.engine if op.has_bulk else None
    if eng is not None:
        bms = [_bm_state_for(field) for _ in range(pairs)]
        U = [eng.random_array(n, rng) for _ in range(pairs)]
        W = np.stack([eng.random_array(n, rng) for _ in range(pairs)], axis=2)
        for i in range(cap):
            for t in range(pairs):
                limbs = eng.dot(U[t], W[:, :, t:t + 1])[:, 0]
                bms[t].update_limbs(limbs)
            if all(bm.stable >= _STABLE_TERMS and bm.count >= 2 * bm.L + 2
                   for bm in bms):
                break
            if i < cap - 1:
                W = op.apply_bulk(W)
    else:
        bms = [_BMState(field) for _ in range(pairs)]
        us = [[field.random(rng) for _ in range(n)] for _ in range(pairs)]
        ws = [[field.random(rng) for _ in range(n)] for _ in range(pairs)]
        for i in range(cap):
            for t in range(pairs):
                acc = field.zero
                for a, x in zip(us[t], ws[t]):
                    acc = field.add(acc, field.mul(a, x))
                bms[t].update(acc)
            if all(bm.stable >= _STABLE_TERMS and len(bm.seq) >= 2 * bm.L + 2
                   for bm in bms):
                break
            if i < cap - 1:
                ws = [op.apply(w) for w in ws]
    return [bm.annihilator() for bm in bms]


def _poly_lcm(a, b, field) -> tuple:
    g = gpoly_gcd(a, b, field)
    q, r = gpoly_divmod(gpoly_mul(a, b, field), g, field)
    assert not r
    # normalize monic
    if q and q[-1] != field.one:
        inv = field.invert(q[-1])
        q = tuple(field.mul(inv, c) for c in q)
    return q


def minpoly_blackbox(A: BlackBoxOperator, rng, pairs: int | None = None) -> tuple:
    """Probable minimal polynomial of a square operator over a field.

    Berlekamp-Massey on the projected Krylov sequences of ``pairs`` random
    (u, v) pairs, combined by lcm.  Lowest degree first, monic.  May
    undershoot (divides the true minimal polynomial); callers repeat.  By
    default one pair over a field with at least 64n elements (undershoot
    odds are then below 2 percent), two pairs otherwise.
    """
    if A.rows != A.cols:
        raise ValueError("minpoly needs a square operator")
    field = A.ring
    if pairs is None:
        pairs = 1 if field.size >= 64 * A.rows else 2
    anns = _krylov_minpolys(A, rng, pairs)
    out = anns[0]
    for other in anns[1:]:
        out = _poly_lcm(out, other, field)
    return out


# ---------------------------------------------------------------------------
# preconditioners
# ---------------------------------------------------------------------------


def _unit_triangular_toeplitz(n: int, ring, coeffs, upper: bool) -> BlackBoxOperator:
    """Unit triangular Toeplitz operator from stripe values t_1..t_{n-1}.

    Lower: entry (i, j) = t_{i-j} for i > j, ones on the diagonal; upper is
    the transpose layout.
    """
    t = [ring.one] + list(coeffs)
    eng = engine_for(ring)

    def lower_scalar(v):
        out = []
        for i in range(n):
            acc = v[i]
            for k in range(1, i + 1):
                acc = ring.add(acc, ring.mul(t[k], v[i - k]))
            out.append(acc)
        return out

    def upper_scalar(v):
        out = []
        for i in range(n):
            acc = v[i]
            for k in range(1, n - i):
                acc = ring.add(acc, ring.mul(t[k], v[i + k]))
            out.append(acc)
        return out

    lower_bulk = upper_bulk = None
    if eng is not None:
        K = eng.to_array(t)
        conv = KernelConv(eng, K, n)

        def lower_bulk(V):
            return conv(V)[:n]

        def upper_bulk(V):
            return conv(V[::-1])[:n][::-1]

    if upper:
        op = BlackBoxOperator(n, n, ring, upper_scalar, lower_scalar,
                              upper_bulk, lower_bulk)
    else:
        op = BlackBoxOperator(n, n, ring, lower_scalar, upper_scalar,
                              lower_bulk, upper_bulk)
    return op


def preconditioned(A: BlackBoxOperator, rng, sandwich: bool):
    """W = D1 * A * D2, optionally with unit triangular Toeplitz factors.

    Returns (W, right) where right is the composed right factor, so kernel
    vectors of A are recovered as right(g(W) b).
    """
    ring = A.ring
    n = A.rows
    d1 = [ring.random_unit(rng) for _ in range(n)]
    d2 = [ring.random_unit(rng) for _ in range(A.cols)]
    D1 = diagonal_operator(d1, ring)
    D2 = diagonal_operator(d2, ring)
    if not sandwich:
        return compose(D1, A, D2), D2
    tu = [ring.random(rng) for _ in range(n - 1)]
    tl = [ring.random(rng) for _ in range(A.cols - 1)]
    U = _unit_triangular_toeplitz(n, ring, tu, upper=True)
    L = _unit_triangular_toeplitz(A.cols, ring, tl, upper=False)
    right = compose(L, D2)
    return compose(D1, U, A, right), right


# ---------------------------------------------------------------------------
# field extension lifting
# ---------------------------------------------------------------------------


def _extension_for(field, threshold: int):
    """Smallest extension of ``field`` with at least ``threshold`` elements."""
    if isinstance(field, PrimeField):
        M = 1
        while field.p ** M < threshold:
            M += 1
        return (ExtField(field.p, M), M) if M > 1 else (field, 1)
    if isinstance(field, ExtField):
        m0 = field.m
        M = m0
        while field.p ** M < threshold:
            M += m0
        if M == m0:
            return field, 1
        return ExtField(field.p, M), M // m0
    raise TypeError(f"rank lifting needs a prime or extension field, got {field!r}")


def _modp_matrix_inverse(M: np.ndarray, p: int) -> np.ndarray | None:
    """Inverse of a square matrix over Z_p, or None if singular."""
    n = M.shape[0]
    A = M.copy() % p
    I = np.eye(n, dtype=np.int64)
    for c in range(n):
        piv = None
        for r in range(c, n):
            if A[r, c] % p:
                piv = r
                break
        if piv is None:
            return None
        A[[c, piv]] = A[[piv, c]]
        I[[c, piv]] = I[[piv, c]]
        inv = pow(int(A[c, c]), p - 2, p)
        A[c] = A[c] * inv % p
        I[c] = I[c] * inv % p
        for r in range(n):
            if r != c and A[r, c]:
                f = A[r, c]
                A[r] = (A[r] - f * A[c]) % p
                I[r] = (I[r] - f * I[c]) % p
    return I


def _subfield_basis(small: ExtField, big: ExtField, rng) -> tuple:
    """Change of basis between big-field coordinates and small-field blocks.

    Returns (T, Tinv, embed) with T mapping stacked coordinates (c_{k,t}) of
    an element sum_{k,t} c_{k,t} b_k R^t to its plain coefficient vector,
    where R is an embedded root of the small modulus and b_k are block
    generators; embed is the field embedding small -> big through R.
    """
    M, m0 = big.m, small.m
    lifted = [(c % big.p,) + (0,) * (M - 1) for c in small.modulus]
    R = gpoly_root(lifted, big, big.size, big.p, rng)
    Rpow = [big.one]
    for _ in range(m0 - 1):
        Rpow.append(big.mul(Rpow[-1], R))
    blocks = M // m0

    def embed(a):
        out = big.zero
        for t, c in enumerate(a):
            out = big.add(out, big.mul((c % big.p,) + (0,) * (M - 1), Rpow[t]))
        return out

    def build(gens):
        cols = [big.mul(gens[k], Rpow[t])
                for k in range(blocks) for t in range(m0)]
        T = np.array([list(c) for c in cols], dtype=np.int64).T % big.p
        return T, _modp_matrix_inverse(T, big.p)

    y = (0, 1) + (0,) * (M - 2)
    gens = [big.one]
    for _ in range(blocks - 1):
        gens.append(big.mul(gens[-1], y))
    T, Tinv = build(gens)
    if Tinv is not None:
        return T, Tinv, embed
    for _ in range(40):
        # the power basis failed; random block generators almost surely work
        gens = [tuple(int(x) for x in rng.integers(big.p, size=M))
                for _ in range(blocks)]
        T, Tinv = build(gens)
        if Tinv is not None:
            return T, Tinv, embed
    raise AssertionError("could not build a subfield basis")


def lift_field_operator(A: BlackBoxOperator, big, rng) -> BlackBoxOperator:
    """View an operator over a subfield as one over the extension ``big``.

    The extension decomposes into blocks over the operating field; one lifted
    apply performs one batched apply of A, and A's matvec counter advances by
    the logical column count only.
    """
    small = A.ring
    if small == big:
        return A
    eng_big = engine_for(big)
    M = big.m
    if isinstance(small, PrimeField):
        m0, T, Tinv = 1, None, None
        embed = lambda a: (a % big.p,) + (0,) * (M - 1)
    else:
        m0 = small.m
        T, Tinv, embed = _subfield_basis(small, big, rng)
    blocks = M // m0

    def reshuffle(V, mat):
        if mat is None:
            return V % big.p
        return np.einsum("MK,nKb->nMb", mat, V) % big.p

    def mk(inner_bulk, n_io):
        def bulk(V: np.ndarray) -> np.ndarray:
            n, _, b = V.shape
            C = reshuffle(V, Tinv).reshape(n, blocks, m0, b)
            C = np.ascontiguousarray(C.transpose(0, 2, 1, 3)).reshape(n, m0, blocks * b)
            A.counter.add(b)
            out = inner_bulk(C)
            out = out.reshape(n_io, m0, blocks, b).transpose(0, 2, 1, 3)
            out = np.ascontiguousarray(out).reshape(n_io, M, b)
            return reshuffle(out, T)
        return bulk

    if A.has_bulk:
        fwd = mk(A._apply_bulk, A.rows)
        bwd = mk(A._rmat_bulk, A.cols)
    else:
        eng_small = engine_for(small)
        if eng_small is None:
            raise TypeError("cannot lift an operator without limb support")
        fwd = mk(lambda C: _scalar_bulk(A._apply_scalar, eng_small, C, A.rows),
                 A.rows)
        bwd = mk(lambda C: _scalar_bulk(A._rmat_scalar, eng_small, C, A.cols),
                 A.cols)

    def scalar_from_bulk(bulk_fn):
        def fn(v):
            arr = eng_big.to_array(v)[:, :, None]
            return eng_big.from_array(bulk_fn(arr)[:, :, 0])
        return fn

    op = BlackBoxOperator(A.rows, A.cols, big,
                          scalar_from_bulk(fwd), scalar_from_bulk(bwd),
                          fwd, bwd)
    op.source = A
    op.embed_element = embed
    return op


def _scalar_bulk(scalar_fn, eng, C, n_out):
    out = eng.zeros(n_out, C.shape[2])
    for t in range(C.shape[2]):
        out[:, :, t] = eng.to_array(scalar_fn(eng.from_array(C[:, :, t])))
    return out


# ---------------------------------------------------------------------------
# rank
# ---------------------------------------------------------------------------


def _square_pad(A: BlackBoxOperator) -> BlackBoxOperator:
    """[[0, A], [A^T, 0]]: symmetric square form with rank 2*rank(A)."""
    m, n = A.rows, A.cols
    ring = A.ring
    N = m + n

    def apply_scalar(v):
        top = A.apply(v[m:])
        bot = A.rmatvec(v[:m])
        return top + bot

    op = BlackBoxOperator(N, N, ring, apply_scalar, apply_scalar)
    if A.has_bulk:
        def bulk(V):
            top = A.apply_bulk(V[m:])
            bot = A.rmatvec_bulk(V[:m])
            return np.concatenate([top, bot], axis=0)
        op._apply_bulk = bulk
        op._rmat_bulk = bulk
    return op


def rank_blackbox(A: BlackBoxOperator, xi: int = 100, rng=None,
                  trials: int = 3) -> RankResult:
    """Probabilistic rank of an operator over a field.

    Each trial preconditions the operator, takes the minimal polynomial of
    the result, and reads the rank off its degree; the maximum over trials
    is returned.  Fields smaller than 8*max(rows, cols)*xi are replaced by
    an extension field large enough to clear that bound.
    """
    if rng is None:
        rng = np.random.default_rng()
    field = A.ring
    if field.e != 1:
        raise TypeError("rank_blackbox operates over a field")
    N = max(A.rows, A.cols)
    threshold = 8 * N * xi
    big, ext_degree = _extension_for(field, threshold) if field.size < threshold \
        else (field, 1)
    op = A if ext_degree == 1 else lift_field_operator(A, big, rng)
    halved = op.rows != op.cols
    if halved:
        op = _square_pad(op)
    best = 0
    for t in range(trials):
        W, _ = preconditioned(op, rng, sandwich=(t % 2 == 1))
        m = minpoly_blackbox(W, rng)
        deg = len(m) - 1
        est = deg - 1 if (deg >= 1 and m[0] == op.ring.zero) else deg
        best = max(best, est)
    if halved:
        best //= 2
    rank = min(best, min(A.rows, A.cols))
    return RankResult(rank=rank, confidence=1.0 / xi, trials=trials,
                      ext_degree=ext_degree)


# ---------------------------------------------------------------------------
# nullspace sampling
# ---------------------------------------------------------------------------


def _column_echelon(field, cols: list) -> list:
    """Independent columns in echelon form (scalar path, small inputs)."""
    kept = []
    pivots = []
    for col in cols:
        col = list(col)
        for (prow, pcol) in zip(pivots, kept):
            c = col[prow]
            if c != field.zero:
                col = [field.sub(x, field.mul(c, y)) for x, y in zip(col, pcol)]
        prow = next((i for i, x in enumerate(col) if x != field.zero), None)
        if prow is None:
            continue
        inv = field.invert(col[prow])
        col = [field.mul(inv, x) for x in col]
        kept.append(col)
        pivots.append(prow)
    return kept


def _track(tracker, tag, amount):
    if tracker is not None:
        tracker.track(tag, amount)


def _untrack(tracker, tag):
    if tracker is not None:
        tracker.release(tag)


def nullspace_sample(A: BlackBoxOperator, k: int, rng,
                     oversample: int = 4, tracker=None) -> list:
    """k exact kernel vectors of a square operator over a field.

    Samples g(W) b for the kernel-shifted minimal polynomial m = x*g of a
    preconditioned W, verifies A v = 0 exactly for every candidate, and
    echelon-reduces to k independent columns.  Raises InsufficientNullity
    when the retry budget cannot produce k independent verified vectors.

    tracker, if given, receives track(tag, n_elements)/release(tag) calls
    around every matrix-sized allocation; the working set stays within
    2*(k + oversample)*n ring elements because the Krylov right-hand
    sides are dropped before kernel candidates are materialized.
    """
    if A.rows != A.cols:
        raise ValueError("nullspace sampling needs a square operator")
    field = A.ring
    if field.e != 1:
        raise TypeError("nullspace_sample operates over a field")
    if k == 0:
        return []
    n = A.rows
    eng = A.engine if A.has_bulk else None
    independent: list = []
    for attempt in range(3):
        W, right = preconditioned(A, rng, sandwich=(attempt % 2 == 1))
        m = minpoly_blackbox(W, rng)
        if len(m) < 2 or m[0] != field.zero:
            continue  # undershoot: the sampled minimal polynomial missed x
        g = m[1:]
        cand = k + oversample - len(independent)
        if eng is not None:
            _track(tracker, "krylov-rhs", n * cand)
            B = np.stack([eng.random_array(n, rng) for _ in range(cand)], axis=2)
            G = eng.to_array(list(g))
            _track(tracker, "horner-acc", n * cand)
            acc = eng.ew_mul(G[len(g) - 1:len(g)], B)
            for i in range(len(g) - 2, -1, -1):
                acc = eng.add(W.apply_bulk(acc), eng.ew_mul(G[i:i + 1], B))
            del B
            _untrack(tracker, "krylov-rhs")
            _track(tracker, "kernel-cand", n * cand)
            V = right.apply_bulk(acc)
            del acc
            _untrack(tracker, "horner-acc")
            _track(tracker, "kernel-image", n * cand)
            image = A.apply_bulk(V)
            good = [t for t in range(cand) if not image[:, :, t].any()]
            del image
            _untrack(tracker, "kernel-image")
            for t in good:
                independent.append(eng.from_array(V[:, :, t]))
            del V
            _untrack(tracker, "kernel-cand")
        else:
            for _ in range(cand):
                b = [field.random(rng) for _ in range(n)]
                acc = [field.mul(g[-1], x) for x in b]
                for i in range(len(g) - 2, -1, -1):
                    acc = [field.add(x, field.mul(g[i], y))
                           for x, y in zip(W.apply(acc), b)]
                v = right.apply(acc)
                if all(x == field.zero for x in A.apply(v)):
                    independent.append(v)
        independent = _column_echelon(field, independent)
        _untrack(tracker, "kernel-kept")
        _track(tracker, "kernel-kept", n * len(independent))
        if len(independent) >= k:
            _untrack(tracker, "kernel-kept")
            return independent[:k]
    _untrack(tracker, "kernel-kept")
    raise InsufficientNullity(
        f"found {len(independent)} independent kernel vectors, wanted {k}")
