"""Sparse matrices as black-box operators, and the operator algebra.

A TripletMatrix is the storage form (1-based coordinate triplets, duplicates
summed).  A BlackBoxOperator is anything that can multiply a vector and its
transpose by a vector, with a monotone matvec counter.  On rings with a limb
engine every operator also exposes a bulk path working on int64 limb arrays
of shape (length, w, batch); algorithms use it when present and fall back to
scalar ring arithmetic otherwise, with identical results.

The algebra: companion embedding of quotient-ring operators down to the base
field, scaled Toeplitz operators applied by polynomial multiplication,
diagonal scalings, composition, truncation to leading coordinates, and
2x2 block bordering.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy import sparse as _sparse

from .rings import PolyQuotRing, RingMismatch
from .vecops import KernelConv, engine_for

_INT64_SAFE = 2 ** 62


class MatvecCounter:
    """Monotone apply counter.  Plain int updates; safe under the GIL."""

    __slots__ = ("count",)

    def __init__(self):
        self.count = 0

    def add(self, k: int = 1):
        self.count += k


class TripletMatrix:
    """Sparse matrix as 1-based (i, j, value) triplets over a ring.

    Normalization sums duplicate coordinates and drops exact zeros, so the
    stored entry list is canonical.
    """

    def __init__(self, rows: int, cols: int, ring, entries):
        if rows < 1 or cols < 1:
            raise ValueError("dimensions must be positive")
        acc = {}
        for (i, j, v) in entries:
            if not (1 <= i <= rows and 1 <= j <= cols):
                raise IndexError(f"entry ({i},{j}) outside {rows}x{cols}")
            key = (i, j)
            acc[key] = ring.add(acc[key], v) if key in acc else v
        self.rows = rows
        self.cols = cols
        self.ring = ring
        self.entries = [(i, j, v) for (i, j), v in sorted(acc.items())
                        if v != ring.zero]

    @property
    def nnz(self) -> int:
        return len(self.entries)

    def transpose(self) -> "TripletMatrix":
        return TripletMatrix(self.cols, self.rows, self.ring,
                             [(j, i, v) for (i, j, v) in self.entries])

    def to_dense(self) -> list:
        """Row-major nested lists; intended for small test matrices."""
        M = [[self.ring.zero] * self.cols for _ in range(self.rows)]
        for (i, j, v) in self.entries:
            M[i - 1][j - 1] = v
        return M

    def map_ring(self, target, fn) -> "TripletMatrix":
        """New matrix over ``target`` with every value passed through fn."""
        return TripletMatrix(self.rows, self.cols, target,
                             [(i, j, fn(v)) for (i, j, v) in self.entries])


class BlackBoxOperator:
    """Linear map given by apply/transpose-apply procedures.

    apply takes and returns lists of ring elements.  When the ring has a
    limb engine, apply_bulk/rmatvec_bulk work on (length, w, batch) int64
    arrays and are what the solvers drive.  The counter increments by the
    batch width on every application, transposed or not.
    """

    def __init__(self, rows, cols, ring, apply_scalar, rmat_scalar,
                 apply_bulk=None, rmat_bulk=None, counter=None):
        self.rows = rows
        self.cols = cols
        self.ring = ring
        self.engine = engine_for(ring)
        self._apply_scalar = apply_scalar
        self._rmat_scalar = rmat_scalar
        self._apply_bulk = apply_bulk
        self._rmat_bulk = rmat_bulk
        self.counter = counter if counter is not None else MatvecCounter()

    @property
    def has_bulk(self) -> bool:
        return self._apply_bulk is not None

    def apply(self, v: Sequence) -> list:
        if len(v) != self.cols:
            raise ValueError(f"expected length {self.cols}, got {len(v)}")
        self.counter.add(1)
        if self._apply_bulk is not None:
            arr = self.engine.to_array(list(v))
            return self.engine.from_array(self._apply_bulk(arr[:, :, None])[:, :, 0])
        return self._apply_scalar(list(v))

    def rmatvec(self, v: Sequence) -> list:
        if len(v) != self.rows:
            raise ValueError(f"expected length {self.rows}, got {len(v)}")
        self.counter.add(1)
        if self._rmat_bulk is not None:
            arr = self.engine.to_array(list(v))
            return self.engine.from_array(self._rmat_bulk(arr[:, :, None])[:, :, 0])
        return self._rmat_scalar(list(v))

    def apply_bulk(self, V: np.ndarray) -> np.ndarray:
        """V: (cols, w, b) -> (rows, w, b); counts b applications."""
        self.counter.add(V.shape[2])
        if self._apply_bulk is not None:
            return self._apply_bulk(V)
        return self._scalar_columns(V, self._apply_scalar, self.rows)

    def rmatvec_bulk(self, V: np.ndarray) -> np.ndarray:
        self.counter.add(V.shape[2])
        if self._rmat_bulk is not None:
            return self._rmat_bulk(V)
        return self._scalar_columns(V, self._rmat_scalar, self.cols)

    def _scalar_columns(self, V, fn, out_len):
        eng = self.engine
        out = eng.zeros(out_len, V.shape[2])
        for t in range(V.shape[2]):
            out[:, :, t] = eng.to_array(fn(eng.from_array(V[:, :, t])))
        return out


# ---------------------------------------------------------------------------
# sparse triplets -> operator
# ---------------------------------------------------------------------------


def _triplet_bulk(eng, rows, idx_out, idx_in, E, csr_per_limb, dense_per_limb):
    q = eng.q
    w = eng.w

    def bulk(V: np.ndarray) -> np.ndarray:
        b = V.shape[2]
        if dense_per_limb is not None:
            V2 = np.ascontiguousarray(V).reshape(V.shape[0], w * b)
            raw = np.zeros((rows, 2 * w - 1, b), dtype=np.int64)
            for a in range(w):
                prod = dense_per_limb[a] @ V2.astype(np.float64)
                raw[:, a:a + w, :] += prod.astype(np.int64).reshape(rows, w, b)
            raw %= q
        elif csr_per_limb is not None:
            V2 = np.ascontiguousarray(V).reshape(V.shape[0], w * b)
            raw = np.zeros((rows, 2 * w - 1, b), dtype=np.int64)
            for a in range(w):
                prod = csr_per_limb[a] @ V2
                raw[:, a:a + w, :] += prod.reshape(rows, w, b)
            raw %= q
        else:
            prod = eng.ew_mul(E, V[idx_in])
            raw = np.zeros((rows, prod.shape[1], b), dtype=np.int64)
            np.add.at(raw, idx_out, prod)
            raw %= q
        return eng.reduce_conv(raw) if raw.shape[1] != w else raw

    return bulk


def from_triplets(M: TripletMatrix, counter: MatvecCounter | None = None) -> BlackBoxOperator:
    """Black-box view of a triplet matrix: matvec in O(nnz) ring operations."""
    ring = M.ring
    eng = engine_for(ring)

    by_row: dict = {}
    by_col: dict = {}
    for (i, j, v) in M.entries:
        by_row.setdefault(i - 1, []).append((j - 1, v))
        by_col.setdefault(j - 1, []).append((i - 1, v))

    def apply_scalar(v):
        out = [ring.zero] * M.rows
        for i, terms in by_row.items():
            acc = ring.zero
            for j, val in terms:
                acc = ring.add(acc, ring.mul(val, v[j]))
            out[i] = acc
        return out

    def rmat_scalar(v):
        out = [ring.zero] * M.cols
        for j, terms in by_col.items():
            acc = ring.zero
            for i, val in terms:
                acc = ring.add(acc, ring.mul(val, v[i]))
            out[j] = acc
        return out

    apply_bulk = rmat_bulk = None
    if eng is not None and M.nnz:
        idx_r = np.array([i - 1 for (i, j, v) in M.entries], dtype=np.intp)
        idx_c = np.array([j - 1 for (i, j, v) in M.entries], dtype=np.intp)
        E = eng.to_array([v for (i, j, v) in M.entries])
        max_fan = max(max((len(t) for t in by_row.values()), default=1),
                      max((len(t) for t in by_col.values()), default=1))
        # the raw accumulator sums up to w shifted limb products per slot
        csr_ok = (eng.q - 1) ** 2 * max_fan * eng.w < _INT64_SAFE
        fwd = bwd = None
        if csr_ok:
            fwd = [_sparse.csr_matrix((E[:, a], (idx_r, idx_c)),
                                      shape=(M.rows, M.cols), dtype=np.int64)
                   for a in range(eng.w)]
            bwd = [mat.T.tocsr() for mat in fwd]
        # dense matrices of modest size go through BLAS instead: float64
        # matmuls are exact while row sums stay below 2^53 and run far
        # faster than sparse integer kernels
        fwd_d = bwd_d = None
        cells = M.rows * M.cols
        if (fwd is not None and cells <= (1 << 18) and 4 * M.nnz >= cells
                and (eng.q - 1) ** 2 * max_fan * eng.w < 2 ** 53):
            fwd_d = [np.asarray(mat.todense(), dtype=np.float64) for mat in fwd]
            bwd_d = [np.asarray(mat.todense(), dtype=np.float64) for mat in bwd]
        apply_bulk = _triplet_bulk(eng, M.rows, idx_r, idx_c, E, fwd, fwd_d)
        rmat_bulk = _triplet_bulk(eng, M.cols, idx_c, idx_r, E, bwd, bwd_d)
    elif eng is not None:
        apply_bulk = lambda V: eng.zeros(M.rows, V.shape[2])
        rmat_bulk = lambda V: eng.zeros(M.cols, V.shape[2])

    op = BlackBoxOperator(M.rows, M.cols, ring, apply_scalar, rmat_scalar,
                          apply_bulk, rmat_bulk, counter)
    op.triplets = M
    return op


def identity_operator(n: int, ring, counter=None) -> BlackBoxOperator:
    eng = engine_for(ring)
    bulk = (lambda V: V % eng.q) if eng is not None else None
    return BlackBoxOperator(n, n, ring, lambda v: list(v), lambda v: list(v),
                            bulk, bulk, counter)


def diagonal_operator(values: Sequence, ring, counter=None) -> BlackBoxOperator:
    """diag(values); transpose-apply is identical."""
    n = len(values)
    eng = engine_for(ring)

    def scalar(v):
        return [ring.mul(d, x) for d, x in zip(values, v)]

    bulk = None
    if eng is not None:
        D = eng.to_array(list(values))
        bulk = lambda V: eng.ew_mul(D, V)
    return BlackBoxOperator(n, n, ring, scalar, scalar, bulk, bulk, counter)


# ---------------------------------------------------------------------------
# companion embedding: quotient-ring operator -> base-field operator
# ---------------------------------------------------------------------------


def embed_phi(op: BlackBoxOperator, ell: int) -> BlackBoxOperator:
    """View an operator over F[z]/(f^e) as one over F, reduced mod f^ell.

    Each ring coordinate becomes a block of d*ell base-field coordinates
    (polynomial coefficients, lowest degree first).  Applying the embedding
    applies the source operator once with its arithmetic truncated mod
    f^ell, so the source matvec counter advances once per embedded apply.
    The embedding shares the source counter outright: callers that charge
    the embedding (composition, scalar-extension wrappers) charge the
    source by the same logical column count, and limb fan-out inside a
    field extension is never billed as extra applies.
    """
    ring = op.ring
    if not isinstance(ring, PolyQuotRing):
        raise RingMismatch("embed_phi needs an operator over a quotient ring")
    if not (1 <= ell <= ring.ell):
        raise ValueError(f"ell must lie in [1, {ring.ell}]")
    ring_l = ring.with_exponent(ell)
    F = ring.field
    dl = ring_l.deg
    wF = F.width

    # the cheap route: project the stored entries once, then run the sparse
    # matvec natively over the smaller quotient ring
    if hasattr(op, "triplets"):
        inner_m = op.triplets.map_ring(ring_l, lambda v: ring.project(v, ring_l))
        inner = from_triplets(inner_m)
        shared_counter = op.counter
    else:
        # opaque source: the view below goes through op's public interface,
        # which already advances op.counter per projected apply
        inner = _projected_view(op, ring_l)
        shared_counter = None

    rows, cols = dl * op.rows, dl * op.cols
    eng_F = engine_for(F)

    def gather(v, length):
        out = []
        for blk in range(length):
            limbs = []
            for c in v[blk * dl:(blk + 1) * dl]:
                limbs.extend(F.to_limbs(c))
            out.append(ring_l.from_limbs(tuple(limbs)))
        return out

    def scatter(u):
        out = []
        for elem in u:
            flat = ring_l.to_limbs(elem)
            for t in range(dl):
                out.append(F.from_limbs(flat[t * wF:(t + 1) * wF]))
        return out

    def apply_scalar(v):
        return scatter(inner.apply(gather(v, op.cols)))

    def rmat_scalar(v):
        return scatter(inner.rmatvec(gather(v, op.rows)))

    apply_bulk = rmat_bulk = None
    if (eng_F is not None and inner._apply_bulk is not None
            and inner._rmat_bulk is not None):
        def mk(bulk_fn, n_in, n_out):
            def bulk(V: np.ndarray) -> np.ndarray:
                b = V.shape[2]
                inner_v = np.ascontiguousarray(V).reshape(n_in, dl * wF, b)
                out = bulk_fn(inner_v)
                return np.ascontiguousarray(out).reshape(n_out * dl, wF, b)
            return bulk
        apply_bulk = mk(inner._apply_bulk, op.cols, op.rows)
        rmat_bulk = mk(inner._rmat_bulk, op.rows, op.cols)

    emb = BlackBoxOperator(rows, cols, F, apply_scalar, rmat_scalar,
                           apply_bulk, rmat_bulk, counter=shared_counter)
    emb.source = op
    emb.quotient_ring = ring_l
    return emb


def _projected_view(op: BlackBoxOperator, ring_l: PolyQuotRing) -> BlackBoxOperator:
    """Opaque operators: pad inputs up to the source ring, project outputs."""
    ring = op.ring
    pad = (0,) * (ring.width - ring_l.width)

    def lift(v):
        return [ring.from_limbs(ring_l.to_limbs(x) + pad) for x in v]

    def drop(u):
        return [ring.project(x, ring_l) for x in u]

    return BlackBoxOperator(op.rows, op.cols, ring_l,
                            lambda v: drop(op.apply(lift(v))),
                            lambda v: drop(op.rmatvec(lift(v))),
                            counter=op.counter)


# ---------------------------------------------------------------------------
# scaled Toeplitz operators
# ---------------------------------------------------------------------------


class ToeplitzSpec:
    """Scaled Toeplitz matrix B = D1 * T * D2 in compact form.

    diag_values lists y_1 .. y_(2n-1), where y_n sits on the main diagonal,
    y_1 in the top-right corner and y_(2n-1) in the bottom-left; left_scale
    and right_scale are the diagonals of D1 and D2.
    """

    def __init__(self, n: int, diag_values: Sequence, left_scale: Sequence,
                 right_scale: Sequence, ring):
        if len(diag_values) != 2 * n - 1:
            raise ValueError("need exactly 2n-1 diagonal values")
        if len(left_scale) != n or len(right_scale) != n:
            raise ValueError("scales must have length n")
        self.n = n
        self.ring = ring
        self.y = list(diag_values)
        self.left = list(left_scale)
        self.right = list(right_scale)

    def entry(self, i: int, j: int):
        """B[i, j] with 1-based indices (for oracles and dense checks)."""
        r = self.ring
        return r.mul(self.left[i - 1],
                     r.mul(self.y[self.n + i - j - 1], self.right[j - 1]))


def toeplitz_apply(spec: ToeplitzSpec, v: Sequence) -> list:
    """One polynomial product, middle coefficients, and the two scalings."""
    r = spec.ring
    n = spec.n
    if len(v) != n:
        raise ValueError(f"expected length {n}")
    u = [r.mul(w, x) for w, x in zip(spec.right, v)]
    c = [r.zero] * (3 * n - 2)
    for a, ya in enumerate(spec.y):
        if ya == r.zero:
            continue
        for b, ub in enumerate(u):
            c[a + b] = r.add(c[a + b], r.mul(ya, ub))
    mid = c[n - 1:2 * n - 1]
    return [r.mul(s, x) for s, x in zip(spec.left, mid)]


def toeplitz_operator(spec: ToeplitzSpec, counter=None) -> BlackBoxOperator:
    """Black-box form of the spec with a precomputed convolution kernel."""
    ring = spec.ring
    n = spec.n
    eng = engine_for(ring)

    rev = ToeplitzSpec(n, spec.y[::-1], spec.right, spec.left, ring)

    apply_bulk = rmat_bulk = None
    if eng is not None:
        Y = eng.to_array(spec.y)
        L = eng.to_array(spec.left)
        R = eng.to_array(spec.right)
        conv_f = KernelConv(eng, Y, n)
        conv_b = KernelConv(eng, Y[::-1].copy(), n)

        def mk(conv, pre, post):
            def bulk(V: np.ndarray) -> np.ndarray:
                u = eng.ew_mul(pre, V)
                c = conv(u)
                return eng.ew_mul(post, c[n - 1:2 * n - 1])
            return bulk
        apply_bulk = mk(conv_f, R, L)
        rmat_bulk = mk(conv_b, L, R)

    op = BlackBoxOperator(n, n, ring,
                          lambda v: toeplitz_apply(spec, v),
                          lambda v: toeplitz_apply(rev, v),
                          apply_bulk, rmat_bulk, counter)
    op.spec = spec
    return op


# ---------------------------------------------------------------------------
# composition, truncation, bordering
# ---------------------------------------------------------------------------


def compose(*ops: BlackBoxOperator) -> BlackBoxOperator:
    """compose(f, g, h) applies h first, then g, then f."""
    if not ops:
        raise ValueError("compose needs at least one operator")
    ring = ops[0].ring
    for left, right in zip(ops, ops[1:]):
        if left.ring != right.ring:
            raise RingMismatch("composed operators must share a ring")
        if left.cols != right.rows:
            raise ValueError(f"dimension mismatch: {left.cols} vs {right.rows}")

    def apply_scalar(v):
        for op in reversed(ops):
            v = op.apply(v)
        return v

    def rmat_scalar(v):
        for op in ops:
            v = op.rmatvec(v)
        return v

    apply_bulk = rmat_bulk = None
    if all(op.has_bulk for op in ops):
        def apply_bulk(V):
            for op in reversed(ops):
                op.counter.add(V.shape[2])
                V = op._apply_bulk(V)
            return V

        def rmat_bulk(V):
            for op in ops:
                op.counter.add(V.shape[2])
                V = op._rmat_bulk(V)
            return V

    out = BlackBoxOperator(ops[0].rows, ops[-1].cols, ring,
                           apply_scalar, rmat_scalar, None, None)
    # scalar wrappers above already count inner applies; install bulk paths
    # that do their own inner counting
    out._apply_bulk = apply_bulk
    out._rmat_bulk = rmat_bulk
    return out


def truncate(op: BlackBoxOperator, ell: int, rows: int | None = None,
             cols: int | None = None) -> BlackBoxOperator:
    """Leading-coordinate truncation: zero-pad inputs, project outputs."""
    rows = min(op.rows, ell) if rows is None else rows
    cols = min(op.cols, ell) if cols is None else cols
    if rows > op.rows or cols > op.cols:
        raise ValueError("truncation cannot enlarge an operator")
    ring = op.ring
    eng = op.engine

    def apply_scalar(v):
        return op.apply(list(v) + [ring.zero] * (op.cols - cols))[:rows]

    def rmat_scalar(v):
        return op.rmatvec(list(v) + [ring.zero] * (op.rows - rows))[:cols]

    apply_bulk = rmat_bulk = None
    if op.has_bulk:
        def pad(V, n_to):
            if V.shape[0] == n_to:
                return V
            ext = np.zeros((n_to - V.shape[0],) + V.shape[1:], dtype=np.int64)
            return np.concatenate([V, ext], axis=0)

        def apply_bulk(V):
            op.counter.add(V.shape[2])
            return op._apply_bulk(pad(V, op.cols))[:rows]

        def rmat_bulk(V):
            op.counter.add(V.shape[2])
            return op._rmat_bulk(pad(V, op.rows))[:cols]

    out = BlackBoxOperator(rows, cols, ring, apply_scalar, rmat_scalar)
    out._apply_bulk = apply_bulk
    out._rmat_bulk = rmat_bulk
    return out


def border(nw: BlackBoxOperator, ne: BlackBoxOperator,
           sw: BlackBoxOperator, se: BlackBoxOperator) -> BlackBoxOperator:
    """2x2 block operator [[nw, ne], [sw, se]]."""
    if not (nw.rows == ne.rows and sw.rows == se.rows
            and nw.cols == sw.cols and ne.cols == se.cols):
        raise ValueError("block dimensions do not conform")
    ring = nw.ring
    if any(b.ring != ring for b in (ne, sw, se)):
        raise RingMismatch("blocks must share a ring")
    r1, c1 = nw.rows, nw.cols
    rows, cols = r1 + sw.rows, c1 + ne.cols

    def apply_scalar(v):
        top = [ring.add(a, b) for a, b in zip(nw.apply(v[:c1]), ne.apply(v[c1:]))]
        bot = [ring.add(a, b) for a, b in zip(sw.apply(v[:c1]), se.apply(v[c1:]))]
        return top + bot

    def rmat_scalar(v):
        left = [ring.add(a, b) for a, b in zip(nw.rmatvec(v[:r1]), sw.rmatvec(v[r1:]))]
        right = [ring.add(a, b) for a, b in zip(ne.rmatvec(v[:r1]), se.rmatvec(v[r1:]))]
        return left + right

    blocks = (nw, ne, sw, se)
    apply_bulk = rmat_bulk = None
    if all(b.has_bulk for b in blocks):
        eng = nw.engine

        def apply_bulk(V):
            for b in blocks:
                b.counter.add(V.shape[2])
            top = eng.add(nw._apply_bulk(V[:c1]), ne._apply_bulk(V[c1:]))
            bot = eng.add(sw._apply_bulk(V[:c1]), se._apply_bulk(V[c1:]))
            return np.concatenate([top, bot], axis=0)

        def rmat_bulk(V):
            for b in blocks:
                b.counter.add(V.shape[2])
            left = eng.add(nw._rmat_bulk(V[:r1]), sw._rmat_bulk(V[r1:]))
            right = eng.add(ne._rmat_bulk(V[:r1]), se._rmat_bulk(V[r1:]))
            return np.concatenate([left, right], axis=0)

    out = BlackBoxOperator(rows, cols, ring, apply_scalar, rmat_scalar)
    out._apply_bulk = apply_bulk
    out._rmat_bulk = rmat_bulk
    return out


# ---------------------------------------------------------------------------
# SMS text format
# ---------------------------------------------------------------------------


def read_sms(text: str, ring) -> TripletMatrix:
    """Parse SMS triplet text: header `m n M`, entries `i j v`, end `0 0 0`.

    The third header token is the conventional format letter and is accepted
    as either `M` or an integer entry count (then ignored).
    """
    lines = [ln for ln in (raw.strip() for raw in text.splitlines()) if ln]
    if not lines:
        raise ValueError("empty SMS input")
    head = lines[0].split()
    if len(head) != 3:
        raise ValueError(f"bad SMS header {lines[0]!r}")
    m, n = int(head[0]), int(head[1])
    if head[2] != "M":
        int(head[2])  # entry count variant; raises on garbage
    entries = []
    closed = False
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 3:
            raise ValueError(f"bad SMS entry line {ln!r}")
        i, j = int(parts[0]), int(parts[1])
        if (i, j) == (0, 0):
            closed = True
            break
        entries.append((i, j, ring.decode_int(int(parts[2]))))
    if not closed:
        raise ValueError("missing SMS terminator line `0 0 0`")
    return TripletMatrix(m, n, ring, entries)


def write_sms(M: TripletMatrix) -> str:
    out = [f"{M.rows} {M.cols} M"]
    for (i, j, v) in M.entries:
        out.append(f"{i} {j} {M.ring.encode_int(v)}")
    out.append("0 0 0")
    return "\n".join(out) + "\n"
