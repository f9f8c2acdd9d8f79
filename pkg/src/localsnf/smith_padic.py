"""Smith form of black-box matrices over Z_{p^e} and Galois rings.

The pipeline has three phases.  Dimension reduction sandwiches the input
between a pair of truncated scaled-Toeplitz operators, shrinking an m x n
black box to an ell x ell one that keeps the nonzero invariant factors
(ell must bound their count).  The nullspace phase then splits the reduced
matrix A_hat along its mod-p kernel: the rank r0 of A_hat mod p counts the
unit invariants, and the kernel directions carry everything else.  Each
direction is refined level by level -- a direction at level s has a lift v
with A_hat v = 0 mod p^s, and it survives to level s+1 exactly when the
residual A_hat v / p^s can be cancelled mod p by a correction drawn from
the image of A_hat mod p.  A direction stuck at level s belongs to an
invariant factor p^s; directions that survive all e levels are exact
kernel vectors and belong to zero invariants.  Scaling each final lift by
p^(e-s) yields a generator matrix of the exact kernel module whose dense
local Smith form has one invariant p^(e-s) per direction, so the tail of
A_hat's Smith form is read off by dividing p^e by each generator
invariant.  A naive single-shot version (dense Smith of A_hat N' for one
canonical kernel lift N') is unsound: the lift's noise term p * (unit
rows) masks every invariant above p^1, which the level refinement exists
to remove.

The optional certificate is Monte Carlo: the Smith form of the reduced
matrix is compared against a version bordered by c extra random rows and
columns, and agreement certifies the leading invariants with failure
probability below 2/p^c.  The certificate has no false negatives, so a
failed check always means the sandwich genuinely lost an invariant.

Preconditioner entries come in two flavours.  The default heuristic mode
draws the Toeplitz stripes from the full ring, the scaling diagonals from
the units, and leans on the certificate.  Provable mode backs the
1 - 1/xi success bound: entries are drawn from {0, ..., 6n^2 xi - 1} when
p is at least that large, and otherwise the whole computation is lifted
to the Galois ring GR(p^e, eta) whose residue field clears the same
threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .blackbox_linalg import (
    InsufficientNullity,
    _extension_for,
    _scalar_bulk,
    _unit_triangular_toeplitz,
    lift_field_operator,
    minpoly_blackbox,
    nullspace_sample,
    rank_blackbox,
)
from .dense_oracle import DenseMatrix, dense_smith_local
from .operators import (
    BlackBoxOperator,
    ToeplitzSpec,
    compose,
    diagonal_operator,
    from_triplets,
    toeplitz_operator,
    truncate,
)
from .rings import GaloisRing, LocalIntRing, PrimeField, RingMismatch
from .smith_poly import RetriesExhausted, SmithMultiplicities
from .vecops import engine_for

__all__ = [
    "InsufficientBound",
    "PreconditionerPair",
    "VerificationReport",
    "extend_scalars",
    "make_preconditioners",
    "one_side_check",
    "projection_verify",
    "reduce_dimension",
    "residue_operator",
    "smith_pe_nullspace",
]


class InsufficientBound(RuntimeError):
    """The reduced matrix shows no zero invariants, so ell may be too small."""


@dataclass
class PreconditionerPair:
    """A left ell x m and right n x ell truncated scaled-Toeplitz pair.

    domain records where the entries were sampled from: "full-ring",
    "range:<bound>", or "galois:eta=<eta>".  ring is the ring the pair
    lives over; it differs from the input ring only on the Galois path.
    """

    B1: BlackBoxOperator
    B2: BlackBoxOperator
    spec1: ToeplitzSpec
    spec2: ToeplitzSpec
    domain: str
    xi: int
    ring: object
    seed: object = None


@dataclass
class VerificationReport:
    k: int
    c: int
    verified: bool
    failure_bound: float
    seeds: tuple = field(default_factory=tuple)


def _const_from_int(ring, v: int):
    if isinstance(ring, GaloisRing):
        return ring.element((v,) + (0,) * (ring.eta - 1))
    return ring.element(v)


def make_preconditioners(n: int, ell: int, ring, xi: int, rng,
                         mode: str = "heuristic", rows: int | None = None,
                         seed=None) -> PreconditionerPair:
    """Sample the scaled-Toeplitz reduction pair for an (rows x n) input.

    Heuristic mode draws the Toeplitz stripes uniformly from the full ring
    and the scaling diagonals from the units.  (The diagonals must be
    invertible: a scale with positive valuation multiplies a whole row or
    column by p and destroys invariants outright, which at small p would
    happen on nearly every draw.)  Provable mode draws every entry from
    {0,...,6 max(m,n)^2 xi - 1} when p clears that bound, and otherwise
    moves to GR(p^e, eta) with entries whose polynomial coefficients are
    uniform in {0,...,p-1}; eta is the least exponent with
    p^eta >= 6 max(m,n)^2 xi.
    """
    rows = n if rows is None else rows
    if not (1 <= ell <= min(rows, n)):
        raise ValueError(f"ell={ell} must lie in [1, {min(rows, n)}]")
    if mode not in ("heuristic", "provable"):
        raise ValueError(f"unknown preconditioner mode {mode!r}")

    side = max(rows, n)
    bound = 6 * side * side * xi
    work = ring
    if mode == "heuristic":
        domain = "full-ring"
        # Full-ring draws preserve leading minors only as often as the
        # residue field allows, and over a tiny field nearly every round
        # would be thrown away by the certificate.  When that field has
        # fewer than 2*side classes, move the working ring to a Galois
        # extension just big enough to make preservation routine.  The
        # degree also clears the 8*ell*xi residue-solver threshold so no
        # downstream step needs a field lift of its own; it still stays
        # far below what provable mode would demand, and correctness
        # rests wholly on the verification step.
        if isinstance(ring, LocalIntRing) and ring.p < 2 * side:
            target = max(2 * side, 8 * ell * xi)
            eta_h = 1
            while ring.p ** eta_h < target:
                eta_h += 1
            work = GaloisRing(ring.p, ring.e, eta_h)
            domain = f"full-ring:eta={eta_h}"
        eng = engine_for(work)

        def stripes(count):
            return eng.from_array(eng.random_array(count, rng))

        def scales(count):
            return eng.from_array(eng.random_units(count, rng))
    elif ring.p >= bound:
        domain = f"range:{bound}"

        def stripes(count):
            draws = rng.integers(0, bound, size=count)
            return [_const_from_int(work, int(x)) for x in draws]

        scales = stripes
    else:
        if not isinstance(ring, LocalIntRing):
            raise RingMismatch(
                "the Galois-ring provable path starts from a plain Z_{p^e} ring")
        eta = 1
        while ring.p ** eta < bound:
            eta += 1
        work = GaloisRing(ring.p, ring.e, eta)
        domain = f"galois:eta={eta}"
        p = ring.p

        def stripes(count):
            draws = rng.integers(0, p, size=(count, eta))
            return [work.element(tuple(int(c) for c in row)) for row in draws]

        scales = stripes

    def spec_for(size: int) -> ToeplitzSpec:
        y = stripes(2 * size - 1)
        left = scales(size)
        right = scales(size)
        return ToeplitzSpec(size, y, left, right, work)

    spec1 = spec_for(rows)
    spec2 = spec_for(n)
    B1 = truncate(toeplitz_operator(spec1), ell, rows=ell, cols=rows)
    B2 = truncate(toeplitz_operator(spec2), ell, rows=n, cols=ell)
    return PreconditionerPair(B1=B1, B2=B2, spec1=spec1, spec2=spec2,
                              domain=domain, xi=xi, ring=work, seed=seed)


def residue_operator(B: BlackBoxOperator) -> BlackBoxOperator:
    """The mod-p image of B as an operator over the residue field.

    Triplet-backed operators get their entries projected once and share
    B's counter; opaque ones are wrapped (lift the input, apply, reduce),
    charging B through its public interface either way.
    """
    ring = B.ring
    F = ring.residue_field()
    if hasattr(B, "triplets"):
        out = from_triplets(B.triplets.map_ring(F, ring.residue),
                            counter=B.counter)
        out.source = B
        return out

    def apply_scalar(v):
        return [ring.residue(x) for x in B.apply([ring.lift_residue(x) for x in v])]

    def rmat_scalar(v):
        return [ring.residue(x) for x in B.rmatvec([ring.lift_residue(x) for x in v])]

    apply_bulk = rmat_bulk = None
    if B.has_bulk and engine_for(F) is not None:
        p = ring.p

        def mk(bulk_fn):
            def bulk(V: np.ndarray) -> np.ndarray:
                B.counter.add(V.shape[2])
                return bulk_fn(V) % p
            return bulk
        apply_bulk = mk(B._apply_bulk)
        rmat_bulk = mk(B._rmat_bulk)

    out = BlackBoxOperator(B.rows, B.cols, F, apply_scalar, rmat_scalar)
    out._apply_bulk = apply_bulk
    out._rmat_bulk = rmat_bulk
    out.source = B
    return out


def extend_scalars(B: BlackBoxOperator, big: GaloisRing) -> BlackBoxOperator:
    """View B over Z_{p^e} as an operator over the Galois ring big.

    One extended apply is billed as one apply of B: a vector over big is
    eta coefficient vectors over the base ring, batched through B in a
    single bulk call.
    """
    ring = B.ring
    if not isinstance(big, GaloisRing) or big.p != ring.p or big.e != ring.e:
        raise RingMismatch(f"cannot extend {ring!r} into {big!r}")
    eta = big.eta

    def stretch(fn, v, length):
        planes = [[x[j] for x in v] for j in range(eta)]
        images = [fn(plane) for plane in planes]
        return [tuple(images[j][i] for j in range(eta)) for i in range(length)]

    def apply_scalar(v):
        return [big.element(x) for x in stretch(B.apply, [big.element(x) for x in v], B.rows)]

    def rmat_scalar(v):
        return [big.element(x) for x in stretch(B.rmatvec, [big.element(x) for x in v], B.cols)]

    apply_bulk = rmat_bulk = None
    if B.has_bulk and engine_for(big) is not None:
        def mk(bulk_fn, n_in, n_out):
            def bulk(V: np.ndarray) -> np.ndarray:
                b = V.shape[2]
                B.counter.add(b)
                flat = np.ascontiguousarray(V).reshape(n_in, 1, eta * b)
                out = bulk_fn(flat)
                return np.ascontiguousarray(out).reshape(n_out, eta, b)
            return bulk
        apply_bulk = mk(B._apply_bulk, B.cols, B.rows)
        rmat_bulk = mk(B._rmat_bulk, B.rows, B.cols)

    out = BlackBoxOperator(B.rows, B.cols, big, apply_scalar, rmat_scalar)
    out._apply_bulk = apply_bulk
    out._rmat_bulk = rmat_bulk
    out.source = B
    return out


def reduce_dimension(B: BlackBoxOperator, ell: int,
                     pair: PreconditionerPair) -> BlackBoxOperator:
    """The ell x ell sandwich B1 * B * B2, extending scalars if the pair
    lives over a larger Galois ring."""
    if pair.B1.cols != B.rows or pair.B2.rows != B.cols:
        raise ValueError(
            f"pair shaped for {pair.B1.cols}x{pair.B2.rows}, operator is "
            f"{B.rows}x{B.cols}")
    if pair.B1.rows != ell or pair.B2.cols != ell:
        raise ValueError(f"pair truncated to {pair.B1.rows}, wanted {ell}")
    inner = B if pair.ring == B.ring else extend_scalars(B, pair.ring)
    out = compose(pair.B1, inner, pair.B2)
    out.inner_operator = inner
    return out


def _transpose_operator(B: BlackBoxOperator) -> BlackBoxOperator:
    """B^T as an operator; applies charge B's counter one-for-one."""

    def apply_scalar(v):
        return B.rmatvec(v)

    def rmat_scalar(v):
        return B.apply(v)

    out = BlackBoxOperator(B.cols, B.rows, B.ring, apply_scalar, rmat_scalar)
    if B.has_bulk:
        def ab(V):
            B.counter.add(V.shape[2])
            return B._rmat_bulk(V)

        def rb(V):
            B.counter.add(V.shape[2])
            return B._apply_bulk(V)
        out._apply_bulk = ab
        out._rmat_bulk = rb
    return out


def _track(tracker, tag, amount):
    if tracker is not None:
        tracker.track(tag, amount)


def _untrack(tracker, tag):
    if tracker is not None:
        tracker.release(tag)


def _apply_block(op: BlackBoxOperator, eng, V: np.ndarray) -> np.ndarray:
    if op.has_bulk:
        return op.apply_bulk(V)
    return _scalar_bulk(op.apply, eng, V, op.rows)


def _field_rref_kernel(rows: list, fld) -> tuple:
    """Kernel basis (as columns) and pivot-column indices of a small dense
    matrix over a field."""
    R = [list(r) for r in rows]
    ncols = len(R[0]) if R else 0
    pivots = []
    r = 0
    for c in range(ncols):
        pr = next((i for i in range(r, len(R)) if R[i][c] != fld.zero), None)
        if pr is None:
            continue
        R[r], R[pr] = R[pr], R[r]
        inv = fld.invert(R[r][c])
        R[r] = [fld.mul(inv, x) for x in R[r]]
        for i in range(len(R)):
            if i != r and R[i][c] != fld.zero:
                f = R[i][c]
                R[i] = [fld.sub(x, fld.mul(f, y)) for x, y in zip(R[i], R[r])]
        pivots.append((r, c))
        r += 1
        if r == len(R):
            break
    pivot_cols = [c for _, c in pivots]
    basis = []
    for f in range(ncols):
        if f in pivot_cols:
            continue
        v = [fld.zero] * ncols
        v[f] = fld.one
        for (pr, pc) in pivots:
            v[pc] = fld.sub(fld.zero, R[pr][f])
        basis.append(v)
    return basis, pivot_cols


def _dot_elems(fld, u, v):
    acc = fld.zero
    for a, b in zip(u, v):
        acc = fld.add(acc, fld.mul(a, b))
    return acc


def _field_solve(aug_rows: list, fld):
    """A particular solution of the augmented system [A | b] over a field
    (free variables set to zero), or None when inconsistent."""
    R = [list(r) for r in aug_rows]
    ncols = len(R[0]) if R else 1
    nvar = ncols - 1
    pivots = []
    r = 0
    for c in range(ncols):
        pr = next((i for i in range(r, len(R)) if R[i][c] != fld.zero), None)
        if pr is None:
            continue
        if c == nvar:
            return None
        R[r], R[pr] = R[pr], R[r]
        inv = fld.invert(R[r][c])
        R[r] = [fld.mul(inv, x) for x in R[r]]
        for i in range(len(R)):
            if i != r and R[i][c] != fld.zero:
                f = R[i][c]
                R[i] = [fld.sub(x, fld.mul(f, y)) for x, y in zip(R[i], R[r])]
        pivots.append((r, c))
        r += 1
        if r == len(R):
            break
    sol = [fld.zero] * nvar
    for (pr, pc) in pivots:
        sol[pc] = R[pr][nvar]
    return sol


class _ConsistentSolver:
    """Solves phi(A_hat) w = b over the residue field for right-hand sides
    already certified consistent by the left-kernel test.

    Preconditions a random invertible sandwich W = left * A * right, takes
    its minimal polynomial lambda * g with g(0) != 0, and evaluates
    z = -g(0)^{-1} h(W) (left b) where g = g(0) + lambda h; then W z =
    left b exactly and w = right z solves the original system.  A small
    residue field is first lifted to an extension clearing the same
    threshold rank estimation uses; the base-field solution is the
    constant coefficient of the extension solution.  Every candidate is
    verified exactly against the unlifted operator, so a bad draw (the
    sampled minimal polynomial undershooting, or lambda dividing it more
    than once) only costs a retry.
    """

    def __init__(self, base: BlackBoxOperator, xi: int, rng):
        self.base = base
        self.rng = rng
        fld = base.ring
        threshold = 8 * base.rows * xi
        if fld.size >= threshold:
            self.op = base
            self.down = None
        else:
            if not isinstance(fld, PrimeField):
                raise RingMismatch(
                    "cannot solve over a small extension-field residue; "
                    "use a working ring whose residue field has at least "
                    f"{threshold} elements")
            big, _ = _extension_for(fld, threshold)
            self.op = lift_field_operator(base, big, rng)
            self.down = fld
        self.F = self.op.ring
        self._pre = None

    def _prepare(self, style: bool) -> bool:
        F, op, rng = self.F, self.op, self.rng
        n = op.rows
        D1 = diagonal_operator([F.random_unit(rng) for _ in range(n)], F)
        D2 = diagonal_operator([F.random_unit(rng) for _ in range(n)], F)
        if style:
            left = compose(D1, _unit_triangular_toeplitz(
                n, F, [F.random(rng) for _ in range(n - 1)], upper=True))
            right = compose(_unit_triangular_toeplitz(
                n, F, [F.random(rng) for _ in range(n - 1)], upper=False), D2)
        else:
            left, right = D1, D2
        W = compose(left, op, right)
        m = minpoly_blackbox(W, rng)
        if len(m) < 2 or m[0] != F.zero or m[1] == F.zero:
            return False
        self._pre = (left, W, right, list(m[1:]))
        return True

    def _horner(self, W, g, c):
        """-g(0)^{-1} h(W) c for g = g(0) + lambda h, on a scalar vector."""
        F = self.F
        h = g[1:]
        if not h:
            return [F.zero] * len(c)
        eng = W.engine if W.has_bulk else None
        if eng is not None:
            C = eng.to_array(c)[:, :, None]
            z = eng.from_array(self._horner_block(W, g, C)[:, :, 0])
            return z
        z = [F.mul(h[-1], x) for x in c]
        for i in range(len(h) - 2, -1, -1):
            z = [F.add(x, F.mul(h[i], y)) for x, y in zip(W.apply(z), c)]
        neg_inv = F.sub(F.zero, F.invert(g[0]))
        return [F.mul(neg_inv, x) for x in z]

    def _horner_block(self, W, g, C):
        eng = W.engine
        F = self.F
        h = g[1:]
        if not h:
            return np.zeros_like(C)
        G = eng.to_array(h)
        acc = eng.ew_mul(G[len(h) - 1:len(h)], C)
        for i in range(len(h) - 2, -1, -1):
            acc = eng.add(W.apply_bulk(acc), eng.ew_mul(G[i:i + 1], C))
        neg_inv = eng.to_array([F.sub(F.zero, F.invert(g[0]))])
        return eng.ew_mul(neg_inv, acc)

    def solve(self, b: list) -> list:
        eng = engine_for(self.base.ring)
        R = eng.to_array(b)[:, :, None]
        out = self.solve_block(R)
        return eng.from_array(out[:, :, 0])

    def solve_block(self, R: np.ndarray) -> np.ndarray:
        """Solve for every column of a canonical (n, w, B) limb block.

        All columns share one preconditioner draw and one Horner pass, so
        a level's corrections cost about as much as a single solve.
        """
        if R.shape[2] == 0:
            return R.copy()
        eng_base = engine_for(self.base.ring)
        for attempt in range(6):
            if self._pre is None and not self._prepare(attempt % 2 == 1):
                continue
            left, W, right, g = self._pre
            eng = W.engine
            C = self._lift_block(R)
            c = _apply_block(left, eng, C)
            z = self._horner_block(W, g, c)
            if (_apply_block(W, eng, z) != c).any():
                self._pre = None
                continue
            w = self._project_block(_apply_block(right, eng, z))
            if (_apply_block(self.base, eng_base, w) != R).any():
                self._pre = None
                continue
            return w
        raise RetriesExhausted(
            "could not build a working solve preconditioner in 6 attempts")

    def _lift_block(self, R):
        if self.down is None:
            return R
        out = np.zeros((R.shape[0], self.F.m, R.shape[2]), dtype=np.int64)
        out[:, 0, :] = R[:, 0, :]
        return out

    def _project_block(self, Z):
        if self.down is None:
            return Z
        return np.ascontiguousarray(Z[:, 0:1, :])


def _nullspace_phase(Ahat: BlackBoxOperator, ell: int, width: int, xi: int,
                     rng, tracker) -> tuple:
    """Unit disposal and tail recovery on the reduced operator.

    Returns (multiplicities, zeros_hat) where zeros_hat counts the zero
    invariants of A_hat; raises InsufficientBound when there are none and
    ell is strictly below min(m, n).
    """
    work = Ahat.ring
    e, p = work.e, work.p
    q = p ** e
    eng_w = engine_for(work)
    res = residue_operator(Ahat)
    F = res.ring
    eng_f = engine_for(F)
    # One rank trial: an undershoot makes k too large, the kernel sample
    # then comes up short, and the round is retried with fresh randomness.
    r0 = rank_blackbox(res, xi=xi, rng=rng, trials=1).rank
    k = ell - r0
    if k == 0:
        if ell < width:
            raise InsufficientBound(
                f"all {ell} reduced invariants are units; the bound ell={ell} "
                f"may undercount (matrix has min dimension {width})")
        return (r0,) + (0,) * (e - 1), 0

    # Right kernel of the residue: the directions carrying every nonunit
    # invariant.  The canonical lift to the working ring keeps the digit
    # values unchanged, so the residue arrays double as ring arrays.
    basis = nullspace_sample(res, k, rng, oversample=0, tracker=tracker)
    _track(tracker, "kernel-lifts", ell * k)
    X = np.ascontiguousarray(
        np.stack([eng_f.to_array(v) for v in basis], axis=2))
    del basis

    # Directions that stop lifting at some level are parked here together
    # with their raw lifts and the mod-p image of their final residual.
    # A direction at level s > j can be corrected by p^(s-j) times a
    # direction parked at level j, so the obstruction test at level s runs
    # modulo im phi(A_hat) + span of all parked residuals, and survivor
    # corrections may borrow the parked lifts.  Testing against the image
    # alone is wrong: solver corrections at level s carry an arbitrary
    # mod-p kernel component whose level-(s+1) residual is a parked-style
    # residual, and that noise would read as a fake obstruction.
    parked_lift: list = []
    parked_res: list = []
    parked_lvl: list = []
    if e > 1 and X.shape[2]:
        left = nullspace_sample(_transpose_operator(res), k, rng,
                                oversample=0, tracker=tracker)
        _track(tracker, "left-kernel", ell * k)
        L = [eng_f.to_array(v) for v in left]
        del left
        solver = _ConsistentSolver(res, xi, rng)

        def l_dot(vec):
            """All left-kernel pairings of one mod-p column, as elements."""
            col = vec[:, :, None]
            return [eng_f.from_array(eng_f.dot(row, col).T)[0] for row in L]

        for s in range(1, e):
            ps = p ** s
            # Residuals A_hat X / p^s; their mod-p images feed the
            # obstruction test.
            _track(tracker, "level-residual", ell * X.shape[2])
            U = _apply_block(Ahat, eng_w, X)
            if (U % ps).any():
                raise ArithmeticError(
                    f"level-{s} kernel image has an entry not divisible by "
                    f"p^{s}; the lifted directions are wrong")
            U //= ps
            U %= p
            LU = [eng_f.from_array(eng_f.dot(row, U).T) for row in L]

            # Quotient out the parked residuals: rows of the obstruction
            # matrix are combinations of L annihilating every parked one.
            T = [l_dot(r) for r in parked_res]   # parked x k, transposed use
            if T:
                beta, _ = _field_rref_kernel(T, F)
            else:
                beta = [[F.one if i == j else F.zero for j in range(k)]
                        for i in range(k)]
            LM = []
            for b_row in beta:
                LM.append([
                    _dot_elems(F, b_row, [LU[j][t] for j in range(k)])
                    for t in range(X.shape[2])])

            if LM:
                C, pivot_cols = _field_rref_kernel(LM, F)
            else:
                C = [[F.one if i == j else F.zero for j in range(X.shape[2])]
                     for i in range(X.shape[2])]
                pivot_cols = []
            for i in pivot_cols:
                parked_lift.append(X[:, :, i].copy())
                parked_res.append(U[:, :, i].copy())
                parked_lvl.append(s)
            if parked_res:
                _track(tracker, "parked-residuals", ell * len(parked_res))
            del U
            _untrack(tracker, "level-residual")
            if not C:
                X = X[:, :, :0]
                break

            # Correct each surviving combination up one level:
            # y = X c + p^s w + sum_d alpha_d p^(s - j_d) (parked d), with
            # phi(A_hat) w = -(residual + sum alpha_d parked-residual_d).
            _track(tracker, "lift-step", ell * len(C))
            Tcols = [l_dot(r) for r in parked_res]
            Ys = []
            for cvec in C:
                ca = eng_f.to_array(cvec)
                y = eng_w.ew_mul(ca[0:1], X[:, :, 0:1])
                for t in range(1, X.shape[2]):
                    y = eng_w.add(y, eng_w.ew_mul(ca[t:t + 1], X[:, :, t:t + 1]))
                Ys.append(y[:, :, 0])
            Y = np.ascontiguousarray(np.stack(Ys, axis=2))
            del Ys
            Uc = _apply_block(Ahat, eng_w, Y)
            if (Uc % ps).any():
                raise ArithmeticError(
                    f"level-{s} combination broke p^{s} divisibility")
            Phi = (Uc // ps) % p
            del Uc
            # Right-hand sides for the whole level go through one block
            # solve; the columns share a preconditioner draw and a single
            # Horner evaluation.
            alphas = []
            rhs_cols = []
            for t in range(len(C)):
                phiu = Phi[:, :, t]
                rhs = (-phiu) % p
                alpha = []
                if Tcols:
                    lu = l_dot(phiu)
                    rows = [[Tcols[d][i] for d in range(len(Tcols))]
                            + [F.sub(F.zero, lu[i])] for i in range(k)]
                    alpha = _field_solve(rows, F)
                    if alpha is None:
                        raise ArithmeticError(
                            "parked-residual correction system is "
                            "inconsistent for a direction that passed the "
                            "obstruction test")
                    for d, a in enumerate(alpha):
                        if a != F.zero:
                            aa = eng_f.to_array([a])[0]
                            term = eng_f.ew_mul(aa[None, :],
                                                parked_res[d][:, :, None])
                            rhs = (rhs - term[:, :, 0]) % p
                alphas.append(alpha)
                rhs_cols.append(rhs)
            Wb = solver.solve_block(
                np.ascontiguousarray(np.stack(rhs_cols, axis=2)))
            del Phi, rhs_cols
            cols = []
            for t in range(len(C)):
                y = (Y[:, :, t] + ps * Wb[:, :, t]) % q
                for d, a in enumerate(alphas[t]):
                    if a != F.zero:
                        aa = eng_f.to_array([a])[0]
                        term = eng_w.ew_mul(aa[None, :],
                                            parked_lift[d][:, :, None])
                        y = (y + pow(p, s - parked_lvl[d]) * term[:, :, 0]) % q
                cols.append(y)
            X = np.ascontiguousarray(np.stack(cols, axis=2))
            del cols, Y, Wb
            _untrack(tracker, "lift-step")
            _track(tracker, "kernel-lifts", ell * (X.shape[2] + len(parked_lift)))
        _untrack(tracker, "left-kernel")
        del L

    # Parked directions carry invariant p^(level); scaling each lift by
    # p^(e - level) turns it into an exact kernel generator.  Survivors
    # are exact kernel vectors already and witness zero invariants.
    gens = [((parked_lift[d] * pow(p, e - parked_lvl[d])) % q, parked_lvl[d])
            for d in range(len(parked_lift))]
    obstructed = {}
    for lvl in parked_lvl:
        obstructed[lvl] = obstructed.get(lvl, 0) + 1
    for t in range(X.shape[2]):
        gens.append((X[:, :, t], e))
    del X, parked_lift, parked_res
    _untrack(tracker, "kernel-lifts")
    _untrack(tracker, "parked-residuals")
    _track(tracker, "kernel-generators", ell * k)

    # Dense finish: the generator columns have one invariant p^(e-s) per
    # direction, so the tail of A_hat's Smith form is p^e divided by each.
    _track(tracker, "dense-work", 2 * ell * k)
    grid = [[gens[t][0][i] for t in range(k)] for i in range(ell)]
    rows = [eng_w.from_array(np.stack(row, axis=0)) for row in grid]
    sm = dense_smith_local(DenseMatrix.from_rows(work, rows))
    _untrack(tracker, "dense-work")
    if sm.r_zero:
        raise ArithmeticError("kernel generator matrix lost column rank")

    zeros_hat = sm.multiplicities[0]
    survivors = sum(1 for _, lvl in gens if lvl == e)
    if zeros_hat != survivors:
        raise ArithmeticError(
            f"dense finish found {zeros_hat} zero invariants but "
            f"{survivors} exact kernel directions")
    tail = []
    for v in range(1, e):
        count = sm.multiplicities[e - v]
        if count != obstructed.get(v, 0):
            raise ArithmeticError(
                f"dense finish disagrees with the level-{v} obstruction count")
        tail.append(count)
    mults = (r0,) + tuple(tail)
    _untrack(tracker, "kernel-generators")
    del gens

    if zeros_hat == 0 and ell < width:
        raise InsufficientBound(
            f"all {ell} reduced invariants are nonzero; the bound ell={ell} "
            f"may undercount (matrix has min dimension {width})")
    return mults, zeros_hat


def smith_pe_nullspace(B: BlackBoxOperator, ell: int | None = None,
                       xi: int = 100, rng=None, mode: str = "heuristic",
                       slack: int = 8, c: int = 21, max_rounds: int = 4,
                       tracker=None) -> SmithMultiplicities:
    """Full multiplicity vector of a black-box matrix over Z_{p^e} or a
    Galois ring.

    When ell is not given it starts at rank(B mod p) + slack, capped at
    min(m, n); a user-supplied ell is honoured across retries.  Each
    round samples a fresh preconditioner pair, runs the reduction and
    nullspace phases, and (for c >= 1) certifies the result with the
    bordered projection check; a failed certificate or an
    InsufficientBound doubles the slack (auto-ell only) and retries, up
    to max_rounds.  The returned object carries the certificate as
    .verification (None when c = 0), the reduction size as .ell_used,
    and the mod-p nullity of the reduction as .k_reduced.  r_zero is
    min(m, n) minus the nonzero count, so it is only as trustworthy as
    the certificate for the round that produced it.

    tracker, when provided, sees every matrix-sized allocation of the
    nullspace phase through track(tag, n)/release(tag) calls, where
    track restates a tag's current size.  With k kernel directions the
    tracked peak is max(2k, 3k) * ell plus the per-level windows, all of
    which stay within 4*max(k, k_alg)*ell ring elements for the internal
    sampling width k_alg.  The bordered certificate is the exception: it
    assembles (ell+c)^2 entries densely by design, so memory-bound runs
    should pass c=0 and certify separately if needed.
    """
    ring = B.ring
    if not isinstance(ring, (LocalIntRing, GaloisRing)):
        raise TypeError(f"need an operator over Z_{{p^e}} or GR(p^e, eta), "
                        f"got {ring!r}")
    if rng is None:
        rng = np.random.default_rng()
    width = min(B.rows, B.cols)
    auto = ell is None
    if auto:
        base_rank = rank_blackbox(residue_operator(B), xi=xi, rng=rng).rank
        ell_cur = min(width, base_rank + slack)
    else:
        if not (1 <= ell <= width):
            raise ValueError(f"ell={ell} must lie in [1, {width}]")
        ell_cur = int(ell)
    ell_cur = max(ell_cur, 1)

    last_bound_error = None
    for _ in range(max_rounds):
        pair = make_preconditioners(B.cols, ell_cur, ring, xi, rng,
                                    mode=mode, rows=B.rows)
        Ahat = reduce_dimension(B, ell_cur, pair)
        try:
            mults, zeros_hat = _nullspace_phase(Ahat, ell_cur, width, xi,
                                                rng, tracker)
        except (InsufficientBound, InsufficientNullity, RetriesExhausted) as err:
            if isinstance(err, InsufficientBound):
                last_bound_error = err
            if auto:
                slack *= 2
                ell_cur = min(width, base_rank + slack)
            continue
        report = None
        if c >= 1:
            report = projection_verify(Ahat.inner_operator, pair.B1, pair.B2,
                                       c, rng)
            if not report.verified:
                if auto:
                    slack *= 2
                    ell_cur = min(width, base_rank + slack)
                continue
        out = SmithMultiplicities(ring=ring.descriptor(),
                                  multiplicities=mults,
                                  r_zero=width - sum(mults))
        out.verification = report
        out.ell_used = ell_cur
        out.k_reduced = ell_cur - mults[0]
        return out
    if last_bound_error is not None:
        raise last_bound_error
    raise RetriesExhausted(
        f"no verified Smith form in {max_rounds} preconditioner rounds")


# ---------------------------------------------------------------------------
# Monte Carlo certificates
# ---------------------------------------------------------------------------


def one_side_check(AQ: DenseMatrix, AQy: DenseMatrix) -> bool:
    """True iff the first k invariants of AQ survive appending the extra
    column, where k = AQ.cols.  With AQy = [AQ | Ay] for uniform random y,
    a True answer certifies the first k invariants of A with conditional
    failure probability at most 1/p."""
    if AQy.rows != AQ.rows or AQy.cols != AQ.cols + 1:
        raise ValueError("expected the same matrix with one extra column")
    if AQ.ring != AQy.ring:
        raise RingMismatch("matrices must share a ring")
    k = AQ.cols
    first = dense_smith_local(AQ).valuations()[:k]
    second = dense_smith_local(AQy).valuations()[:k]
    return first == second


def _dense_dot(ring, u, v):
    acc = ring.zero
    for a, b in zip(u, v):
        acc = ring.add(acc, ring.mul(a, b))
    return acc


def projection_verify(A: BlackBoxOperator, P: BlackBoxOperator,
                      Q: BlackBoxOperator, c: int, rng,
                      seeds: tuple = ()) -> VerificationReport:
    """Certify that P*A*Q kept the leading invariant factors of A.

    Assembles [[PAQ, PAR1], [R2AQ, R2AR1]] densely with ell + c applies
    of A (R1, R2 uniform random over the ring), takes k as the nonzero
    invariant count of PAQ, and compares the first k invariants of the
    two matrices plus one extra slot (a dropped invariant shows up there:
    zero in PAQ, re-exposed nonzero in the bordered form).  Equality
    certifies S_k(A) = S_k(PAQ) with failure probability below 2/p^c;
    disagreement is proof the reduction lost an invariant.
    """
    if c < 1:
        raise ValueError("c must be at least 1")
    ring = A.ring
    if P.ring != ring or Q.ring != ring:
        raise RingMismatch("operators must share a ring")
    ell = P.rows
    if Q.cols != ell:
        raise ValueError(f"P is {ell}-row but Q is {Q.cols}-column")
    m, n = A.rows, A.cols
    eng = engine_for(ring)

    if eng is not None and A.has_bulk and P.has_bulk and Q.has_bulk:
        one = eng.to_array([ring.one])[0]
        basis = np.zeros((ell, eng.w, ell), dtype=np.int64)
        for j in range(ell):
            basis[j, :, j] = one
        QX = Q.apply_bulk(basis)
        R1 = np.stack([eng.random_array(n, rng) for _ in range(c)], axis=2)
        Y = A.apply_bulk(np.concatenate([QX, R1], axis=2))
        top = P.apply_bulk(Y)
        tcols = [eng.from_array(top[:, :, j]) for j in range(ell + c)]
        grid = [[tcols[j][i] for j in range(ell + c)] for i in range(ell)]
        for _ in range(c):
            row = eng.dot(eng.random_array(m, rng), Y)
            grid.append(eng.from_array(row.T))
    else:
        zero = ring.zero
        cols = []
        for j in range(ell):
            v = [zero] * ell
            v[j] = ring.one
            cols.append(Q.apply(v))
        cols.extend([ring.random(rng) for _ in range(n)] for _ in range(c))
        ycols = [A.apply(x) for x in cols]
        tcols = [P.apply(y) for y in ycols]
        grid = [[tcols[j][i] for j in range(ell + c)] for i in range(ell)]
        for _ in range(c):
            r2 = [ring.random(rng) for _ in range(m)]
            grid.append([_dense_dot(ring, r2, ycols[j])
                         for j in range(ell + c)])

    paq = DenseMatrix.from_rows(ring, [row[:ell] for row in grid[:ell]])
    sp = dense_smith_local(paq)
    k = sp.nonzero
    sb = dense_smith_local(DenseMatrix.from_rows(ring, grid))
    # One slot past k: a sandwich that dropped an invariant leaves PAQ with
    # a zero there while the border re-exposes the lost factor as nonzero.
    limit = min(k + 1, ell)
    verified = sp.valuations()[:limit] == sb.valuations()[:limit]
    failure = 2.0 / float(ring.p) ** c if c * math.log10(ring.p) < 300 else 0.0
    return VerificationReport(k=k, c=c, verified=verified,
                              failure_bound=failure, seeds=tuple(seeds))
