import numpy as np
import pytest

from localsnf.blackbox_linalg import (
    InsufficientNullity,
    berlekamp_massey,
    lift_field_operator,
    minpoly_blackbox,
    nullspace_sample,
    rank_blackbox,
)
from localsnf.operators import (
    TripletMatrix,
    diagonal_operator,
    embed_phi,
    from_triplets,
    identity_operator,
)
from localsnf.polynomials import poly_divmod
from localsnf.rings import ExtField, PolyQuotRing, PrimeField

from oracles import (
    charpoly_leverrier,
    dense_matvec,
    dense_minpoly,
    field_rank,
    planted_rank_dense,
)

F5 = PrimeField(5)
F7 = PrimeField(7)
F101 = PrimeField(101)


def dense_op(M, ring, rng_unused=None):
    m, n = len(M), len(M[0])
    trips = [(i + 1, j + 1, M[i][j]) for i in range(m) for j in range(n)]
    return from_triplets(TripletMatrix(m, n, ring, trips))


# ---------------------------------------------------------------------------
# Berlekamp-Massey
# ---------------------------------------------------------------------------


def test_bm_zero_sequence_gives_one():
    assert berlekamp_massey([0] * 10, F7) == (1,)


def test_bm_empty_sequence():
    assert berlekamp_massey([], F7) == (1,)


def test_bm_geometric_sequence():
    # 3 * 4^i mod 7 satisfies s_{i+1} = 4 s_i, so the annihilator is x - 4
    seq = [3 * pow(4, i, 7) % 7 for i in range(12)]
    assert berlekamp_massey(seq, F7) == ((-4) % 7, 1)


def test_bm_impulse_sequence():
    # (c, 0, 0, ...) needs exactly one shift to die
    assert berlekamp_massey([5, 0, 0, 0, 0, 0], F7) == (0, 1)


def test_bm_fibonacci_mod_p():
    seq = [0, 1]
    for _ in range(14):
        seq.append((seq[-1] + seq[-2]) % 101)
    # x^2 - x - 1
    assert berlekamp_massey(seq, F101) == (100, 100, 1)


def test_bm_krylov_annihilator_divides_charpoly():
    rng = np.random.default_rng(411)
    n = 5
    M = [[int(x) for x in rng.integers(101, size=n)] for _ in range(n)]
    u = [int(x) for x in rng.integers(101, size=n)]
    v = [int(x) for x in rng.integers(101, size=n)]
    seq = []
    w = list(v)
    for _ in range(2 * n):
        seq.append(sum(a * b for a, b in zip(u, w)) % 101)
        w = dense_matvec(M, w, F101)
    ann = berlekamp_massey(seq, F101)
    char = charpoly_leverrier(M, 101)
    _, rem = poly_divmod(char, ann, 101)
    assert rem == ()


def test_bm_over_extension_field():
    F4 = ExtField(2, 2)
    y = (0, 1)
    # geometric sequence with ratio y
    seq = [F4.one]
    for _ in range(9):
        seq.append(F4.mul(seq[-1], y))
    ann = berlekamp_massey(seq, F4)
    assert ann == (y, F4.one)  # x - y = x + y in characteristic 2


# ---------------------------------------------------------------------------
# minimal polynomials of operators
# ---------------------------------------------------------------------------


def test_minpoly_zero_operator_is_x():
    rng = np.random.default_rng(1)
    Z = from_triplets(TripletMatrix(4, 4, F101, []))
    assert minpoly_blackbox(Z, rng) == (0, 1)


def test_minpoly_identity_is_x_minus_one():
    rng = np.random.default_rng(2)
    I = identity_operator(5, F101)
    assert minpoly_blackbox(I, rng) == ((-1) % 101, 1)


def test_minpoly_projection_operator():
    rng = np.random.default_rng(3)
    # diag(1, 1, 0): minimal polynomial x(x - 1)
    op = diagonal_operator([1, 1, 0], F101)
    assert minpoly_blackbox(op, rng) == (0, (-1) % 101, 1)


def test_minpoly_matches_invariant_factor_oracle():
    rng = np.random.default_rng(44)
    n = 6
    M = [[int(x) for x in rng.integers(101, size=n)] for _ in range(n)]
    expected = dense_minpoly(M, 101)
    got = minpoly_blackbox(dense_op(M, F101), np.random.default_rng(45))
    assert got == expected


def test_minpoly_derogatory_matrix():
    # block diag of two copies of the same companion block: the minimal
    # polynomial has half the degree of the characteristic polynomial
    rng = np.random.default_rng(46)
    M = [[0] * 4 for _ in range(4)]
    for blk in (0, 2):
        M[blk][blk + 1] = 1
        M[blk + 1][blk] = 3
        M[blk + 1][blk + 1] = 2
    expected = dense_minpoly(M, 101)
    assert len(expected) - 1 == 2
    assert minpoly_blackbox(dense_op(M, F101), rng) == expected


def test_charpoly_oracles_agree():
    # the Leverrier and determinant-expansion routes must coincide
    rng = np.random.default_rng(47)
    n = 5
    M = [[int(x) for x in rng.integers(101, size=n)] for _ in range(n)]
    from oracles import _monic, _polymat_det
    X = [[((-M[i][j]) % 101, 1) if i == j else ((-M[i][j]) % 101,)
          for j in range(n)] for i in range(n)]
    assert _monic(_polymat_det(X, 101), 101) == charpoly_leverrier(M, 101)


# ---------------------------------------------------------------------------
# rank
# ---------------------------------------------------------------------------


def test_rank_zero_operator():
    rng = np.random.default_rng(5)
    Z = from_triplets(TripletMatrix(4, 4, F101, []))
    assert rank_blackbox(Z, rng=rng).rank == 0


def test_rank_identity():
    rng = np.random.default_rng(6)
    res = rank_blackbox(identity_operator(7, F101), rng=rng)
    assert res.rank == 7


def test_rank_embedded_uniformizer_power():
    # multiplication by f over F_5[z]/(f^3) with deg f = 2, embedded at
    # level 3, has rank d * (e - i) = 2 * 2 = 4
    ring = PolyQuotRing(F5, (2, 0, 1), 3)
    f_elt = ring.element((2, 0, 1))
    op = from_triplets(TripletMatrix(1, 1, ring, [(1, 1, f_elt)]))
    emb = embed_phi(op, 3)
    res = rank_blackbox(emb, rng=np.random.default_rng(7))
    assert res.rank == 4
    assert res.ext_degree > 1  # |F_5| is far below the confidence threshold


def test_rank_planted_square():
    rng = np.random.default_rng(8)
    M = planted_rank_dense(10, 10, 6, F101, rng)
    assert field_rank(M, F101) == 6
    res = rank_blackbox(dense_op(M, F101), rng=np.random.default_rng(9))
    assert res.rank == 6


def test_rank_planted_rectangular():
    rng = np.random.default_rng(10)
    M = planted_rank_dense(6, 9, 4, F101, rng)
    res = rank_blackbox(dense_op(M, F101), rng=np.random.default_rng(11))
    assert res.rank == 4


def test_rank_tall_rectangular():
    rng = np.random.default_rng(12)
    M = planted_rank_dense(9, 5, 5, F101, rng)
    res = rank_blackbox(dense_op(M, F101), rng=np.random.default_rng(13))
    assert res.rank == 5


def test_rank_shift_nilpotent():
    # the adversarial case for diagonal-only preconditioning: the shift
    # matrix keeps minimal polynomial x^2 under any diagonal conjugation,
    # so only the triangular Toeplitz trials can see the true rank
    n = 8
    trips = [(i, i + 1, 1) for i in range(1, n)]
    op = from_triplets(TripletMatrix(n, n, F101, trips))
    res = rank_blackbox(op, rng=np.random.default_rng(14))
    assert res.rank == n - 1


def test_rank_no_extension_when_field_is_large():
    rng = np.random.default_rng(15)
    op = diagonal_operator([3, 9, 0], F101)
    res = rank_blackbox(op, xi=2, rng=rng)
    assert res.rank == 2
    assert res.ext_degree == 1
    assert res.confidence == 0.5


def test_rank_extension_degree_clears_threshold():
    rng = np.random.default_rng(16)
    op = diagonal_operator([1, 2, 0, 4], F101)
    res = rank_blackbox(op, xi=100, rng=rng)
    # 8 * 4 * 100 = 3200 needs 101^2
    assert res.ext_degree == 2
    assert res.rank == 3


def test_rank_over_extension_field_input():
    F4 = ExtField(2, 2)
    y = (0, 1)
    op = diagonal_operator([F4.one, y, F4.zero], F4)
    res = rank_blackbox(op, rng=np.random.default_rng(17))
    assert res.rank == 2
    assert res.ext_degree > 1


def test_rank_monotone_in_trials():
    rng = np.random.default_rng(18)
    M = planted_rank_dense(6, 6, 4, F101, rng)
    op = dense_op(M, F101)
    for seed in range(5):
        one = rank_blackbox(op, rng=np.random.default_rng(seed), trials=1).rank
        three = rank_blackbox(op, rng=np.random.default_rng(seed), trials=3).rank
        assert one <= three <= 4


def test_rank_budget_per_trial():
    rng = np.random.default_rng(19)
    n = 10
    M = planted_rank_dense(n, n, 7, F101, rng)
    op = dense_op(M, F101)
    trials = 3
    before = op.counter.count
    rank_blackbox(op, rng=np.random.default_rng(20), trials=trials)
    assert op.counter.count - before <= 4 * n * trials


@pytest.mark.parametrize("p,d,e,i", [
    (2, 1, 2, 1),
    (2, 2, 2, 1),
    (3, 1, 3, 2),
    (3, 2, 2, 0),
    (5, 1, 4, 3),
])
def test_rank_of_embedded_powers(p, d, e, i):
    F = PrimeField(p)
    rng = np.random.default_rng(100 + p * 10 + d + e + i)
    from localsnf.rings import random_irreducible
    f = random_irreducible(F, d, rng)
    ring = PolyQuotRing(F, f, e)
    elt = ring.one if i == 0 else ring.uniformizer_pow(i)
    op = from_triplets(TripletMatrix(1, 1, ring, [(1, 1, elt)]))
    emb = embed_phi(op, e)
    res = rank_blackbox(emb, rng=rng)
    assert res.rank == d * (e - i)


def test_lifted_operator_matches_source():
    # lifting to the extension must commute with applying the source
    rng = np.random.default_rng(21)
    M = planted_rank_dense(5, 5, 3, F101, rng)
    op = dense_op(M, F101)
    big = ExtField(101, 2)
    lifted = lift_field_operator(op, big, rng)
    v = [F101.random(rng) for _ in range(5)]
    vb = [(x, 0) for x in v]
    out = lifted.apply(vb)
    expected = dense_matvec(M, v, F101)
    assert out == [(x, 0) for x in expected]
    # and on a vector with a nonconstant coordinate: apply coefficientwise
    v2 = [(F101.random(rng), F101.random(rng)) for _ in range(5)]
    out2 = lifted.apply(v2)
    exp0 = dense_matvec(M, [a for a, _ in v2], F101)
    exp1 = dense_matvec(M, [b for _, b in v2], F101)
    assert out2 == list(zip(exp0, exp1))


def test_lifted_ext_field_operator_matches_source():
    F4 = ExtField(2, 2)
    rng = np.random.default_rng(22)
    M = [[F4.random(rng) for _ in range(4)] for _ in range(4)]
    op = dense_op(M, F4)
    big = ExtField(2, 6)
    lifted = lift_field_operator(op, big, rng)
    emb = lifted.embed_element
    # the embedding must be a ring homomorphism
    for _ in range(10):
        a, b = F4.random(rng), F4.random(rng)
        assert emb(F4.mul(a, b)) == big.mul(emb(a), emb(b))
        assert emb(F4.add(a, b)) == big.add(emb(a), emb(b))
    # lifted agrees with the source on embedded vectors
    v = [F4.random(rng) for _ in range(4)]
    out = lifted.apply([emb(x) for x in v])
    assert out == [emb(x) for x in dense_matvec(M, v, F4)]
    # and is genuinely linear over the big field
    w1 = [big.random(rng) for _ in range(4)]
    w2 = [big.random(rng) for _ in range(4)]
    s = big.random(rng)
    lhs = lifted.apply([big.add(a, big.mul(s, b)) for a, b in zip(w1, w2)])
    r1, r2 = lifted.apply(w1), lifted.apply(w2)
    assert lhs == [big.add(a, big.mul(s, b)) for a, b in zip(r1, r2)]


# ---------------------------------------------------------------------------
# nullspace sampling
# ---------------------------------------------------------------------------


def test_nullspace_zero_matrix_full_basis():
    rng = np.random.default_rng(23)
    Z = from_triplets(TripletMatrix(4, 4, F5, []))
    cols = nullspace_sample(Z, 4, rng)
    assert len(cols) == 4
    assert field_rank([list(r) for r in zip(*cols)], F5) == 4


def test_nullspace_projection_kernel():
    rng = np.random.default_rng(24)
    op = diagonal_operator([1, 1, 0], F7)
    (col,) = nullspace_sample(op, 1, rng)
    assert col[0] == 0 and col[1] == 0 and col[2] != 0


def test_nullspace_planted():
    rng = np.random.default_rng(25)
    M = planted_rank_dense(8, 8, 5, F101, rng)
    op = dense_op(M, F101)
    cols = nullspace_sample(op, 3, np.random.default_rng(26))
    assert len(cols) == 3
    for col in cols:
        assert dense_matvec(M, col, F101) == [0] * 8
    assert field_rank([list(r) for r in zip(*cols)], F101) == 3


def test_nullspace_vectors_are_exact_not_probable():
    # every returned vector is verified by an actual apply; run many seeds
    rng_m = np.random.default_rng(27)
    M = planted_rank_dense(6, 6, 4, F101, rng_m)
    op = dense_op(M, F101)
    for seed in range(10):
        cols = nullspace_sample(op, 2, np.random.default_rng(300 + seed))
        for col in cols:
            assert dense_matvec(M, col, F101) == [0] * 6


def test_nullspace_insufficient_on_invertible():
    rng = np.random.default_rng(28)
    with pytest.raises(InsufficientNullity):
        nullspace_sample(identity_operator(3, F101), 2, rng)


def test_nullspace_small_field():
    # small fields make undershoot likelier; retries must still converge
    rng_m = np.random.default_rng(29)
    M = planted_rank_dense(6, 6, 3, F5, rng_m)
    op = dense_op(M, F5)
    cols = nullspace_sample(op, 3, np.random.default_rng(30))
    assert len(cols) == 3
    for col in cols:
        assert dense_matvec(M, col, F5) == [0] * 6
