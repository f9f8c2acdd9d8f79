import itertools

import numpy as np
import pytest

from localsnf.dense_oracle import DenseMatrix, dense_smith_local
from localsnf.generate import planted_dense, planted_triplets, spaced_valuations
from localsnf.operators import diagonal_operator, embed_phi, from_triplets, identity_operator
from localsnf.rings import parse_ring
from localsnf.smith_poly import (
    InconsistentProfile,
    RankProfile,
    RetriesExhausted,
    SmithMultiplicities,
    rank_profile,
    smith_fe,
    solve_rank_system,
)

from oracles import field_rank, op_to_dense

F3F2 = parse_ring("PQ:3:1,1^2")      # F_3[z]/((z+1)^2), d = 1
F5F3 = parse_ring("PQ:5:1,1^3")      # F_5[z]/((z+1)^3), d = 1
F5Q3 = parse_ring("PQ:5:2,0,1^3")    # F_5[z]/((z^2+2)^3), d = 2


def forward_ranks(mults, rz, d, e, n):
    return tuple(d * sum((ell - i) * r for i, r in enumerate(mults[:ell]))
                 for ell in range(1, e + 1))


def test_multiplicities_validation():
    s = SmithMultiplicities(ring="PQ:3:1,1^2", multiplicities=(2, 1), r_zero=1)
    assert s.total == 4
    assert s.nonzero == 3
    assert s.valuations() == [0, 0, 1, None]
    with pytest.raises(ValueError):
        SmithMultiplicities(ring="x", multiplicities=(-1, 0), r_zero=0)


def test_solve_examples():
    out = solve_rank_system(RankProfile(ring="r", rho=(2, 5), d=1, e=2, n=4))
    assert out.multiplicities == (2, 1) and out.r_zero == 1
    out = solve_rank_system(RankProfile(ring="r", rho=(2, 6, 10), d=2, e=3, n=3))
    assert out.multiplicities == (1, 1, 0) and out.r_zero == 1


def test_solve_rejects_bad_profiles():
    with pytest.raises(InconsistentProfile):
        solve_rank_system(RankProfile(ring="r", rho=(3, 5), d=2, e=2, n=3))
    with pytest.raises(InconsistentProfile):
        # second difference goes negative
        solve_rank_system(RankProfile(ring="r", rho=(2, 3), d=1, e=2, n=4))
    with pytest.raises(InconsistentProfile):
        # multiplicities (3, 2) sum past n = 4
        solve_rank_system(RankProfile(ring="r", rho=(3, 8), d=1, e=2, n=4))


def test_solve_forward_roundtrip_exhaustive():
    for d, e in itertools.product((1, 2, 3), (1, 2, 3, 4)):
        for n in range(1, 7):
            parts = itertools.product(*(range(n + 1) for _ in range(e)))
            for mults in parts:
                if sum(mults) > n:
                    continue
                rho = forward_ranks(mults, n - sum(mults), d, e, n)
                got = solve_rank_system(
                    RankProfile(ring="r", rho=rho, d=d, e=e, n=n))
                assert got.multiplicities == mults
                assert got.r_zero == n - sum(mults)


def test_rank_profile_identity():
    A = identity_operator(3, F3F2)
    prof = rank_profile(A, rng=np.random.default_rng(0))
    assert prof.rho == (3, 6)
    assert (prof.d, prof.e, prof.n) == (1, 2, 3)
    assert prof.ring == F3F2.descriptor()


def test_rank_profile_zero_1x1():
    A = diagonal_operator([F5F3.zero], F5F3)
    prof = rank_profile(A, rng=np.random.default_rng(1))
    assert prof.rho == (0, 0, 0)


def test_rank_profile_diagonal_powers():
    vals = [F5F3.one, F5F3.uniformizer_pow(1), F5F3.uniformizer_pow(2)]
    A = diagonal_operator(vals, F5F3)
    prof = rank_profile(A, rng=np.random.default_rng(2))
    assert prof.rho == (1, 3, 6)
    # the same ranks, straight from dense echelon of the embedded images
    for ell in (1, 2, 3):
        B = embed_phi(diagonal_operator(vals, F5F3), ell)
        dense = op_to_dense(B)
        assert field_rank(dense, B.ring) == prof.rho[ell - 1]


def test_rank_profile_rejects_wrong_ring():
    from localsnf.rings import LocalIntRing
    A = identity_operator(2, LocalIntRing(3, 2))
    with pytest.raises(TypeError):
        rank_profile(A)


def test_rank_profile_rejects_rectangular():
    T = planted_triplets(3, 4, F3F2, [0, 1, None], np.random.default_rng(3))
    with pytest.raises(ValueError):
        rank_profile(from_triplets(T))


def test_smith_fe_identity():
    out = smith_fe(identity_operator(5, F3F2), rng=np.random.default_rng(4))
    assert out.multiplicities == (5, 0) and out.r_zero == 0


def test_smith_fe_planted_small():
    rng = np.random.default_rng(5)
    T = planted_triplets(4, 4, F3F2, [0, 0, 1, None], rng)
    out = smith_fe(from_triplets(T), rng=rng)
    assert out.multiplicities == (2, 1) and out.r_zero == 1
    assert out.ring == F3F2.descriptor()


def test_smith_fe_against_dense_oracle():
    rng = np.random.default_rng(6)
    for trial in range(20):
        counts = [0] * (F5Q3.e + 1)
        for _ in range(8):
            counts[int(rng.integers(0, F5Q3.e + 1))] += 1
        vals = spaced_valuations(counts, F5Q3.e)
        M = planted_dense(8, 8, F5Q3, vals, rng)
        out = smith_fe(from_triplets(triplets_of(M, F5Q3)), rng=rng)
        oracle = dense_smith_local(DenseMatrix.from_rows(F5Q3, M))
        assert out.multiplicities == oracle.multiplicities == tuple(counts[:-1])
        assert out.r_zero == oracle.r_zero == counts[-1]


def triplets_of(M, ring):
    from localsnf.operators import TripletMatrix
    entries = [(i + 1, j + 1, x) for i, row in enumerate(M)
               for j, x in enumerate(row) if x != ring.zero]
    return TripletMatrix(rows=len(M), cols=len(M[0]), ring=ring,
                         entries=entries)


def test_smith_fe_budget():
    rng = np.random.default_rng(7)
    d, e, n = 2, 3, 6
    vals = spaced_valuations((2, 1, 1, 2), e)
    T = planted_triplets(n, n, F5Q3, vals, rng)
    A = from_triplets(T)
    out = smith_fe(A, rng=rng)
    assert out.multiplicities == (2, 1, 1)
    assert A.counter.count <= 16 * d * e * e * n


def test_smith_fe_degenerate_field_case():
    ring = parse_ring("PQ:3:1,1^1")
    rng = np.random.default_rng(8)
    T = planted_triplets(5, 5, ring, [0, 0, 0, None, None], rng)
    out = smith_fe(from_triplets(T), rng=rng)
    assert out.multiplicities == (3,) and out.r_zero == 2


def test_smith_fe_retries_exhausted(monkeypatch):
    import localsnf.smith_poly as sp

    def broken(A, xi=100, rng=None):
        return RankProfile(ring=F3F2.descriptor(), rho=(1, 1), d=1, e=2, n=3)

    monkeypatch.setattr(sp, "rank_profile", broken)
    with pytest.raises(RetriesExhausted):
        smith_fe(identity_operator(3, F3F2), rng=np.random.default_rng(9),
                 retries=3)
