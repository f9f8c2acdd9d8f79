"""Ring arithmetic tests.

Fixed example values come first, each checked against an oracle that is
deliberately independent of the library code path (schoolbook long division
written inline, exhaustive searches, direct evaluation).  Property checks on
randomly sampled elements follow.
"""

import numpy as np
import pytest

from localsnf.rings import (
    ExtField,
    GaloisRing,
    LocalIntRing,
    NonUnit,
    PolyQuotRing,
    PrimeField,
    arith,
    parse_ring,
    random_irreducible,
)


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------


def longdiv_rem(a, b, p):
    """Schoolbook remainder of a by monic b over Z_p, digit by digit."""
    r = [c % p for c in a]
    db = len(b) - 1
    while len(r) > db:
        lead = r[-1]
        if lead:
            shift = len(r) - 1 - db
            for k in range(db + 1):
                r[shift + k] = (r[shift + k] - lead * b[k]) % p
        r.pop()
    while r and r[-1] == 0:
        r.pop()
    return tuple(r)


def f2_mul(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] ^= x & y
    return tuple(out)


def f2_has_proper_factor(f):
    """Exhaustive search for a monic factor of degree 1 or 2 over F_2."""
    deg = len(f) - 1
    candidates = [(0, 1), (1, 1), (0, 0, 1), (1, 0, 1), (0, 1, 1), (1, 1, 1)]
    for g in candidates:
        if len(g) - 1 >= deg:
            continue
        # trial multiply g against every monic cofactor of the right degree
        cdeg = deg - (len(g) - 1)
        for k in range(2 ** cdeg):
            cof = tuple((k >> t) & 1 for t in range(cdeg)) + (1,)
            prod = f2_mul(g, cof)
            prod = prod + (0,) * (len(f) - len(prod))
            if prod == tuple(f):
                return True
    return False


# ---------------------------------------------------------------------------
# fixed values
# ---------------------------------------------------------------------------


def test_z9_arithmetic():
    Z9 = LocalIntRing(3, 2)
    assert Z9.add(5, 7) == 3
    assert Z9.invert(2) == 5
    with pytest.raises(NonUnit):
        Z9.invert(3)


def test_polyquot_product_matches_long_division():
    # z * z^3 in F_3[z]/((z^2+1)^2); oracle reduces z^4 by schoolbook division
    R = PolyQuotRing(PrimeField(3), (1, 0, 1), 2)
    z = (0, 1, 0, 0)
    z3 = (0, 0, 0, 1)
    got = R.mul(z, z3)
    modulus = (1, 0, 2, 0, 1)  # (z^2+1)^2 expanded by hand
    want = longdiv_rem((0, 0, 0, 0, 1), modulus, 3)
    assert got == want + (0,) * (4 - len(want))


def test_add_zero_is_identity():
    rng = np.random.default_rng(7)
    for ring in (PrimeField(7), LocalIntRing(2, 5), ExtField(3, 2),
                 GaloisRing(2, 3, 2), PolyQuotRing(PrimeField(5), (2, 1), 3)):
        a = ring.random(rng)
        assert ring.add(a, ring.zero) == a


def test_gf25_inverse_against_exhaustive_search():
    F = ExtField(5, 2)
    assert F.modulus == (2, 0, 1)  # y^2 + 2
    y = (0, 1)
    got = F.invert(y)
    hits = [g for g in ((a, b) for a in range(5) for b in range(5))
            if F.mul(y, g) == F.one]
    assert hits == [got]


def test_valuation_z81():
    Z81 = LocalIntRing(3, 4)
    assert Z81.valuation(18) == 2
    assert Z81.valuation(0) == 4


def test_valuation_polyquot():
    # z^2+1 = (z+1)^2 over F_2, valuation 2 in F_2[z]/((z+1)^3)
    R = PolyQuotRing(PrimeField(2), (1, 1), 3)
    assert longdiv_rem((1, 0, 1), f2_mul((1, 1), (1, 1)), 2) == ()
    assert R.valuation((1, 0, 1)) == 2


def test_random_irreducible_degree_one():
    rng = np.random.default_rng(0)
    for _ in range(10):
        f = random_irreducible(PrimeField(2), 1, rng)
        assert f in ((0, 1), (1, 1))


def test_random_irreducible_has_no_roots():
    rng = np.random.default_rng(1)
    f = random_irreducible(PrimeField(3), 2, rng)
    for x in range(3):
        value = sum(c * x ** k for k, c in enumerate(f)) % 3
        assert value != 0


def test_random_irreducible_cubic_over_f2():
    rng = np.random.default_rng(2)
    for _ in range(8):
        f = random_irreducible(PrimeField(2), 3, rng)
        assert not f2_has_proper_factor(f)


# ---------------------------------------------------------------------------
# properties on sampled elements
# ---------------------------------------------------------------------------

RINGS = [
    PrimeField(2),
    PrimeField(433),
    ExtField(2, 3),
    ExtField(5, 2),
    LocalIntRing(3, 2),
    LocalIntRing(2, 7),
    GaloisRing(3, 2, 2),
    GaloisRing(2, 4, 3),
    PolyQuotRing(PrimeField(3), (1, 0, 1), 2),
    PolyQuotRing(PrimeField(2), (1, 1), 3),
    PolyQuotRing(ExtField(2, 2), (2, 1, 1), 2),
]


@pytest.mark.parametrize("ring", RINGS, ids=lambda r: r.descriptor())
def test_ring_axioms_sampled(ring):
    rng = np.random.default_rng(11)
    for _ in range(10):
        a, b, c = (ring.random(rng) for _ in range(3))
        assert ring.add(a, b) == ring.add(b, a)
        assert ring.mul(a, b) == ring.mul(b, a)
        assert ring.add(ring.add(a, b), c) == ring.add(a, ring.add(b, c))
        assert ring.mul(ring.mul(a, b), c) == ring.mul(a, ring.mul(b, c))
        assert ring.mul(a, ring.add(b, c)) == ring.add(ring.mul(a, b), ring.mul(a, c))
        assert ring.add(a, ring.neg(a)) == ring.zero
        assert ring.sub(a, b) == ring.add(a, ring.neg(b))
        assert arith(ring, a, b, "mul") == ring.mul(a, b)


@pytest.mark.parametrize("ring", RINGS, ids=lambda r: r.descriptor())
def test_inverse_and_nonunit(ring):
    rng = np.random.default_rng(13)
    for _ in range(12):
        a = ring.random(rng)
        if ring.is_unit(a):
            assert ring.mul(a, ring.invert(a)) == ring.one
        else:
            assert ring.valuation(a) >= 1
            with pytest.raises(NonUnit):
                ring.invert(a)


def test_valuation_multiplicative():
    rng = np.random.default_rng(17)
    for ring in (LocalIntRing(3, 4), LocalIntRing(2, 6),
                 PolyQuotRing(PrimeField(3), (1, 0, 1), 3)):
        e = ring.e
        for _ in range(40):
            a, b = ring.random(rng), ring.random(rng)
            va, vb = ring.valuation(a), ring.valuation(b)
            vab = ring.valuation(ring.mul(a, b))
            if va + vb < e:
                assert vab == va + vb
            else:
                assert vab == e


def test_galois_residue_is_surjective_homomorphism():
    ring = GaloisRing(3, 2, 2)
    F = ring.residue_field()
    rng = np.random.default_rng(19)
    seen = set()
    for _ in range(200):
        a, b = ring.random(rng), ring.random(rng)
        assert ring.residue(ring.add(a, b)) == F.add(ring.residue(a), ring.residue(b))
        assert ring.residue(ring.mul(a, b)) == F.mul(ring.residue(a), ring.residue(b))
        seen.add(ring.residue(a))
    assert len(seen) == F.size  # hits all of GF(9)


def test_residue_lift_round_trip():
    rng = np.random.default_rng(23)
    for ring in RINGS:
        F = ring.residue_field()
        for _ in range(8):
            a = ring.random(rng)
            r = ring.residue(a)
            assert ring.residue(ring.lift_residue(r)) == r
            assert F.valuation(r) == (0 if ring.is_unit(a) else F.e)


def test_uniformizer_powers_and_exact_division():
    rng = np.random.default_rng(29)
    for ring in (LocalIntRing(5, 3), GaloisRing(2, 3, 2),
                 PolyQuotRing(PrimeField(3), (1, 1), 4)):
        for i in range(ring.e + 1):
            assert ring.valuation(ring.uniformizer_pow(i)) == i
        for _ in range(10):
            u = ring.random_unit(rng)
            v = int(rng.integers(ring.e))
            a = ring.mul(u, ring.uniformizer_pow(v))
            assert ring.valuation(a) == v
            assert ring.mul(ring.div_uniformizer(a, v), ring.uniformizer_pow(v)) == a


def test_sms_integer_encoding_round_trip():
    rng = np.random.default_rng(31)
    for ring in RINGS:
        for _ in range(15):
            a = ring.random(rng)
            v = ring.encode_int(a)
            assert 0 <= v < ring.limb_mod ** ring.width
            assert ring.decode_int(v) == a


def test_descriptor_round_trip():
    for text in ("Zp:7", "Zp:433", "Zpe:3^5", "Zpe:2^10",
                 "GR:3^5:11", "GR:2^4:3",
                 "PQ:2:1,1^3", "PQ:3:1,0,1^2", "PQ:2:2:2,1,1^2"):
        ring = parse_ring(text)
        assert ring.descriptor() == text
        assert parse_ring(ring.descriptor()) == ring


def test_bad_descriptors_rejected():
    for text in ("Zp:6", "Zpe:4^2", "Qq:5", "PQ:2:1,1", "GR:3^0:2", "Zp:"):
        with pytest.raises(ValueError):
            parse_ring(text)


def test_construction_validates():
    with pytest.raises(ValueError):
        PrimeField(91)  # 7 * 13
    with pytest.raises(ValueError):
        ExtField(2, 2, (1, 1, 1, 1))  # wrong degree
    with pytest.raises(ValueError):
        PolyQuotRing(PrimeField(2), (1, 0, 1), 2)  # z^2+1 = (z+1)^2 over F_2
    with pytest.raises(ValueError):
        GaloisRing(2, 3, 2, (0, 0, 1))  # y^2 reducible mod 2


def test_exponent_projection():
    R = PolyQuotRing(PrimeField(3), (1, 0, 1), 3)
    R2 = R.with_exponent(2)
    rng = np.random.default_rng(37)
    for _ in range(10):
        a, b = R.random(rng), R.random(rng)
        # projection commutes with multiplication
        assert R.project(R.mul(a, b), R2) == R2.mul(R.project(a, R2), R.project(b, R2))
