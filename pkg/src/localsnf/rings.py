"""Exact arithmetic over the base structures.

Five ring descriptors: prime fields Z_p, extension fields GF(p^m), the local
integer rings Z_{p^e}, Galois rings GR(p^e, eta), and polynomial quotient
rings F[z]/(f^ell).  A descriptor is immutable and hashable; elements are
plain Python values (ints for the integer rings, fixed-length tuples of
coefficients for the polynomial ones), always kept in canonical reduced form
so that equality and hashing are structural.

Every descriptor implements the same small protocol:

    zero, one, p, e          identities, characteristic, nilpotency exponent
    add sub mul neg          exact arithmetic, canonical results
    invert is_unit           units and NonUnit errors
    valuation                uniformizer exponent, e encodes "zero"
    residue_field residue    reduction modulo the maximal ideal
    lift_residue             canonical section of residue
    random                   uniform element from a numpy Generator
    descriptor               textual form (the four CLI-visible rings)
    width limb_mod to_limbs  flat integer-limb layout used by the bulk
    from_limbs               numeric kernels and the SMS integer encoding

Fields are the degenerate case e = 1, so elimination code can treat every
ring uniformly.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Sequence, Tuple

import numpy as np

from .polynomials import (
    first_irreducible,
    gpoly_divmod,
    gpoly_ext_gcd,
    gpoly_is_irreducible,
    gpoly_mul,
    gpoly_trim,
    is_irreducible,
    is_prime,
    poly_divmod,
    poly_ext_gcd,
    poly_mul,
    poly_pow,
    poly_rem_monic,
    poly_trim,
)


class NonUnit(ArithmeticError):
    """Inversion was requested for an element of the maximal ideal."""


class RingMismatch(ValueError):
    """Operands belong to different ring instances."""


def _pad(c: Sequence, n: int, zero=0) -> tuple:
    c = tuple(c)
    if len(c) > n:
        raise ValueError("coefficient vector too long")
    return c + (zero,) * (n - len(c))


class _Ring:
    """Shared plumbing; concrete rings fill in the arithmetic."""

    # subclasses set: p, e, width, limb_mod, size

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def is_unit(self, a) -> bool:
        return self.valuation(a) == 0

    def arith(self, a, b, op: str):
        """Dispatcher form of the binary arithmetic, op in add/sub/mul/negate."""
        if op == "add":
            return self.add(a, b)
        if op == "sub":
            return self.sub(a, b)
        if op == "mul":
            return self.mul(a, b)
        if op == "negate":
            return self.neg(a)
        raise ValueError(f"unknown op {op!r}")

    def random_unit(self, rng):
        while True:
            a = self.random(rng)
            if self.is_unit(a):
                return a

    def uniformizer_pow(self, i: int):
        """The element p^i (resp. f^i), i in [0, e]; i = e gives zero."""
        out = self.one
        for _ in range(i):
            out = self.mul(out, self.uniformizer)
        return out

    def div_uniformizer(self, a, v: int):
        # local rings override this; in a field only v = 0 makes sense
        if v:
            raise NonUnit("cannot divide by a uniformizer power in a field")
        return a

    def encode_int(self, a) -> int:
        """Pack an element into one nonnegative integer (SMS value token)."""
        v = 0
        for limb in reversed(self.to_limbs(a)):
            v = v * self.limb_mod + limb
        return v

    def decode_int(self, v: int):
        if v < 0:
            raise ValueError("negative SMS value")
        limbs = []
        for _ in range(self.width):
            limbs.append(v % self.limb_mod)
            v //= self.limb_mod
        if v:
            raise ValueError("value exceeds the ring's encoding range")
        return self.from_limbs(limbs)

    def element(self, x):
        """Coerce an int (decode_int) or flat limb sequence into the ring."""
        if isinstance(x, int):
            return self.decode_int(x % (self.limb_mod ** self.width))
        return self.from_limbs(_pad(tuple(x), self.width))

    def __eq__(self, other):
        return type(self) is type(other) and self._key() == other._key()

    def __hash__(self):
        return hash((type(self).__name__,) + self._key())


class PrimeField(_Ring):
    """Z_p for a machine-word prime p.  Elements are ints in [0, p)."""

    def __init__(self, p: int):
        if not (2 <= p < 2 ** 63):
            raise ValueError("p must be a machine-word integer >= 2")
        if not is_prime(p):
            raise ValueError(f"{p} is not prime")
        self.p = p
        self.e = 1
        self.zero = 0
        self.one = 1 % p
        self.width = 1
        self.limb_mod = p
        self.size = p
        self.uniformizer = 0

    def _key(self):
        return (self.p,)

    def add(self, a, b):
        return (a + b) % self.p

    def neg(self, a):
        return -a % self.p

    def mul(self, a, b):
        return a * b % self.p

    def invert(self, a):
        if a % self.p == 0:
            raise NonUnit("0 has no inverse")
        return pow(a, self.p - 2, self.p)

    def valuation(self, a) -> int:
        return 0 if a % self.p else 1

    def residue_field(self):
        return self

    def residue(self, a):
        return a

    def lift_residue(self, a):
        return a

    def random(self, rng):
        return int(rng.integers(self.p))

    def to_limbs(self, a):
        return (a,)

    def from_limbs(self, limbs):
        return limbs[0] % self.p

    def descriptor(self) -> str:
        return f"Zp:{self.p}"

    def __repr__(self):
        return f"PrimeField({self.p})"


class ExtField(_Ring):
    """GF(p^m) as Z_p[y]/(modulus).  Elements are m-tuples, low degree first.

    The modulus defaults to the lexicographically least monic irreducible of
    degree m, so ExtField(p, m) is canonical and reproducible.

    Fields of at most _LOG_LIMIT elements get a discrete-log table pair
    (built once per (p, m, modulus) and shared), turning mul and invert
    into exponent arithmetic.  Above the limit the polynomial fallback is
    used unchanged.
    """

    _LOG_LIMIT = 700_000
    _LOG_CACHE: dict = {}

    def __init__(self, p: int, m: int, modulus: Sequence[int] | None = None):
        base = p if isinstance(p, PrimeField) else PrimeField(p)
        if m < 1:
            raise ValueError("extension degree must be >= 1")
        if modulus is None:
            modulus = first_irreducible(base.p, m)
        modulus = tuple(c % base.p for c in modulus)
        if len(poly_trim(modulus)) != m + 1 or modulus[-1] != 1:
            raise ValueError("modulus must be monic of degree m")
        if not is_irreducible(modulus, base.p):
            raise ValueError("modulus is reducible")
        self.base = base
        self.p = base.p
        self.m = m
        self.modulus = modulus
        self.e = 1
        self.zero = (0,) * m
        self.one = _pad((1 % base.p,), m)
        self.width = m
        self.limb_mod = base.p
        self.size = base.p ** m
        self.uniformizer = self.zero
        self._log = None
        if m > 1 and self.size <= ExtField._LOG_LIMIT:
            self._log = self._log_tables()

    def _key(self):
        return (self.p, self.m, self.modulus)

    def _raw_mul(self, a, b):
        prod = poly_mul(a, b, self.p)
        return _pad(poly_rem_monic(prod, self.modulus, self.p), self.m)

    def _log_tables(self):
        key = self._key()
        hit = ExtField._LOG_CACHE.get(key)
        if hit is not None:
            return hit
        p, m, order = self.p, self.m, self.size - 1

        fac = []
        t, x = 2, order
        while t * t <= x:
            if x % t == 0:
                fac.append(t)
                while x % t == 0:
                    x //= t
            t += 1
        if x > 1:
            fac.append(x)

        def raw_pow(a, k):
            out, b = self.one, a
            while k:
                if k & 1:
                    out = self._raw_mul(out, b)
                b = self._raw_mul(b, b)
                k >>= 1
            return out

        gen = None
        for enc in range(2, self.size):
            cand = []
            v = enc
            for _ in range(m):
                cand.append(v % p)
                v //= p
            cand = tuple(cand)
            if all(raw_pow(cand, order // f) != self.one for f in fac):
                gen = cand
                break
        assert gen is not None, "no primitive element found"

        # columns of the multiply-by-gen matrix: gen * y^j reduced
        cols = []
        cur = gen
        for _ in range(m):
            cols.append(cur)
            top = cur[m - 1]
            nxt = (0,) + cur[:m - 1]
            if top:
                nxt = tuple((nxt[i] - top * self.modulus[i]) % p
                            for i in range(m))
            cur = tuple(nxt)
        Mg = np.array(cols, dtype=np.int64).T

        # antilog rows gen^0 .. gen^(order-1), filled block by block
        block = 1 << 11
        MB = np.eye(m, dtype=np.int64)
        E, k = Mg.copy(), block
        while k:
            if k & 1:
                MB = (MB @ E) % p
            E = (E @ E) % p
            k >>= 1
        alog = np.zeros((order, m), dtype=np.int16)
        vec = np.array(self.one, dtype=np.int64)
        for i in range(min(block, order)):
            alog[i] = vec
            vec = (Mg @ vec) % p
        for start in range(block, order, block):
            stop = min(start + block, order)
            alog[start:stop] = (
                alog[start - block:stop - block].astype(np.int64) @ MB.T) % p

        pw = p ** np.arange(m, dtype=np.int64)
        enc_all = alog.astype(np.int64) @ pw
        log = np.full(self.size, -1, dtype=np.int64)
        log[enc_all] = np.arange(order, dtype=np.int64)
        assert (log[enc_all] >= 0).all() and int(log[1]) == 0, \
            "discrete-log table construction failed"
        tables = (log, alog, int(order))
        ExtField._LOG_CACHE[key] = tables
        return tables

    def add(self, a, b):
        p = self.p
        return tuple((x + y) % p for x, y in zip(a, b))

    def neg(self, a):
        p = self.p
        return tuple(-x % p for x in a)

    def mul(self, a, b):
        t = self._log
        if t is None:
            return self._raw_mul(a, b)
        log, alog, order = t
        p = self.p
        ia = 0
        for c in reversed(a):
            ia = ia * p + c
        if ia == 0:
            return self.zero
        ib = 0
        for c in reversed(b):
            ib = ib * p + c
        if ib == 0:
            return self.zero
        row = alog[(log[ia] + log[ib]) % order]
        return tuple(map(int, row))

    def invert(self, a):
        if not any(a):
            raise NonUnit("0 has no inverse")
        t = self._log
        if t is not None:
            log, alog, order = t
            p = self.p
            ia = 0
            for c in reversed(a):
                ia = ia * p + c
            row = alog[(order - log[ia]) % order]
            return tuple(map(int, row))
        g, s, _ = poly_ext_gcd(a, self.modulus, self.p)
        assert g == (1,), "modulus is irreducible, gcd must be 1"
        return _pad(s, self.m)

    def valuation(self, a) -> int:
        return 0 if any(a) else 1

    def residue_field(self):
        return self

    def residue(self, a):
        return a

    def lift_residue(self, a):
        return a

    def random(self, rng):
        return tuple(int(x) for x in rng.integers(self.p, size=self.m))

    def to_limbs(self, a):
        return tuple(a)

    def from_limbs(self, limbs):
        p = self.p
        return _pad(tuple(x % p for x in limbs), self.m)

    def descriptor(self) -> str:
        return f"GF:{self.p}^{self.m}"

    def __repr__(self):
        return f"ExtField({self.p}, {self.m})"


class LocalIntRing(_Ring):
    """Z_{p^e}.  Elements are ints in [0, p^e); p^e is exact (big) integer."""

    def __init__(self, p: int, e: int):
        if not (2 <= p < 2 ** 63):
            raise ValueError("p must be a machine-word integer >= 2")
        if not is_prime(p):
            raise ValueError(f"{p} is not prime")
        if e < 1:
            raise ValueError("e must be >= 1")
        self.p = p
        self.e = e
        self.modulus = p ** e
        self.zero = 0
        self.one = 1 % self.modulus
        self.width = 1
        self.limb_mod = self.modulus
        self.size = self.modulus
        self.uniformizer = p % self.modulus

    def _key(self):
        return (self.p, self.e)

    def add(self, a, b):
        return (a + b) % self.modulus

    def neg(self, a):
        return -a % self.modulus

    def mul(self, a, b):
        return a * b % self.modulus

    def invert(self, a):
        if a % self.p == 0:
            raise NonUnit(f"{a} is divisible by {self.p}")
        x = pow(a % self.p, self.p - 2, self.p)
        # Newton lifting doubles the precision each round
        e = 1
        while e < self.e:
            x = x * (2 - a * x) % self.modulus
            e *= 2
        assert a * x % self.modulus == 1
        return x

    def valuation(self, a) -> int:
        if a == 0:
            return self.e
        v = 0
        while a % self.p == 0:
            a //= self.p
            v += 1
        return v

    def div_uniformizer(self, a, v: int):
        """Exact division by p^v; the caller guarantees valuation(a) >= v."""
        q, r = divmod(a, self.p ** v)
        assert r == 0, "entry not divisible by the claimed power"
        return q

    def residue_field(self):
        return PrimeField(self.p)

    def residue(self, a):
        return a % self.p

    def lift_residue(self, a):
        return a % self.modulus

    def random(self, rng):
        # digitwise so that moduli beyond 2^63 stay exactly uniform
        v = 0
        for _ in range(self.e):
            v = v * self.p + int(rng.integers(self.p))
        return v

    def to_limbs(self, a):
        return (a,)

    def from_limbs(self, limbs):
        return limbs[0] % self.modulus

    def descriptor(self) -> str:
        return f"Zpe:{self.p}^{self.e}"

    def __repr__(self):
        return f"LocalIntRing({self.p}, {self.e})"


class GaloisRing(_Ring):
    """GR(p^e, eta) = Z_{p^e}[y]/(Gamma), Gamma monic irreducible mod p.

    Elements are eta-tuples with coefficients in [0, p^e).  Reduction mod p
    maps onto GF(p^eta); that map and its canonical section drive the
    small-prime preconditioner path.
    """

    def __init__(self, p: int, e: int, eta: int, gamma: Sequence[int] | None = None):
        inner = LocalIntRing(p, e)
        if eta < 1:
            raise ValueError("eta must be >= 1")
        if gamma is None:
            gamma = first_irreducible(p, eta)
        gamma = tuple(c % inner.modulus for c in gamma)
        if len(gamma) != eta + 1 or gamma[-1] != 1:
            raise ValueError("Gamma must be monic of degree eta")
        if not is_irreducible(tuple(c % p for c in gamma), p):
            raise ValueError("Gamma is reducible mod p")
        self.p = p
        self.e = e
        self.eta = eta
        self.gamma = gamma
        self.inner = inner
        self.modulus = inner.modulus
        self.zero = (0,) * eta
        self.one = _pad((1 % inner.modulus,), eta)
        self.width = eta
        self.limb_mod = inner.modulus
        self.size = inner.modulus ** eta
        self.uniformizer = _pad((p % inner.modulus,), eta)

    def _key(self):
        return (self.p, self.e, self.eta, self.gamma)

    def add(self, a, b):
        q = self.modulus
        return tuple((x + y) % q for x, y in zip(a, b))

    def neg(self, a):
        q = self.modulus
        return tuple(-x % q for x in a)

    def mul(self, a, b):
        prod = poly_mul(a, b, self.modulus)
        return _pad(poly_rem_monic(prod, self.gamma, self.modulus), self.eta)

    def invert(self, a):
        res = self.residue_field()
        x = _pad(res.invert(self.residue(a)), self.eta)
        e = 1
        two = _pad((2 % self.modulus,), self.eta)
        while e < self.e:
            x = self.mul(x, self.sub(two, self.mul(a, x)))
            e *= 2
        if self.mul(a, x) != self.one:
            raise AssertionError("Hensel lifting failed on a unit")
        return x

    def valuation(self, a) -> int:
        vals = [self.inner.valuation(c) for c in a]
        return min(vals) if vals else self.e

    def div_uniformizer(self, a, v: int):
        pv = self.p ** v
        out = []
        for c in a:
            q, r = divmod(c, pv)
            assert r == 0, "entry not divisible by the claimed power"
            out.append(q)
        return tuple(out)

    def residue_field(self):
        return _galois_residue(self.p, self.eta, self.gamma)

    def residue(self, a):
        p = self.p
        return tuple(c % p for c in a)

    def lift_residue(self, a):
        return tuple(c % self.modulus for c in a)

    def random(self, rng):
        return tuple(self.inner.random(rng) for _ in range(self.eta))

    def to_limbs(self, a):
        return tuple(a)

    def from_limbs(self, limbs):
        q = self.modulus
        return _pad(tuple(x % q for x in limbs), self.eta)

    def descriptor(self) -> str:
        return f"GR:{self.p}^{self.e}:{self.eta}"

    def __repr__(self):
        return f"GaloisRing({self.p}, {self.e}, {self.eta})"


@lru_cache(maxsize=None)
def _galois_residue(p: int, eta: int, gamma: Tuple[int, ...]) -> ExtField:
    return ExtField(p, eta, tuple(c % p for c in gamma))


class PolyQuotRing(_Ring):
    """F[z]/(f^ell) for F a prime or extension field, f monic irreducible.

    Elements are tuples of d*ell base-field elements (coefficients of z^0 ..
    z^(d*ell-1)).  Over a prime base the coefficients are ints and the fast
    integer polynomial helpers apply; over an extension base they are tuples
    and the generic helpers take over.
    """

    def __init__(self, field, f: Sequence, ell: int):
        if not isinstance(field, (PrimeField, ExtField)):
            raise TypeError("base must be PrimeField or ExtField")
        if ell < 1:
            raise ValueError("ell must be >= 1")
        self._prime_base = isinstance(field, PrimeField)
        if self._prime_base:
            f = poly_trim(tuple(c % field.p for c in f))
            if not f or f[-1] != 1:
                raise ValueError("f must be monic")
            self.d = len(f) - 1
            if self.d < 1:
                raise ValueError("f must have degree >= 1")
            if not is_irreducible(f, field.p):
                raise ValueError("f is reducible over the base field")
            self.quot_modulus = poly_pow(f, ell, field.p)
        else:
            f = gpoly_trim(tuple(field.element(c) if not isinstance(c, tuple) else field.from_limbs(c) for c in f), field)
            if not f or f[-1] != field.one:
                raise ValueError("f must be monic")
            self.d = len(f) - 1
            if self.d < 1:
                raise ValueError("f must have degree >= 1")
            if not gpoly_is_irreducible(f, field, field.size):
                raise ValueError("f is reducible over the base field")
            g = (field.one,)
            for _ in range(ell):
                g = gpoly_mul(g, f, field)
            self.quot_modulus = g
        self.field = field
        self.f = f
        self.ell = ell
        self.e = ell
        self.p = field.p
        self.deg = self.d * ell
        self.zero = (field.zero,) * self.deg
        self.one = _pad((field.one,), self.deg, field.zero)
        self.width = self.deg * field.width
        self.limb_mod = field.limb_mod
        self.size = field.size ** self.deg if field.size else None
        self.uniformizer = _pad(f, self.deg, field.zero) if ell > 1 else self.zero

    def _key(self):
        return (self.field._key(), self.f, self.ell)

    def add(self, a, b):
        F = self.field
        if self._prime_base:
            p = F.p
            return tuple((x + y) % p for x, y in zip(a, b))
        return tuple(F.add(x, y) for x, y in zip(a, b))

    def neg(self, a):
        F = self.field
        if self._prime_base:
            p = F.p
            return tuple(-x % p for x in a)
        return tuple(F.neg(x) for x in a)

    def mul(self, a, b):
        F = self.field
        if self._prime_base:
            prod = poly_mul(a, b, F.p)
            return _pad(poly_rem_monic(prod, self.quot_modulus, F.p), self.deg)
        prod = gpoly_mul(a, b, F)
        _, r = gpoly_divmod(prod, self.quot_modulus, F)
        return _pad(r, self.deg, F.zero)

    def invert(self, a):
        F = self.field
        if self.valuation(a) > 0:
            raise NonUnit("element lies in the maximal ideal (f)")
        if self._prime_base:
            g, s, _ = poly_ext_gcd(poly_trim(a), self.f, F.p)
            assert g == (1,)
            x = _pad(s, self.deg)
        else:
            g, s, _ = gpoly_ext_gcd(gpoly_trim(a, F), self.f, F)
            assert g == (F.one,)
            x = _pad(s, self.deg, F.zero)
        # lift the mod-f inverse up to mod f^ell
        two = self.add(self.one, self.one)
        steps = 1
        while steps < self.ell:
            x = self.mul(x, self.sub(two, self.mul(a, x)))
            steps *= 2
        if self.mul(a, x) != self.one:
            raise AssertionError("Hensel lifting failed on a unit")
        return x

    def _divmod_f(self, a):
        F = self.field
        if self._prime_base:
            q, r = poly_divmod(a, self.f, F.p)
        else:
            q, r = gpoly_divmod(gpoly_trim(a, F), self.f, F)
        return q, r

    def valuation(self, a) -> int:
        trimmed = poly_trim(a) if self._prime_base else gpoly_trim(a, self.field)
        if not trimmed:
            return self.ell
        v = 0
        while True:
            q, r = self._divmod_f(trimmed)
            if r:
                return v
            v += 1
            trimmed = q
            if not trimmed:
                return self.ell

    def div_uniformizer(self, a, v: int):
        cur = poly_trim(a) if self._prime_base else gpoly_trim(a, self.field)
        for _ in range(v):
            cur, r = self._divmod_f(cur)
            assert not r, "entry not divisible by the claimed power of f"
        return _pad(cur, self.deg, self.field.zero)

    def with_exponent(self, l: int) -> "PolyQuotRing":
        """The ring F[z]/(f^l) with the same f (l <= ell)."""
        if l == self.ell:
            return self
        return PolyQuotRing(self.field, self.f, l)

    def project(self, a, target: "PolyQuotRing"):
        """Reduce an element modulo f^l into the smaller quotient."""
        F = self.field
        if self._prime_base:
            r = poly_rem_monic(a, target.quot_modulus, F.p)
        else:
            _, r = gpoly_divmod(gpoly_trim(a, F), target.quot_modulus, F)
        return _pad(r, target.deg, F.zero)

    def residue_field(self):
        return self.with_exponent(1) if self.ell > 1 else self

    def residue(self, a):
        if self.ell == 1:
            return a
        return self.project(a, self.residue_field())

    def lift_residue(self, a):
        return _pad(tuple(a), self.deg, self.field.zero)

    def random(self, rng):
        F = self.field
        return tuple(F.random(rng) for _ in range(self.deg))

    def to_limbs(self, a):
        if self._prime_base:
            return tuple(a)
        out = []
        for c in a:
            out.extend(c)
        return tuple(out)

    def from_limbs(self, limbs):
        F = self.field
        if self._prime_base:
            p = F.p
            return _pad(tuple(x % p for x in limbs), self.deg)
        w = F.width
        return tuple(F.from_limbs(limbs[i * w:(i + 1) * w]) for i in range(self.deg))

    def descriptor(self) -> str:
        F = self.field
        if self._prime_base:
            coeffs = ",".join(str(c) for c in self.f)
            return f"PQ:{F.p}:{coeffs}^{self.ell}"
        coeffs = ",".join(str(F.encode_int(c)) for c in self.f)
        return f"PQ:{F.p}:{F.m}:{coeffs}^{self.ell}"

    def __repr__(self):
        return f"PolyQuotRing({self.field!r}, f deg {self.d}, ell={self.ell})"


def arith(ring, a, b, op: str):
    """Free-function dispatcher mirroring the ring method."""
    return ring.arith(a, b, op)


def random_irreducible(field, degree: int, rng):
    """A uniformly sampled monic irreducible of the given degree.

    Over a prime field the result is an integer coefficient tuple; over an
    extension field a tuple of field elements.  Expected O(degree) samples.
    """
    if degree < 1:
        raise ValueError("degree must be >= 1")
    if isinstance(field, PrimeField):
        p = field.p
        while True:
            cand = tuple(int(x) for x in rng.integers(p, size=degree)) + (1,)
            if is_irreducible(cand, p):
                return cand
    if isinstance(field, ExtField):
        while True:
            cand = tuple(field.random(rng) for _ in range(degree)) + (field.one,)
            if gpoly_is_irreducible(cand, field, field.size):
                return cand
    raise TypeError("random_irreducible needs a PrimeField or ExtField")


def parse_ring(text: str):
    """Parse the CLI ring descriptor forms.

    Zp:<p>  Zpe:<p>^<e>  GR:<p>^<e>:<eta>  PQ:<p>[:<m>]:<c0,c1,...>^<e>
    """
    parts = text.strip().split(":")
    try:
        kind = parts[0]
        if kind == "Zp" and len(parts) == 2:
            return PrimeField(int(parts[1]))
        if kind == "Zpe" and len(parts) == 2:
            p, e = parts[1].split("^")
            return LocalIntRing(int(p), int(e))
        if kind == "GR" and len(parts) == 3:
            p, e = parts[1].split("^")
            return GaloisRing(int(p), int(e), int(parts[2]))
        if kind == "PQ" and len(parts) in (3, 4):
            p = int(parts[1])
            if len(parts) == 4:
                base = ExtField(p, int(parts[2]))
                body = parts[3]
            else:
                base = PrimeField(p)
                body = parts[2]
            coeff_text, exp = body.rsplit("^", 1)
            raw = [int(c) for c in coeff_text.split(",")]
            coeffs = [base.decode_int(c) for c in raw]
            return PolyQuotRing(base, coeffs, int(exp))
    except NonUnit:
        raise
    except (ValueError, TypeError) as err:
        raise ValueError(f"bad ring descriptor {text!r}: {err}") from err
    raise ValueError(f"bad ring descriptor {text!r}")
