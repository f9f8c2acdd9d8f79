"""Dense univariate polynomial helpers.

Coefficient vectors are tuples, lowest degree first.  Two families of
functions live here: the ``poly_*`` family works on integer coefficients
modulo some ``mod`` (a prime or a prime power), the ``gpoly_*`` family works
on coefficients from an arbitrary field object exposing scalar arithmetic
(used for quotient rings over extension fields, where coefficients are
themselves tuples).

Everything is exact; there is no floating point in this module.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterable, Sequence, Tuple

IntPoly = Tuple[int, ...]

_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, valid far beyond 64-bit inputs."""
    if n < 2:
        return False
    for q in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n == q:
            return True
        if n % q == 0:
            return False
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def poly_trim(c: Sequence[int]) -> IntPoly:
    i = len(c)
    while i > 0 and c[i - 1] == 0:
        i -= 1
    return tuple(c[:i])


def poly_add(a: Sequence[int], b: Sequence[int], mod: int) -> IntPoly:
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, x in enumerate(b):
        out[i] = (out[i] + x) % mod
    return poly_trim(out)


def poly_sub(a: Sequence[int], b: Sequence[int], mod: int) -> IntPoly:
    out = list(a) + [0] * max(0, len(b) - len(a))
    for i, x in enumerate(b):
        out[i] = (out[i] - x) % mod
    return poly_trim(out)


def poly_scale(a: Sequence[int], s: int, mod: int) -> IntPoly:
    return poly_trim([x * s % mod for x in a])


def poly_mul(a: Sequence[int], b: Sequence[int], mod: int) -> IntPoly:
    if not a or not b:
        return ()
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            out[i + j] += x * y
    return poly_trim([v % mod for v in out])


def poly_rem_monic(a: Sequence[int], g: Sequence[int], mod: int) -> IntPoly:
    """Remainder of a by a monic g.  Works modulo any integer >= 2."""
    assert g and g[-1] % mod == 1, "divisor must be monic"
    r = [x % mod for x in a]
    dg = len(g) - 1
    for i in range(len(r) - 1, dg - 1, -1):
        c = r[i]
        if c == 0:
            continue
        r[i] = 0
        for j in range(dg):
            r[i - dg + j] = (r[i - dg + j] - c * g[j]) % mod
    return poly_trim(r[:dg])


def poly_divmod(a: Sequence[int], b: Sequence[int], p: int) -> tuple[IntPoly, IntPoly]:
    """Quotient and remainder over the field Z_p; b need not be monic."""
    b = poly_trim(b)
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    inv_lead = pow(b[-1], p - 2, p)
    r = [x % p for x in a]
    db = len(b) - 1
    q = [0] * max(0, len(r) - db)
    for i in range(len(r) - 1, db - 1, -1):
        c = r[i] * inv_lead % p
        if c:
            q[i - db] = c
            for j in range(db + 1):
                r[i - db + j] = (r[i - db + j] - c * b[j]) % p
    return poly_trim(q), poly_trim(r[:db])


def poly_gcd(a: Sequence[int], b: Sequence[int], p: int) -> IntPoly:
    """Monic gcd over Z_p."""
    a, b = poly_trim(a), poly_trim(b)
    while b:
        _, r = poly_divmod(a, b, p)
        a, b = b, r
    if a:
        a = poly_scale(a, pow(a[-1], p - 2, p), p)
    return a


def poly_ext_gcd(a: Sequence[int], b: Sequence[int], p: int) -> tuple[IntPoly, IntPoly, IntPoly]:
    """(g, s, t) with s*a + t*b = g, g monic, over Z_p."""
    r0, r1 = poly_trim(a), poly_trim(b)
    s0, s1 = (1,), ()
    t0, t1 = (), (1,)
    while r1:
        q, r = poly_divmod(r0, r1, p)
        r0, r1 = r1, r
        s0, s1 = s1, poly_sub(s0, poly_mul(q, s1, p), p)
        t0, t1 = t1, poly_sub(t0, poly_mul(q, t1, p), p)
    if r0:
        u = pow(r0[-1], p - 2, p)
        r0, s0, t0 = poly_scale(r0, u, p), poly_scale(s0, u, p), poly_scale(t0, u, p)
    return r0, s0, t0


def poly_powmod(a: Sequence[int], k: int, g: Sequence[int], p: int) -> IntPoly:
    """a^k modulo the monic polynomial g, coefficients mod p."""
    result: IntPoly = (1,)
    base = poly_rem_monic(a, g, p)
    while k:
        if k & 1:
            result = poly_rem_monic(poly_mul(result, base, p), g, p)
        base = poly_rem_monic(poly_mul(base, base, p), g, p)
        k >>= 1
    return result


def poly_pow(a: Sequence[int], k: int, mod: int) -> IntPoly:
    result: IntPoly = (1,)
    for _ in range(k):
        result = poly_mul(result, a, mod)
    return result


def _prime_factors(m: int) -> list[int]:
    out = []
    d = 2
    while d * d <= m:
        if m % d == 0:
            out.append(d)
            while m % d == 0:
                m //= d
        d += 1
    if m > 1:
        out.append(m)
    return out


def is_irreducible(f: Sequence[int], p: int) -> bool:
    """Rabin's test for f over Z_p.  f must be monic of degree >= 1."""
    f = poly_trim(f)
    m = len(f) - 1
    if m < 1:
        return False
    if f[-1] != 1:
        return False
    x = poly_rem_monic((0, 1), f, p)
    # x^(p^m) == x mod f
    t = x
    for _ in range(m):
        t = poly_powmod(t, p, f, p)
    if poly_trim(poly_sub(t, x, p)):
        return False
    for q in _prime_factors(m):
        t = x
        for _ in range(m // q):
            t = poly_powmod(t, p, f, p)
        if poly_gcd(poly_sub(t, x, p), f, p) != (1,):
            return False
    return True


@lru_cache(maxsize=None)
def first_irreducible(p: int, m: int) -> IntPoly:
    """Lexicographically least monic irreducible of degree m over Z_p.

    Deterministic, so extension fields built from (p, m) alone are canonical
    and runs are reproducible.  Low coefficients vary fastest.
    """
    if m == 1:
        return (0, 1)
    count = p ** m
    for k in range(count):
        coeffs = []
        t = k
        for _ in range(m):
            coeffs.append(t % p)
            t //= p
        cand = tuple(coeffs) + (1,)
        if is_irreducible(cand, p):
            return cand
    raise AssertionError("unreachable: irreducibles of every degree exist")


# ---------------------------------------------------------------------------
# Generic-coefficient versions.  ``field`` is any object with zero/one
# attributes and add/sub/mul/neg/invert methods on scalar elements; these are
# only used at small degree (quotient rings over extension fields and
# irreducibility checks over them), so schoolbook throughout is fine.
# ---------------------------------------------------------------------------


def gpoly_trim(c: Sequence, field) -> tuple:
    z = field.zero
    i = len(c)
    while i > 0 and c[i - 1] == z:
        i -= 1
    return tuple(c[:i])


def gpoly_add(a: Sequence, b: Sequence, field) -> tuple:
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, x in enumerate(b):
        out[i] = field.add(out[i], x)
    return gpoly_trim(out, field)


def gpoly_sub(a: Sequence, b: Sequence, field) -> tuple:
    out = list(a) + [field.zero] * max(0, len(b) - len(a))
    for i, x in enumerate(b):
        out[i] = field.sub(out[i], x)
    return gpoly_trim(out, field)


def gpoly_mul(a: Sequence, b: Sequence, field) -> tuple:
    if not a or not b:
        return ()
    out = [field.zero] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x == field.zero:
            continue
        for j, y in enumerate(b):
            out[i + j] = field.add(out[i + j], field.mul(x, y))
    return gpoly_trim(out, field)


def gpoly_divmod(a: Sequence, b: Sequence, field) -> tuple[tuple, tuple]:
    b = gpoly_trim(b, field)
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    inv_lead = field.invert(b[-1])
    r = list(a)
    db = len(b) - 1
    q = [field.zero] * max(0, len(r) - db)
    for i in range(len(r) - 1, db - 1, -1):
        c = field.mul(r[i], inv_lead)
        if c == field.zero:
            continue
        q[i - db] = c
        for j in range(db + 1):
            r[i - db + j] = field.sub(r[i - db + j], field.mul(c, b[j]))
    return gpoly_trim(q, field), gpoly_trim(r[:db], field)


def gpoly_gcd(a: Sequence, b: Sequence, field) -> tuple:
    a, b = gpoly_trim(a, field), gpoly_trim(b, field)
    while b:
        _, r = gpoly_divmod(a, b, field)
        a, b = b, r
    if a:
        inv = field.invert(a[-1])
        a = tuple(field.mul(x, inv) for x in a)
    return a


def gpoly_ext_gcd(a: Sequence, b: Sequence, field) -> tuple[tuple, tuple, tuple]:
    r0, r1 = gpoly_trim(a, field), gpoly_trim(b, field)
    s0, s1 = (field.one,), ()
    t0, t1 = (), (field.one,)
    while r1:
        q, r = gpoly_divmod(r0, r1, field)
        r0, r1 = r1, r
        s0, s1 = s1, gpoly_sub(s0, gpoly_mul(q, s1, field), field)
        t0, t1 = t1, gpoly_sub(t0, gpoly_mul(q, t1, field), field)
    if r0:
        u = field.invert(r0[-1])
        r0 = tuple(field.mul(x, u) for x in r0)
        s0 = tuple(field.mul(x, u) for x in s0)
        t0 = tuple(field.mul(x, u) for x in t0)
    return r0, s0, t0


def gpoly_powmod(a: Sequence, k: int, g: Sequence, field) -> tuple:
    result = (field.one,)
    _, base = gpoly_divmod(a, g, field)
    while k:
        if k & 1:
            _, result = gpoly_divmod(gpoly_mul(result, base, field), g, field)
        _, base = gpoly_divmod(gpoly_mul(base, base, field), g, field)
        k >>= 1
    return result


def gpoly_is_irreducible(f: Sequence, field, q: int) -> bool:
    """Rabin's test over a finite field of q elements."""
    f = gpoly_trim(f, field)
    m = len(f) - 1
    if m < 1 or f[-1] != field.one:
        return False
    x = gpoly_divmod((field.zero, field.one), f, field)[1]
    t = x
    for _ in range(m):
        t = gpoly_powmod(t, q, f, field)
    if gpoly_sub(t, x, field):
        return False
    for r in _prime_factors(m):
        t = x
        for _ in range(m // r):
            t = gpoly_powmod(t, q, f, field)
        if gpoly_gcd(gpoly_sub(t, x, field), f, field) != (field.one,):
            return False
    return True


def gpoly_eval(f: Sequence, x, field):
    """Horner evaluation of f at a field element x."""
    acc = field.zero
    for c in reversed(list(f)):
        acc = field.add(field.mul(acc, x), c)
    return acc


def gpoly_root(f: Sequence, field, q: int, p: int, rng) -> object:
    """A root in ``field`` of a squarefree f that splits completely there.

    Cantor-Zassenhaus equal-degree splitting: repeatedly split f by gcds with
    random a^((q-1)/2) - 1 (odd q) or with the trace polynomial (q even)
    until a linear factor remains.  Used to embed one extension field into a
    larger one, so f is the modulus of the small field and q the size of the
    big one.
    """
    f = gpoly_gcd(f, gpoly_sub(gpoly_powmod((field.zero, field.one), q, f, field),
                               (field.zero, field.one), field), field)
    assert f, "polynomial has no roots in the field"
    while len(f) - 1 > 1:
        # a fully random argument polynomial; an affine shift is not enough in
        # characteristic 2, where the trace map is additive and shifts cancel
        a = tuple(field.random(rng) for _ in range(len(f) - 1))
        if p != 2:
            h = gpoly_powmod(a, (q - 1) // 2, f, field)
            h = gpoly_sub(h, (field.one,), field)
        else:
            # trace map sum_{i<log2 q} a^(2^i) mod f
            h = ()
            t = gpoly_divmod(a, f, field)[1]
            e = q
            while e > 1:
                h = gpoly_add(h, t, field)
                _, t = gpoly_divmod(gpoly_mul(t, t, field), f, field)
                e //= 2
        g = gpoly_gcd(h, f, field)
        if 0 < len(g) - 1 < len(f) - 1:
            f = g if rng.integers(2) else gpoly_divmod(f, g, field)[0]
    root = field.neg(field.mul(f[0], field.invert(f[1])))
    return root
