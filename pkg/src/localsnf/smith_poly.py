"""Smith multiplicities over F[z]/(f^e) from embedding ranks.

The multiset of invariant factors of a matrix over the local ring
F[z]/(f^e) is determined by the ranks of the e companion-matrix embeddings
of A mod f^ell for ell = 1..e.  Those ranks satisfy a lower-triangular
integer system in the multiplicities, invertible by two rounds of
differencing, so the whole computation is e black-box rank calls plus
linear-time bookkeeping.

Rank calls are probabilistic; a bad estimate shows up as a system with no
nonnegative integer solution, which is caught and retried with fresh seeds
rather than silently accepted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blackbox_linalg import rank_blackbox
from .operators import BlackBoxOperator, embed_phi
from .rings import PolyQuotRing


class InconsistentProfile(ValueError):
    """The measured rank profile admits no valid multiplicity vector."""


class RetriesExhausted(RuntimeError):
    """Every rank-profile attempt came back inconsistent."""


@dataclass
class SmithMultiplicities:
    """Invariant-factor counts of a matrix over a local principal ideal ring.

    multiplicities[i] counts invariant factors equal to the i-th power of
    the uniformizer (index 0 counts units); r_zero counts zeros.  The
    counts always total min(rows, cols) of the source matrix.
    """

    ring: str
    multiplicities: tuple
    r_zero: int

    def __post_init__(self):
        if any(r < 0 for r in self.multiplicities) or self.r_zero < 0:
            raise ValueError("multiplicities must be nonnegative")
        self.multiplicities = tuple(int(r) for r in self.multiplicities)

    @property
    def total(self) -> int:
        return sum(self.multiplicities) + self.r_zero

    @property
    def nonzero(self) -> int:
        return sum(self.multiplicities)

    def valuations(self) -> list:
        """Invariant factor valuations in divisibility order, None for 0."""
        out = []
        for i, r in enumerate(self.multiplicities):
            out.extend([i] * r)
        out.extend([None] * self.r_zero)
        return out


@dataclass
class RankProfile:
    """Ranks of the companion embeddings at levels 1..e."""

    ring: str
    rho: tuple
    d: int
    e: int
    n: int

    def __post_init__(self):
        self.rho = tuple(int(x) for x in self.rho)
        if len(self.rho) != self.e:
            raise ValueError(f"expected {self.e} ranks, got {len(self.rho)}")
        for ell, r in enumerate(self.rho, start=1):
            if not 0 <= r <= self.d * ell * self.n:
                raise ValueError(f"rank {r} out of range at level {ell}")


def rank_profile(A: BlackBoxOperator, xi: int = 100, rng=None) -> RankProfile:
    """Embedding ranks rho_{ell-1} = rank(embed_phi(A, ell)), ell = 1..e.

    Each level is an independent black-box rank computation over the base
    field with failure probability at most 1/xi; the levels could run
    concurrently, and the assembly is order-independent.
    """
    ring = A.ring
    if not isinstance(ring, PolyQuotRing):
        raise TypeError(f"rank_profile needs a polynomial quotient ring, got {ring!r}")
    if A.rows != A.cols:
        raise ValueError("rank_profile expects a square operator")
    if rng is None:
        rng = np.random.default_rng()
    rho = []
    for ell in range(1, ring.ell + 1):
        child = rng.spawn(1)[0]
        res = rank_blackbox(embed_phi(A, ell), xi=xi, rng=child)
        rho.append(res.rank)
    return RankProfile(ring=ring.descriptor(), rho=tuple(rho),
                       d=ring.d, e=ring.ell, n=A.rows)


def solve_rank_system(profile: RankProfile) -> SmithMultiplicities:
    """Multiplicities from a rank profile by differencing.

    The profile satisfies rho_{ell-1} = d * sum_{i<ell} (ell - i) * r_i, a
    lower-triangular system solved by dividing out d and differencing
    twice.  Raises InconsistentProfile when the measured ranks cannot have
    come from any matrix: non-divisibility by d, a negative multiplicity,
    or a nonzero total above n all mean some rank estimate was off and the
    caller should retry with fresh seeds.
    """
    d, e, n = profile.d, profile.e, profile.n
    s = []
    for r in profile.rho:
        if r % d:
            raise InconsistentProfile(f"rank {r} not divisible by d={d}")
        s.append(r // d)
    t = [s[0]] + [s[i] - s[i - 1] for i in range(1, e)]
    mults = [t[0]] + [t[i] - t[i - 1] for i in range(1, e)]
    if any(r < 0 for r in mults):
        raise InconsistentProfile(f"negative multiplicity in {mults}")
    if sum(mults) > n:
        raise InconsistentProfile(f"multiplicities {mults} exceed dimension {n}")
    return SmithMultiplicities(ring=profile.ring, multiplicities=tuple(mults),
                               r_zero=n - sum(mults))


def smith_fe(A: BlackBoxOperator, xi: int = 100, rng=None,
             retries: int = 3) -> SmithMultiplicities:
    """Smith multiplicities of a square matrix over F[z]/(f^e).

    Runs the rank profile and solves the triangular system; on an
    inconsistent profile the whole profile is remeasured with fresh seeds.
    Failure probability per attempt is at most e/xi by a union bound over
    the e rank calls.  Raises RetriesExhausted when every attempt produced
    an inconsistent profile.
    """
    if rng is None:
        rng = np.random.default_rng()
    last = None
    for _ in range(retries):
        profile = rank_profile(A, xi=xi, rng=rng)
        try:
            return solve_rank_system(profile)
        except InconsistentProfile as exc:
            last = exc
    raise RetriesExhausted(
        f"no consistent rank profile in {retries} attempts: {last}")
