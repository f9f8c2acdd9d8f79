"""Bulk numeric kernels behind the black-box operators.

Elements of the supported rings flatten to fixed-width integer limb vectors
(rings.to_limbs), so vectors over a ring become int64 arrays of shape
(length, w) and batches of vectors become (length, w, batch).  This module
implements exact arithmetic on such arrays: elementwise products, inner
products, long convolutions for Toeplitz applies, and the limb-level
reductions by the defining polynomial of an extension or quotient ring.

Everything here is exact.  Convolutions go through numpy/scipy FFTs only
when the worst-case integer result provably fits float64 round-trips, with
digit splitting when a single pass would not; a residual assertion guards
every inverse transform.

Rings whose limbs do not fit these bounds simply get no engine; callers
fall back to scalar ring arithmetic.
"""

from __future__ import annotations

import numpy as np
from scipy import fft as _fft

from .polynomials import poly_rem_monic
from .rings import ExtField, GaloisRing, LocalIntRing, PolyQuotRing, PrimeField

_INT64_SAFE = 2 ** 62
# worst-case |value| for which an FFT convolution round-trips exactly with
# comfortable margin (float64 has 53 mantissa bits; transform growth eats some)
_FFT_SAFE = 2 ** 48
# exact-integer ceiling of float64; sums below this can ride BLAS matmuls
_FLOAT_EXACT = 2 ** 53


def _reduction_rows(w: int, modpoly, q: int) -> np.ndarray:
    """Rows t = x^(w+t) mod modpoly, for folding conv overflow back below w."""
    rows = np.zeros((max(w - 1, 0), w), dtype=np.int64)
    for t in range(w - 1):
        x_pow = (0,) * (w + t) + (1,)
        rem = poly_rem_monic(x_pow, modpoly, q)
        rows[t, :len(rem)] = rem
    return rows


class LimbEngine:
    """Vectorized exact arithmetic on (length, w, batch) limb arrays.

    w is the limb width of the ring, q the per-limb modulus.  For w > 1 the
    engine also knows the defining polynomial reduction that folds degree
    >= w convolution coefficients back into canonical form.
    """

    def __init__(self, ring):
        self.ring = ring
        self.w = ring.width
        self.q = ring.limb_mod
        if isinstance(ring, (PrimeField, LocalIntRing)):
            modpoly = None
        elif isinstance(ring, ExtField):
            modpoly = ring.modulus
        elif isinstance(ring, GaloisRing):
            modpoly = ring.gamma
        elif isinstance(ring, PolyQuotRing) and isinstance(ring.field, PrimeField):
            modpoly = ring.quot_modulus
        else:
            raise UnsupportedRing(f"no limb engine for {ring!r}")
        # products of canonical limbs must accumulate safely in int64
        if self.q > 1 and (self.q - 1) ** 2 * max(self.w, 1) >= _INT64_SAFE:
            raise UnsupportedRing(f"limb modulus {self.q} too wide for int64 products")
        self.red = _reduction_rows(self.w, modpoly, self.q) if modpoly else None
        self._red_f = self.red.astype(np.float64) if self.red is not None else None
        self.p = ring.p
        self.e = ring.e

    # -- conversions --------------------------------------------------------

    def to_array(self, elems) -> np.ndarray:
        """(len(elems), w) int64 array of canonical limbs."""
        out = np.empty((len(elems), self.w), dtype=np.int64)
        for i, a in enumerate(elems):
            out[i] = self.ring.to_limbs(a)
        return out

    def from_array(self, arr: np.ndarray) -> list:
        arr = arr.reshape(arr.shape[0], self.w)
        return [self.ring.from_limbs(tuple(int(x) for x in row)) for row in arr]

    def zeros(self, n: int, batch: int | None = None) -> np.ndarray:
        shape = (n, self.w) if batch is None else (n, self.w, batch)
        return np.zeros(shape, dtype=np.int64)

    def random_array(self, n: int, rng) -> np.ndarray:
        # canonical forms are exactly the limb tuples, so uniform sampling
        # is independent uniform limbs
        return rng.integers(0, self.q, size=(n, self.w), dtype=np.int64)

    def random_units(self, n: int, rng) -> np.ndarray:
        if isinstance(self.ring, PolyQuotRing):
            # unit test there is a gcd condition, not limbwise
            return self.to_array([self.ring.random_unit(rng) for _ in range(n)])
        out = rng.integers(0, self.q, size=(n, self.w), dtype=np.int64)
        while True:
            bad = (out % self.p == 0).all(axis=1)
            if not bad.any():
                return out
            out[bad] = rng.integers(0, self.q, size=(int(bad.sum()), self.w),
                                    dtype=np.int64)

    # -- core reductions ----------------------------------------------------

    def reduce_conv(self, P: np.ndarray) -> np.ndarray:
        """Fold a (..., 2w-1, ...) raw convolution back to (..., w, ...).

        The limb axis is axis 1 for 3-d input, the last axis for 2-d input;
        entries must already be reduced mod q.
        """
        w = self.w
        if w == 1:
            return P
        axis = 1 if P.ndim == 3 else P.ndim - 1
        lo = np.take(P, range(w), axis=axis)
        hi = np.take(P, range(w, 2 * w - 1), axis=axis)
        if self.red is not None:
            if P.ndim == 3:
                if (self.q - 1) ** 2 * (w - 1) < _FLOAT_EXACT:
                    # batched BLAS fold; einsum on int64 crawls by comparison
                    Hf = np.moveaxis(hi, 1, 2).astype(np.float64)
                    folded = np.moveaxis(
                        (Hf @ self._red_f).astype(np.int64), 2, 1)
                else:
                    folded = np.einsum("nhb,hw->nwb", hi, self.red)
            else:
                folded = hi @ self.red
            lo = (lo + folded) % self.q
        return lo

    def ew_conv(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        """Raw elementwise product along the limb axis.

        Layout is (n, w) or (n, w, b); a 2-d operand meeting a 3-d one is
        broadcast over the batch axis.  The result has limb length 2w-1 and
        is reduced mod q but not folded by the modulus polynomial.
        """
        if A.ndim == 2 and B.ndim == 3:
            A = A[:, :, None]
        if B.ndim == 2 and A.ndim == 3:
            B = B[:, :, None]
        w = self.w
        if w == 1:
            return A * B % self.q
        shape = list(np.broadcast_shapes(A.shape, B.shape))
        shape[1] = 2 * w - 1
        out = np.zeros(shape, dtype=np.int64)
        for j in range(w):
            out[:, j:j + w] += A[:, j:j + 1] * B
        return out % self.q

    def ew_mul(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        """Canonical elementwise ring product of limb arrays."""
        return self.reduce_conv(self.ew_conv(A, B))

    def neg(self, A: np.ndarray) -> np.ndarray:
        return (-A) % self.q

    def add(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        return (A + B) % self.q

    def sub(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        return (A - B) % self.q

    # -- inner products -----------------------------------------------------

    def dot(self, U: np.ndarray, V: np.ndarray) -> np.ndarray:
        """Sum over the length axis of elementwise ring products.

        U: (n, w); V: (n, w) -> (w,)  or  V: (n, w, b) -> (w, b).
        Chunked so the int64 accumulator never overflows.
        """
        n = U.shape[0]
        w = self.w
        step = max(1, int(_INT64_SAFE // max((self.q - 1) ** 2 * max(w, 1), 1)))
        batched = V.ndim == 3
        # raw polynomial accumulator of limb length 2w-1
        raw_shape = (2 * w - 1, V.shape[2]) if batched else (2 * w - 1,)
        acc = np.zeros(raw_shape, dtype=np.int64)
        for lo in range(0, n, step):
            Uc = U[lo:lo + step]
            Vc = V[lo:lo + step]
            if batched:
                P = np.einsum("nu,nvb->uvb", Uc, Vc)
            else:
                P = np.einsum("nu,nv->uv", Uc, Vc)
            raw = np.zeros(raw_shape, dtype=np.int64)
            for j in range(w):
                raw[j:j + w] += P[j]
            acc = (acc + raw % self.q) % self.q
        if w == 1:
            return acc[:1] if not batched else acc[:1, :]
        # fold back into the ring through the 2-d reduce path (limb axis last)
        arr = acc[None, :] if not batched else np.moveaxis(acc, 1, 0)  # (b, 2w-1)
        out = self.reduce_conv(arr)  # (b, w)
        return out[0] if not batched else np.moveaxis(out, 0, 1)

    # -- valuations (integer-limb rings only) -------------------------------

    def valuations(self, A: np.ndarray) -> np.ndarray:
        """Uniformizer valuations per element, zero mapping to e.

        Supported for rings whose valuation is limbwise in p (prime/local
        integer rings and Galois rings); quotient rings need scalar calls.
        """
        if isinstance(self.ring, PolyQuotRing) and self.ring.ell > 1:
            raise UnsupportedRing("f-adic valuations are not limbwise")
        limbv = np.zeros(A.shape, dtype=np.int64)
        nz = A != 0
        pk = 1
        for _ in range(self.e):
            pk *= self.p
            limbv += nz & (A % pk == 0)
        limbv[~nz] = self.e
        # element valuation is the minimum over its limbs
        axis = 1 if A.ndim >= 2 else None
        return limbv.min(axis=axis) if axis is not None else limbv

    def residue_mod_p(self, A: np.ndarray) -> np.ndarray:
        """Limbwise reduction mod p (valid for the same rings as valuations)."""
        if isinstance(self.ring, PolyQuotRing) and self.ring.ell > 1:
            raise UnsupportedRing("residues of f-adic rings are not limbwise")
        return A % self.p


class UnsupportedRing(ValueError):
    pass


_ENGINES: dict = {}


def engine_for(ring) -> LimbEngine | None:
    """Cached engine lookup; None when the ring has no vector kernel."""
    key = ring
    if key not in _ENGINES:
        try:
            _ENGINES[key] = LimbEngine(ring)
        except UnsupportedRing:
            _ENGINES[key] = None
    return _ENGINES[key]


# ---------------------------------------------------------------------------
# long convolutions against a fixed kernel (Toeplitz applies)
# ---------------------------------------------------------------------------


def _split_digits(arr: np.ndarray, base: int, parts: int) -> list[np.ndarray]:
    out = []
    rest = arr
    for _ in range(parts - 1):
        out.append(rest % base)
        rest = rest // base
    out.append(rest)
    return out


class KernelConv:
    """Convolution of inputs against one fixed kernel, exactly, via FFT.

    The kernel is a (L, w) limb array over the engine's ring; apply takes a
    (n, w) or (n, w, b) array and returns the full linear convolution along
    the length axis with the limb axis folded back to width w.  Kernel
    transforms are precomputed once.  When (q-1)^2 * min(L, n) * w does not
    fit the exact-FFT budget the operands are split into digits and the
    pieces combined, so results stay exact for every supported ring.
    """

    def __init__(self, engine: LimbEngine, kernel: np.ndarray, n_in: int):
        if kernel.ndim == 1:
            kernel = kernel[:, None]
        self.eng = engine
        self.kernel = kernel % engine.q
        self.L = kernel.shape[0]
        self.n_in = n_in
        self.w = engine.w
        self.out_len = self.L + n_in - 1
        q = engine.q
        worst = (q - 1) ** 2 * min(self.L, n_in) * self.w
        self.parts = 1
        base = q
        while worst >= _FFT_SAFE:
            self.parts += 1
            base = int(np.ceil(q ** (1.0 / self.parts)))
            worst = (base - 1) ** 2 * min(self.L, n_in) * self.w * self.parts
        self.base = base
        self.shape = (_fft.next_fast_len(self.out_len),
                      _fft.next_fast_len(2 * self.w - 1) if self.w > 1 else 1)
        # Single-limb kernels at small sizes skip the FFT entirely: the
        # banded matrix fits comfortably and one int64 matmul beats the
        # transform overhead by a wide margin.
        self._dense = None
        self._folded = None
        if (self.w == 1 and self.out_len * n_in <= (1 << 17)
                and n_in * (q - 1) ** 2 < _FLOAT_EXACT):
            idx = np.arange(self.out_len)[:, None] - np.arange(n_in)[None, :]
            flat = self.kernel[:, 0]
            self._dense = np.where((idx >= 0) & (idx < self.L),
                                   flat[idx.clip(0, self.L - 1)], 0)
            self._dense_f = self._dense.astype(np.float64)
        elif (self.w > 1 and engine.red is not None
                and self.w ** 2 * self.out_len * n_in <= (1 << 21)
                and self.w * n_in * (q - 1) ** 2 < _FLOAT_EXACT):
            # compose the banded matrix per kernel limb with the modulus
            # fold, giving one mod-q matrix from input limbs to output
            # limbs; every apply is then a single exact float product
            w = self.w
            idx = np.arange(self.out_len)[:, None] - np.arange(n_in)[None, :]
            inside = (idx >= 0) & (idx < self.L)
            safe = idx.clip(0, self.L - 1)
            bands = np.stack([np.where(inside, self.kernel[:, a][safe], 0)
                              for a in range(w)])
            fold = np.zeros((2 * w - 1, w), dtype=np.int64)
            fold[:w] = np.eye(w, dtype=np.int64)
            fold[w:] = engine.red
            # pair (a, c) of kernel and input limbs lands in product limb
            # a + c; contract the kernel-limb axis through the fold table
            F2 = fold[np.arange(w)[:, None] + np.arange(w)[None, :]]
            lhs = F2.transpose(1, 2, 0).reshape(w * w, w).astype(np.float64)
            rhs = bands.reshape(w, self.out_len * n_in).astype(np.float64)
            G = np.rint(lhs @ rhs).astype(np.int64) % q
            G = G.reshape(w, w, self.out_len, n_in).transpose(1, 2, 3, 0)
            self._folded = np.ascontiguousarray(
                G.reshape(w * self.out_len, n_in * w)).astype(np.float64)
        else:
            digs = _split_digits(self.kernel, base, self.parts)
            self._khat = [_fft.rfft2(d.astype(np.float64), s=self.shape)
                          for d in digs]

    def __call__(self, V: np.ndarray) -> np.ndarray:
        eng = self.eng
        squeeze = V.ndim == 2
        if squeeze:
            V = V[:, :, None]
        if self._dense is not None:
            prod = self._dense_f @ (V[:, 0, :] % eng.q).astype(np.float64)
            out = (prod.astype(np.int64) % eng.q)[:, None, :]
            return out[:, :, 0] if squeeze else out
        if self._folded is not None:
            w, b = self.w, V.shape[2]
            V3 = (V % eng.q).reshape(V.shape[0] * w, b)
            prod = self._folded @ V3.astype(np.float64)
            out = prod.astype(np.int64) % eng.q
            out = np.ascontiguousarray(
                out.reshape(w, self.out_len, b).transpose(1, 0, 2))
            return out[:, :, 0] if squeeze else out
        b = V.shape[2]
        digs = _split_digits(V % eng.q, self.base, self.parts)
        vhat = [_fft.rfft2(np.moveaxis(d, 2, 0).astype(np.float64), s=self.shape,
                           axes=(1, 2)) for d in digs]
        total = np.zeros((self.out_len, 2 * self.w - 1, b), dtype=np.int64)
        scale = 1
        for s in range(2 * self.parts - 1):
            # sum of digit products carrying weight base^s
            acc = None
            for i in range(self.parts):
                j = s - i
                if 0 <= j < self.parts:
                    term = self._khat[i] * vhat[j]
                    acc = term if acc is None else acc + term
            if acc is None:
                continue
            piece = _fft.irfft2(acc, s=self.shape, axes=(1, 2))
            piece = piece[:, :self.out_len, :2 * self.w - 1]
            rounded = np.rint(piece)
            err = np.abs(piece - rounded).max()
            assert err < 0.01, f"FFT convolution lost exactness (err={err})"
            contrib = np.moveaxis(rounded.astype(np.int64), 0, 2) % eng.q
            total = (total + contrib * (scale % eng.q)) % eng.q
            scale *= self.base
        out = eng.reduce_conv(total)
        return out[:, :, 0] if squeeze else out


# ---------------------------------------------------------------------------
# misc exact helpers
# ---------------------------------------------------------------------------


def int64_matmul_mod(A: np.ndarray, B: np.ndarray, q: int) -> np.ndarray:
    """Exact (A @ B) % q for nonnegative int64 inputs already reduced mod q."""
    n = A.shape[1]
    # Integer matmul in numpy bypasses BLAS; route through float64 whenever
    # every accumulated sum stays below 2^53 so dgemm is exact and much faster.
    if n * (q - 1) ** 2 < _FLOAT_EXACT:
        prod = A.astype(np.float64) @ B.astype(np.float64)
        return np.rint(prod).astype(np.int64) % q
    step = max(1, int(_INT64_SAFE // max((q - 1) ** 2, 1)))
    out = np.zeros((A.shape[0],) + B.shape[1:], dtype=np.int64)
    for lo in range(0, n, step):
        out = (out + A[:, lo:lo + step] @ B[lo:lo + step]) % q
    return out
