"""Exact character-sum arithmetic.

Values in Q(zeta_{q-1}, zeta_p) are modelled by their images in several prime
fields F_ell with ell = 1 mod lcm(q-1, p), where both roots of unity exist.
A value is a numpy int64 array whose first axis runs over the primes. One
extra prime is carried along purely to cross-check integer recovery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np
from sympy import isprime, primitive_root
from sympy.functions.combinatorial.numbers import jacobi_symbol as _sympy_jacobi

from .finitefield import FieldContext

MAX_ELL = 2**31
MIN_ELL = 100


class PrecisionError(ArithmeticError):
    """Residues do not reconstruct to a consistent integer within the bound."""


def _crt_pair(r1: int, m1: int, r2: int, m2: int) -> tuple[int, int]:
    t = (r2 - r1) * pow(m1, -1, m2) % m2
    return r1 + m1 * t, m1 * m2


@dataclass(frozen=True, eq=False)
class ExactBackend:
    p: int
    qx: int
    ells: tuple[int, ...]  # primes whose product exceeds the bound
    check_ell: int  # verification prime
    zeta_qx: tuple[int, ...]  # one per prime in ells + (check_ell,)
    zeta_p: tuple[int, ...]
    bound: int

    @property
    def all_ells(self) -> tuple[int, ...]:
        return self.ells + (self.check_ell,)

    @property
    def L(self) -> int:
        return len(self.ells) + 1

    @cached_property
    def modulus(self) -> np.ndarray:
        return np.array(self.all_ells, dtype=np.int64)

    def col(self, ndim: int) -> np.ndarray:
        """Moduli shaped to broadcast against values with ndim axes."""
        return self.modulus.reshape((self.L,) + (1,) * (ndim - 1))

    # construction of values

    def const(self, n) -> np.ndarray:
        if isinstance(n, Fraction):
            return self.fraction(n)
        return np.array([n % ell for ell in self.all_ells], dtype=np.int64)

    def fraction(self, x: Fraction) -> np.ndarray:
        x = Fraction(x)
        return np.array(
            [x.numerator % ell * pow(x.denominator, -1, ell) % ell for ell in self.all_ells],
            dtype=np.int64,
        )

    @cached_property
    def zeta_qx_powers(self) -> np.ndarray:
        """Table of zeta_{q-1}^k for k in Z/(q-1), shape (L, q-1)."""
        return _power_table(self.zeta_qx, self.all_ells, self.qx)

    @cached_property
    def zeta_p_powers(self) -> np.ndarray:
        return _power_table(self.zeta_p, self.all_ells, self.p)

    def root(self, k) -> np.ndarray:
        """zeta_{q-1}^k; k may be an integer array."""
        return self.zeta_qx_powers[:, np.asarray(k) % self.qx]

    # arithmetic

    def mul(self, a, b) -> np.ndarray:
        a, b = np.asarray(a), np.asarray(b)
        nd = max(a.ndim, b.ndim)
        return a * b % self.col(nd)

    def add(self, a, b) -> np.ndarray:
        a, b = np.asarray(a), np.asarray(b)
        return (a + b) % self.col(max(a.ndim, b.ndim))

    def neg(self, a) -> np.ndarray:
        a = np.asarray(a)
        return (-a) % self.col(a.ndim)

    def sub(self, a, b) -> np.ndarray:
        return self.add(a, self.neg(b))

    def pow(self, a, e: int) -> np.ndarray:
        a = np.asarray(a)
        out = np.empty_like(a)
        for i, ell in enumerate(self.all_ells):
            out[i] = _powmod_array(a[i], e, ell)
        return out

    def inv(self, a) -> np.ndarray:
        a = np.asarray(a)
        if (a % self.col(a.ndim) == 0).any():
            raise ZeroDivisionError("value vanishes modulo an auxiliary prime")
        return np.stack([_powmod_array(a[i], ell - 2, ell) for i, ell in enumerate(self.all_ells)])

    def prod(self, a, axis: int = -1) -> np.ndarray:
        """Product along an axis other than the prime axis."""
        a = np.asarray(a)
        axis = axis % a.ndim
        if axis == 0:
            raise ValueError("cannot reduce over the prime axis")
        a = np.moveaxis(a, axis, -1)
        out = np.ones(a.shape[:-1], dtype=np.int64)
        mod = self.col(out.ndim)
        for j in range(a.shape[-1]):
            out = out * a[..., j] % mod
        return out

    def sum(self, a, axis: int = -1) -> np.ndarray:
        a = np.asarray(a)
        axis = axis % a.ndim
        if axis == 0:
            raise ValueError("cannot reduce over the prime axis")
        # entries are < 2^31, so chunks of 2^31 terms cannot overflow int64
        out = np.zeros(np.delete(a.shape, axis), dtype=np.int64)
        n = a.shape[axis]
        mod = self.col(out.ndim)
        step = 1 << 30
        for s in range(0, n, step):
            part = np.take(a, range(s, min(n, s + step)), axis=axis)
            out = (out + part.sum(axis=axis) % mod) % mod
        return out

    def equal(self, a, b) -> bool:
        a, b = np.asarray(a), np.asarray(b)
        nd = max(a.ndim, b.ndim)
        return bool(((a - b) % self.col(nd) == 0).all())

    # recovery

    def to_integer(self, v) -> int:
        """Recover an integer from residues, checked against the extra prime."""
        v = np.asarray(v)
        if v.ndim != 1:
            raise ValueError("to_integer expects a single value")
        x, m = int(v[0]), self.ells[0]
        for res, ell in zip(v[1 : len(self.ells)], self.ells[1:]):
            x, m = _crt_pair(x, m, int(res), ell)
        x %= m
        if x > m // 2:
            x -= m
        if 2 * abs(x) >= self.bound or (x - int(v[-1])) % self.check_ell:
            raise PrecisionError(f"residues do not describe an integer of size below {self.bound}")
        return x

    def to_rational(self, v, den: int) -> Fraction:
        """Recover v assuming den * v is an integer of size below the bound."""
        return Fraction(self.to_integer(self.mul(v, self.const(den))), den)

    # Galois action

    def galois(self, k: int) -> "ExactBackend":
        """Backend with zeta_{q-1} replaced by zeta_{q-1}^k (the automorphism sigma_k)."""
        if math.gcd(k, self.qx) != 1:
            raise ValueError(f"{k} is not a unit modulo {self.qx}")
        z = tuple(pow(zz, k % self.qx, ell) for zz, ell in zip(self.zeta_qx, self.all_ells))
        return ExactBackend(self.p, self.qx, self.ells, self.check_ell, z, self.zeta_p, self.bound)

    def theta_twist(self, k: int) -> "ExactBackend":
        """Backend with zeta_p replaced by zeta_p^k (additive character Theta_k)."""
        if k % self.p == 0:
            raise ValueError(f"{k} is divisible by p = {self.p}")
        z = tuple(pow(zz, k % self.p, ell) for zz, ell in zip(self.zeta_p, self.all_ells))
        return ExactBackend(self.p, self.qx, self.ells, self.check_ell, self.zeta_qx, z, self.bound)


def _powmod_array(a: np.ndarray, e: int, ell: int) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64) % ell
    out = np.ones_like(a)
    while e:
        if e & 1:
            out = out * a % ell
        a = a * a % ell
        e >>= 1
    return out


def _power_table(gens, ells, n: int) -> np.ndarray:
    out = np.empty((len(ells), n), dtype=np.int64)
    for i, (z, ell) in enumerate(zip(gens, ells)):
        B = max(1, math.isqrt(n))
        head = np.empty(B, dtype=np.int64)
        v = 1
        for j in range(B):
            head[j] = v
            v = v * z % ell
        row = np.empty(n + B, dtype=np.int64)
        cur = 1
        for k in range(0, n, B):
            row[k : k + B] = head * cur % ell
            cur = cur * v % ell
        out[i] = row[:n]
    return out


def _auxiliary_primes(step: int, bound: int) -> tuple[list[int], int]:
    ells: list[int] = []
    prod = 1
    ell = 1
    while True:
        ell += step
        if ell >= MAX_ELL:
            raise OverflowError(f"auxiliary primes = 1 mod {step} below 2^31 cannot reach bound {bound}")
        if ell <= MIN_ELL or not isprime(ell):
            continue
        if prod > bound:
            return ells, ell
        ells.append(ell)
        prod *= ell


def _backend_for(p: int, qx: int, ells: list[int], check: int, bound: int) -> ExactBackend:
    zq, zp = [], []
    for e in ells + [check]:
        h = primitive_root(e)
        zq.append(pow(h, (e - 1) // qx, e))
        zp.append(pow(h, (e - 1) // p, e))
    return ExactBackend(p, qx, tuple(ells), check, tuple(zq), tuple(zp), bound)


def select_backend(ctx: FieldContext, bound: int) -> ExactBackend:
    """Smallest primes ell = 1 mod lcm(q-1, p), ell > 100, with product above
    bound, plus the next one as a check prime."""
    if bound < 2:
        raise ValueError("bound must be at least 2")
    ells, check = _auxiliary_primes(math.lcm(ctx.qx, ctx.p), bound)
    return _backend_for(ctx.p, ctx.qx, ells, check, bound)


def select_tower_backends(p: int, degrees: list[int], bound: int) -> dict[int, ExactBackend]:
    """Backends for F_{p^r}, r in degrees, sharing one list of primes.

    All roots of unity come from the same generator of each F_ell^x, so the
    image of zeta_n is the same at every level whenever n divides p^r - 1.
    """
    step = math.lcm(p, *(p**r - 1 for r in degrees))
    ells, check = _auxiliary_primes(step, bound)
    return {r: _backend_for(p, p**r - 1, ells, check, bound) for r in degrees}


# exact cyclic arithmetic via floating FFT on 8-bit limbs

_LIMB = 8
_NLIMB = 4


def conv_mod(x: np.ndarray, y: np.ndarray, ell: int) -> np.ndarray:
    """Exact linear convolution of two residue vectors modulo ell < 2^31."""
    n = len(x) + len(y) - 1
    size = 1 << (n - 1).bit_length()
    mask = (1 << _LIMB) - 1
    fx = [np.fft.rfft((x >> (_LIMB * i)) & mask, size) for i in range(_NLIMB)]
    fy = [np.fft.rfft((y >> (_LIMB * i)) & mask, size) for i in range(_NLIMB)]
    out = np.zeros(n, dtype=np.int64)
    for s in range(2 * _NLIMB - 1):
        acc = sum(fx[i] * fy[s - i] for i in range(max(0, s - _NLIMB + 1), min(s, _NLIMB - 1) + 1))
        part = np.rint(np.fft.irfft(acc, size)[:n]).astype(np.int64) % ell
        out = (out + part * pow(2, _LIMB * s, ell)) % ell
    return out


def _binom2(k: np.ndarray, n: int) -> np.ndarray:
    k = np.asarray(k, dtype=np.int64)
    return (k * (k - 1) // 2) % n


def dft_mod(a: np.ndarray, backend: ExactBackend) -> np.ndarray:
    """out[:, m] = sum_e zeta_{q-1}^{m e} a[:, e] for a of shape (L, q-1).

    Uses m e = C(m+e, 2) - C(m, 2) - C(e, 2), turning the transform into one
    correlation against a chirp, evaluated exactly by conv_mod.
    """
    n = backend.qx
    zp = backend.zeta_qx_powers
    e = np.arange(n)
    k = np.arange(2 * n - 1)
    out = np.empty_like(a)
    for i, ell in enumerate(backend.all_ells):
        a2 = a[i] * zp[i, (-_binom2(e, n)) % n] % ell
        chirp = zp[i, _binom2(k, n)]
        c = conv_mod(chirp, a2[::-1].copy(), ell)[n - 1 : 2 * n - 1]
        out[i] = c * zp[i, (-_binom2(e, n)) % n] % ell
    return out


@dataclass(frozen=True, eq=False)
class GaussTable:
    ctx: FieldContext
    backend: ExactBackend
    values: np.ndarray  # shape (L, q-1); column m holds g(m)

    def __getitem__(self, m) -> np.ndarray:
        return self.values[:, np.asarray(m) % self.ctx.qx]


def additive_character_sequence(ctx: FieldContext, backend: ExactBackend) -> np.ndarray:
    """a[:, e] = Theta(g^e) = zeta_p^{Tr(g^e)}."""
    return backend.zeta_p_powers[:, ctx.trace_table[ctx.exp_table]]


def gauss_table(ctx: FieldContext, backend: ExactBackend, self_check: int = 3) -> GaussTable:
    """All Gauss sums g(m) = sum_{x != 0} omega(x)^m Theta(x), omega(g) = zeta_{q-1}.

    A few entries are recomputed by direct summation as a guard on the
    floating-point convolution.
    """
    if backend.qx != ctx.qx or backend.p != ctx.p:
        raise ValueError("backend was built for a different field")
    a = additive_character_sequence(ctx, backend)
    vals = dft_mod(a, backend)
    if ctx.qx > 1:
        rng = np.random.default_rng(ctx.q)
        for m in rng.integers(0, ctx.qx, size=self_check):
            if not backend.equal(vals[:, m], gauss_sum_direct(ctx, backend, int(m))):
                raise PrecisionError("fast Gauss table disagrees with direct summation")
    vals.setflags(write=False)
    return GaussTable(ctx, backend, vals)


def gauss_sum_direct(ctx: FieldContext, backend: ExactBackend, m: int) -> np.ndarray:
    """g(m) by direct summation over F_q^x (test oracle)."""
    a = additive_character_sequence(ctx, backend)
    e = np.arange(ctx.qx)
    return backend.sum(backend.mul(backend.root(m * e), a))


def character_value(ctx: FieldContext, backend: ExactBackend, a: int, e: int) -> np.ndarray:
    """omega(a)^e as a backend value."""
    return backend.root(e * ctx.dlog(a))


def character_sign(ctx: FieldContext, a: int, e: int) -> int:
    """omega(a)^e when it is known to be +-1, as a Python int."""
    if (e * 2) % ctx.qx:
        raise ValueError("character value is not guaranteed to be +-1")
    k = (e * ctx.dlog(a)) % ctx.qx
    return 1 if k == 0 else -1


def jacobi_symbol(a: int, n: int) -> int:
    if n <= 0 or n % 2 == 0:
        raise ValueError("Jacobi symbol needs an odd positive modulus")
    return int(_sympy_jacobi(a % n, n))


def gauss_table_complex(ctx: FieldContext) -> np.ndarray:
    """Floating complex g(m) with omega(g) = exp(2 pi i / (q-1)); display only."""
    theta = np.exp(2j * np.pi * ctx.trace_table[ctx.exp_table] / ctx.p)
    return np.fft.ifft(theta) * ctx.qx


@dataclass(frozen=True, eq=False)
class GaussData:
    ctx: FieldContext
    backend: ExactBackend
    gt: GaussTable


def gauss_data(p: int, r: int, bound: int) -> GaussData:
    """Field, backend and Gauss table, memoized by (p, r, bound)."""
    return _gauss_data_cached(p, r, int(bound))


@lru_cache(maxsize=24)
def _gauss_data_cached(p: int, r: int, bound: int) -> GaussData:
    from .finitefield import build_field

    ctx = build_field(p, r)
    backend = select_backend(ctx, bound)
    return GaussData(ctx, backend, gauss_table(ctx, backend))
