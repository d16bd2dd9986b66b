"""Finite fields F_{p^r} with precomputed exp/log/trace tables.

Elements are integers 0..q-1 whose base-p digits are the coefficients of a
polynomial in the root x of the modulus (constant term least significant).
Every nonzero element is a power of the fixed generator g, so characters of
F_q^x reduce to integer exponents modulo q - 1.
"""

from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from sympy import factorint, isprime, primitive_root

DEFAULT_BOUND = 2**24
CACHE_MAGIC = b"FFCTX1"
CACHE_ENV = "K3HG_CACHE"


class FieldError(ValueError):
    """Invalid field request or element."""


class BadPrimeError(FieldError):
    """The prime divides a quantity that must be invertible."""


@dataclass(frozen=True)
class PrimePower:
    p: int
    r: int = 1

    def __post_init__(self):
        if self.r < 1:
            raise FieldError(f"extension degree must be >= 1, got {self.r}")
        if not isprime(self.p):
            raise FieldError(f"{self.p} is not prime")

    @property
    def q(self) -> int:
        return self.p**self.r

    @property
    def qx(self) -> int:
        return self.p**self.r - 1


# polynomials over F_p as coefficient lists, constant term first


def _polymulmod(a, b, f, p):
    r = len(f) - 1
    prod = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                prod[i + j] = (prod[i + j] + ai * bj) % p
    for k in range(len(prod) - 1, r - 1, -1):
        c = prod[k]
        if c:
            for i in range(r + 1):
                prod[k - r + i] = (prod[k - r + i] - c * f[i]) % p
    out = prod[:r] + [0] * max(0, r - len(prod))
    return out


def _polypowmod(a, e, f, p):
    r = len(f) - 1
    result = [1] + [0] * (r - 1)
    base = list(a) + [0] * max(0, r - len(a))
    while e:
        if e & 1:
            result = _polymulmod(result, base, f, p)
        base = _polymulmod(base, base, f, p)
        e >>= 1
    return result


def _is_primitive(f, p, r):
    """Root of f has multiplicative order exactly p^r - 1.

    This forces f to be irreducible as well, since a reducible modulus has a
    unit group of smaller exponent or of order divisible by p.
    """
    qx = p**r - 1
    one = [1] + [0] * (r - 1)
    x = [0, 1] + [0] * (r - 2)
    if _polypowmod(x, qx, f, p) != one:
        return False
    return all(_polypowmod(x, qx // ell, f, p) != one for ell in factorint(qx))


def find_primitive_modulus(p: int, r: int) -> tuple[int, ...]:
    """Smallest monic primitive polynomial of degree r, ordered by the integer
    encoding of its lower coefficients."""
    for code in range(1, p**r):
        low = [(code // p**i) % p for i in range(r)]
        if low[0] == 0:
            continue
        f = low + [1]
        if _is_primitive(f, p, r):
            return tuple(f)
    raise RuntimeError(f"no primitive polynomial of degree {r} over F_{p}")


def _digits(a: np.ndarray, p: int, r: int) -> np.ndarray:
    out = np.empty(a.shape + (r,), dtype=np.int64)
    v = a.astype(np.int64, copy=True)
    for i in range(r):
        v, out[..., i] = np.divmod(v, p)
    return out


def _undigits(d: np.ndarray, p: int) -> np.ndarray:
    r = d.shape[-1]
    out = np.zeros(d.shape[:-1], dtype=np.int64)
    for i in range(r - 1, -1, -1):
        out = out * p + d[..., i]
    return out


def _mul_by_many(c: list[int], block: np.ndarray, f, p: int) -> np.ndarray:
    """Multiply one polynomial c by each row of a digit array, modulo f."""
    r = len(f) - 1
    n = block.shape[0]
    prod = np.zeros((n, 2 * r - 1), dtype=np.int64)
    for i, ci in enumerate(c):
        if ci:
            prod[:, i : i + r] += ci * block
    prod %= p
    for k in range(2 * r - 2, r - 1, -1):
        top = prod[:, k].copy()
        for i in range(r + 1):
            prod[:, k - r + i] -= top * f[i]
        prod %= p
    return prod[:, :r]


def _build_exp_table(p: int, r: int, f) -> np.ndarray:
    q = p**r
    qx = q - 1
    if r == 1:
        g = primitive_root(p)
        B = max(1, math.isqrt(qx))
        head = np.empty(B, dtype=np.int64)
        v = 1
        for j in range(B):
            head[j] = v
            v = v * g % p
        step = v
        out = np.empty(qx + B, dtype=np.int64)
        cur = 1
        for k in range(0, qx, B):
            out[k : k + B] = head * cur % p
            cur = cur * step % p
        return out[:qx]
    B = max(1, math.isqrt(qx))
    head = np.zeros((B, r), dtype=np.int64)
    cur = [1] + [0] * (r - 1)
    x = [0, 1] + [0] * (r - 2)
    for j in range(B):
        head[j] = cur
        cur = _polymulmod(cur, x, f, p)
    step = cur
    chunks = []
    base = [1] + [0] * (r - 1)
    for _ in range(0, qx, B):
        chunks.append(_mul_by_many(base, head, f, p))
        base = _polymulmod(base, step, f, p)
    digits = np.concatenate(chunks)[:qx]
    return _undigits(digits, p)


class FieldContext:
    """Immutable table-driven model of F_q."""

    def __init__(self, p: int, r: int, modulus, exp_table: np.ndarray):
        self.pp = PrimePower(p, r)
        self.p, self.r = p, r
        self.q = p**r
        self.qx = self.q - 1
        self.modulus = tuple(int(c) for c in modulus)
        self.exp_table = np.asarray(exp_table, dtype=np.int64)
        self.exp_table.setflags(write=False)
        self.g = int(self.exp_table[1 % self.qx]) if self.qx > 1 else 1
        log = np.full(self.q, -1, dtype=np.int64)
        log[self.exp_table] = np.arange(self.qx, dtype=np.int64)
        if (log[1:] < 0).any():
            raise RuntimeError("exp table is not a bijection onto F_q^x")
        log.setflags(write=False)
        self.log_table = log
        self.trace_table = self._trace_table()
        self.trace_table.setflags(write=False)

    def __repr__(self):
        return f"FieldContext(p={self.p}, r={self.r})"

    def _trace_table(self) -> np.ndarray:
        p, r = self.p, self.r
        if r == 1:
            return np.arange(self.q, dtype=np.int64)
        f = list(self.modulus)
        basis_tr = []
        for i in range(r):
            xi = [0] * r
            xi[i] = 1
            acc = [0] * r
            power = xi
            for _ in range(r):
                acc = [(a + b) % p for a, b in zip(acc, power)]
                power = _polypowmod(power, p, f, p)
            if any(acc[1:]):
                raise RuntimeError("trace landed outside the prime field")
            basis_tr.append(acc[0])
        d = _digits(np.arange(self.q, dtype=np.int64), p, r)
        return d @ np.array(basis_tr, dtype=np.int64) % p

    # arithmetic, vectorized over numpy arrays

    def add(self, a, b):
        if self.r == 1:
            return (np.asarray(a) + np.asarray(b)) % self.p
        da = _digits(np.asarray(a), self.p, self.r)
        db = _digits(np.asarray(b), self.p, self.r)
        return _undigits((da + db) % self.p, self.p)

    def neg(self, a):
        if self.r == 1:
            return (-np.asarray(a)) % self.p
        return _undigits((-_digits(np.asarray(a), self.p, self.r)) % self.p, self.p)

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def scale(self, c: int, a):
        """Multiply by an element c of the prime field."""
        c %= self.p
        if self.r == 1:
            return np.asarray(a) * c % self.p
        return _undigits(_digits(np.asarray(a), self.p, self.r) * c % self.p, self.p)

    def mul(self, a, b):
        a = np.asarray(a)
        b = np.asarray(b)
        la, lb = self.log_table[a], self.log_table[b]
        out = self.exp_table[(la + lb) % self.qx]
        return np.where((la < 0) | (lb < 0), 0, out)

    def power(self, a, e: int):
        a = np.asarray(a)
        la = self.log_table[a]
        out = self.exp_table[(la * (e % self.qx)) % self.qx]
        if e == 0:
            return np.ones_like(a)
        return np.where(la < 0, 0, out)

    def inv(self, a):
        a = np.asarray(a)
        if (a == 0).any():
            raise FieldError("zero has no inverse")
        return self.exp_table[(-self.log_table[a]) % self.qx]

    def frobenius(self, a):
        return self.power(a, self.p)

    def exp(self, e):
        return self.exp_table[np.asarray(e) % self.qx]

    def dlog(self, x) -> int:
        x = int(x)
        if not 0 < x < self.q:
            raise FieldError(f"dlog undefined for {x}")
        return int(self.log_table[x])

    def trace(self, x) -> int:
        return int(self.trace_table[int(x)])

    def from_int(self, n: int) -> int:
        return n % self.p

    def save(self, path: os.PathLike) -> None:
        with open(path, "wb") as fh:
            fh.write(CACHE_MAGIC)
            fh.write(struct.pack("<QQ", self.p, self.r))
            fh.write(np.asarray(self.modulus, dtype="<u8").tobytes())
            fh.write(self.exp_table.astype("<u8").tobytes())

    @classmethod
    def load(cls, path: os.PathLike) -> "FieldContext":
        data = Path(path).read_bytes()
        if data[:6] != CACHE_MAGIC:
            raise FieldError(f"{path} is not a field cache file")
        p, r = struct.unpack_from("<QQ", data, 6)
        off = 22
        modulus = np.frombuffer(data, dtype="<u8", count=r + 1, offset=off)
        off += 8 * (r + 1)
        exp_table = np.frombuffer(data, dtype="<u8", count=p**r - 1, offset=off)
        return cls(int(p), int(r), modulus.astype(np.int64), exp_table.astype(np.int64))


def cache_dir_from_env(explicit: str | None = None) -> Path | None:
    d = explicit or os.environ.get(CACHE_ENV)
    return Path(d) if d else None


def build_field(p: int, r: int = 1, bound: int = DEFAULT_BOUND, cache_dir: str | None = None) -> FieldContext:
    """Deterministically construct F_{p^r} (cached in memory, and on disk if a
    cache directory is configured)."""
    if not isprime(p):
        raise FieldError(f"{p} is not prime")
    if r < 1:
        raise FieldError(f"extension degree must be >= 1, got {r}")
    if p**r > bound:
        raise FieldError(f"q = {p}^{r} exceeds the table bound {bound}")
    cdir = cache_dir_from_env(cache_dir)
    if cdir is None:
        return _build_cached(p, r)
    path = cdir / f"field_{p}_{r}.bin"
    if path.exists():
        return FieldContext.load(path)
    ctx = _build_cached(p, r)
    cdir.mkdir(parents=True, exist_ok=True)
    ctx.save(path)
    return ctx


@lru_cache(maxsize=64)
def _build_cached(p: int, r: int) -> FieldContext:
    if r == 1:
        g = primitive_root(p)
        modulus = ((-g) % p, 1)
    else:
        modulus = find_primitive_modulus(p, r)
    return FieldContext(p, r, modulus, _build_exp_table(p, r, modulus))


def dlog(ctx: FieldContext, x) -> int:
    return ctx.dlog(x)


def trace(ctx: FieldContext, x) -> int:
    return ctx.trace(x)


def reduce_rational(ctx: FieldContext, num: int, den: int = 1) -> int:
    """Image of num/den in the prime subfield of F_q."""
    if den % ctx.p == 0:
        raise BadPrimeError(f"p = {ctx.p} divides the denominator {den}")
    return num % ctx.p * pow(den, -1, ctx.p) % ctx.p
