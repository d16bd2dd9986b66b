"""Hypergeometric parameters, finite field hypergeometric sums and the
classical series / differential operator.

Sums take parameters alpha, beta in [0, 1) with 0 in beta playing the role
of the classical lower parameter 1. The series and operator helpers use the
classical normalization directly (lower parameter 1 written as 1).
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from sympy import totient

from .charsums import ExactBackend, GaussTable
from .finitefield import FieldContext, PrimePower, reduce_rational

# Direction of M inside omega(... M t) for the hybrid sum. "inverse" uses
# prod q_j^q_j / prod p_j^p_j, which is what makes the hybrid sum agree with
# the classical one; "as_defined" uses prod p_j^p_j / prod q_j^q_j.
M_DIRECTION = "inverse"


class ParameterError(ValueError):
    pass


class NotGoodError(ParameterError):
    pass


class NotSplittableError(ParameterError):
    pass


def _frac(x) -> Fraction:
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


def _reduce(xs: Iterable) -> tuple[Fraction, ...]:
    return tuple(sorted(_frac(x) % 1 for x in xs))


@dataclass(frozen=True)
class HGParams:
    alpha: tuple[Fraction, ...]
    beta: tuple[Fraction, ...]

    @property
    def d(self) -> int:
        return len(self.alpha)

    @property
    def lcd(self) -> int:
        return math.lcm(*(x.denominator for x in self.alpha + self.beta))

    def scaled(self, k: int) -> "HGParams":
        return HGParams(_reduce(k * a for a in self.alpha), _reduce(k * b for b in self.beta))

    def __str__(self):
        fmt = lambda xs: ",".join(str(x) for x in xs)
        return f"({fmt(self.alpha)};{fmt(self.beta)})"


def canonicalize(alpha_raw: Iterable, beta_raw: Iterable) -> HGParams:
    alpha, beta = _reduce(alpha_raw), _reduce(beta_raw)
    if len(alpha) != len(beta):
        raise ParameterError(f"need equal cardinalities, got {len(alpha)} and {len(beta)}")
    if set(alpha) & set(beta):
        raise ParameterError("alpha and beta are not disjoint modulo Z")
    return HGParams(alpha, beta)


def params(alpha: str | Iterable, beta: str | Iterable) -> HGParams:
    """Convenience parser accepting comma separated strings."""
    if isinstance(alpha, str):
        alpha = [a for a in alpha.split(",") if a.strip()]
    if isinstance(beta, str):
        beta = [b for b in beta.split(",") if b.strip()]
    return canonicalize(alpha, beta)


def units(m: int) -> list[int]:
    return [k for k in range(m) if math.gcd(k, m) == 1]


@dataclass(frozen=True)
class DefField:
    m: int
    H_K: frozenset[int]

    @property
    def degree(self) -> int:
        return int(totient(self.m)) // len(self.H_K) if self.m > 1 else 1

    @property
    def is_rational(self) -> bool:
        return len(self.H_K) == len(units(self.m))


def field_of_definition(p: HGParams) -> DefField:
    m = p.lcd
    H = frozenset(k for k in units(m) if p.scaled(k) == p)
    return DefField(m, H)


# Galois-closed parts and cyclotomic bookkeeping


def _cyclotomic_split(xs: Sequence[Fraction]) -> tuple[Counter, list[Fraction]]:
    """Largest sub-multiset of xs closed under x -> kx (k prime to the
    denominator), as multiplicities of cyclotomic indices, plus the rest."""
    cnt = Counter(xs)
    mult: Counter = Counter()
    for d in sorted({x.denominator for x in xs}):
        orbit = [Fraction(j, d) for j in range(d) if math.gcd(j, d) == 1]
        c = min(cnt[x] for x in orbit)
        if c:
            mult[d] = c
            for x in orbit:
                cnt[x] -= c
    rest = sorted(cnt.elements())
    return mult, rest


def _orbit_multiset(mult: Counter) -> tuple[Fraction, ...]:
    out = []
    for d, c in mult.items():
        out += [Fraction(j, d) for j in range(d) if math.gcd(j, d) == 1] * c
    return tuple(sorted(out))


@dataclass(frozen=True)
class SplitData:
    alpha0: tuple[Fraction, ...]
    beta0: tuple[Fraction, ...]
    alpha_prime: tuple[Fraction, ...]
    beta_prime: tuple[Fraction, ...]


def rational_part(p: HGParams) -> SplitData:
    ma, ra = _cyclotomic_split(p.alpha)
    mb, rb = _cyclotomic_split(p.beta)
    return SplitData(_orbit_multiset(ma), _orbit_multiset(mb), tuple(ra), tuple(rb))


def is_good(p: HGParams, q: int) -> bool:
    return math.gcd(q, p.lcd) == 1


def split_for_q(p: HGParams, q: int | PrimePower) -> SplitData:
    q = q.q if isinstance(q, PrimePower) else q
    if not is_good(p, q):
        raise NotGoodError(f"q = {q} is not coprime to the denominators of {p}")
    sd = rational_part(p)
    if any((x * (q - 1)).denominator != 1 for x in sd.alpha_prime + sd.beta_prime):
        raise NotSplittableError(f"q = {q} is not splittable for {p}")
    return sd


@dataclass(frozen=True)
class BCMData:
    p_list: tuple[int, ...]
    q_list: tuple[int, ...]
    D_indices: tuple[tuple[int, int], ...]  # (cyclotomic index, multiplicity)
    delta: int
    M: Fraction  # prod p^p / prod q^q
    epsilon: int

    def _counts(self, n: int) -> tuple[int, int]:
        P = sum(1 for x in self.p_list if x % n == 0)
        Q = sum(1 for x in self.q_list if x % n == 0)
        return P, Q

    def s_of_order(self, n: int) -> int:
        return min(self._counts(n))

    def s(self, m: int, qx: int) -> int:
        """Multiplicity of exp(2 pi i m / qx) as a root of D."""
        return self.s_of_order(qx // math.gcd(m, qx))

    def s_array(self, qx: int) -> np.ndarray:
        g = np.gcd(np.arange(qx), qx)
        table = {int(gg): self.s_of_order(qx // int(gg)) for gg in np.unique(g)}
        lut = np.zeros(qx + 1, dtype=np.int64)
        for gg, v in table.items():
            lut[gg] = v
        return lut[g]


def gamma_vectors(alpha0: Iterable, beta0: Iterable) -> BCMData:
    ma, ra = _cyclotomic_split(_reduce(alpha0))
    mb, rb = _cyclotomic_split(_reduce(beta0))
    if ra or rb:
        raise ParameterError("parameters are not defined over Q")
    c = Counter(ma)
    c.subtract(mb)
    top = max(c, default=1)
    g: dict[int, int] = {}
    for d in range(top, 0, -1):
        v = c.get(d, 0) - sum(g.get(n, 0) for n in range(2 * d, top + 1, d))
        if v:
            g[d] = v
    p_list = tuple(sorted(n for n, e in g.items() if e > 0 for _ in range(e)))
    q_list = tuple(sorted(n for n, e in g.items() if e < 0 for _ in range(-e)))
    D = []
    for d in range(1, top + 1):
        P = sum(1 for x in p_list if x % d == 0)
        Q = sum(1 for x in q_list if x % d == 0)
        if min(P, Q):
            D.append((d, min(P, Q)))
    delta = sum(int(totient(d)) * e for d, e in D)
    M = Fraction(math.prod(x**x for x in p_list), math.prod(x**x for x in q_list))
    eps = -1 if sum(q_list) % 2 else 1
    return BCMData(p_list, q_list, tuple(D), delta, M, eps)


# finite field hypergeometric sums


def _elem(ctx: FieldContext, x: Fraction) -> int:
    return reduce_rational(ctx, x.numerator, x.denominator)


def _as_int(x: Fraction, qx: int) -> int:
    v = x * qx
    if v.denominator != 1:
        raise ParameterError(f"{x} * {qx} is not an integer")
    return int(v)


def _qpow_factor(backend: ExactBackend, q: int, exps: np.ndarray) -> np.ndarray:
    """q^e per column for small integer exponents e (possibly negative)."""
    out = np.empty((backend.L, len(exps)), dtype=np.int64)
    qv = backend.const(q)
    qi = backend.inv(qv)
    for e in np.unique(exps):
        val = backend.pow(qv if e >= 0 else qi, abs(int(e)))
        out[:, exps == e] = val[:, None]
    return out


def _gauss_quotient_terms(ctx, backend, gt: GaussTable, m, ups, downs):
    """prod_{a in ups} g(m+a)/g(a) * prod_{b in downs} g(-m-b)/g(-b)."""
    num = np.ones((backend.L, len(m)), dtype=np.int64)
    den = backend.const(1)
    for a in ups:
        num = backend.mul(num, gt[m + a])
        den = backend.mul(den, gt[a])
    for b in downs:
        num = backend.mul(num, gt[-m - b])
        den = backend.mul(den, gt[-b])
    return backend.mul(num, backend.inv(den)[:, None])


def hsum_classical(ctx: FieldContext, backend: ExactBackend, gt: GaussTable, p: HGParams, t: int) -> np.ndarray:
    qx = ctx.qx
    a = [_as_int(x, qx) for x in p.alpha]
    b = [_as_int(x, qx) for x in p.beta]
    m = np.arange(qx)
    arg = ctx.neg(t) if p.d % 2 else t
    terms = _gauss_quotient_terms(ctx, backend, gt, m, a, b)
    terms = backend.mul(terms, backend.root(m * ctx.dlog(int(arg))))
    total = backend.sum(terms)
    return backend.mul(total, backend.fraction(Fraction(-1, qx)))


def _bcm_core(ctx, backend, gt, data: BCMData, m):
    out = np.ones((backend.L, len(m)), dtype=np.int64)
    for x in data.p_list:
        out = backend.mul(out, gt[x * m])
    for x in data.q_list:
        out = backend.mul(out, gt[-x * m])
    s = data.s_array(ctx.qx)[m]
    out = backend.mul(out, _qpow_factor(backend, ctx.q, s - data.s(0, ctx.qx)))
    return out


def hsum_bcm(ctx: FieldContext, backend: ExactBackend, gt: GaussTable, p: HGParams, t: int) -> np.ndarray:
    if not field_of_definition(p).is_rational:
        raise ParameterError(f"{p} is not defined over Q")
    if not is_good(p, ctx.q):
        raise NotGoodError(f"q = {ctx.q} is not good for {p}")
    data = gamma_vectors(p.alpha, p.beta)
    m = np.arange(ctx.qx)
    terms = _bcm_core(ctx, backend, gt, data, m)
    arg = ctx.mul(_elem(ctx, data.epsilon / data.M), t)
    terms = backend.mul(terms, backend.root(m * ctx.dlog(int(arg))))
    sign = (-1) ** (len(data.p_list) + len(data.q_list))
    return backend.mul(backend.sum(terms), backend.fraction(Fraction(sign, 1 - ctx.q)))


def hybrid_M(data: BCMData, direction: str | None = None) -> Fraction:
    direction = direction or M_DIRECTION
    if direction == "inverse":
        return 1 / data.M
    if direction == "as_defined":
        return data.M
    raise ValueError(f"unknown M direction {direction!r}")


def hsum_hybrid(
    ctx: FieldContext,
    backend: ExactBackend,
    gt: GaussTable,
    p: HGParams,
    t: int,
    m_direction: str | None = None,
) -> np.ndarray:
    sd = split_for_q(p, ctx.q)
    data = gamma_vectors(sd.alpha0, sd.beta0)
    qx = ctx.qx
    m = np.arange(qx)
    terms = _bcm_core(ctx, backend, gt, data, m)
    ups = [_as_int(x, qx) for x in sd.alpha_prime]
    downs = [_as_int(x, qx) for x in sd.beta_prime]
    if ups or downs:
        terms = backend.mul(terms, _gauss_quotient_terms(ctx, backend, gt, m, ups, downs))
    sign = -1 if (p.d + data.delta) % 2 else 1
    arg = ctx.mul(_elem(ctx, sign * hybrid_M(data, m_direction)), t)
    terms = backend.mul(terms, backend.root(m * ctx.dlog(int(arg))))
    rs = (-1) ** (len(data.p_list) + len(data.q_list))
    return backend.mul(backend.sum(terms), backend.fraction(Fraction(rs, 1 - ctx.q)))


def applicable_definitions(p: HGParams, q: int) -> list[str]:
    out = []
    if not is_good(p, q):
        return out
    if all((x * (q - 1)).denominator == 1 for x in p.alpha + p.beta):
        out.append("classical")
    if field_of_definition(p).is_rational:
        out.append("bcm")
    try:
        split_for_q(p, q)
        out.append("hybrid")
    except ParameterError:
        pass
    return out


def hsum(ctx: FieldContext, backend: ExactBackend, gt: GaussTable, p: HGParams, t: int) -> np.ndarray:
    """H_q(alpha; beta | t) through the hybrid definition, which covers every
    good splittable q."""
    return hsum_hybrid(ctx, backend, gt, p, t)


def hsum_denominator(p: HGParams, q: int) -> int:
    """An integer D with D * H_q(alpha; beta | t) an algebraic integer."""
    return (q - 1) * q ** (2 * p.d)


def hsum_value_bound(p: HGParams, q: int) -> int:
    """Bound on |D * H| for D = hsum_denominator, using |H| <= q^d."""
    return 2 * hsum_denominator(p, q) * q**p.d + 2


# classical series and Picard-Fuchs operator


def series_coefficients(alpha: Sequence, beta: Sequence, n_terms: int) -> list[Fraction]:
    """c_k = prod (alpha)_k / prod (beta)_k for k < n_terms (classical
    normalization, beta = 1 gives the k! factor)."""
    alpha = [_frac(a) for a in alpha]
    beta = [_frac(b) for b in beta]
    out = [Fraction(1)]
    for k in range(n_terms - 1):
        den = math.prod((b + k for b in beta), start=Fraction(1))
        if den == 0:
            raise ParameterError(f"denominator Pochhammer vanishes at k = {k + 1}")
        out.append(out[-1] * math.prod((a + k for a in alpha), start=Fraction(1)) / den)
    return out


def _operator_shift(beta: Sequence[Fraction]) -> Fraction:
    """Exponent c = 1 - beta_j of a solution z^c F(alpha + c; beta + c).

    beta_j = 1 gives the holomorphic solution; otherwise pick a beta_j for
    which no shifted lower parameter is a non-positive integer.
    """
    if 1 in beta:
        return Fraction(0)
    for bj in sorted(beta, reverse=True):
        c = 1 - bj
        if all(not ((b + c).denominator == 1 and b + c <= 0) for b in beta):
            return c
    raise ParameterError("no admissible local exponent")


def apply_operator(alpha: Sequence, beta: Sequence, coeffs: Sequence, c: Fraction = Fraction(0)) -> list[Fraction]:
    """Coefficients of D(alpha; beta | z) applied to z^c sum u_k z^k, where
    D = prod (theta + beta_j - 1) - z prod (theta + alpha_i)."""
    alpha = [_frac(a) for a in alpha]
    beta = [_frac(b) for b in beta]
    res = []
    for k in range(len(coeffs)):
        lead = math.prod((c + k + b - 1 for b in beta), start=Fraction(1)) * coeffs[k]
        prev = math.prod((c + k - 1 + a for a in alpha), start=Fraction(1)) * coeffs[k - 1] if k else 0
        res.append(lead - prev)
    return res


def operator_residuals(alpha: Sequence, beta: Sequence, n_terms: int) -> list[Fraction]:
    """D(alpha; beta | z) applied to its truncated local solution."""
    alpha = [_frac(a) for a in alpha]
    beta = [_frac(b) for b in beta]
    c = _operator_shift(beta)
    u = series_coefficients([a + c for a in alpha], [b + c for b in beta], n_terms)
    return apply_operator(alpha, beta, u, c)


def operator_annihilates(alpha: Sequence, beta: Sequence, n_terms: int) -> bool:
    return all(r == 0 for r in operator_residuals(alpha, beta, n_terms))


def interlace_check(p: HGParams) -> bool:
    """True iff alpha and beta alternate around the circle R/Z."""
    if len(set(p.alpha)) < p.d or len(set(p.beta)) < p.d:
        return False
    labels = [lab for _, lab in sorted([(a, 0) for a in p.alpha] + [(b, 1) for b in p.beta])]
    return all(labels[i] != labels[i + 1] for i in range(len(labels) - 1))
