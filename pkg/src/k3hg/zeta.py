"""Local Euler factors: hypergeometric factors over abelian fields, Dedekind
pieces, twists, and the degree-21 polynomial P of each pencil from counts.

Polynomials are ascending integer coefficient lists in T with constant term
1. The convention throughout is L(T) = exp(-sum_r a_r T^r / r), so a_r is the
r-th power sum of the reciprocal roots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product

import numpy as np
from sympy import cyclotomic_poly, mobius, symbols, totient
from sympy import Poly as SymPoly

from .charsums import ExactBackend, gauss_data, gauss_table, jacobi_symbol, select_tower_backends
from .finitefield import BadPrimeError, build_field, reduce_rational
from .hypergeom import (
    HGParams,
    ParameterError,
    canonicalize,
    field_of_definition,
    hsum,
    hsum_denominator,
    hsum_value_bound,
    rational_part,
    units,
)
from .koblitz import BudgetError
from .pencils import (
    COMMON,
    F1L3_A,
    F2L2_A,
    HALF,
    L2L2_EIGHTH,
    L4_FIFTH,
    QUAD2,
    PencilInstance,
    check_good,
    count_formula,
    count_bound,
)

LEVEL_BUDGET = 2_000_000
P_DEGREE = 21
Q_DEGREE = 18


class NonIntegralError(ArithmeticError):
    """An Euler factor coefficient came out non-integral."""


class MismatchError(AssertionError):
    """Two sides of an identity disagree."""


class AmbiguousShapeError(RuntimeError):
    """Counts available within budget do not pin down a unique factorization."""


# polynomial helpers


def poly_trim(a: list) -> list:
    a = list(a)
    while len(a) > 1 and a[-1] == 0:
        a.pop()
    return a


def poly_mul(a: list, b: list) -> list:
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return poly_trim(out)


def poly_pow(a: list, e: int) -> list:
    out = [1]
    for _ in range(e):
        out = poly_mul(out, a)
    return out


def poly_divexact(a: list, b: list) -> list:
    """a / b for integer polynomials with b[0] = +-1; raises if inexact."""
    a = list(a)
    if b[0] not in (1, -1):
        raise ValueError("divisor must have unit constant term")
    n = len(a) - len(b) + 1
    if n <= 0:
        raise ArithmeticError("divisor has larger degree")
    out = []
    for k in range(n):
        c = a[k] * b[0]
        out.append(c)
        for j, y in enumerate(b):
            a[k + j] -= c * y
    if any(a):
        raise ArithmeticError("polynomial division is not exact")
    return poly_trim(out)


def spread(a: list, f: int) -> list:
    """a(T) -> a(T^f)."""
    out = [0] * ((len(a) - 1) * f + 1)
    for i, x in enumerate(a):
        out[i * f] = x
    return out


def tate_shift(a: list, p: int, shift: int) -> list:
    """a(T) -> a(p^shift T)."""
    return [x * p ** (shift * i) for i, x in enumerate(a)]


def exp_from_power_sums(s: list, degree: int) -> list[Fraction]:
    """Coefficients c_0..c_degree of exp(-sum s_r T^r / r); s[0] is s_1."""
    c = [Fraction(1)]
    for k in range(1, degree + 1):
        acc = Fraction(0)
        for i in range(1, min(k, len(s)) + 1):
            acc += s[i - 1] * c[k - i]
        c.append(-acc / k)
    return c


def power_sums(a: list, n: int) -> list:
    """Power sums s_1..s_n of the reciprocal roots of a(T)."""
    s = []
    for k in range(1, n + 1):
        ak = a[k] if k < len(a) else 0
        acc = -k * ak
        for i in range(1, k):
            acc -= (a[i] if i < len(a) else 0) * s[k - i - 1]
        s.append(acc)
    return s


def _integral(cs: list[Fraction], what: str) -> list[int]:
    out = []
    for k, c in enumerate(cs):
        c = Fraction(c)
        if c.denominator != 1:
            raise NonIntegralError(f"{what}: coefficient {k} = {c} is not an integer")
        out.append(int(c))
    return out


@dataclass(frozen=True)
class EulerFactor:
    coefficients: tuple[int, ...]
    note: str = field(default="", compare=False)

    def __post_init__(self):
        cs = tuple(int(c) for c in poly_trim(list(self.coefficients)))
        if cs[0] != 1:
            raise ValueError(f"Euler factor must have constant term 1, got {cs[0]}")
        object.__setattr__(self, "coefficients", cs)

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __mul__(self, other: "EulerFactor") -> "EulerFactor":
        return EulerFactor(tuple(poly_mul(list(self.coefficients), list(other.coefficients))))

    def __pow__(self, e: int) -> "EulerFactor":
        return EulerFactor(tuple(poly_pow(list(self.coefficients), e)))

    def truncated(self, n: int) -> tuple[int, ...]:
        cs = self.coefficients + (0,) * max(0, n + 1 - len(self.coefficients))
        return cs[: n + 1]

    def as_list(self) -> list[int]:
        return list(self.coefficients)


ONE = EulerFactor((1,))


# fields and twists


@dataclass(frozen=True)
class AbelianFieldSpec:
    m: int
    H_M: frozenset[int]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        G = set(units(self.m))
        H = frozenset(k % self.m for k in self.H_M) if self.m > 1 else frozenset({0})
        if not H <= G or any((a * b) % self.m not in H for a in H for b in H):
            raise ValueError(f"{sorted(H)} is not a subgroup of (Z/{self.m})^x")
        object.__setattr__(self, "H_M", H)

    @classmethod
    def rationals(cls) -> "AbelianFieldSpec":
        return cls(1, frozenset({0}), "Q")

    @classmethod
    def cyclotomic(cls, n: int) -> "AbelianFieldSpec":
        return cls(n, frozenset({1}), f"Q(zeta_{n})")

    @classmethod
    def gaussian(cls) -> "AbelianFieldSpec":
        return cls(4, frozenset({1}), "Q(sqrt(-1))")

    @property
    def degree(self) -> int:
        return len(units(self.m)) // len(self.H_M)

    def __str__(self):
        return self.name or f"M(m={self.m}, H={sorted(self.H_M)})"


def residue_data(M: AbelianFieldSpec, p: int) -> tuple[int, int]:
    """(f, g): residue degree and number of primes of M above p."""
    if M.m > 1 and M.m % p == 0:
        raise BadPrimeError(f"p = {p} ramifies in {M}")
    f = 1
    x = p % M.m if M.m > 1 else 0
    while x not in M.H_M:
        x = x * p % M.m
        f += 1
    return f, M.degree // f


TWIST_KINDS = ("trivial", "phi_minus1", "phi_sqrtminus1", "phi_sqrt2", "phi_psi")


@dataclass(frozen=True)
class TwistSpec:
    kinds: tuple[str, ...] = ()
    psi: Fraction | None = None

    def __post_init__(self):
        kinds = tuple(k for k in self.kinds if k != "trivial")
        bad = [k for k in kinds if k not in TWIST_KINDS]
        if bad:
            raise ValueError(f"unknown twist kinds {bad}")
        if "phi_psi" in kinds and self.psi is None:
            raise ValueError("phi_psi needs psi")
        object.__setattr__(self, "kinds", kinds)

    def value(self, p: int, q: int) -> int:
        """The twist at a prime of norm q = p^f."""
        out = 1
        for k in self.kinds:
            out *= _twist_one(k, p, q, self.psi)
        return out

    def __str__(self):
        return "*".join(self.kinds) or "trivial"


def _sign_mod(x: int, p: int) -> int:
    if x == 1:
        return 1
    if x == p - 1:
        return -1
    raise ValueError(f"{x} is not +-1 mod {p}")


def _twist_one(kind: str, p: int, q: int, psi) -> int:
    if kind == "phi_minus1":
        return -1 if (q - 1) // 2 % 2 else 1
    if kind == "phi_sqrtminus1":
        if q % 4 != 1:
            raise ValueError(f"phi_sqrtminus1 needs norm = 1 mod 4, got {q}")
        return -1 if (q - 1) // 4 % 2 else 1
    if kind == "phi_sqrt2":
        if q % 8 != 1:
            raise ValueError(f"phi_sqrt2 needs norm = 1 mod 8, got {q}")
        return _sign_mod(pow(2, (q - 1) // 4, p), p)
    if kind == "phi_psi":
        psi = Fraction(psi)
        a = psi.numerator * pow(psi.denominator, -1, p) % p
        if a == 0:
            raise BadPrimeError(f"p = {p} divides psi")
        return _sign_mod(pow(a, (q - 1) // 2, p), p)
    raise ValueError(kind)


TRIVIAL = TwistSpec()


# hypergeometric power sums


def _level_bound(params: HGParams, q: int) -> int:
    return hsum_value_bound(params, q) if params.d > 4 else 2 * (q - 1) * q**12 + 2


def _check_budget(q: int):
    if q > LEVEL_BUDGET:
        raise BudgetError(f"H-sum over F_{q} exceeds the level budget {LEVEL_BUDGET}")


@lru_cache(maxsize=4096)
def hsum_rational(params: HGParams, t: Fraction, p: int, r: int) -> Fraction:
    """H_{p^r}(params | t) for params defined over Q, as an exact rational."""
    q = p**r
    _check_budget(q)
    if not field_of_definition(params).is_rational:
        raise ParameterError(f"{params} is not defined over Q")
    data = gauss_data(p, r, _level_bound(params, q))
    tv = reduce_rational(data.ctx, t.numerator, t.denominator)
    if tv == 0:
        raise BadPrimeError(f"t = {t} vanishes mod {p}")
    v = hsum(data.ctx, data.backend, data.gt, params, tv)
    return data.backend.to_rational(v, hsum_denominator(params, q))


def _power_sum_levels(params, t, p, f, n, twist, shift):
    q = p**f
    out = []
    for r in range(1, n + 1):
        h = hsum_rational(params, t, p, f * r)
        out.append(twist.value(p, q) ** r * q ** (r * shift) * h)
    return out


def euler_factor_q(
    params: HGParams,
    t,
    p: int,
    f: int = 1,
    degree: int | None = None,
    twist: TwistSpec = TRIVIAL,
    shift: int = 0,
    check: bool = False,
) -> EulerFactor:
    """exp(-sum chi(q)^r q^(r shift) H_{q^r} U^r / r) truncated at the degree
    bound, as a polynomial in U (q = p^f). With check=True the next
    coefficient is computed and must vanish."""
    t = Fraction(t)
    degree = params.d if degree is None else degree
    n = degree + 1 if check else degree
    s = _power_sum_levels(params, t, p, f, n, twist, shift)
    cs = exp_from_power_sums(s, n)
    if check and cs[degree + 1] != 0:
        raise NonIntegralError(f"next coefficient {cs[degree + 1]} != 0: degree bound {degree} is wrong")
    note = "degree confirmed" if check else "degree assumed"
    return EulerFactor(tuple(_integral(cs[: degree + 1], f"L_q({params})")), note)


def _lift_subgroup(M: AbelianFieldSpec, m2: int) -> list[int]:
    return [k for k in units(m2) if (k % M.m if M.m > 1 else 0) in M.H_M]


def coset_data(params: HGParams, p: int, M: AbelianFieldSpec):
    """(f, representatives of (Z/m)^x / <H_M, p>) at a common modulus m."""
    m2 = math.lcm(M.m, params.lcd)
    if m2 % p == 0:
        raise BadPrimeError(f"p = {p} divides the conductor {m2}")
    H = set(_lift_subgroup(M, m2))
    for k in H:
        if params.scaled(k) != params:
            raise ParameterError(f"H_M of {M} is not contained in H_K of {params}")
    f, x = 1, p % m2
    while x not in H:
        x = x * p % m2
        f += 1
    S = set(H)
    frontier = list(H)
    while frontier:
        y = frontier.pop() * p % m2
        for h in H:
            z = y * h % m2
            if z not in S:
                S.add(z)
                frontier.append(z)
    reps, seen = [], set()
    for k in units(m2):
        if k in seen:
            continue
        reps.append(k)
        seen |= {k * s % m2 for s in S}
    return f, reps


def _scaled_prime_part(params: HGParams, u: int) -> HGParams:
    sd = rational_part(params)
    return canonicalize(
        list(sd.alpha0) + [u * a for a in sd.alpha_prime],
        list(sd.beta0) + [u * b for b in sd.beta_prime],
    )


def _tower_factor(classes, t, p, degree, twist, shift, n_cosets):
    """Product over coset classes with parameters not defined over Q, at a
    prime of degree one. All levels share one set of auxiliary primes and the
    characters at level r are pulled back along the norm to F_p."""
    levels = list(range(1, degree + 1))
    for r in levels:
        _check_budget(p**r)
    d = max(pr.d for pr, _ in classes)
    total = degree * n_cosets
    # reciprocal roots have absolute value p^((d-1)/2) before the shift
    bound = 2 * 2**total * (math.isqrt(p ** ((d - 1) * total)) + 1) + 2
    backs = select_tower_backends(p, levels, bound)
    base = build_field(p, 1)
    chi = twist.value(p, p)
    cls_sums = {i: [] for i in range(len(classes))}
    for r in levels:
        be: ExactBackend = backs[r]
        ctx = build_field(p, r)
        gt = gauss_table(ctx, be)
        norm = int(ctx.power(np.array(ctx.g), (p**r - 1) // (p - 1)))
        if not 0 < norm < p:
            raise RuntimeError("norm of the generator is not in the prime field")
        u = base.dlog(norm)
        tv = reduce_rational(ctx, t.numerator, t.denominator)
        for i, (pr, _) in enumerate(classes):
            v = hsum(ctx, be, gt, _scaled_prime_part(pr, u), tv)
            v = be.mul(v, be.const(chi**r))
            cls_sums[i].append(v)
    be = backs[1]
    mods = be.modulus
    total_poly = [be.const(1)]
    for i, (pr, mult) in enumerate(classes):
        coeffs = [be.const(1)]
        for k in range(1, degree + 1):
            acc = be.const(0)
            for j in range(1, k + 1):
                acc = be.add(acc, be.mul(cls_sums[i][j - 1], coeffs[k - j]))
            inv_k = np.array([pow(k, -1, int(e)) for e in mods], dtype=np.int64)
            coeffs.append(be.neg(be.mul(acc, inv_k)))
        for _ in range(mult):
            new = [be.const(0) for _ in range(len(total_poly) + degree)]
            for a, x in enumerate(total_poly):
                for b, y in enumerate(coeffs):
                    new[a + b] = be.add(new[a + b], be.mul(x, y))
            total_poly = new
    return tate_shift([be.to_integer(c) for c in total_poly], p, shift)


def euler_factor_over_M(
    params: HGParams,
    t,
    p: int,
    M: AbelianFieldSpec,
    twist: TwistSpec = TRIVIAL,
    shift: int = 0,
    degree: int | None = None,
    check: bool = False,
) -> EulerFactor:
    """Product over cosets k_i of (Z/m)^x/<H_M, p> of L_q(H(k_i alpha, k_i beta | t), T^f)."""
    t = Fraction(t)
    f, reps = coset_data(params, p, M)
    degree = params.d if degree is None else degree
    classes: dict[HGParams, int] = {}
    for k in reps:
        pk = params.scaled(k)
        classes[pk] = classes.get(pk, 0) + 1
    if all(field_of_definition(pk).is_rational for pk in classes):
        out = ONE
        for pk, mult in classes.items():
            out = out * euler_factor_q(pk, t, p, f, degree, twist, shift, check) ** mult
        poly = spread(list(out.coefficients), f)
        return EulerFactor(tuple(poly), "degree confirmed" if check else "degree assumed")
    if f != 1:
        raise NotImplementedError(
            f"parameters not defined over Q at a prime of residue degree {f} > 1 are not supported"
        )
    poly = _tower_factor(sorted(classes.items(), key=lambda kv: kv[0].alpha), t, p, degree, twist, shift, len(reps))
    return EulerFactor(tuple(poly), "degree assumed")


def dedekind_local(M: AbelianFieldSpec, p: int, shift: int = 0, relative: bool = False) -> EulerFactor:
    """Local factor of zeta_M(s - shift) at p as a polynomial; with relative=True
    the factor of zeta_Q is divided out."""
    f, g = residue_data(M, p)
    poly = poly_pow(spread([1, -(p ** (shift * f))], f), g)
    if relative:
        poly = poly_divexact(poly, [1, -(p**shift)])
    return EulerFactor(tuple(poly))


# pencil level polynomials


def count(inst: PencilInstance, p: int, r: int) -> int:
    q = p**r
    _check_budget(q)
    data = gauss_data(p, r, count_bound(q))
    return count_formula(inst, data.ctx, data.backend, data.gt)


def trace_from_count(inst: PencilInstance, p: int, r: int) -> int:
    q = p**r
    return count(inst, p, r) - 1 - q - q * q


def P_prefix_from_counts(inst: PencilInstance, p: int, n: int) -> list[int]:
    """c_0..c_n of P from N_1..N_n."""
    check_good(inst, p)
    s = [trace_from_count(inst, p, r) for r in range(1, n + 1)]
    return _integral(exp_from_power_sums(s, n), "P")


def P_from_counts(inst: PencilInstance, p: int, max_r: int = 11) -> EulerFactor:
    """Full degree-21 P from counts over F_{p^r}, r <= max_r, completed by the
    functional equation c_{21-j} = eps p^{21-2j} c_j."""
    if max_r < 11:
        raise ValueError("need max_r >= 11 for the full degree-21 polynomial")
    check_good(inst, p)
    s = [trace_from_count(inst, p, r) for r in range(1, max_r + 1)]
    c = _integral(exp_from_power_sums(s, max_r), "P")
    if c[10] != 0:
        eps = Fraction(c[11], p * c[10])
    else:
        if max_r < 12:
            s.append(trace_from_count(inst, p, 12))
            c = _integral(exp_from_power_sums(s, 12), "P")
        if c[9] == 0:
            raise ArithmeticError("functional equation sign is indeterminate")
        eps = Fraction(c[12], p**3 * c[9])
    if eps not in (1, -1):
        raise MismatchError(f"functional equation sign {eps} is not +-1")
    full = c[:11] + [0] * 11
    for j in range(11):
        full[21 - j] = int(eps) * p ** (21 - 2 * j) * c[j]
    for j in range(11, min(len(c), 22)):
        if full[j] != c[j]:
            raise MismatchError(f"coefficient {j} violates the functional equation")
    return EulerFactor(tuple(full), f"counts r<={max_r}, eps={int(eps)}")


def common_factor_R(inst: PencilInstance, p: int) -> EulerFactor:
    """Degree-3 common factor from H_p, H_{p^2} and the functional equation
    c_3 = eps p^3, c_2 = eps p c_1 (with H_{p^3} when c_1 = 0)."""
    check_good(inst, p)
    t = inst.t
    s = _power_sum_levels(COMMON, t, p, 1, 2, TRIVIAL, 0)
    c = _integral(exp_from_power_sums(s, 2), "R")
    if c[1] != 0:
        eps = Fraction(c[2], p * c[1])
        if eps not in (1, -1):
            raise MismatchError(f"R: c_2 / (p c_1) = {eps} is not +-1")
        return EulerFactor((1, c[1], c[2], int(eps) * p**3), "functional equation")
    return euler_factor_q(COMMON, t, p, 1, 3)


def _chi(a: Fraction, q: int) -> int:
    a = Fraction(a)
    return jacobi_symbol(a.numerator, q) * jacobi_symbol(a.denominator, q)


def Q_F4_closed_form(inst: PencilInstance, q: int) -> EulerFactor:
    """Closed form of the algebraic part Q for the Dwork pencil over F_q.

    Uses chi(2(1 - psi^4)) for the twelvefold factor and, for q = 3 mod 4,
    the threefold factor at -1 - psi^2, as the counts require.
    """
    if q % 2 == 0:
        raise ValueError("q must be odd")
    psi = inst.psi
    a = _chi(1 - psi**2, q)
    b = _chi(-1 - psi**2, q)
    poly = poly_mul(poly_pow([1, -a * q], 3), poly_pow([1, -b * q], 3))
    if q % 4 == 1:
        c = _chi(2 * (1 - psi**4), q)
        poly = poly_mul(poly, poly_pow([1, -c * q], 12))
    else:
        poly = poly_mul(poly, poly_pow([1, 0, -(q * q)], 6))
    return EulerFactor(tuple(poly))


# shapes


@dataclass(frozen=True)
class Shape:
    """Fixed cyclotomic factors C_n(qT)^e, plus blocks (degree, multiplicity)
    of unknown products of C_n(qT)."""

    fixed: tuple[tuple[int, int], ...]
    blocks: tuple[tuple[int, int], ...]
    irreducible: bool = False

    @property
    def degree(self) -> int:
        return sum(int(totient(n)) * e for n, e in self.fixed) + sum(d * m for d, m in self.blocks)


def factor_shape(family: str, q: int) -> Shape:
    if family == "F4":
        return Shape((), ((2, 3), (1, 12))) if q % 4 == 1 else Shape((), ((2, 3), (2, 6)))
    if family == "F1L3":
        if q % 7 == 1:
            return Shape((), ((6, 3),))
        if q % 7 == 6:
            return Shape((), ((6, 3),))
        return Shape((), ((18, 1),))
    if family == "F2L2":
        if q % 8 == 1:
            return Shape(((1, 6),), ((2, 1), (1, 2), (2, 2), (2, 2)))
        if q % 8 == 5:
            return Shape(((1, 2), (2, 4)), ((2, 1), (1, 2), (4, 2)))
        return Shape(((1, 2), (2, 4)), ((2, 1), (2, 1), (4, 1), (4, 1)))
    if family == "L2L2":
        if q % 4 == 1:
            return Shape(((1, 8),), ((2, 1), (4, 2)))
        return Shape(((1, 4), (2, 4)), ((2, 1), (8, 1)))
    if family == "L4":
        if q % 5 == 1:
            return Shape(((1, 2),), ((4, 4),))
        if q % 5 == 4:
            return Shape(((1, 2),), ((8, 2),))
        return Shape(((1, 2),), ((16, 1),))
    raise ValueError(family)


def C_n(n: int, q: int) -> list[int]:
    """prod over primitive n-th roots zeta of (1 - zeta q T)."""
    if n == 1:
        return [1, -q]
    x = symbols("x")
    coeffs = SymPoly(cyclotomic_poly(n, x), x).all_coeffs()[::-1]
    return [int(c) * q**i for i, c in enumerate(coeffs)]


def ramanujan_sum(n: int, r: int) -> int:
    g = math.gcd(n, r)
    return int(mobius(n // g)) * int(totient(n)) // int(totient(n // g))


_TOT_MAX = 64


@lru_cache(maxsize=None)
def _indices_of_totient(k: int) -> tuple[int, ...]:
    return tuple(n for n in range(1, 8 * k + 3) if int(totient(n)) == k)


@lru_cache(maxsize=None)
def cyclotomic_multisets(degree: int, irreducible: bool = False) -> tuple[tuple[int, ...], ...]:
    """Multisets of n with sum of phi(n) equal to degree."""
    if irreducible:
        return tuple((n,) for n in _indices_of_totient(degree))
    cands = sorted({n for k in range(1, degree + 1) for n in _indices_of_totient(k)})
    out = []

    def rec(start, left, acc):
        if left == 0:
            out.append(tuple(acc))
            return
        for i in range(start, len(cands)):
            n = cands[i]
            ph = int(totient(n))
            if ph <= left:
                acc.append(n)
                rec(i, left - ph, acc)
                acc.pop()

    rec(0, degree, [])
    return tuple(out)


def shape_candidates(shape: Shape) -> list[dict[int, int]]:
    """All exponent vectors {n: e} compatible with the shape, deduplicated."""
    options = [cyclotomic_multisets(d, shape.irreducible) for d, _ in shape.blocks]
    seen, out = set(), []
    for choice in product(*options):
        e: dict[int, int] = {}
        for n, k in shape.fixed:
            e[n] = e.get(n, 0) + k
        for (d, m), ms in zip(shape.blocks, choice):
            for n in ms:
                e[n] = e.get(n, 0) + m
        key = tuple(sorted(e.items()))
        if key not in seen:
            seen.add(key)
            out.append(e)
    return out


def exponents_power_sum(e: dict[int, int], q: int, r: int) -> int:
    return q**r * sum(k * ramanujan_sum(n, r) for n, k in e.items())


def polynomial_from_exponents(e: dict[int, int], q: int) -> EulerFactor:
    poly = [1]
    for n, k in sorted(e.items()):
        poly = poly_mul(poly, poly_pow(C_n(n, q), k))
    return EulerFactor(tuple(poly))


def cyclotomic_exponents(poly: EulerFactor, q: int) -> dict[int, int]:
    """Write poly as a product of C_n(qT) by trial division; raises if some
    factor is not of that form."""
    rest = poly.as_list()
    out: dict[int, int] = {}
    # phi(n) >= sqrt(n/2), so no n beyond 2 deg^2 can divide
    for n in range(1, 2 * (len(rest) - 1) ** 2 + 2):
        if len(rest) == 1:
            break
        c = C_n(n, q)
        while len(rest) >= len(c):
            try:
                rest = poly_divexact(rest, c)
            except ArithmeticError:
                break
            out[n] = out.get(n, 0) + 1
    if len(rest) > 1:
        raise ArithmeticError("not a product of cyclotomic factors in qT")
    return out


def format_cyclotomic(e: dict[int, int]) -> str:
    names = {1: "(1-qT)", 2: "(1+qT)", 4: "(1+q^2T^2)"}
    parts = []
    for n, k in sorted(e.items()):
        base = names.get(n, f"Phi_{n}(qT)")
        parts.append(base + (f"^{k}" if k > 1 else ""))
    return "".join(parts) or "1"


def Q_from_shape(inst: PencilInstance, p: int, max_r: int | None = None) -> tuple[EulerFactor, int]:
    """Algebraic part Q from point counts: its power sums are
    a_r(P) - H_{p^r}(common factor), filtered through the shape table.

    Blocks are first read as arbitrary products of cyclotomic factors. If the
    levels within budget leave several candidates, those whose blocks are
    irreducible are preferred. Returns Q (note records the reading) and the
    number of levels used.
    """
    check_good(inst, p)
    shape = factor_shape(inst.family, p)
    cands = shape_candidates(shape)
    r, reading = 0, "general blocks"
    while len(cands) > 1 or r == 0:
        if (max_r is not None and r >= max_r) or p ** (r + 1) > LEVEL_BUDGET:
            sharp = {tuple(sorted(e.items())) for e in shape_candidates(Shape(shape.fixed, shape.blocks, True))}
            narrowed = [e for e in cands if tuple(sorted(e.items())) in sharp]
            if len(narrowed) != 1:
                raise AmbiguousShapeError(f"{len(cands)} candidates remain after {r} levels at p = {p}")
            cands, reading = narrowed, "irreducible blocks"
            break
        r += 1
        b = trace_from_count(inst, p, r) - hsum_rational(COMMON, inst.t, p, r)
        if b.denominator != 1:
            raise NonIntegralError("power sum of Q is not an integer")
        cands = [e for e in cands if exponents_power_sum(e, p, r) == b]
    if not cands:
        raise MismatchError(f"no factorization of the tabulated shape fits the counts at p = {p}")
    Q = polynomial_from_exponents(cands[0], p)
    if Q.degree != Q_DEGREE:
        raise MismatchError(f"Q has degree {Q.degree}")
    return EulerFactor(Q.coefficients, f"{reading}, {r} levels"), r


# the decomposition of each pencil

Q_FIELD = AbelianFieldSpec.rationals()
GAUSSIAN = AbelianFieldSpec.gaussian()
ZETA5 = AbelianFieldSpec.cyclotomic(5)
ZETA7 = AbelianFieldSpec.cyclotomic(7)
ZETA8 = AbelianFieldSpec.cyclotomic(8)

CLAUSES = {"F4": "a", "F1L3": "b", "F2L2": "c", "L2L2": "d", "L4": "e"}


@dataclass(frozen=True)
class FactorSpec:
    kind: str  # "hyp" or "dedekind"
    params: HGParams | None
    argument: str  # "t" or "1/t"
    M: AbelianFieldSpec
    twist: TwistSpec
    shift: int
    exponent: int
    relative: bool = False


def decomposition(inst: PencilInstance) -> list[FactorSpec]:
    fam = inst.family
    hyp = lambda pr, arg, M, tw, e=1: FactorSpec("hyp", pr, arg, M, tw, 1, e)
    ded = lambda M, e, rel=False: FactorSpec("dedekind", None, "", M, TRIVIAL, 1, e, rel)
    common = FactorSpec("hyp", COMMON, "t", Q_FIELD, TRIVIAL, 0, 1)
    phi_m1 = TwistSpec(("phi_minus1",))
    phi_i = TwistSpec(("phi_sqrtminus1",))
    if fam == "F4":
        return [common, hyp(QUAD2, "t", Q_FIELD, phi_m1, 3), hyp(HALF, "t", GAUSSIAN, phi_i, 6)]
    if fam == "F1L3":
        return [common, hyp(F1L3_A, "1/t", ZETA7, TRIVIAL)]
    if fam == "F2L2":
        return [
            common,
            ded(ZETA8, 2, True),
            hyp(QUAD2, "t", Q_FIELD, phi_m1),
            hyp(HALF, "t", GAUSSIAN, phi_i),
            hyp(F2L2_A, "1/t", ZETA8, TwistSpec(("phi_sqrt2",))),
        ]
    if fam == "L2L2":
        return [
            common,
            ded(GAUSSIAN, 4),
            hyp(QUAD2, "t", Q_FIELD, phi_m1),
            hyp(L2L2_EIGHTH, "t", GAUSSIAN, TwistSpec(("phi_sqrtminus1", "phi_psi"), inst.psi)),
        ]
    if fam == "L4":
        return [common, ded(Q_FIELD, 2), hyp(L4_FIFTH, "1/t", ZETA5, TRIVIAL)]
    raise ValueError(fam)


def factor_polynomial(spec: FactorSpec, inst: PencilInstance, p: int) -> EulerFactor:
    if spec.kind == "dedekind":
        return dedekind_local(spec.M, p, spec.shift, spec.relative) ** spec.exponent
    if spec.params == COMMON and spec.shift == 0:
        return common_factor_R(inst, p) ** spec.exponent
    t = inst.t if spec.argument == "t" else 1 / inst.t
    return euler_factor_over_M(spec.params, t, p, spec.M, spec.twist, spec.shift) ** spec.exponent


def describe(spec: FactorSpec, inst: PencilInstance) -> str:
    clause = CLAUSES[inst.family]
    if spec.kind == "dedekind":
        what = f"zeta_{spec.M}" + ("/zeta_Q" if spec.relative else "")
    else:
        what = f"H{spec.params}|{spec.argument} over {spec.M}, twist {spec.twist}"
    return f"clause ({clause}): {what}, shift {spec.shift}, exponent {spec.exponent}"


def rhs_factors(inst: PencilInstance, p: int) -> list[tuple[FactorSpec, EulerFactor]]:
    check_good(inst, p)
    return [(s, factor_polynomial(s, inst, p)) for s in decomposition(inst)]


def lhs_P(inst: PencilInstance, p: int, depth: int = P_DEGREE) -> tuple[list[int], str]:
    """P from the pencil's own point counts: Newton from counts when depth is
    within budget, otherwise R times the shape-determined algebraic part."""
    depth = min(depth, P_DEGREE)
    if p**depth <= LEVEL_BUDGET:
        if depth >= 11:
            return list(P_from_counts(inst, p, 11).truncated(depth)), "counts"
        return P_prefix_from_counts(inst, p, depth), "counts"
    Q, used = Q_from_shape(inst, p)
    P = common_factor_R(inst, p) * Q
    return list(P.truncated(depth)), f"shape + counts r<={used}"


def verify_main_theorem(inst: PencilInstance, p: int, depth: int = P_DEGREE) -> dict:
    """Both sides of the decomposition at p, compared through degree depth."""
    depth = min(depth, P_DEGREE)
    lhs, method = lhs_P(inst, p, depth)
    facs = rhs_factors(inst, p)
    rhs = ONE
    for _, poly in facs:
        rhs = rhs * poly
    rhs_cut = list(rhs.truncated(depth))
    return {
        "family": inst.family,
        "psi": str(inst.psi),
        "p": p,
        "depth": depth,
        "lhs_P": lhs,
        "lhs_method": method,
        "rhs_P": rhs_cut,
        "rhs_degree": rhs.degree,
        "rhs_factors": [
            {
                "source": describe(s, inst),
                "params": str(s.params) if s.params else None,
                "M": str(s.M),
                "twist": str(s.twist),
                "shift": s.shift,
                "exponent": s.exponent,
                "poly": poly.as_list(),
            }
            for s, poly in facs
        ],
        "match": lhs == rhs_cut and (depth < P_DEGREE or rhs.degree == P_DEGREE),
    }
