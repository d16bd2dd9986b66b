"""The five invertible quartic K3 pencils X_psi : F(x) - 4 psi x0 x1 x2 x3 = 0.

Each family is a sum of four monomials plus the mixing monomial. Point counts
are available in three independent ways: the hypergeometric closed forms,
Koblitz's torus formula plus boundary strata, and brute force.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from sympy import primefactors

from .charsums import ExactBackend, GaussTable, character_sign, gauss_data
from .finitefield import BadPrimeError, FieldContext, reduce_rational
from .hypergeom import HGParams, hsum, params
from .koblitz import MonomialSystem, boundary_strata_count, brute_projective_count, torus_count

FAMILIES = ("F4", "F1L3", "F2L2", "L2L2", "L4")

EXPONENTS = {
    "F4": ((4, 0, 0, 0), (0, 4, 0, 0), (0, 0, 4, 0), (0, 0, 0, 4)),
    # x0^3 x1 + x1^3 x2 + x2^3 x0 + x3^4
    "F1L3": ((3, 1, 0, 0), (0, 3, 1, 0), (1, 0, 3, 0), (0, 0, 0, 4)),
    "F2L2": ((4, 0, 0, 0), (0, 4, 0, 0), (0, 0, 3, 1), (0, 0, 1, 3)),
    "L2L2": ((3, 1, 0, 0), (1, 3, 0, 0), (0, 0, 3, 1), (0, 0, 1, 3)),
    "L4": ((3, 1, 0, 0), (0, 3, 1, 0), (0, 0, 3, 1), (1, 0, 0, 3)),
}
MIXING = (1, 1, 1, 1)

TABLE_BAD_PRIMES = {"F4": {2}, "F1L3": {2, 7}, "F2L2": {2}, "L2L2": {2}, "L4": {2, 5}}

COMMON = params("1/4,1/2,3/4", "0,0,0")
QUAD2 = params("1/4,3/4", "0,1/2")
HALF = params("1/2", "0")
F1L3_A = params("1/14,9/14,11/14", "0,1/4,3/4")
F1L3_B = params("3/14,5/14,13/14", "0,1/4,3/4")
F2L2_A = params("1/8,5/8", "0,1/4")
F2L2_B = params("3/8,7/8", "0,3/4")
L2L2_EIGHTH = params("1/8,3/8,5/8,7/8", "0,1/4,1/2,3/4")
L4_FIFTH = params("1/5,2/5,3/5,4/5", "0,1/4,1/2,3/4")


class BranchError(RuntimeError):
    """No congruence branch matched (internal consistency guard)."""


@dataclass(frozen=True)
class PencilInstance:
    family: str
    psi: Fraction

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        object.__setattr__(self, "psi", Fraction(self.psi))
        if self.psi == 0 or self.psi**4 == 1:
            raise ValueError(f"psi = {self.psi} gives a singular or degenerate fiber")

    @property
    def t(self) -> Fraction:
        return 1 / self.psi**4


def bad_primes(family: str, psi) -> set[int]:
    psi = Fraction(psi)
    if psi == 0 or psi**4 == 1:
        raise ValueError("psi must avoid 0 and the fourth roots of unity")
    out = set(TABLE_BAD_PRIMES[family])
    for x in (psi**4, psi**4 - 1):
        out |= set(primefactors(abs(x.numerator))) | set(primefactors(x.denominator))
    return out


def check_good(inst: PencilInstance, p: int) -> None:
    if p in bad_primes(inst.family, inst.psi):
        raise BadPrimeError(f"p = {p} is bad for {inst.family} at psi = {inst.psi}")


def defining_system(family: str, psi, ctx: FieldContext) -> MonomialSystem:
    inst = PencilInstance(family, Fraction(psi))
    check_good(inst, ctx.p)
    mix = reduce_rational(ctx, -4 * inst.psi.numerator, inst.psi.denominator)
    return MonomialSystem(3, EXPONENTS[family] + (MIXING,), (1, 1, 1, 1, mix))


def _field_value(ctx: FieldContext, x: Fraction) -> int:
    return reduce_rational(ctx, x.numerator, x.denominator)


def count_bound(q: int) -> int:
    return 16 * q**3 + 64


def count_formula_value(inst: PencilInstance, ctx: FieldContext, backend: ExactBackend, gt: GaussTable):
    """The closed-form count as a backend value, plus the branch taken."""
    check_good(inst, ctx.p)
    q, qx = ctx.q, ctx.qx
    t = _field_value(ctx, inst.t)
    tinv = _field_value(ctx, 1 / inst.t)
    c = backend.const

    def H(p: HGParams, arg: int = t):
        return hsum(ctx, backend, gt, p, arg)

    def lin(*terms):
        acc = c(0)
        for coef, val in terms:
            acc = backend.add(acc, backend.mul(c(coef), val))
        return acc

    one = c(1)
    fam = inst.family
    if fam == "F4":
        if q % 4 == 3:
            return lin((q * q + q + 1, one), (1, H(COMMON)), (-3 * q, H(QUAD2))), "q=3 mod 4"
        if q % 4 == 1:
            sign = -1 if (qx // 4) % 2 else 1
            return lin((q * q + q + 1, one), (1, H(COMMON)), (3 * q, H(QUAD2)), (12 * sign * q, H(HALF))), "q=1 mod 4"
    if fam == "F1L3":
        if q % 7 != 1:
            return lin((q * q + q + 1, one), (1, H(COMMON))), "q!=1 mod 7"
        return (
            lin((q * q + q + 1, one), (1, H(COMMON)), (3 * q, H(F1L3_A, tinv)), (3 * q, H(F1L3_B, tinv))),
            "q=1 mod 7",
        )
    if fam == "F2L2":
        if q % 4 == 3:
            return lin((q * q - q + 1, one), (1, H(COMMON)), (-q, H(QUAD2))), "q=3 mod 4"
        if q % 8 == 5:
            return lin((q * q - q + 1, one), (1, H(COMMON)), (q, H(QUAD2)), (-2 * q, H(HALF))), "q=5 mod 8"
        if q % 8 == 1:
            w2 = _quartic_sign(ctx, 2)
            return (
                lin(
                    (q * q + 7 * q + 1, one),
                    (1, H(COMMON)),
                    (q, H(QUAD2)),
                    (2 * q, H(HALF)),
                    (2 * w2 * q, H(F2L2_A, tinv)),
                    (2 * w2 * q, H(F2L2_B, tinv)),
                ),
                "q=1 mod 8",
            )
    if fam == "L2L2":
        if q % 4 == 3:
            return lin((q * q + q + 1, one), (1, H(COMMON)), (-q, H(QUAD2))), "q=3 mod 4"
        if q % 4 == 1:
            sign = -1 if (qx // 4) % 2 else 1
            chi = character_sign(ctx, _field_value(ctx, inst.psi), qx // 2)
            return (
                lin((q * q + 9 * q + 1, one), (1, H(COMMON)), (q, H(QUAD2)), (2 * sign * chi * q, H(L2L2_EIGHTH))),
                "q=1 mod 4",
            )
    if fam == "L4":
        if q % 5 != 1:
            return lin((q * q + 3 * q + 1, one), (1, H(COMMON))), "q!=1 mod 5"
        return lin((q * q + 3 * q + 1, one), (1, H(COMMON)), (4 * q, H(L4_FIFTH, tinv))), "q=1 mod 5"
    raise BranchError(f"no branch for {fam} at q = {q}")


def _quartic_sign(ctx: FieldContext, a: int) -> int:
    """omega(a)^{q^x/4}, asserted to be +-1."""
    k = (ctx.qx // 4 * ctx.dlog(a % ctx.p)) % ctx.qx
    if k == 0:
        return 1
    if 2 * k == ctx.qx:
        return -1
    raise BranchError(f"omega({a})^(q^x/4) is not +-1")


def count_formula(inst: PencilInstance, ctx: FieldContext, backend: ExactBackend, gt: GaussTable) -> int:
    value, _ = count_formula_value(inst, ctx, backend, gt)
    return backend.to_integer(value)


def boundary_count(inst: PencilInstance, ctx: FieldContext) -> int:
    return boundary_strata_count(ctx, defining_system(inst.family, inst.psi, ctx))


def count_full(inst: PencilInstance, p: int, r: int = 1, mode: str = "formula") -> int:
    """#X_psi(F_{p^r}) by "formula", "koblitz" (torus + boundary) or "brute"."""
    data = gauss_data(p, r, count_bound(p**r)) if mode in ("formula", "koblitz") else None
    if mode == "formula":
        return count_formula(inst, data.ctx, data.backend, data.gt)
    if mode == "koblitz":
        system = defining_system(inst.family, inst.psi, data.ctx)
        return torus_count(data.ctx, data.backend, data.gt, system) + boundary_count(inst, data.ctx)
    if mode == "brute":
        from .finitefield import build_field

        ctx = build_field(p, r)
        return brute_projective_count(ctx, defining_system(inst.family, inst.psi, ctx))
    raise ValueError(f"unknown count mode {mode!r}")
