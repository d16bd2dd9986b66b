"""Point counts of monomial hypersurfaces.

The torus count follows Koblitz's Gauss-sum formula over the solutions of a
system of linear congruences modulo q - 1; the brute-force counters are
independent oracles built only on field arithmetic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np
from sympy import Matrix, ZZ
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.normalforms import smith_normal_decomp

from .charsums import ExactBackend, GaussTable
from .finitefield import FieldContext, build_field

DEFAULT_BUDGET = 2 * 10**8


class BudgetError(RuntimeError):
    pass


@dataclass(frozen=True)
class MonomialSystem:
    """sum_i a_i prod_j x_j^nu[i][j] in n+1 variables."""

    n: int
    nu: tuple[tuple[int, ...], ...]
    a: tuple[int, ...]  # nonzero field elements

    def __post_init__(self):
        if any(len(row) != self.n + 1 for row in self.nu):
            raise ValueError("exponent rows must have n+1 entries")
        if len(self.a) != len(self.nu):
            raise ValueError("one coefficient per monomial")
        if any(not any(row) for row in self.nu):
            raise ValueError("constant monomials are not allowed")

    @property
    def r(self) -> int:
        return len(self.nu)

    @property
    def degrees(self) -> set[int]:
        return {sum(row) for row in self.nu}


@dataclass(frozen=True)
class SolutionModule:
    modulus: int
    generators: tuple[tuple[int, ...], ...]
    orders: tuple[int, ...]
    length: int

    @property
    def size(self) -> int:
        return math.prod(self.orders)

    def iter_blocks(self, block: int = 1 << 16) -> Iterator[np.ndarray]:
        """Yield the solutions as integer arrays of shape (k, r)."""
        N = self.modulus
        r = self.length
        gens = np.array(self.generators, dtype=np.int64).reshape(-1, r)
        if not self.orders:
            yield np.zeros((1, r), dtype=np.int64)
            return
        # split the last generator off when it alone is large
        lead = list(zip(gens, self.orders))
        base = np.zeros((1, r), dtype=np.int64)
        *head, (glast, olast) = lead
        for gen, order in head:
            base = ((base[:, None, :] + np.arange(order)[None, :, None] * gen) % N).reshape(-1, r)
        steps = np.arange(olast)[:, None] * glast % N
        rows_per = max(1, block // max(1, olast))
        for s in range(0, len(base), rows_per):
            chunk = base[s : s + rows_per]
            yield ((chunk[:, None, :] + steps[None, :, :]) % N).reshape(-1, r)

    def all(self) -> np.ndarray:
        return np.concatenate(list(self.iter_blocks()))


def congruence_matrix(system: MonomialSystem) -> list[list[int]]:
    """Rows: sum_i s_i and sum_i nu_ij s_i for j = 1..n."""
    rows = [[1] * system.r]
    for j in range(1, system.n + 1):
        rows.append([system.nu[i][j] for i in range(system.r)])
    return rows


def solve_congruences(system: MonomialSystem | Sequence[Sequence[int]], qx: int) -> SolutionModule:
    """Kernel of the congruence matrix modulo qx via Smith normal form."""
    A = congruence_matrix(system) if isinstance(system, MonomialSystem) else [list(r) for r in system]
    k, r = len(A), len(A[0])
    Dm, _, T = smith_normal_decomp(DomainMatrix.from_Matrix(Matrix(A)).convert_to(ZZ))
    D = Dm.to_Matrix()
    T = T.to_Matrix()
    gens, orders = [], []
    for i in range(r):
        d = int(D[i, i]) if i < k else 0
        order = math.gcd(d, qx) if d else qx
        if order == 1:
            continue
        scale = qx // order
        gens.append(tuple(int(T[j, i]) * scale % qx for j in range(r)))
        orders.append(order)
    return SolutionModule(qx, tuple(gens), tuple(orders), r)


def cluster_coefficient(ctx: FieldContext, backend: ExactBackend, gt: GaussTable, s: Sequence[int], n: int) -> np.ndarray:
    r = len(s)
    qx, q = ctx.qx, ctx.q
    if not any(x % qx for x in s):
        return backend.fraction(Fraction(qx) ** (n - r + 1) * (qx ** (r - 1) - (-1) ** (r - 1)) / q)
    val = backend.prod(np.stack([gt[x] for x in s], axis=1), axis=1)
    return backend.mul(val, backend.fraction(Fraction(qx) ** (n - r + 1) / q))


def torus_count_value(ctx: FieldContext, backend: ExactBackend, gt: GaussTable, system: MonomialSystem) -> np.ndarray:
    qx, q = ctx.qx, ctx.q
    n, r = system.n, system.r
    logs = np.array([ctx.dlog(a) for a in system.a], dtype=np.int64)
    sol = solve_congruences(system, qx)
    total = backend.const(0)
    scale = backend.fraction(Fraction(qx) ** (n - r + 1) / q)
    for S in sol.iter_blocks():
        nz = (S % qx).any(axis=1)
        S = S[nz]
        if not len(S):
            continue
        vals = gt[S[:, 0]]
        for i in range(1, r):
            vals = backend.mul(vals, gt[S[:, i]])
        vals = backend.mul(vals, backend.root(-(S @ logs)))
        total = backend.add(total, backend.sum(vals))
    total = backend.mul(total, scale)
    c0 = Fraction(qx) ** (n - r + 1) * (qx ** (r - 1) - (-1) ** (r - 1)) / q
    return backend.add(total, backend.fraction(c0))


def torus_count(ctx: FieldContext, backend: ExactBackend, gt: GaussTable, system: MonomialSystem) -> int:
    return backend.to_integer(torus_count_value(ctx, backend, gt, system))


# brute-force oracles


def _monomial_values(ctx: FieldContext, cols: list[np.ndarray], row, coeff: int) -> np.ndarray:
    """coeff * prod_j cols[j]^row[j] on arrays of field elements."""
    shape = np.broadcast(*cols).shape
    lg = np.full(shape, ctx.dlog(coeff), dtype=np.int64)
    zero = np.zeros(shape, dtype=bool)
    for x, e in zip(cols, row):
        if e:
            lx = ctx.log_table[x]
            zero |= lx < 0
            lg = lg + e * lx
    return np.where(zero, 0, ctx.exp_table[lg % ctx.qx])


def evaluate(ctx: FieldContext, system: MonomialSystem, cols: list[np.ndarray]) -> np.ndarray:
    acc = np.zeros(np.broadcast(*cols).shape, dtype=np.int64)
    for row, a in zip(system.nu, system.a):
        if a:
            acc = ctx.add(acc, _monomial_values(ctx, cols, row, a))
    return acc


def brute_torus_count(ctx: FieldContext, system: MonomialSystem, budget: int = DEFAULT_BUDGET) -> int:
    """Points of the hypersurface with all coordinates nonzero, by enumeration
    with x_0 = 1."""
    n, qx = system.n, ctx.qx
    if qx**n > budget:
        raise BudgetError(f"{qx}^{n} torus points exceed the budget")
    units = ctx.exp_table
    if n == 0:
        return int(evaluate(ctx, system, [np.array([1])])[0] == 0)
    rest = n - 1
    grids = np.meshgrid(*([units] * rest), indexing="ij") if rest else []
    grids = [g.ravel() for g in grids]
    total = 0
    one = np.ones(max(1, len(grids[0]) if grids else 1), dtype=np.int64)
    for x1 in units:
        cols = [one, np.full_like(one, x1)] + grids
        total += int(np.count_nonzero(evaluate(ctx, system, cols) == 0))
    return total


def projective_points(ctx: FieldContext, n: int, block: int = 1 << 21) -> Iterator[list[np.ndarray]]:
    """Normalized representatives of P^n(F_q), in blocks of coordinate arrays."""
    q = ctx.q
    for lead in range(n + 1):
        free = n - lead
        total = q**free
        step = max(1, min(total, block))
        for start in range(0, total, step):
            idx = np.arange(start, min(total, start + step), dtype=np.int64)
            cols = [np.zeros(len(idx), dtype=np.int64)] * lead + [np.ones(len(idx), dtype=np.int64)]
            digits = []
            for _ in range(free):
                idx, d = np.divmod(idx, q)
                digits.append(d)
            yield cols + digits[::-1]


def enumerate_projective_count(ctx: FieldContext, system: MonomialSystem, budget: int = DEFAULT_BUDGET) -> int:
    if ctx.q**system.n > budget:
        raise BudgetError(f"{ctx.q}^{system.n} points exceed the budget")
    return sum(int(np.count_nonzero(evaluate(ctx, system, cols) == 0)) for cols in projective_points(ctx, system.n))


def root_count_table(ctx: FieldContext, k: int) -> np.ndarray:
    """T[u, v] = #{x in F_q : x^k + u x + v = 0}."""
    return _root_count_table(ctx.p, ctx.r, k)


@lru_cache(maxsize=8)
def _root_count_table(p: int, r: int, k: int) -> np.ndarray:
    ctx = build_field(p, r)
    q = ctx.q
    x = np.arange(q, dtype=np.int64)[:, None]
    u = np.arange(q, dtype=np.int64)[None, :]
    v = ctx.neg(ctx.add(ctx.power(x, k), ctx.mul(u, x)))
    table = np.bincount((u * q + v).ravel(), minlength=q * q).reshape(q, q)
    table.setflags(write=False)
    return table


def _elimination_variable(system: MonomialSystem) -> tuple[int, int] | None:
    """A variable whose exponents are all in {0, 1, k} with x^k in exactly one
    monomial; returns (index, k)."""
    for j in range(system.n + 1):
        exps = [row[j] for row in system.nu]
        high = [e for e in exps if e > 1]
        if len(high) == 1 and all(e in (0, 1) or e == high[0] for e in exps):
            return j, high[0]
    return None


def eliminate_projective_count(ctx: FieldContext, system: MonomialSystem) -> int:
    """Count P^n points by solving for one variable: A x^k + B x + C = 0 over
    every point of the complementary P^{n-1}, plus the coordinate point."""
    found = _elimination_variable(system)
    if found is None:
        raise ValueError("no variable suitable for elimination")
    j, k = found
    q = ctx.q
    R = root_count_table(ctx, k)
    groups: dict[int, list[tuple[tuple[int, ...], int]]] = {0: [], 1: [], k: []}
    for row, a in zip(system.nu, system.a):
        reduced = tuple(e for i, e in enumerate(row) if i != j)
        groups[row[j]].append((reduced, a))
    total = 0
    for cols in projective_points(ctx, system.n - 1):
        size = max(len(c) for c in cols)
        cols = [np.broadcast_to(c, (size,)) for c in cols]

        def coeff(terms):
            acc = np.zeros(size, dtype=np.int64)
            for row, a in terms:
                acc = ctx.add(acc, _monomial_values(ctx, cols, row, a)) if any(row) else ctx.add(acc, np.full(size, a))
            return acc

        A, B, C = coeff(groups[k]), coeff(groups[1]), coeff(groups[0])
        nzA = A != 0
        if nzA.any():
            Ai = ctx.inv(A[nzA])
            total += int(R[ctx.mul(B[nzA], Ai), ctx.mul(C[nzA], Ai)].sum())
        lin = ~nzA
        Bl, Cl = B[lin], C[lin]
        total += int(np.count_nonzero(Bl != 0)) + q * int(np.count_nonzero((Bl == 0) & (Cl == 0)))
    point = [np.zeros(1, dtype=np.int64)] * (system.n + 1)
    point[j] = np.ones(1, dtype=np.int64)
    total += int(evaluate(ctx, system, point)[0] == 0)
    return total


def brute_projective_count(ctx: FieldContext, system: MonomialSystem, method: str = "auto", budget: int = DEFAULT_BUDGET) -> int:
    """Number of F_q-points of the hypersurface in P^n.

    "enumerate" walks all normalized representatives; "eliminate" solves for
    one variable against a precomputed root-count table (O(q^{n-1}) work);
    "auto" prefers elimination when the monomial shape allows it.
    """
    if method == "enumerate" or (method == "auto" and _elimination_variable(system) is None):
        return enumerate_projective_count(ctx, system, budget)
    return eliminate_projective_count(ctx, system)


def stratum_torus_count(ctx: FieldContext, system: MonomialSystem, support: Sequence[int]) -> int:
    """Points with x_j != 0 exactly for j in support (others zero)."""
    keep = [i for i, row in enumerate(system.nu) if all(row[j] == 0 for j in range(system.n + 1) if j not in support)]
    if not keep:
        # polynomial vanishes identically on this stratum
        return (ctx.qx) ** (len(support) - 1)
    sub = MonomialSystem(
        len(support) - 1,
        tuple(tuple(system.nu[i][j] for j in support) for i in keep),
        tuple(system.a[i] for i in keep),
    )
    return brute_torus_count(ctx, sub)


def boundary_strata_count(ctx: FieldContext, system: MonomialSystem) -> int:
    """Points with at least one zero coordinate, stratum by stratum."""
    n = system.n
    total = 0
    for size in range(1, n + 1):
        for support in itertools.combinations(range(n + 1), size):
            total += stratum_torus_count(ctx, system, support)
    return total
