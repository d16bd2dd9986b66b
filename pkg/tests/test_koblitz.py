from fractions import Fraction

import numpy as np
import pytest

from k3hg.charsums import gauss_data
from k3hg.finitefield import build_field
from k3hg.koblitz import (
    BudgetError,
    MonomialSystem,
    boundary_strata_count,
    brute_projective_count,
    brute_torus_count,
    cluster_coefficient,
    congruence_matrix,
    solve_congruences,
    torus_count,
)

FERMAT_SURFACE = MonomialSystem(3, ((4, 0, 0, 0), (0, 4, 0, 0), (0, 0, 4, 0), (0, 0, 0, 4), (1, 1, 1, 1)), (1, 1, 1, 1, 1))
F1L3_ROWS = ((3, 1, 0, 0), (0, 3, 1, 0), (1, 0, 3, 0), (0, 0, 0, 4), (1, 1, 1, 1))
KLEIN = MonomialSystem(2, ((3, 1, 0), (0, 3, 1), (1, 0, 3)), (1, 1, 1))
FERMAT_CURVE = MonomialSystem(2, ((4, 0, 0), (0, 4, 0), (0, 0, 4)), (1, 1, 1))


def _data(q):
    p = {9: 3, 25: 5, 27: 3, 49: 7}.get(q, q)
    r = 1 if p == q else {9: 2, 25: 2, 27: 3, 49: 2}[q]
    return gauss_data(p, r, 10**8)


def _check_kernel(system, qx, module):
    A = np.array(congruence_matrix(system), dtype=np.int64)
    sols = module.all()
    assert len(sols) == module.size
    assert not ((sols @ A.T) % qx).any()
    assert len({tuple(s) for s in sols}) == len(sols)


@pytest.mark.parametrize("q", [7, 11, 19, 23, 27])
def test_fermat_kernel_q3_mod4(q):
    qx = q - 1
    m = solve_congruences(FERMAT_SURFACE, qx)
    assert m.size == 4 * qx
    _check_kernel(FERMAT_SURFACE, qx, m)
    sols = {tuple(int(x) for x in s) for s in m.all()}
    h = qx // 2
    expected = set()
    for k in range(qx):
        for a in range(2):
            for b in range(2):
                v = [(k) % qx, (k + b * h) % qx, (k + a * h) % qx, (k - (a + b) * h) % qx, (-4 * k) % qx]
                expected.add(tuple(v))
    assert sols == expected


@pytest.mark.parametrize("q", [5, 9, 11, 13, 17, 19])
def test_f1l3_kernel(q):
    system = MonomialSystem(3, F1L3_ROWS, (1,) * 5)
    qx = q - 1
    m = solve_congruences(system, qx)
    assert m.size == qx
    sols = {tuple(int(x) for x in s) for s in m.all()}
    assert sols == {tuple(x * w % qx for x in (1, 1, 1, 1, -4)) for w in range(qx)}


def test_f1l3_kernel_larger_at_1_mod_7():
    m = solve_congruences(MonomialSystem(3, F1L3_ROWS, (1,) * 5), 28)
    assert m.size == 7 * 28
    _check_kernel(MonomialSystem(3, F1L3_ROWS, (1,) * 5), 28, m)


def test_zero_matrix_kernel_is_everything():
    m = solve_congruences([[0]], 12)
    assert m.size == 12
    assert sorted(int(s[0]) for s in m.all()) == list(range(12))


def test_cluster_coefficient_zero():
    d = _data(7)
    q, qx = 7, 6
    c0 = d.backend.to_integer(d.backend.mul(cluster_coefficient(d.ctx, d.backend, d.gt, [0] * 5, 3), d.backend.const(q * qx)))
    assert c0 == qx**4 - 1


def test_cluster_coefficient_uses_g0():
    d = _data(7)
    be = d.backend
    a = cluster_coefficient(d.ctx, be, d.gt, [0, 3, 3], 2)
    b = be.mul(be.mul(be.const(-1), d.gt[3]), be.mul(d.gt[3], be.fraction(Fraction(1, 7))))
    assert np.array_equal(a, b)


@pytest.mark.parametrize("q", [3, 5, 9, 11, 17, 19, 23, 25, 27])
def test_klein_quartic(q):
    d = _data(q)
    n = torus_count(d.ctx, d.backend, d.gt, KLEIN)
    assert n == brute_torus_count(d.ctx, KLEIN)
    if q % 7 != 1:
        assert n == q - 2


@pytest.mark.parametrize("q", [3, 7, 11, 19, 23, 27])
def test_fermat_curve(q):
    d = _data(q)
    assert torus_count(d.ctx, d.backend, d.gt, FERMAT_CURVE) == q + 1
    assert brute_projective_count(d.ctx, FERMAT_CURVE) == q + 1


def test_fermat_curve_f7():
    assert brute_projective_count(build_field(7), FERMAT_CURVE) == 8


@pytest.mark.parametrize("q", [5, 9, 13, 17, 25, 29])
def test_fermat_curve_1_mod_4(q):
    d = _data(q)
    total = torus_count(d.ctx, d.backend, d.gt, FERMAT_CURVE) + boundary_strata_count(d.ctx, FERMAT_CURVE)
    assert total == brute_projective_count(d.ctx, FERMAT_CURVE)


def test_f4_psi3_q7():
    d = _data(7)
    system = MonomialSystem(3, FERMAT_SURFACE.nu, (1, 1, 1, 1, 2))
    assert torus_count(d.ctx, d.backend, d.gt, system) == brute_torus_count(d.ctx, system)


@pytest.mark.parametrize("q", [2, 3, 5, 7])
def test_zero_polynomial(q):
    ctx = build_field(q)
    zero = MonomialSystem(3, (), ())
    assert brute_projective_count(ctx, zero, method="enumerate") == q**3 + q**2 + q + 1


def test_enumeration_orders_agree():
    ctx = build_field(11)
    system = MonomialSystem(3, F1L3_ROWS, (1, 1, 1, 1, 3))
    assert brute_projective_count(ctx, system, method="enumerate") == brute_projective_count(ctx, system, method="eliminate")


def test_budget():
    ctx = build_field(31)
    with pytest.raises(BudgetError):
        brute_torus_count(ctx, FERMAT_SURFACE, budget=1000)


def test_bad_systems():
    with pytest.raises(ValueError):
        MonomialSystem(2, ((1, 0, 0), (0, 0, 0)), (1, 1))
    with pytest.raises(ValueError):
        MonomialSystem(2, ((1, 0),), (1,))
    with pytest.raises(ValueError):
        MonomialSystem(2, ((1, 0, 0),), (1, 1))
