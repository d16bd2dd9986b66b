import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from k3hg.charsums import gauss_data
from k3hg.finitefield import reduce_rational
from k3hg.hypergeom import (
    NotSplittableError,
    ParameterError,
    applicable_definitions,
    apply_operator,
    field_of_definition,
    gamma_vectors,
    hsum,
    hsum_bcm,
    hsum_classical,
    hsum_denominator,
    hsum_hybrid,
    interlace_check,
    operator_annihilates,
    params,
    series_coefficients,
    split_for_q,
)
from k3hg.pencils import COMMON, F1L3_A, F2L2_A, HALF, QUAD2


def test_canonicalize_reduces_mod_one():
    p = params("5/4,1/2,3/4", "0,0,0")
    assert p == COMMON and p.d == 3


def test_canonicalize_rejects_overlap():
    with pytest.raises(ParameterError):
        params("1/2", "1/2")
    with pytest.raises(ParameterError):
        params("1/2,1/3", "0")


def test_fields_of_definition():
    f = field_of_definition(COMMON)
    assert f.m == 4 and f.is_rational
    f = field_of_definition(F1L3_A)
    assert f.m == 28 and f.H_K == {1, 9, 11, 15, 23, 25} and f.degree == 2
    f = field_of_definition(F2L2_A)
    assert f.m == 8 and f.H_K == {1, 5}


def test_splitting():
    sd = split_for_q(F1L3_A, 29)
    assert sd.alpha0 == () and sd.beta0 == F1L3_A.beta
    sd = split_for_q(COMMON, 7)
    assert sd.alpha0 == COMMON.alpha and sd.alpha_prime == ()
    with pytest.raises(NotSplittableError):
        split_for_q(F1L3_A, 11)


def test_gamma_vectors():
    g = gamma_vectors((), F1L3_A.beta)
    assert g.p_list == (2,) and g.q_list == (1, 4) and g.delta == 2 and g.M == Fraction(1, 64)
    g = gamma_vectors((Fraction(1, 2),), (0,))
    assert g.p_list == (2,) and g.q_list == (1, 1)
    g = gamma_vectors(COMMON.alpha, COMMON.beta)
    assert g.p_list == (4,) and g.q_list == (1, 1, 1, 1)


def _complex_gauss(ctx):
    x = ctx.exp_table
    theta = np.exp(2j * np.pi * ctx.trace_table[x] / ctx.p)
    k = np.arange(ctx.qx)
    return np.array([np.sum(np.exp(2j * np.pi * m * k / ctx.qx) * theta) for m in range(ctx.qx)])


def test_classical_against_complex_floats():
    d = gauss_data(13, 1, 2**80)
    ctx, be = d.ctx, d.backend
    g = _complex_gauss(ctx)
    t = reduce_rational(ctx, 1, 16)
    exact = be.to_rational(hsum_classical(ctx, be, d.gt, QUAD2, t), hsum_denominator(QUAD2, 13))
    assert exact.denominator == 1
    a, b = [int(x * 12) for x in QUAD2.alpha], [int(x * 12) for x in QUAD2.beta]
    lt = ctx.dlog(t)
    tot = 0
    for m in range(12):
        term = np.prod([g[(m + x) % 12] / g[x] for x in a]) * np.prod([g[(-m - y) % 12] / g[-y % 12] for y in b])
        tot += term * np.exp(2j * np.pi * m * lt / 12)
    assert abs(-tot / 12 - float(exact)) < 1e-8


@pytest.mark.parametrize("q", [13, 17, 29, 37, 41])
def test_half_expansion(q):
    d = gauss_data(q, 1, 2**64)
    ctx, be, gt = d.ctx, d.backend, d.gt
    qx = q - 1
    for psi in (2, 3, 5):
        if psi % q == 0 or (psi**4 - 1) % q == 0:
            continue
        t = reduce_rational(ctx, 1, psi**4)
        arg = ctx.dlog(int(ctx.neg(t)))
        sign = -1 if (qx // 4) % 2 else 1
        inv_g = be.inv(gt[qx // 2])
        acc = be.fraction(Fraction(-2, qx))
        quart = be.add(be.mul(gt[qx // 4], gt[qx // 4]), be.mul(gt[3 * qx // 4], gt[3 * qx // 4]))
        acc = be.add(acc, be.mul(be.mul(quart, inv_g), be.fraction(Fraction(sign, qx))))
        for m in range(qx):
            if (4 * m) % qx == 0:
                continue
            term = be.mul(be.mul(gt[m + qx // 2], gt[-m]), inv_g)
            term = be.mul(term, be.root(m * arg))
            acc = be.add(acc, be.mul(term, be.fraction(Fraction(1, qx))))
        assert be.equal(acc, hsum(ctx, be, gt, HALF, t))


def _f1l3_pieces(ctx, be, gt, tv):
    qx, q = ctx.qx, ctx.q
    a = [qx // 14, 9 * qx // 14, 11 * qx // 14]
    den = be.inv(be.mul(be.mul(gt[a[0]], gt[a[1]]), gt[a[2]]))
    arg = ctx.dlog(int(ctx.mul(ctx.neg(64 % q), tv)))
    terms = []
    for m in range(qx):
        term = be.mul(be.mul(be.mul(gt[m + a[0]], gt[m + a[1]]), gt[m + a[2]]), den)
        term = be.mul(term, be.mul(be.mul(gt[2 * m], gt[-m]), gt[-4 * m]))
        terms.append(be.mul(term, be.root(m * arg)))
    return terms


def test_f1l3_unsimplified_expansion_q29():
    # -1/(1-q) sum_m q^(s(m)-1) [...] omega(-4^3 t)^m with s = 1 at m = 0, q^x/2
    q, qx = 29, 28
    d = gauss_data(q, 1, 2**64)
    ctx, be, gt = d.ctx, d.backend, d.gt
    for tv in (2, 3, 10):
        terms = _f1l3_pieces(ctx, be, gt, tv)
        acc = be.const(0)
        for m, term in enumerate(terms):
            s = 1 if m in (0, qx // 2) else 0
            acc = be.add(acc, be.mul(term, be.fraction(Fraction(q**s, q * qx))))
        assert be.equal(acc, hsum(ctx, be, gt, F1L3_A, tv))


def test_f1l3_simplified_expansion_q29():
    # the m = 0 summand is (-1)(-1)^3/(1-q) = -1/q^x; the m = q^x/2 term flips with it
    q, qx = 29, 28
    d = gauss_data(q, 1, 2**64)
    ctx, be, gt = d.ctx, d.backend, d.gt
    prod7 = be.mul(be.mul(gt[qx // 7], gt[2 * qx // 7]), gt[4 * qx // 7])
    for tv in (2, 3, 10):
        terms = _f1l3_pieces(ctx, be, gt, tv)
        acc = be.fraction(Fraction(-1, qx))
        acc = be.add(acc, be.mul(be.mul(prod7, be.root(qx // 2 * ctx.dlog(tv))), be.fraction(Fraction(1, q * qx))))
        for m in range(1, qx):
            if m != qx // 2:
                acc = be.add(acc, be.mul(terms[m], be.fraction(Fraction(1, q * qx))))
        assert be.equal(acc, hsum(ctx, be, gt, F1L3_A, tv))


PARAM_SETS = [COMMON, QUAD2, HALF, F1L3_A, F2L2_A, params("1/5,2/5,3/5,4/5", "0,1/4,1/2,3/4")]


@pytest.mark.parametrize("pr", [(13, 1), (29, 1), (5, 2)])
def test_definitions_agree(pr):
    d = gauss_data(pr[0], pr[1], 2**80)
    fns = {"classical": hsum_classical, "bcm": hsum_bcm, "hybrid": hsum_hybrid}
    for p in PARAM_SETS:
        defs = applicable_definitions(p, d.ctx.q)
        vals = [fns[k](d.ctx, d.backend, d.gt, p, 2) for k in defs]
        for x, y in itertools.combinations(vals, 2):
            assert d.backend.equal(x, y)


def test_series_coefficients():
    c = series_coefficients([Fraction(1, 2)], [1], 5)
    from math import comb

    assert c == [Fraction(comb(2 * k, k), 4**k) for k in range(5)]
    assert series_coefficients(COMMON.alpha, [1, 1, 1], 2) == [1, Fraction(3, 32)]


def test_operators():
    assert operator_annihilates(COMMON.alpha, [1, 1, 1], 30)
    assert operator_annihilates(QUAD2.alpha, [1, Fraction(1, 2)], 30)


def test_operator_rejects_perturbed_series():
    other = series_coefficients([Fraction(1, 3), Fraction(1, 2), Fraction(3, 4)], [1, 1, 1], 10)
    res = apply_operator(COMMON.alpha, [1, 1, 1], other)
    assert any(r != 0 for r in res)
    assert all(r == 0 for r in apply_operator(COMMON.alpha, [1, 1, 1], series_coefficients(COMMON.alpha, [1, 1, 1], 10)))


def test_interlacing():
    assert interlace_check(QUAD2)
    assert not interlace_check(COMMON)
    assert interlace_check(params("1/5,2/5,3/5,4/5", "0,1/4,1/2,3/4"))


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([17, 41, 73, 89, 97]), st.integers(2, 10**6), st.sampled_from([COMMON, QUAD2, HALF, F2L2_A]))
def test_frobenius_and_hk_invariance(q, t, p):
    d = gauss_data(q, 1, 2**80)
    t %= q
    if t == 0:
        return
    ctx, be, gt = d.ctx, d.backend, d.gt
    base = hsum(ctx, be, gt, p, t)
    assert be.equal(hsum(ctx, be, gt, p.scaled(q), int(ctx.power(t, q))), base)
    for k in field_of_definition(p).H_K:
        assert be.equal(hsum(ctx, be, gt, p.scaled(k), t), base)
