import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from k3hg.charsums import (
    PrecisionError,
    character_sign,
    character_value,
    gauss_data,
    gauss_sum_direct,
    gauss_table,
    jacobi_symbol,
    select_backend,
    select_tower_backends,
)
from k3hg.finitefield import build_field


def test_backend_q3():
    be = select_backend(build_field(3, 1), 100)
    assert be.ells == (103,)


def test_backend_q7():
    be = select_backend(build_field(7, 1), 10**6)
    assert be.ells[0] == 127
    assert all(e % 42 == 1 for e in be.all_ells)
    assert math.prod(be.ells) > 10**6


def test_backend_bound_two_single_prime():
    assert len(select_backend(build_field(5, 1), 2).ells) == 1


def test_tower_backends_share_primes():
    bs = select_tower_backends(13, [1, 2], 2**40)
    assert bs[1].ells == bs[2].ells
    # zeta_12 is the same element at both levels
    z1 = bs[1].root(1)
    z2 = bs[2].root(14)
    assert bs[1].equal(z1, z2)


def test_to_integer_and_precision():
    be = select_backend(build_field(7, 1), 10**6)
    assert be.to_integer(be.const(-12345)) == -12345
    assert be.to_rational(be.fraction(Fraction(-7, 6)), 6) == Fraction(-7, 6)
    with pytest.raises(PrecisionError):
        be.to_integer(be.const(10**40))


def test_gauss_basic_values():
    d = gauss_data(3, 1, 100)
    assert d.backend.to_integer(d.gt[0]) == -1
    sq = d.backend.mul(d.gt[1], d.gt[1])
    assert d.backend.to_integer(sq) == -3


@pytest.mark.parametrize("pr", [(3, 2), (13, 1), (5, 2)])
def test_gauss_table_matches_direct(pr):
    ctx = build_field(*pr)
    be = select_backend(ctx, 10**6)
    gt = gauss_table(ctx, be, self_check=0)
    for m in range(ctx.qx):
        assert be.equal(gt[m], gauss_sum_direct(ctx, be, m))


def test_norm_relation_f9():
    ctx = build_field(3, 2)
    be = select_backend(ctx, 10**6)
    gt = gauss_table(ctx, be)
    for m in range(1, 8):
        assert be.to_integer(be.mul(gt[m], gt[-m])) == (-1) ** m * 9


def test_character_values():
    ctx = build_field(7, 1)
    be = select_backend(ctx, 100)
    assert be.to_integer(character_value(ctx, be, 1, 5)) == 1
    assert character_sign(ctx, 3, 3) == -1
    with pytest.raises(ValueError):
        character_sign(ctx, 3, 1)


@pytest.mark.parametrize("p", [17, 41, 73, 89, 97, 113])
def test_quartic_character_of_two(p):
    ctx = build_field(p, 1)
    be = select_backend(ctx, 100)
    sign = be.to_integer(character_value(ctx, be, 2, ctx.qx // 4))
    assert sign in (1, -1)
    assert sign == (1 if pow(2, (p - 1) // 4, p) == 1 else -1)


def test_jacobi():
    assert jacobi_symbol(1, 3) == 1
    assert jacobi_symbol(2, 15) == 1
    for p in (3, 5, 7, 11, 13):
        assert jacobi_symbol(-1, p) == (-1) ** ((p - 1) // 2)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([(5, 1), (13, 1), (3, 2), (7, 2), (2, 4)]), st.integers(0, 10**6))
def test_gauss_identities_random(pr, m):
    d = gauss_data(pr[0], pr[1], 4 * pr[0] ** (2 * pr[1]))
    ctx, be, gt = d.ctx, d.backend, d.gt
    m %= ctx.qx
    # g(m) g(-m) = omega(-1)^m q for m != 0
    if m:
        sign = (-1) ** m if ctx.p > 2 else 1
        assert be.to_integer(be.mul(gt[m], gt[-m])) == sign * ctx.q
    # g(pm) = g(m)
    assert be.equal(gt[ctx.p * m], gt[m])
