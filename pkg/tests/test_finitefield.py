import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from k3hg.finitefield import (
    BadPrimeError,
    FieldContext,
    FieldError,
    build_field,
    dlog,
    find_primitive_modulus,
    reduce_rational,
    trace,
)

FIELDS = [(2, 1), (3, 1), (7, 1), (2, 3), (3, 2), (3, 4), (5, 2), (7, 2)]


def test_prime_field_uses_smallest_generator():
    ctx = build_field(3, 1)
    assert ctx.q == 3 and ctx.g == 2


def test_f8_sizes():
    ctx = build_field(2, 3)
    assert ctx.q == 8 and ctx.qx == 7


def test_f81_exp_log_round_trip():
    ctx = build_field(3, 4)
    units = np.arange(1, 81)
    assert (ctx.exp(ctx.log_table[units]) == units).all()
    assert sorted(ctx.exp_table.tolist()) == list(range(1, 81))


def test_dlog_basics():
    ctx = build_field(3, 4)
    assert dlog(ctx, ctx.g) == 1
    assert dlog(ctx, 1) == 0
    with pytest.raises(FieldError):
        dlog(ctx, 0)


def test_dlog_of_square_f81():
    ctx = build_field(3, 4)
    rng = np.random.default_rng(1)
    for x in rng.integers(1, 81, 20):
        assert dlog(ctx, ctx.mul(x, x)) == 2 * dlog(ctx, x) % 80


def test_trace_prime_field_is_identity():
    ctx = build_field(7, 1)
    assert all(trace(ctx, x) == x for x in range(7))


def test_trace_f9_matches_frobenius_sum():
    ctx = build_field(3, 2)
    for x in range(9):
        s = int(ctx.add(x, ctx.power(x, 3)))
        assert s < 3 and trace(ctx, x) == s


def test_reduce_rational():
    assert reduce_rational(build_field(3, 1), 1, 1) == 1
    assert reduce_rational(build_field(7, 1), 1, 16) == 4
    with pytest.raises(BadPrimeError):
        reduce_rational(build_field(2, 1), 1, 16)


def test_modulus_is_primitive_and_deterministic():
    assert find_primitive_modulus(2, 3) == find_primitive_modulus(2, 3)
    ctx = build_field(2, 4)
    assert ctx.modulus[-1] == 1 and len(ctx.modulus) == 5


def test_bad_requests():
    with pytest.raises(FieldError):
        build_field(4, 1)
    with pytest.raises(FieldError):
        build_field(3, 0)
    with pytest.raises(FieldError):
        build_field(3, 30)


def test_cache_round_trip(tmp_path):
    ctx = build_field(3, 3)
    path = tmp_path / "f.bin"
    ctx.save(path)
    back = FieldContext.load(path)
    assert back.modulus == ctx.modulus
    assert (back.exp_table == ctx.exp_table).all()
    assert (back.trace_table == ctx.trace_table).all()


def test_cache_dir_build(tmp_path):
    a = build_field(5, 2, cache_dir=str(tmp_path))
    b = build_field(5, 2, cache_dir=str(tmp_path))
    assert (tmp_path / "field_5_2.bin").exists()
    assert (a.exp_table == b.exp_table).all()


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(FIELDS), st.data())
def test_field_axioms(pr, data):
    ctx = build_field(*pr)
    el = st.integers(0, ctx.q - 1)
    x, y, z = data.draw(el), data.draw(el), data.draw(el)
    assert ctx.mul(x, ctx.add(y, z)) == ctx.add(ctx.mul(x, y), ctx.mul(x, z))
    assert ctx.add(x, ctx.neg(x)) == 0
    if x:
        assert ctx.mul(x, ctx.inv(x)) == 1
    # Frobenius is additive
    assert ctx.frobenius(ctx.add(x, y)) == ctx.add(ctx.frobenius(x), ctx.frobenius(y))
    assert trace(ctx, ctx.add(x, y)) == (trace(ctx, x) + trace(ctx, y)) % ctx.p
