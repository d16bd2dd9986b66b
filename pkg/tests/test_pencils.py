from fractions import Fraction

import pytest
from sympy import primerange

from k3hg.charsums import gauss_data
from k3hg.finitefield import BadPrimeError, build_field
from k3hg.pencils import (
    FAMILIES,
    PencilInstance,
    bad_primes,
    boundary_count,
    count_bound,
    count_formula_value,
    count_full,
    defining_system,
)


@pytest.mark.parametrize(
    "family, psi, expected",
    [("F4", 2, {2, 3, 5}), ("F1L3", 3, {2, 3, 5, 7}), ("L4", 2, {2, 3, 5}), ("F2L2", Fraction(1, 2), {2, 3, 5})],
)
def test_bad_primes(family, psi, expected):
    assert bad_primes(family, psi) == expected


@pytest.mark.parametrize("psi", [7, 10, Fraction(3, 5), -2])
def test_three_and_five_are_always_bad(psi):
    # psi^4 = 1 mod p for p in {3, 5} unless p divides psi
    assert all({3, 5} <= bad_primes(f, psi) for f in FAMILIES)


def test_bad_psi():
    for psi in (0, 1, -1):
        with pytest.raises(ValueError):
            PencilInstance("F4", psi)
    with pytest.raises(ValueError):
        PencilInstance("K3", 2)


def test_defining_system_f4():
    s = defining_system("F4", 3, build_field(7))
    assert s.nu[:4] == ((4, 0, 0, 0), (0, 4, 0, 0), (0, 0, 4, 0), (0, 0, 0, 4))
    assert s.nu[4] == (1, 1, 1, 1)
    assert s.a == (1, 1, 1, 1, 2)


def test_defining_system_rows():
    assert defining_system("L4", 2, build_field(11)).nu[:4] == ((3, 1, 0, 0), (0, 3, 1, 0), (0, 0, 3, 1), (1, 0, 0, 3))
    assert defining_system("F2L2", 2, build_field(11)).nu[:4] == ((4, 0, 0, 0), (0, 4, 0, 0), (0, 0, 3, 1), (0, 0, 1, 3))
    assert defining_system("F1L3", 2, build_field(11)).nu[:4] == ((3, 1, 0, 0), (0, 3, 1, 0), (1, 0, 3, 0), (0, 0, 0, 4))


def test_defining_system_bad_prime():
    with pytest.raises(BadPrimeError):
        defining_system("F1L3", 2, build_field(7))


@pytest.mark.parametrize("q", [7, 11, 19, 23, 31, 43])
def test_boundary_f4(q):
    assert boundary_count(PencilInstance("F4", 2 if q % 5 else 3), build_field(q)) == 4 * q + 4


@pytest.mark.parametrize("q", [11, 13, 17, 19, 23, 31])
def test_boundary_f1l3(q):
    assert boundary_count(PencilInstance("F1L3", 2), build_field(q)) == 4 * q - 2


@pytest.mark.parametrize("q", [7, 11, 13, 17, 19, 23, 29, 31])
def test_boundary_l4(q):
    assert boundary_count(PencilInstance("L4", 2 if q % 5 else 7), build_field(q)) == 6 * q - 2


def _grid():
    for family in FAMILIES:
        for psi in (2, 3, 5):
            for p in primerange(3, 50):
                if p not in bad_primes(family, psi):
                    yield family, psi, p


@pytest.mark.parametrize("family, psi, p", list(_grid()))
def test_modes_agree(family, psi, p):
    inst = PencilInstance(family, psi)
    brute = count_full(inst, p, mode="brute")
    assert count_full(inst, p) == brute
    assert count_full(inst, p, mode="koblitz") == brute


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("p, r, psi", [(7, 2, 3), (11, 2, 2), (13, 2, 2)])
def test_prime_powers(family, p, r, psi):
    inst = PencilInstance(family, psi)
    if p in bad_primes(family, psi):
        pytest.skip("bad prime")
    assert count_full(inst, p, r) == count_full(inst, p, r, mode="brute")


@pytest.mark.parametrize(
    "family, psi, q, branch",
    [("F4", 3, 7, "q=3 mod 4"), ("L4", 2, 11, "q=1 mod 5"), ("F2L2", 3, 17, "q=1 mod 8"), ("F1L3", 2, 29, "q=1 mod 7")],
)
def test_branch_dispatch(family, psi, q, branch):
    d = gauss_data(q, 1, count_bound(q))
    inst = PencilInstance(family, psi)
    value, taken = count_formula_value(inst, d.ctx, d.backend, d.gt)
    assert taken == branch
    assert d.backend.to_integer(value) == count_full(inst, q, mode="brute")


def test_formula_rejects_bad_prime():
    with pytest.raises(BadPrimeError):
        count_full(PencilInstance("L4", 3), 5)
