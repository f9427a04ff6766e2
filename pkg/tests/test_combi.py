import itertools
from math import comb

import pytest

from ellipbc.combi import IndexedBasisOrder, binom, enumerate_compositions, leq, mult_exponent, reference_point


def test_single_part():
    assert enumerate_compositions(1, 3) == ((3,),)


def test_two_parts_order():
    assert enumerate_compositions(2, 2) == ((0, 2), (1, 1), (2, 0))


@pytest.mark.parametrize("s", range(1, 5))
@pytest.mark.parametrize("n", range(0, 7))
def test_cardinality(s, n):
    Z = enumerate_compositions(s, n)
    assert len(Z) == comb(n + s - 1, s - 1)
    assert len(set(Z)) == len(Z)
    assert all(sum(mu) == n and min(mu) >= 0 for mu in Z)


@pytest.mark.parametrize("s,n", [(2, 3), (3, 3), (4, 2), (3, 4)])
def test_order_refines_head_partial_order(s, n):
    order = IndexedBasisOrder(s, n)
    for mu, nu in itertools.permutations(order.elements, 2):
        if leq(mu[:-1], nu[:-1]):
            assert order.index(mu) < order.index(nu)


def test_bad_sizes():
    with pytest.raises(ValueError):
        enumerate_compositions(0, 2)


def test_reference_point():
    c, t = [2.0, 3.0], 0.5
    assert reference_point(c, t, (2, 1)) == [2.0, 1.0, 3.0]
    assert reference_point(c, t, (0, 3)) == [3.0, 1.5, 0.75]
    assert reference_point(c, t, (3, 0)) == [2.0, 1.0, 0.5]


def test_mult_exponent_examples():
    assert mult_exponent("face", 1, 2, 0) == 1
    assert mult_exponent("edge", 2, 2, 0, 0) == 1
    assert mult_exponent("face", 2, 3, 1) == 2


def test_mult_exponent_ranges():
    with pytest.raises(IndexError):
        mult_exponent("face", 2, 3, 3)
    with pytest.raises(IndexError):
        mult_exponent("edge", 2, 3, 2, 1)
    with pytest.raises(ValueError):
        mult_exponent("vertex", 2, 3, 0)


@pytest.mark.parametrize("r", [1, 2, 3])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_face_exponents_count_lattice_points(r, n):
    # sum_i C(n-i+r-2, r-1) counts the points of N^r with total below n
    total = sum(mult_exponent("face", r, n, i) for i in range(n))
    brute = sum(1 for mu in itertools.product(range(n), repeat=r) if sum(mu) < n)
    assert total == brute


def test_binom_conventions():
    assert binom(-1, 0) == 1
    assert binom(2, 3) == 0
    assert binom(3, -1) == 0
    assert binom(5, 2) == 10
