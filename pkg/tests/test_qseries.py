import cmath
from fractions import Fraction

import numpy as np
import pytest

from ellipbc.errors import BranchError, PoleError, TruncationError, ZeroArgumentError
from ellipbc.qseries import (
    Bases,
    ExponentLedger,
    Monomial,
    Truncation,
    e_fact,
    e_pair,
    ell_gamma,
    ledger_eval,
    poch_p,
    poch_pq,
    theta,
    theta_fact,
)

from conftest import random_points, rel


def long_product(u, p, terms=200):
    acc = 1.0 + 0j
    for i in range(terms):
        acc *= 1 - p**i * u
    return acc


class TestBases:
    def test_rejects_nome_on_unit_circle(self):
        with pytest.raises(ValueError, match=r"\|q\|"):
            Bases(0.1, 1.0, 0.5)

    def test_swapped(self):
        b = Bases(0.1, 0.2j, 0.5)
        assert b.swapped() == Bases(0.2j, 0.1, 0.5)

    def test_truncation_validation(self):
        with pytest.raises(ValueError):
            Truncation(rel_eps=0)
        with pytest.raises(ValueError):
            Truncation(max_index=0)


class TestPochhammer:
    def test_zero_argument_gives_one(self):
        assert poch_p(0, 0.3) == 1
        assert poch_pq(0, 0.3, 0.2j) == 1

    def test_unit_argument_gives_zero(self):
        assert poch_p(1, 0.1) == 0
        assert poch_pq(1, 0.1, 0.2) == 0

    def test_single_matches_long_product(self):
        u = 0.3 + 0.1j
        assert rel(poch_p(u, 0.2), long_product(u, 0.2)) < 1e-14

    def test_double_matches_rectangular_product(self):
        p = q = 0.1
        want = 1.0 + 0j
        for i in range(60):
            for j in range(60):
                want *= 1 - p**i * q**j * 0.5
        assert rel(poch_pq(0.5, p, q), want) < 1e-13

    def test_array_and_scalar_paths_agree(self, rng):
        u = np.array(random_points(rng, 20, 0.8, spread=0.5))
        vec = poch_pq(u, 0.2j, 0.3)
        for x, v in zip(u, vec):
            assert abs(poch_pq(complex(x), 0.2j, 0.3) - v) < 1e-13 * abs(v)

    def test_cap_reached_reports_bound(self):
        with pytest.raises(TruncationError) as info:
            poch_p(0.5, 0.99, Truncation(max_index=20))
        assert info.value.bound > 0


class TestTheta:
    def test_zeros(self):
        assert theta(1, 0.3) == 0
        assert abs(theta(0.3, 0.3)) < 1e-16

    def test_zero_argument_rejected(self):
        with pytest.raises(ZeroArgumentError):
            theta(0, 0.2)

    def test_quasi_periodicity_example(self):
        u, p = 0.37 - 0.21j, 0.15
        assert abs(theta(p * u, p) + theta(u, p) / u) < 1e-14

    def test_quasi_periodicity_random(self, rng):
        for _ in range(100):
            p = complex(random_points(rng, 1, 0.3, spread=0.6)[0])
            u = random_points(rng, 1, 1.05, spread=0.9)[0]
            assert rel(theta(p * u, p), -theta(u, p) / u) < 1e-12


class TestEllipticGamma:
    def test_reflection(self):
        b = Bases(0.2, 0.25, 0.5)
        u = 0.4 + 0.2j
        assert abs(ell_gamma(u, b.p, b.q) * ell_gamma(b.p * b.q / u, b.p, b.q) - 1) < 1e-13

    def test_q_shift(self):
        p, q, u = 0.2, 0.25, 0.3
        assert rel(ell_gamma(q * u, p, q) / ell_gamma(u, p, q), theta(u, p)) < 1e-13

    def test_p_shift(self):
        p, q, u = 0.2, 0.25, 0.3
        assert rel(ell_gamma(p * u, p, q) / ell_gamma(u, p, q), theta(u, q)) < 1e-13

    def test_pole_detected(self):
        with pytest.raises(PoleError):
            ell_gamma(1.0, 0.2, 0.3)

    def test_symmetric_in_nomes(self):
        u = 0.4 - 0.3j
        assert rel(ell_gamma(u, 0.2j, 0.3), ell_gamma(u, 0.3, 0.2j)) < 1e-14


class TestPairing:
    def test_vanishes_on_diagonal(self):
        assert e_pair(0.4j, 0.4j, 0.2) == 0

    def test_antisymmetry(self):
        u, v, p = 0.5, 0.3j, 0.2
        assert abs(e_pair(u, v, p) + e_pair(v, u, p)) < 1e-14 * abs(e_pair(u, v, p))

    def test_inversion_symmetry(self):
        u, v, p = 0.5 + 0.2j, 0.7 - 0.1j, 0.2j
        assert rel(e_pair(u, 1 / v, p), e_pair(u, v, p)) < 1e-14

    def test_trigonometric_limit(self):
        u, v = 0.5 + 0.2j, 0.7 - 0.1j
        assert abs(e_pair(u, v, 0) - (u + 1 / u - v - 1 / v)) < 1e-14


class TestShiftedFactorials:
    def test_empty(self):
        assert theta_fact(0.3, 0.2, 0.5, 0) == 1
        assert e_fact(0.3, 0.4, 0.2, 0.5, 0) == 1

    def test_single(self):
        assert theta_fact(0.3, 0.2, 0.5, 1) == theta(0.3, 0.2)
        assert e_fact(0.3, 0.4, 0.2, 0.5, 1) == e_pair(0.3, 0.4, 0.2)

    def test_three_factors(self):
        u, v, p, t = 0.3 + 0.1j, 0.6j, 0.2, 0.5 - 0.2j
        assert rel(theta_fact(u, p, t, 3), theta(u, p) * theta(t * u, p) * theta(t * t * u, p)) < 1e-14
        want = e_pair(u, v, p) * e_pair(t * u, v, p) * e_pair(t * t * u, v, p)
        assert rel(e_fact(u, v, p, t, 3), want) < 1e-14

    def test_negative_length_rejected(self):
        with pytest.raises(ValueError):
            theta_fact(0.3, 0.2, 0.5, -1)


class TestLedger:
    def test_empty_ledger_is_one(self):
        assert ledger_eval(ExponentLedger(), {}, 0.2) == 1

    def test_cancelling_brackets(self):
        u = Monomial.symbol("u")
        lg = ExponentLedger().bracket(u, 2).bracket(u, 2, power=-1)
        assert lg.closable()
        assert ledger_eval(lg, {"u": 0.3j, "t": 0.5}, 0.2) == 1

    def test_single_bracket_is_not_closable(self):
        lg = ExponentLedger().bracket(Monomial.symbol("u"))
        assert lg.half_exponents == {"u": Fraction(-1, 2)}
        with pytest.raises(BranchError):
            ledger_eval(lg, {"u": 0.3}, 0.2)

    def test_principal_root_convention(self):
        lg = ExponentLedger().bracket(Monomial.symbol("u"))
        u = 0.3 - 0.4j
        value = ledger_eval(lg, {"u": u}, 0.2, roots={"u": cmath.sqrt(u)})
        assert rel(value, theta(u, 0.2) / cmath.sqrt(u)) < 1e-14

    def test_bracket_pair_matches_theta_form(self):
        # [uv][u/v] = u^{-1} theta(uv) theta(u/v) = e(u, v)
        u, v = Monomial.symbol("u"), Monomial.symbol("v")
        lg = ExponentLedger().bracket(u * v).bracket(u / v)
        vals = {"u": 0.4 + 0.3j, "v": 0.8j}
        assert rel(ledger_eval(lg, vals, 0.2), e_pair(vals["u"], vals["v"], 0.2)) < 1e-14

    def test_negative_length_inverts(self):
        x, t = Monomial.symbol("x"), Monomial.symbol("t")
        lg = ExponentLedger().theta(x, -2)
        vals = {"x": 0.6j, "t": 0.5}
        want = 1 / (theta(vals["x"] / 0.25, 0.2) * theta(vals["x"] / 0.5, 0.2))
        assert rel(ledger_eval(lg, vals, 0.2), want) < 1e-14

    def test_factor_order_irrelevant(self):
        names = [Monomial.symbol(k) for k in "abc"]
        one = ExponentLedger()
        two = ExponentLedger()
        for x in names:
            one.bracket(x * x, 2, power=2)
        for x in reversed(names):
            two.bracket(x * x, 2, power=2)
        vals = {"a": 0.3, "b": 0.4j, "c": -0.5, "t": 0.6}
        assert ledger_eval(one, vals, 0.1) == pytest.approx(ledger_eval(two, vals, 0.1), rel=1e-15)
