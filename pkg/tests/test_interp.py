import itertools

import numpy as np
import pytest

from ellipbc.combi import enumerate_compositions, reference_point
from ellipbc.errors import DegenerateParametersError
from ellipbc.interp import (
    E_eval,
    E_explicit,
    E_face,
    E_n1,
    E_vertex,
    F_mu,
    dual_cauchy_residual,
    partition_identity_check,
    special_value,
    special_value_bracket,
    transC_det_closed,
    transC_entry,
    transC_entry_bracket,
    transC_entry_special,
    transC_matrix,
    transition_to_reference_det_closed,
)
from ellipbc.qseries import e_fact, e_pair

from conftest import random_points, rel

P, T = 0.2 * np.exp(0.3j), 0.6 * np.exp(0.4j)


def params(rng, s, rho=0.8):
    return random_points(rng, s, rho, spread=0.2)


class TestOneVariable:
    def test_nodes(self, rng):
        c = params(rng, 3)
        for k in range(3):
            assert abs(E_n1(c, k, c[k], P) - 1) < 1e-14
            for l in range(3):
                if l != k:
                    assert E_n1(c, k, c[l], P) == 0

    def test_two_parameters(self, rng):
        c = params(rng, 2)
        u = random_points(rng, 1, 1.0)[0]
        assert rel(E_n1(c, 0, u, P), e_pair(u, c[1], P) / e_pair(c[0], c[1], P)) < 1e-14

    def test_degenerate_parameters(self):
        with pytest.raises(DegenerateParametersError):
            E_n1([0.5, 0.5, 0.3j], 0, 0.7, P)


@pytest.mark.parametrize("s,n", [(2, 2), (2, 3), (3, 2), (3, 3)])
def test_kronecker_property(rng, s, n):
    c = params(rng, s)
    Z = enumerate_compositions(s, n)
    for mu, nu in itertools.product(Z, Z):
        value = E_eval(c, mu, reference_point(c, T, nu), P, T)
        assert abs(value - (mu == nu)) < 1e-10


class TestExplicitSum:
    @pytest.mark.parametrize("s,n", [(2, 1), (2, 2), (3, 2), (3, 3)])
    def test_matches_recursion(self, rng, s, n):
        for _ in range(5):
            c = params(rng, s)
            z = random_points(rng, n, 1.0, spread=0.2)
            values = {mu: E_eval(c, mu, z, P, T) for mu in enumerate_compositions(s, n)}
            scale = max(abs(v) for v in values.values())
            for mu, v in values.items():
                assert abs(E_explicit(c, mu, z, P, T) - v) < 1e-11 * scale

    def test_size_guard(self):
        with pytest.raises(ValueError, match="guard"):
            E_explicit([0.3, 0.5, 0.7], (2, 1, 1), [0.9, 0.8, 0.7, 0.6], P, T, max_terms=10)


class TestSymmetry:
    def test_signed_permutations(self, rng):
        c = params(rng, 3)
        z = random_points(rng, 3, 1.0, spread=0.2)
        base = E_eval(c, (1, 1, 1), z, P, T)
        for _ in range(10):
            perm = rng.permutation(3)
            signs = rng.choice([-1, 1], 3)
            w = [z[i] ** int(e) for i, e in zip(perm, signs)]
            assert rel(E_eval(c, (1, 1, 1), w, P, T), base) < 1e-10

    @pytest.mark.parametrize("s", [2, 3])
    def test_quasi_periodicity(self, rng, s):
        c = params(rng, s)
        z = random_points(rng, 2, 1.0, spread=0.2)
        for mu in enumerate_compositions(s, 2):
            shifted = E_eval(c, mu, [P * z[0], z[1]], P, T)
            want = (P * z[0] ** 2) ** (1 - s) * E_eval(c, mu, z, P, T)
            assert rel(shifted, want) < 1e-10


class TestFactorizedForms:
    def test_vertex(self, rng):
        c = params(rng, 3)
        z = random_points(rng, 3, 1.0, spread=0.2)
        for k in range(3):
            mu = tuple(3 if i == k else 0 for i in range(3))
            assert rel(E_vertex(c, k, z, P, T), E_eval(c, mu, z, P, T)) < 1e-11
            assert abs(E_vertex(c, k, reference_point(c, T, mu), P, T) - 1) < 1e-12

    def test_face(self, rng):
        c = params(rng, 3)
        z = random_points(rng, 3, 1.0, spread=0.2)
        for mu in enumerate_compositions(3, 3):
            if mu[-1] == 0:
                assert rel(E_face(c, mu, z, P, T), E_eval(c, mu, z, P, T)) < 1e-11

    def test_face_precondition(self):
        with pytest.raises(ValueError):
            E_face([0.3, 0.5, 0.7], (1, 0, 1), [0.9, 0.8], P, T)


class TestSpecialValue:
    def test_coincident_node(self, rng):
        c = params(rng, 3)
        assert abs(special_value(c, (2, 0, 0), c[0], P, T) - 1) < 1e-13
        assert abs(special_value(c, (1, 1, 0), c[0], P, T)) < 1e-13

    @pytest.mark.parametrize("s,n", [(2, 2), (3, 2), (3, 3)])
    def test_matches_evaluation(self, rng, s, n):
        c = params(rng, s)
        u = random_points(rng, 1, 0.9)[0]
        for mu in enumerate_compositions(s, n):
            want = E_eval(c, mu, [u * T**j for j in range(n)], P, T)
            assert rel(special_value(c, mu, u, P, T), want) < 1e-10
            assert rel(special_value_bracket(c, mu, u, P, T), want) < 1e-10


class TestDualCauchy:
    def test_trivial_partners(self):
        assert F_mu([0.3], (2,), [], P, T) == 1
        assert F_mu([0.3, 0.4], (0, 0), [0.5], P, T) == 1

    def test_partner_definition(self, rng):
        c = params(rng, 2)
        w = params(rng, 1)
        assert rel(F_mu(c, (2, 1), w, P, T), e_fact(c[0], w[0], P, T, 2) * e_fact(c[1], w[0], P, T, 1)) < 1e-14

    @pytest.mark.parametrize("s,n", [(2, 2), (3, 2), (3, 3)])
    def test_identity(self, rng, s, n):
        c = params(rng, s)
        z = random_points(rng, n, 1.0, spread=0.2)
        w = random_points(rng, s - 1, 0.9, spread=0.2)
        assert dual_cauchy_residual(c, z, w, P, T) < 1e-10


class TestPartitionIdentity:
    def test_trivial_splits(self, rng):
        c = params(rng, 2)
        z = random_points(rng, 2, 1.0)
        assert partition_identity_check(c, (1, 1), z, 2, P, T) == 0
        assert partition_identity_check(c, (1, 1), z, 0, P, T) == 0

    def test_one_one_split(self, rng):
        c = params(rng, 2)
        z = random_points(rng, 2, 1.0)
        for lam in enumerate_compositions(2, 2):
            assert partition_identity_check(c, lam, z, 1, P, T) < 1e-11


class TestTransition:
    def test_identity_when_parameters_agree(self, rng):
        c = params(rng, 3)
        Z = enumerate_compositions(3, 2)
        for mu, nu in itertools.product(Z, Z):
            assert abs(transC_entry(c[:2], c[2], c[2], mu, nu, P, T) - (mu == nu)) < 1e-12

    def test_diagonal_entries(self, rng):
        c = params(rng, 3)
        d = params(rng, 1)[0]
        for mu in enumerate_compositions(3, 2):
            want = 1.0 + 0j
            for ci, mi in zip(c[:2], mu[:2]):
                want *= e_fact(d, T**mi * ci, P, T, mu[2]) / e_fact(c[2], T**mi * ci, P, T, mu[2])
            assert rel(transC_entry(c[:2], c[2], d, mu, mu, P, T), want) < 1e-11

    def test_three_forms_agree(self, rng):
        c = params(rng, 3)
        d = params(rng, 1)[0]
        Z = enumerate_compositions(3, 3)
        for mu, nu in itertools.product(Z, Z):
            x = transC_entry(c[:2], c[2], d, mu, nu, P, T)
            for other in (transC_entry_bracket, transC_entry_special):
                y = other(c[:2], c[2], d, mu, nu, P, T)
                assert abs(x - y) <= 1e-11 * max(abs(x), 1.0)

    def test_expansion(self, rng):
        c = params(rng, 3)
        d = params(rng, 1)[0]
        z = random_points(rng, 3, 1.0, spread=0.2)
        Z = enumerate_compositions(3, 3)
        for mu in Z:
            terms = [transC_entry(c[:2], c[2], d, mu, nu, P, T) * E_eval(c[:2] + [d], nu, z, P, T) for nu in Z]
            lhs = E_eval(c, mu, z, P, T)
            assert abs(lhs - sum(terms)) < 1e-9 * max(abs(lhs), sum(abs(x) for x in terms))

    def test_support_is_exact(self, rng):
        a = params(rng, 4)
        C = transC_matrix(a, [0, 1], 2, 3, 2, P, T)
        Z = enumerate_compositions(3, 2)
        for i, mu in enumerate(Z):
            for j, nu in enumerate(Z):
                if not (nu[0] <= mu[0] and nu[1] <= mu[1]):
                    assert C[i, j] == 0
        assert np.all(np.triu(C, 1) == 0)

    @pytest.mark.parametrize("s,n", [(2, 2), (3, 2), (3, 3)])
    def test_determinant(self, rng, s, n):
        a = params(rng, s + 1)
        I = list(range(s - 1))
        C = transC_matrix(a, I, s - 1, s, n, P, T)
        assert rel(np.linalg.det(C), transC_det_closed(a, I, s - 1, s, n, P, T)) < 1e-10

    def test_inverse_transitions(self, rng):
        a = params(rng, 3)
        forward = np.linalg.det(transC_matrix(a, [0], 1, 2, 3, P, T))
        backward = np.linalg.det(transC_matrix(a, [0], 2, 1, 3, P, T))
        assert abs(forward * backward - 1) < 1e-10

    def test_transition_to_reference(self, rng):
        x = params(rng, 2)
        c = params(rng, 2)
        Z = enumerate_compositions(2, 2)
        M = np.array([[E_eval(x, mu, reference_point(c, T, nu), P, T) for nu in Z] for mu in Z])
        assert rel(np.linalg.det(M), transition_to_reference_det_closed(x, c, 2, P, T)) < 1e-10
