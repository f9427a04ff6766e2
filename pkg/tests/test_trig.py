import itertools
from math import comb

import numpy as np
import pytest

from ellipbc.cohom import phi_weight
from ellipbc.combi import IndexedBasisOrder, enumerate_compositions, reference_point
from ellipbc.errors import DegenerateParametersError, RegionError
from ellipbc.interp import E_eval
from ellipbc.qseries import Bases, e_pair, poch_p
from ellipbc.torusquad import integrate
from ellipbc.trig import (
    E_trig,
    E_trig_two_parts,
    K_trig_matrix,
    X_matrix,
    detK_tilde_closed,
    detK_trig_closed,
    detX_closed,
    detX_tilde_closed,
    e_trig,
    gustafson_AW,
    gustafson_NR,
    partition_of_composition,
    partitions_in_box,
    sPhi,
    sPhi_tilde,
    schur_transition_det,
    schur_transition_matrix,
    sphi_on_grid,
    sphi_tilde_on_grid,
    symplectic_schur,
)

from conftest import polar, random_points, rel

Q, T = polar(0.3, 0.5), polar(0.55, -0.4)


def q_balanced(rng, r, n, rho=0.6):
    free = random_points(rng, 2 * r + 3, rho)
    return free + [Q / (T ** (2 * n - 2) * np.prod(free))]


class TestPolynomials:
    def test_pairing_is_the_p_zero_limit(self, rng):
        u, v = random_points(rng, 2, 0.9)
        assert e_trig(u, v) == pytest.approx(e_pair(u, v, 0.0), rel=1e-14)
        assert rel(e_pair(u, v, 1e-9), e_trig(u, v)) < 1e-8

    def test_kronecker(self, rng):
        c = random_points(rng, 3, 0.9, spread=0.3)
        Z = enumerate_compositions(3, 2)
        for mu in Z:
            for nu in Z:
                value = E_trig(c, mu, reference_point(c, T, nu), T)
                assert abs(value - (mu == nu)) < 1e-12

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_two_part_formula(self, rng, n):
        c1, c2 = random_points(rng, 2, 1.0, spread=0.3)
        z = random_points(rng, n, 1.1)
        for k in range(n + 1):
            value = E_trig((c1, c2), (k, n - k), z, T)
            assert abs(value - E_trig_two_parts(c1, c2, k, z, T)) < 1e-11 * max(1, abs(value))

    def test_two_part_range(self):
        with pytest.raises(ValueError):
            E_trig_two_parts(0.5, 0.7, 3, [1, 1], T)

    def test_tiny_nome(self, rng):
        c = random_points(rng, 3, 1.0, spread=0.3)
        z = random_points(rng, 3, 1.0)
        for mu in enumerate_compositions(3, 3):
            assert rel(E_eval(c, mu, z, 1e-6, T), E_trig(c, mu, z, T)) < 1e-4


class TestWeights:
    def test_tilde_weight_is_elliptic_weight_at_p_zero(self, rng):
        a = random_points(rng, 6, 0.6)
        z = random_points(rng, 2, 1.0, spread=0.1)
        assert rel(sPhi_tilde(z, a, Q, T), phi_weight(z, a, Bases(0, Q, T))) < 1e-12

    def test_numerator_parameter_single_variable(self, rng):
        a = random_points(rng, 6, 0.6)
        z = polar(1.0, 0.7)
        want = poch_p(z**2, Q) * poch_p(z**-2, Q) * poch_p(Q * z / a[5], Q) * poch_p(Q / (z * a[5]), Q)
        for x in a[:5]:
            want /= poch_p(x * z, Q) * poch_p(x / z, Q)
        assert rel(sPhi([z], a, Q, T), want) < 1e-13

    def test_grid_forms(self, rng):
        from ellipbc.torusquad import Grid

        a = random_points(rng, 6, 0.6)
        g = Grid(2, 6, (0.1, 0.3))
        assert np.allclose(sphi_on_grid(g, a, Q, T), sPhi(g.z, a, Q, T), rtol=1e-12)
        assert np.allclose(sphi_tilde_on_grid(g, a, Q, T), sPhi_tilde(g.z, a, Q, T), rtol=1e-12)


class TestGustafson:
    @pytest.mark.parametrize("n", [1, 2])
    def test_askey_wilson(self, rng, n):
        a = random_points(rng, 4, 0.5)
        res = integrate(lambda g: sphi_tilde_on_grid(g, a, Q, T), n)
        assert rel(res.value, gustafson_AW(a, Q, T, n)) < 1e-10

    @pytest.mark.parametrize("n", [1, 2])
    def test_nassrallah_rahman(self, rng, n):
        a = q_balanced(rng, 1, n, 0.55)
        res = integrate(lambda g: sphi_on_grid(g, a, Q, T), n)
        assert rel(res.value, gustafson_NR(a, Q, T, n)) < 1e-9

    def test_argument_checks(self):
        with pytest.raises(ValueError):
            gustafson_AW([0.5] * 5, Q, T, 1)
        with pytest.raises(RegionError):
            gustafson_AW([0.5, 0.5, 0.5, 1.5], Q, T, 1)
        with pytest.raises(ValueError):
            gustafson_NR([0.5] * 4, Q, T, 1)


class TestSchur:
    def test_one_variable(self):
        z = polar(0.9, 0.4)
        for lam in range(5):
            want = sum(z ** (lam - 2 * j) for j in range(lam + 1))
            assert rel(symplectic_schur([lam], [z]), want) < 1e-12

    def test_vector_representation(self):
        z = [polar(0.9, 0.4), polar(1.2, -1.0)]
        want = sum(x + 1 / x for x in z)
        assert rel(symplectic_schur([1, 0], z), want) < 1e-12
        assert rel(symplectic_schur([0, 0], z), 1) < 1e-12

    def test_invariance(self, rng):
        z = random_points(rng, 3, 1.0, spread=0.2)
        base = symplectic_schur([2, 1, 0], z)
        for perm in itertools.permutations(range(3)):
            w = [z[perm[0]], 1 / z[perm[1]], z[perm[2]]]
            assert rel(symplectic_schur([2, 1, 0], w), base) < 1e-11

    def test_denominator_zero(self):
        with pytest.raises(DegenerateParametersError):
            symplectic_schur([1], [1.0])
        with pytest.raises(ValueError):
            symplectic_schur([1, 0], [0.5])

    @pytest.mark.parametrize("r,n", [(2, 2), (3, 2), (2, 3), (3, 3)])
    def test_determinant(self, rng, r, n):
        x = random_points(rng, r, 0.9, spread=0.2)
        det = np.linalg.det(schur_transition_matrix(x, T, r, n))
        assert rel(det, schur_transition_det(x, T, r, n)) < 1e-9


class TestPartitions:
    @pytest.mark.parametrize("r,n", [(1, 3), (2, 2), (3, 3), (4, 2)])
    def test_box(self, r, n):
        comp = partitions_in_box(r, n)
        lex = partitions_in_box(r, n, "reverse_lex")
        assert len(comp) == comb(n + r - 1, r - 1)
        assert sorted(comp) == sorted(lex)
        assert lex == sorted(lex, reverse=True)
        assert all(len(lam) == n and lam[0] <= r - 1 for lam in comp)

    def test_bijection(self):
        assert partition_of_composition((1, 0, 2)) == (2, 0, 0)
        order = IndexedBasisOrder(3, 2).elements
        assert [partition_of_composition(mu) for mu in order] == partitions_in_box(3, 2)

    def test_unknown_order(self):
        with pytest.raises(ValueError):
            partitions_in_box(2, 2, "random")


class TestDeterminants:
    @pytest.mark.parametrize("r,n", [(1, 1), (2, 1), (2, 2)])
    def test_interpolation_pairing(self, rng, r, n):
        a = q_balanced(rng, r, n)
        x, y = random_points(rng, r, 0.7), random_points(rng, r, 0.7)
        K = K_trig_matrix(a, x, y, n, Q, T).value
        assert rel(np.linalg.det(K), detK_trig_closed(a, x, y, r, n, Q, T)) < 1e-9
        X = X_matrix(a, y, n, Q, T).value
        assert rel(np.linalg.det(X), detX_closed(a, y, r, n, Q, T)) < 1e-9

    @pytest.mark.parametrize("r,n", [(1, 2), (2, 1)])
    def test_free_parameters(self, rng, r, n):
        a = random_points(rng, 2 * r + 2, 0.6)
        x, y = random_points(rng, r, 0.7), random_points(rng, r, 0.7)
        K = K_trig_matrix(a, x, y, n, Q, T, tilde=True).value
        assert rel(np.linalg.det(K), detK_tilde_closed(a, x, y, r, n, Q, T)) < 1e-9
        X = X_matrix(a, y, n, Q, T, tilde=True).value
        assert rel(np.linalg.det(X), detX_tilde_closed(a, y, r, n, Q, T)) < 1e-9

    def test_region(self, rng):
        a = random_points(rng, 4, 0.6) + [1.4]
        with pytest.raises(RegionError):
            K_trig_matrix(a, [0.5], [0.5], 1, Q, T, tilde=True)

    def test_parameter_count(self):
        with pytest.raises(ValueError):
            detK_trig_closed([0.5] * 5, [0.5], [0.5], 1, 1, Q, T)
