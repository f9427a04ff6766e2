import numpy as np
import pytest

from ellipbc.closed_forms import selberg_closed
from ellipbc.cohom import ParamSet, nabla_sym, phi_weight
from ellipbc.errors import ConvergenceError, RegionError
from ellipbc.interp import E_eval
from ellipbc.qseries import Bases, e_pair
from ellipbc.torusquad import (
    Grid,
    QuadPolicy,
    QuadResult,
    I_matrix,
    I_matrix_direct,
    K_matrix,
    check_psi_region,
    coboundary_on_grid,
    generic_offsets,
    integrate,
    pair,
    phi_on_grid,
    psi_on_grid,
    refine,
)

from conftest import polar, random_points, rel

B = Bases(polar(0.25, 0.4), polar(0.3, -1.1), polar(0.55, 0.5))


def symmetric_radius(m, n, bases=B):
    return (abs(bases.p * bases.q) / abs(bases.t) ** (2 * n - 2)) ** (1 / m)


def selberg_params(rng, n, bases=B):
    return ParamSet.balanced(random_points(rng, 5, symmetric_radius(6, n, bases)), 1, n, bases, "pq")


class TestGrid:
    def test_nodes_and_shapes(self):
        g = Grid(3, 8, (0.1, 0.2, 0.3))
        assert g.shape == (8, 8, 8)
        assert g.z[1].shape == (1, 8, 1)
        assert np.allclose(np.abs(g.circles[2]), 1)
        assert np.angle(g.circles[0][0]) == pytest.approx(0.1)

    def test_trapezoid_exact_on_monomials(self):
        g = Grid(2, 16)
        for k in range(-15, 16):
            for l in (-3, 0, 5):
                want = 1.0 if k == 0 and l == 0 else 0.0
                assert abs(g.mean(g.z[0] ** k * g.z[1] ** l) - want) < 1e-14

    def test_pair_table_matches_direct(self):
        g = Grid(3, 12, (0.05, 0.11, 0.2))
        fn = lambda w: 1 / (2.5 - w)
        for sign in (1, -1):
            direct = fn(g.z[0] * g.z[2] ** sign)
            assert np.allclose(g.pair_values(0, 2, sign, fn), direct, rtol=1e-14)

    def test_batched_mean(self):
        g = Grid(1, 8)
        values = np.stack([np.ones(8), g.circles[0] ** 8])
        assert np.allclose(g.mean(values), [1, 1])

    def test_validation(self):
        with pytest.raises(ValueError):
            Grid(0, 8)
        with pytest.raises(ValueError):
            Grid(2, 8, (0.1,))

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_offsets_avoid_fixed_points(self, n):
        N_max = 128
        offs = generic_offsets(n, N_max)
        N = 32
        while N <= N_max:
            g = Grid(n, N, offs)
            for i in range(n):
                assert np.min(np.abs(g.circles[i] ** 2 - 1)) > 1e-6
                for j in range(i + 1, n):
                    for w in (g.z[i] * g.z[j], g.z[i] / g.z[j]):
                        assert np.min(np.abs(w - 1)) > 1e-6
            N *= 2


class TestRefinement:
    def test_rational_integrand(self):
        a = 0.6 * np.exp(0.3j)
        res = integrate(lambda g: 1 / ((1 - a * g.z[0]) * (1 - a / g.z[0])), 1)
        assert rel(res.value, 1 / (1 - a**2)) < 1e-13
        assert res.geometric()
        assert res.history and res.history[-1][0] == res.N

    def test_product_integrand_two_dims(self):
        a, b = 0.5j, 0.4
        f = lambda g: 1 / ((1 - a * g.z[0]) * (1 - a / g.z[0]) * (1 - b * g.z[1]) * (1 - b / g.z[1]))
        res = integrate(f, 2)
        assert rel(res.value, 1 / ((1 - a**2) * (1 - b**2))) < 1e-12

    def test_gives_up_at_N_max(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ConvergenceError, match="N = 64"):
            refine(lambda g: rng.normal(), 1, QuadPolicy(N0=16, N_max=64, tol=1e-10))

    def test_policy_defaults(self):
        assert QuadPolicy().resolved(2).N_max == 1024
        assert QuadPolicy().resolved(3).tol == 1e-8
        assert len(QuadPolicy().with_offsets(3).offsets) == 3

    def test_geometric_diagnostic(self):
        good = QuadResult(0, 256, 1e-14, [(64, 1e-3), (128, 1e-6), (256, 1e-14)])
        slow = QuadResult(0, 256, 1e-5, [(64, 1e-3), (128, 5e-4), (256, 1e-5)])
        noisy = QuadResult(0, 256, 5e-15, [(64, 1e-4), (128, 1e-15), (256, 5e-15)])
        assert good.geometric() and noisy.geometric()
        assert not slow.geometric()
        assert good.diagnostics()["history"][0] == [64, 1e-3]


class TestWeightOnGrid:
    def test_matches_pointwise_weight(self, rng):
        a = ParamSet.balanced(random_points(rng, 7, 0.6), 2, 3, B, "pq")
        g = Grid(3, 8, (0.01, 0.03, 0.07))
        w = phi_on_grid(g, a, B)
        w2 = phi_weight(g.z, a, B)
        assert np.max(np.abs(w - w2)) < 1e-12 * np.max(np.abs(w))

    @pytest.mark.parametrize("n", [1, 2])
    def test_selberg(self, rng, n):
        a = selberg_params(rng, n)
        res = pair(lambda g: 1, lambda g: 1, a, B)
        assert rel(res.value, selberg_closed(a.a, n, B)) < 1e-10

    def test_region(self, rng):
        a = ParamSet.balanced([1.2] + random_points(rng, 4, 0.5), 1, 1, B, "pq")
        with pytest.raises(RegionError, match=r"\[0"):
            pair(lambda g: 1, lambda g: 1, a, B)

    def test_K_argument_lengths(self, rng):
        a = selberg_params(rng, 1)
        with pytest.raises(ValueError):
            K_matrix(a, [0.5, 0.4], [0.5], B)


class TestRescaledPairing:
    def test_two_routes(self, rng):
        r, n = 2, 1
        a = ParamSet.balanced(random_points(rng, 7, symmetric_radius(8, n)), r, n, B, "pq")
        u, v = random_points(rng, 1, 0.6), random_points(rng, 1, 0.6)
        I = I_matrix(a, u, v, B).value
        Id = I_matrix_direct(a, u, v, B).value
        assert np.max(np.abs(I - Id)) < 1e-10 * np.max(np.abs(I))


class TestCoboundaryPieces:
    BC = Bases(polar(0.05, 0.4), polar(0.3, -1.1), polar(0.6, 0.5))

    def one_balanced(self, rng, r, n):
        return ParamSet.balanced(random_points(rng, 2 * r + 3, 0.8), r, n, self.BC, "one")

    def test_coboundary_matches_pointwise(self, rng):
        b = self.BC
        a = self.one_balanced(rng, 2, 2)
        lam = (0, 1, 0)
        g = Grid(2, 6, generic_offsets(2, 64))
        on_grid = coboundary_on_grid(g, a, lam, b)
        phi = lambda rest: E_eval(a.a[:3], lam, rest, b.p, b.t)
        for i in range(6):
            for j in range(6):
                z = [g.circles[0][i], g.circles[1][j]]
                assert rel(on_grid[i, j], nabla_sym(phi, z, a, b)) < 1e-11

    def test_psi_rewrites_weight(self, rng):
        b = self.BC
        a = self.one_balanced(rng, 1, 2)
        g = Grid(2, 5, (0.1, 0.37))
        cocycle = np.ones(g.shape)
        psi = psi_on_grid(g, a, cocycle, b)
        direct = phi_weight(g.z, a, b)
        for z in g.z:
            direct = direct * e_pair(a.a[-1], z, b.q)
        assert np.max(np.abs(psi - direct)) < 1e-10 * np.max(np.abs(psi))

    def test_psi_region(self, rng):
        a = self.one_balanced(rng, 1, 1)
        with pytest.raises(RegionError):
            check_psi_region(a.scaled({5: 1e4}), self.BC)
        with pytest.raises(ValueError):
            check_psi_region(ParamSet.balanced(random_points(rng, 5, 0.8), 1, 1, self.BC, "pq"), self.BC)
