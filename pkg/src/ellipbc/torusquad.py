"""Product-trapezoid quadrature on the n-torus and the pairings built on it.

The measure is the normalized Haar measure (2 pi i)^{-n} dz/z, so the
trapezoid rule on N equispaced nodes per circle is a plain mean.  It is exact
for Laurent polynomials of degree below N and converges geometrically for
integrands analytic in an annulus around the torus.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cohom import ParamSet, f_minus, f_plus
from .combi import IndexedBasisOrder
from .errors import ConvergenceError, RegionError
from .interp import E_all, F_mu
from .qseries import DEFAULT_TRUNCATION, Bases, Truncation, e_pair, ell_gamma, theta

__all__ = [
    "Grid",
    "QuadPolicy",
    "QuadResult",
    "refine",
    "integrate",
    "product_weight_on_grid",
    "phi_on_grid",
    "pair",
    "basis_on_grid",
    "K_matrix",
    "I_matrix",
    "I_matrix_direct",
    "generic_offsets",
    "check_psi_region",
    "psi_on_grid",
    "coboundary_on_grid",
]


class Grid:
    """Tensor grid of N nodes per circle, z_i = exp(i (2 pi k / N + offset_i)).

    Coordinates are stored as broadcastable arrays: ``z[i]`` has shape
    (1, .., N, .., 1) with N on axis i, so products of per-coordinate factors
    build the full n-dimensional array lazily.
    """

    def __init__(self, n: int, N: int, offsets: Sequence[float] | None = None):
        if n < 1 or N < 1:
            raise ValueError("need n >= 1 and N >= 1")
        self.n = n
        self.N = N
        self.offsets = tuple(float(x) for x in offsets) if offsets is not None else (0.0,) * n
        if len(self.offsets) != n:
            raise ValueError("need one offset per coordinate")
        self.steps = np.arange(N)
        self.shape = (N,) * n
        self.circles = [np.exp(1j * (2 * np.pi * self.steps / N + phase)) for phase in self.offsets]
        self.z = [self._along(i, self.circles[i]) for i in range(n)]
        self.index = [self._along(i, self.steps) for i in range(n)]

    def _along(self, axis: int, values: np.ndarray) -> np.ndarray:
        shape = [1] * self.n
        shape[axis] = self.N
        return values.reshape(shape)

    def circle_values(self, i: int, fn: Callable) -> np.ndarray:
        """fn evaluated on the nodes of circle i, shaped along axis i."""
        return self._along(i, np.asarray(fn(self.circles[i]), dtype=complex))

    def pair_values(self, i: int, j: int, sign: int, fn: Callable) -> np.ndarray:
        """fn(z_i * z_j**sign) on the (i, j) plane through a 1D table of N values."""
        phase = self.offsets[i] + sign * self.offsets[j]
        table = np.asarray(fn(np.exp(1j * (2 * np.pi * self.steps / self.N + phase))), dtype=complex)
        return table[(self.index[i] + sign * self.index[j]) % self.N]

    def mean(self, values) -> np.ndarray:
        """Average over the trailing n axes (the trapezoid rule)."""
        arr = np.asarray(values, dtype=complex)
        batch = arr.shape[: max(arr.ndim - self.n, 0)]
        arr = np.broadcast_to(arr, batch + self.shape)
        return arr.reshape(batch + (-1,)).mean(axis=-1)


def generic_offsets(n: int, N_max: int) -> tuple[float, ...]:
    """Phases keeping z_i^2, z_i z_j and z_i / z_j off 1 for every N <= N_max."""
    spacing = 2 * np.pi / N_max
    return tuple(spacing * (0.21 + 0.17 * i) / max(1, n - 1) ** 0.5 for i in range(n))


@dataclass(frozen=True)
class QuadPolicy:
    N0: int = 32
    N_max: int | None = None
    tol: float | None = None
    offsets: tuple | None = None

    def resolved(self, n: int) -> "QuadPolicy":
        N_max = self.N_max if self.N_max is not None else (1024 if n <= 2 else 128)
        tol = self.tol if self.tol is not None else (1e-11 if n <= 2 else 1e-8)
        return QuadPolicy(self.N0, N_max, tol, self.offsets)

    def with_offsets(self, n: int) -> "QuadPolicy":
        full = self.resolved(n)
        return QuadPolicy(full.N0, full.N_max, full.tol, generic_offsets(n, full.N_max))


@dataclass
class QuadResult:
    value: object
    N: int
    change: float
    history: list = field(default_factory=list)
    seconds: float = 0.0

    def geometric(self, factor: float = 10.0, floor: float = 1e-12) -> bool:
        """True when each doubling from N = 32 on cut the change by ``factor``.

        Changes already below ``floor`` are rounding noise and are not compared.
        """
        changes = [c for N, c in self.history if N >= 64]
        for before, after in zip(changes, changes[1:]):
            if before > floor and after > before / factor:
                return False
        return True

    def diagnostics(self) -> dict:
        return {"N": self.N, "change": self.change, "history": [list(h) for h in self.history],
                "seconds": self.seconds, "geometric": self.geometric()}


def _relative_change(new, old) -> float:
    new, old = np.asarray(new), np.asarray(old)
    scale = max(float(np.max(np.abs(new))), 1e-300)
    return float(np.max(np.abs(new - old))) / scale


def refine(evaluate: Callable[[Grid], object], n: int, policy: QuadPolicy = QuadPolicy()) -> QuadResult:
    """Double N from N0 until the relative change between levels drops below tol.

    ``evaluate`` maps a Grid to the quadrature value on that grid.
    """
    pol = policy.resolved(n)
    start = time.perf_counter()
    N = pol.N0
    previous = None
    history = []
    while True:
        value = evaluate(Grid(n, N, pol.offsets))
        if previous is not None:
            change = _relative_change(value, previous)
            history.append((N, change))
            if change < pol.tol:
                return QuadResult(value, N, change, history, time.perf_counter() - start)
        if N * 2 > pol.N_max:
            raise ConvergenceError(
                f"no convergence to {pol.tol:g} by N = {N}", history=[previous, value, history])
        previous = value
        N *= 2


def integrate(f: Callable[[Grid], object], n: int, policy: QuadPolicy = QuadPolicy()) -> QuadResult:
    """Integral of f over T^n against the normalized Haar measure.

    f receives a Grid and returns values broadcastable to (..., N, ..., N);
    leading batch axes are integrated independently.
    """
    return refine(lambda grid: grid.mean(f(grid)), n, policy)


def product_weight_on_grid(grid: Grid, single: Callable, pair_factor: Callable) -> np.ndarray:
    """prod_i single(z_i) * prod_{i<j} pair_factor(z_i z_j) pair_factor(z_i / z_j)."""
    out = np.ones(grid.shape, dtype=complex)
    for i in range(grid.n):
        out = out * grid.circle_values(i, single)
    for i in range(grid.n):
        for j in range(i + 1, grid.n):
            out = out * grid.pair_values(i, j, 1, pair_factor)
            out = out * grid.pair_values(i, j, -1, pair_factor)
    return out


def phi_on_grid(grid: Grid, a: ParamSet | Sequence[complex], bases: Bases,
                tr: Truncation = DEFAULT_TRUNCATION) -> np.ndarray:
    """The weight Phi on every node, using one-dimensional tables for the pair factors."""
    avals = a.a if isinstance(a, ParamSet) else tuple(complex(x) for x in a)
    p, q, t = bases.p, bases.q, bases.t

    def single(u):
        out = theta(u**2, p, tr) * theta(u**-2, q, tr)
        for ak in avals:
            out = out * ell_gamma(ak * u, p, q, tr) * ell_gamma(ak / u, p, q, tr)
        return out

    def pair_factor(w):
        return ell_gamma(t * w, p, q, tr) * ell_gamma(t / w, p, q, tr) * theta(w, p, tr) * theta(1 / w, q, tr)

    return product_weight_on_grid(grid, single, pair_factor)


def _check_region(a: ParamSet | Sequence[complex], bases: Bases):
    avals = a.a if isinstance(a, ParamSet) else a
    bad = [k for k, x in enumerate(avals) if not abs(x) < 1]
    if bad:
        raise RegionError(f"torus quadrature needs |a_k| < 1; violated at {bad}")
    if not abs(bases.t) < 1:
        raise RegionError("torus quadrature needs |t| < 1")


def pair(f: Callable[[Grid], object], g: Callable[[Grid], object], a: ParamSet, bases: Bases,
         policy: QuadPolicy = QuadPolicy(), tr: Truncation = DEFAULT_TRUNCATION) -> QuadResult:
    """<f, g>_Phi = integral of f g Phi over T^n."""
    _check_region(a, bases)
    return integrate(lambda grid: f(grid) * g(grid) * phi_on_grid(grid, a, bases, tr), a.n, policy)


def basis_on_grid(grid: Grid, c: Sequence[complex], nome, t, tr: Truncation = DEFAULT_TRUNCATION) -> np.ndarray:
    """Stack of E_mu(c; z; nome) over the canonical order, shape (M, N*...*N)."""
    order = IndexedBasisOrder(len(c), grid.n)
    values = E_all(c, grid.z, nome, t, tr)
    return np.stack([np.broadcast_to(values[mu], grid.shape).reshape(-1) for mu in order.elements])


def _bilinear(grid: Grid, left: np.ndarray, right: np.ndarray, weight: np.ndarray) -> np.ndarray:
    w = weight.reshape(-1)
    return (left * w) @ right.T / w.size


def K_matrix(a: ParamSet, x: Sequence[complex], y: Sequence[complex], bases: Bases,
             policy: QuadPolicy = QuadPolicy(), tr: Truncation = DEFAULT_TRUNCATION) -> QuadResult:
    """K_{mu,nu} = <E_mu(x;z;p), E_nu(y;z;q)>_Phi, all entries from one sweep per grid."""
    _check_region(a, bases)
    if len(x) != a.r or len(y) != a.r:
        raise ValueError(f"x and y need r = {a.r} entries")

    def evaluate(grid: Grid):
        weight = phi_on_grid(grid, a, bases, tr)
        ex = basis_on_grid(grid, x, bases.p, bases.t, tr)
        ey = basis_on_grid(grid, y, bases.q, bases.t, tr)
        return _bilinear(grid, ex, ey, weight)

    return refine(evaluate, a.n, policy)


def _F_vector(c, u, nome, t, n, tr):
    order = IndexedBasisOrder(len(c), n)
    return np.array([F_mu(c, mu, u, nome, t, tr) for mu in order.elements])


def I_matrix(a: ParamSet, u: Sequence[complex], v: Sequence[complex], bases: Bases,
             policy: QuadPolicy = QuadPolicy(), tr: Truncation = DEFAULT_TRUNCATION) -> QuadResult:
    """I_{mu,nu} = F_mu(a;u;p) F_nu(a;v;q) K_{mu,nu}(a;a,a)."""
    base = list(a.a[: a.r])
    res = K_matrix(a, base, base, bases, policy, tr)
    fu = _F_vector(base, u, bases.p, bases.t, a.n, tr)
    fv = _F_vector(base, v, bases.q, bases.t, a.n, tr)
    res.value = fu[:, None] * res.value * fv[None, :]
    return res


def I_matrix_direct(a: ParamSet, u: Sequence[complex], v: Sequence[complex], bases: Bases,
                    policy: QuadPolicy = QuadPolicy(), tr: Truncation = DEFAULT_TRUNCATION) -> QuadResult:
    """I by pairing the rescaled functions F_mu(a;u;p) E_mu(a;z;p) and F_nu(a;v;q) E_nu(a;z;q)."""
    _check_region(a, bases)
    base = list(a.a[: a.r])
    fu = _F_vector(base, u, bases.p, bases.t, a.n, tr)
    fv = _F_vector(base, v, bases.q, bases.t, a.n, tr)

    def evaluate(grid: Grid):
        weight = phi_on_grid(grid, a, bases, tr)
        left = fu[:, None] * basis_on_grid(grid, base, bases.p, bases.t, tr)
        right = fv[:, None] * basis_on_grid(grid, base, bases.q, bases.t, tr)
        return _bilinear(grid, left, right, weight)

    return refine(evaluate, a.n, policy)


def _psi_parameters(a_one: ParamSet, bases: Bases) -> ParamSet:
    """pq-balanced companion beta = (a_1..a_{m-1}, pq a_m) of a 1-balanced set."""
    if a_one.balancing != "one":
        raise ValueError("expected a 1-balanced parameter set")
    beta = a_one.scaled({a_one.m - 1: bases.p * bases.q})
    return ParamSet(beta.a, beta.r, beta.n, "pq")


def check_psi_region(a_one: ParamSet, bases: Bases) -> None:
    """Region where the coboundary integrals against Psi vanish on the torus."""
    beta = _psi_parameters(a_one, bases)
    _check_region(beta, bases)
    if not abs(bases.p) < abs(beta.a[-1]) < abs(bases.q):
        raise RegionError("need |p| < |pq a_m| < |q| for coboundary integrals on the torus")


def psi_on_grid(grid: Grid, a_one: ParamSet, cocycle: np.ndarray, bases: Bases,
                tr: Truncation = DEFAULT_TRUNCATION) -> np.ndarray:
    """Psi = Phi(z;a) g(z) with g = cocycle * prod_i e(a_m, z_i; q), for 1-balanced a.

    Evaluated as Phi(z;beta) * cocycle / prod_i e(a_m, z_i; p), which is the same
    function written with parameters inside the unit disk.
    """
    beta = _psi_parameters(a_one, bases)
    am = a_one.a[-1]
    weight = phi_on_grid(grid, beta, bases, tr) * cocycle
    for i in range(grid.n):
        weight = weight / grid.circle_values(i, lambda u: e_pair(am, u, bases.p, tr))
    return weight


def coboundary_on_grid(grid: Grid, a_one: ParamSet, lam: Sequence[int], bases: Bases,
                       tr: Truncation = DEFAULT_TRUNCATION) -> np.ndarray:
    """(nabla_sym E_lam(a_1..a_s; .; p))(z) on the grid (needs offset nodes)."""
    s = a_one.r + 1
    c = list(a_one.a[:s])
    z = list(grid.z)
    total = np.zeros(grid.shape, dtype=complex)
    for i in range(grid.n):
        rest = z[:i] + z[i + 1:]
        if rest:
            phi = E_all(c, rest, bases.p, bases.t, tr, target=tuple(lam))[tuple(lam)]
        else:
            phi = 1.0
        total = total + (f_plus(i, z, a_one, bases, tr) + f_minus(i, z, a_one, bases, tr)) * phi
    return total
