"""The p -> 0 degeneration: interpolation polynomials, single-nome weights,
Gustafson's integrals and symplectic Schur functions."""

from __future__ import annotations

import itertools
from math import comb, factorial
from typing import Sequence

import numpy as np

from .combi import IndexedBasisOrder, binom, reference_point
from .errors import DegenerateParametersError, RegionError
from .interp import E_all, E_eval
from .qseries import DEFAULT_TRUNCATION, Truncation, e_pair, poch_p
from .torusquad import Grid, QuadPolicy, QuadResult, basis_on_grid, product_weight_on_grid, refine

__all__ = [
    "e_trig",
    "E_trig",
    "E_trig_all",
    "E_trig_two_parts",
    "sPhi",
    "sPhi_tilde",
    "sphi_on_grid",
    "sphi_tilde_on_grid",
    "gustafson_NR",
    "gustafson_AW",
    "partitions_in_box",
    "partition_of_composition",
    "symplectic_schur",
    "schur_transition_matrix",
    "schur_transition_det",
    "detK_trig_closed",
    "detK_tilde_closed",
    "detX_closed",
    "detX_tilde_closed",
    "K_trig_matrix",
    "X_matrix",
]


def e_trig(u, v):
    """u + 1/u - v - 1/v, the p -> 0 limit of e(u,v;p)."""
    return u + 1 / u - v - 1 / v


def E_trig_all(c: Sequence[complex], z: Sequence, t) -> dict:
    """All interpolation polynomials E_mu(c;z), mu in Z_{s,n}."""
    return E_all(c, z, 0.0, t, pairing=e_trig)


def E_trig(c: Sequence[complex], mu: Sequence[int], z: Sequence, t):
    """Interpolation polynomial E_mu(c;z) with E_mu(c;(c)_{t,nu}) = delta."""
    return E_eval(c, mu, z, 0.0, t, pairing=e_trig)


def E_trig_two_parts(c1: complex, c2: complex, first: int, z: Sequence, t):
    """E_(first, n-first)(c1,c2;z) as a sum over splittings of the variables."""
    n = len(z)
    if not 0 <= first <= n:
        raise ValueError("first part must lie in 0..n")
    total = 0j
    for chosen in itertools.combinations(range(n), first):
        rest = [j for j in range(n) if j not in chosen]
        term = 1.0 + 0j
        for k, i in enumerate(chosen):
            # positions are 1-based in the sequence indices i_k, j_l
            term *= e_trig(z[i], c2 * t ** (i - k)) / e_trig(c1 * t**k, c2 * t ** (i - k))
        for l, j in enumerate(rest):
            term *= e_trig(z[j], c1 * t ** (j - l)) / e_trig(c2 * t**l, c1 * t ** (j - l))
        total = total + term
    return total


def _poch(u, q, tr):
    return poch_p(u, q, tr)


def _sphi_single(u, den_params, q, tr, extra_num=None):
    out = _poch(u**2, q, tr) * _poch(u**-2, q, tr)
    if extra_num is not None:
        out = out * _poch(q / extra_num * u, q, tr) * _poch(q / extra_num / u, q, tr)
    for ak in den_params:
        out = out / (_poch(ak * u, q, tr) * _poch(ak / u, q, tr))
    return out


def _sphi_pair(w, q, t, tr):
    return _poch(w, q, tr) * _poch(1 / w, q, tr) / (_poch(t * w, q, tr) * _poch(t / w, q, tr))


def _product_weight(z, single, pair_factor):
    zs = [z_i if np.ndim(z_i) == 0 else np.asarray(z_i, dtype=complex) for z_i in z]
    out = 1.0 + 0j
    for zi in zs:
        out = out * single(zi)
    for i in range(len(zs)):
        for j in range(i + 1, len(zs)):
            out = out * pair_factor(zs[i] * zs[j]) * pair_factor(zs[i] / zs[j])
    return out


def sPhi(z: Sequence, a: Sequence[complex], q, t, tr: Truncation = DEFAULT_TRUNCATION):
    """Single-nome weight with m-1 denominator parameters and the last one in the numerator."""
    a = [complex(x) for x in a]
    return _product_weight(z, lambda u: _sphi_single(u, a[:-1], q, tr, extra_num=a[-1]),
                           lambda w: _sphi_pair(w, q, t, tr))


def sPhi_tilde(z: Sequence, a: Sequence[complex], q, t, tr: Truncation = DEFAULT_TRUNCATION):
    """Single-nome weight with every parameter in the denominator."""
    a = [complex(x) for x in a]
    return _product_weight(z, lambda u: _sphi_single(u, a, q, tr), lambda w: _sphi_pair(w, q, t, tr))


def sphi_on_grid(grid: Grid, a: Sequence[complex], q, t, tr: Truncation = DEFAULT_TRUNCATION):
    a = [complex(x) for x in a]
    return product_weight_on_grid(grid, lambda u: _sphi_single(u, a[:-1], q, tr, extra_num=a[-1]),
                                  lambda w: _sphi_pair(w, q, t, tr))


def sphi_tilde_on_grid(grid: Grid, a: Sequence[complex], q, t, tr: Truncation = DEFAULT_TRUNCATION):
    a = [complex(x) for x in a]
    return product_weight_on_grid(grid, lambda u: _sphi_single(u, a, q, tr),
                                  lambda w: _sphi_pair(w, q, t, tr))


def _check_disk(values, what):
    bad = [k for k, x in enumerate(values) if not abs(x) < 1]
    if bad:
        raise RegionError(f"{what} needs |a_k| < 1; violated at {bad}")


def _lead(n: int, q, tr) -> complex:
    return 2**n * factorial(n) / _poch(q, q, tr) ** n


def _q_balanced_product(a, r, n, q, t, tr, power_of=lambda i: 1):
    """prod_i ((t;q)^r prod_k (q/t^i a_k a_m;q) / ((t^{i+1};q)^r prod_{k<l<m} (t^i a_k a_l;q)))^power."""
    m = len(a)
    value = 1.0 + 0j
    for i in range(n):
        num = _poch(t, q, tr) ** r
        den = _poch(t ** (i + 1), q, tr) ** r
        for k in range(m - 1):
            num *= _poch(q / (t**i * a[k] * a[m - 1]), q, tr)
            for l in range(k + 1, m - 1):
                den *= _poch(t**i * a[k] * a[l], q, tr)
        value *= (num / den) ** power_of(i)
    return value


def _free_product(a, r, n, q, t, tr, power_of=lambda i: 1):
    total = complex(np.prod(a))
    value = 1.0 + 0j
    for i in range(n):
        num = _poch(t, q, tr) ** r * _poch(t ** (2 * n - i - 2) * total, q, tr)
        den = _poch(t ** (i + 1), q, tr) ** r
        for k in range(len(a)):
            for l in range(k + 1, len(a)):
                den *= _poch(t**i * a[k] * a[l], q, tr)
        value *= (num / den) ** power_of(i)
    return value


def gustafson_NR(a: Sequence[complex], q, t, n: int, tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """Closed form of the multivariate Nassrallah-Rahman integral (6 parameters, product t^{2n-2} = q)."""
    a = [complex(x) for x in a]
    if len(a) != 6:
        raise ValueError("need 6 parameters")
    _check_disk(a[:5], "the Nassrallah-Rahman integral")
    return _lead(n, q, tr) * _q_balanced_product(a, 1, n, q, t, tr)


def gustafson_AW(a: Sequence[complex], q, t, n: int, tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """Closed form of the multivariate Askey-Wilson integral (4 free parameters)."""
    a = [complex(x) for x in a]
    if len(a) != 4:
        raise ValueError("need 4 parameters")
    _check_disk(a, "the Askey-Wilson integral")
    return _lead(n, q, tr) * _free_product(a, 1, n, q, t, tr)


def partition_of_composition(mu: Sequence[int]) -> tuple[int, ...]:
    """The partition with mu_k parts equal to r-1-k (r = len(mu))."""
    r = len(mu)
    parts = []
    for k, count in enumerate(mu):
        parts += [r - 1 - k] * count
    return tuple(sorted(parts, reverse=True))


def partitions_in_box(r: int, n: int, order: str = "composition") -> list[tuple[int, ...]]:
    """B_{r,n}: partitions with n parts bounded by r-1.

    ``composition`` lists them through the bijection with Z_{r,n} in its
    canonical order, which is the ordering under which det C equals its
    product formula with sign +1.  ``reverse_lex`` is plain reverse
    lexicographic order.
    """
    if order == "composition":
        return [partition_of_composition(mu) for mu in IndexedBasisOrder(r, n).elements]
    if order == "reverse_lex":
        return [lam for lam in itertools.product(range(r - 1, -1, -1), repeat=n)
                if all(lam[i] >= lam[i + 1] for i in range(n - 1))]
    raise ValueError(f"unknown order {order!r}")


def _bialternant_matrix(exponents: Sequence[int], z: Sequence) -> np.ndarray:
    n = len(z)
    out = np.empty((n, n), dtype=complex)
    for j in range(n):
        for k, e in enumerate(exponents):
            out[j, k] = z[j] ** e - z[j] ** (-e)
    return out


def symplectic_schur(lam: Sequence[int], z: Sequence[complex]) -> complex:
    """chi_lambda(z) as a ratio of bialternants."""
    n = len(z)
    if len(lam) != n:
        raise ValueError("lambda needs n parts")
    rho = [n - k for k in range(n)]
    num = np.linalg.det(_bialternant_matrix([l + e for l, e in zip(lam, rho)], z))
    den = np.linalg.det(_bialternant_matrix(rho, z))
    if abs(den) < 1e-13 * max(1.0, abs(num)):
        raise DegenerateParametersError("bialternant denominator vanishes at z")
    return num / den


def schur_transition_matrix(x: Sequence[complex], t, r: int, n: int) -> np.ndarray:
    """C_{lambda,mu} = chi_lambda((x)_{t,mu}); rows in the composition order of B_{r,n}."""
    lams = partitions_in_box(r, n)
    mus = IndexedBasisOrder(r, n).elements
    return np.array([[symplectic_schur(lam, reference_point(x, t, mu)) for mu in mus] for lam in lams])


def _edge_product(x, t, n, r, pairing):
    value = 1.0 + 0j
    for i in range(n):
        for j in range(n - i):
            power = binom(n - i - j + r - 3, r - 2)
            if power == 0:
                continue
            for k in range(r):
                for l in range(k + 1, r):
                    value *= pairing(t**i * x[k], t**j * x[l]) ** power
    return value


def schur_transition_det(x: Sequence[complex], t, r: int, n: int) -> complex:
    """Closed-form det C = prod e_trig(t^i x_k, t^j x_l)^{C(n-i-j+r-3, r-2)}."""
    return _edge_product(list(x), t, n, r, e_trig)


def _face_power(n, r):
    return lambda i: comb(n - i + r - 2, r - 1)


def detK_trig_closed(a, x, y, r: int, n: int, q, t, tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """det of <E_mu(x;z), E_nu(y;z;q)> against sPhi, parameters balanced to q."""
    a = [complex(v) for v in a]
    if len(a) != 2 * r + 4:
        raise ValueError("need 2r+4 parameters")
    value = _lead(n, q, tr) ** comb(n + r - 1, r - 1) * _q_balanced_product(a, r, n, q, t, tr, _face_power(n, r))
    value /= _edge_product(list(x), t, n, r, e_trig)
    value /= _edge_product(list(y), t, n, r, lambda u, v: e_pair(u, v, q, tr))
    return value


def detK_tilde_closed(a, x, y, r: int, n: int, q, t, tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """Same determinant against sPhi_tilde with 2r+2 free parameters."""
    a = [complex(v) for v in a]
    if len(a) != 2 * r + 2:
        raise ValueError("need 2r+2 parameters")
    value = _lead(n, q, tr) ** comb(n + r - 1, r - 1) * _free_product(a, r, n, q, t, tr, _face_power(n, r))
    value /= _edge_product(list(x), t, n, r, e_trig)
    value /= _edge_product(list(y), t, n, r, lambda u, v: e_pair(u, v, q, tr))
    return value


def detX_closed(a, y, r: int, n: int, q, t, tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """det of <chi_lambda, E_nu(y;z;q)> against sPhi (rows in the composition order of B_{r,n})."""
    a = [complex(v) for v in a]
    value = _lead(n, q, tr) ** comb(n + r - 1, r - 1) * _q_balanced_product(a, r, n, q, t, tr, _face_power(n, r))
    return value / _edge_product(list(y), t, n, r, lambda u, v: e_pair(u, v, q, tr))


def detX_tilde_closed(a, y, r: int, n: int, q, t, tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    a = [complex(v) for v in a]
    value = _lead(n, q, tr) ** comb(n + r - 1, r - 1) * _free_product(a, r, n, q, t, tr, _face_power(n, r))
    return value / _edge_product(list(y), t, n, r, lambda u, v: e_pair(u, v, q, tr))


def _weight_fn(a, q, t, tilde, tr):
    if tilde:
        _check_disk(a, "the weight")
        return lambda grid: sphi_tilde_on_grid(grid, a, q, t, tr)
    _check_disk(a[:-1], "the weight")
    return lambda grid: sphi_on_grid(grid, a, q, t, tr)


def K_trig_matrix(a, x, y, n: int, q, t, tilde: bool = False, policy: QuadPolicy = QuadPolicy(),
                  tr: Truncation = DEFAULT_TRUNCATION) -> QuadResult:
    """Matrix of <E_mu(x;z), E_nu(y;z;q)> against sPhi (or sPhi_tilde) by quadrature."""
    weight = _weight_fn([complex(v) for v in a], q, t, tilde, tr)
    order = IndexedBasisOrder(len(x), n)

    def evaluate(grid: Grid):
        w = weight(grid).reshape(-1)
        values = E_trig_all(x, grid.z, t)
        left = np.stack([np.broadcast_to(values[mu], grid.shape).reshape(-1) for mu in order.elements])
        right = basis_on_grid(grid, y, q, t, tr)
        return (left * w) @ right.T / w.size

    return refine(evaluate, n, policy)


def X_matrix(a, y, n: int, q, t, tilde: bool = False, policy: QuadPolicy = QuadPolicy(),
             tr: Truncation = DEFAULT_TRUNCATION) -> QuadResult:
    """Matrix of <chi_lambda, E_nu(y;z;q)> against sPhi (or sPhi_tilde) by quadrature."""
    weight = _weight_fn([complex(v) for v in a], q, t, tilde, tr)
    r = len(y)
    lams = partitions_in_box(r, n)
    if policy.offsets is None:
        # chi_lambda is a removable 0/0 on the fixed points of W_n, which roots of unity hit
        policy = policy.with_offsets(n)

    def evaluate(grid: Grid):
        w = weight(grid).reshape(-1)
        full = [np.broadcast_to(zi, grid.shape).reshape(-1) for zi in grid.z]
        left = np.stack([_schur_on_nodes(lam, full) for lam in lams])
        right = basis_on_grid(grid, y, q, t, tr)
        return (left * w) @ right.T / w.size

    return refine(evaluate, n, policy)


def _schur_on_nodes(lam, z):
    """chi_lambda at many points at once (points must avoid the Weyl denominator zeros)."""
    n = len(z)
    rho = [n - k for k in range(n)]

    def alt(exponents):
        mat = np.empty(z[0].shape + (n, n), dtype=complex)
        for j in range(n):
            for k, e in enumerate(exponents):
                mat[..., j, k] = z[j] ** e - z[j] ** (-e)
        return np.linalg.det(mat)

    num = alt([l + e for l, e in zip(lam, rho)])
    den = alt(rho)
    small = np.abs(den) < 1e-12
    if np.any(small):
        raise DegenerateParametersError("grid hits a zero of the Weyl denominator; use offsets")
    return num / den
