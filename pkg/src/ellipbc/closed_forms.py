"""Closed-form evaluators for the elliptic determinant formulas and constants.

These never call the quadrature code, so every comparison against a torus
integral runs through two independent code paths.
"""

from __future__ import annotations

from math import comb, factorial
from typing import Sequence

from .combi import binom
from .errors import RegionError
from .qseries import DEFAULT_TRUNCATION, Bases, Truncation, e_fact, e_pair, ell_gamma, poch_p

__all__ = [
    "selberg_closed",
    "c_rn",
    "c_rn_recurrence",
    "gamma_pair_product",
    "edge_denominator",
    "L_rn",
    "detK_closed",
    "detKa_closed",
    "J0",
    "detI_closed",
    "selberg_shift_ratio",
]


def _lead(n: int, bases: Bases, tr: Truncation) -> complex:
    return 2**n * factorial(n) / (poch_p(bases.p, bases.p, tr) * poch_p(bases.q, bases.q, tr)) ** n


def _balance_check(a: Sequence[complex], n: int, bases: Bases, target: complex, rel: float = 1e-10):
    prod = bases.t ** (2 * n - 2)
    for x in a:
        prod *= x
    if abs(prod - target) > rel * abs(target):
        raise RegionError("parameters violate the balancing condition")


def selberg_closed(a: Sequence[complex], n: int, bases: Bases, tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """Closed form of the elliptic Selberg integral (6 parameters, t^{2n-2} prod a = pq)."""
    a = [complex(x) for x in a]
    if len(a) != 6:
        raise ValueError("need 6 parameters")
    _balance_check(a, n, bases, bases.p * bases.q)
    p, q, t = bases.p, bases.q, bases.t
    value = _lead(n, bases, tr)
    for i in range(n):
        value *= ell_gamma(t ** (i + 1), p, q, tr) / ell_gamma(t, p, q, tr)
        for k in range(6):
            for l in range(k + 1, 6):
                value *= ell_gamma(t**i * a[k] * a[l], p, q, tr)
    return value


def c_rn(r: int, n: int, bases: Bases, tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """The constant c_{r,n} in closed form."""
    if r < 1 or n < 0:
        raise ValueError("need r >= 1 and n >= 0")
    p, q, t = bases.p, bases.q, bases.t
    value = _lead(n, bases, tr) ** comb(n + r - 1, r - 1)
    gt = ell_gamma(t, p, q, tr)
    for i in range(1, n + 1):
        value *= (ell_gamma(t**i, p, q, tr) / gt) ** (r * comb(n - i + r - 1, r - 1))
    return value


def c_rn_recurrence(r: int, n: int, bases: Bases, tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """c_{r,n} from the recurrences in r and n, starting at c_{1,0} = c_{r,0} = 1."""
    if r < 1 or n < 0:
        raise ValueError("need r >= 1 and n >= 0")
    p, q, t = bases.p, bases.q, bases.t
    pq_poch = poch_p(p, p, tr) * poch_p(q, q, tr)
    gt = ell_gamma(t, p, q, tr)
    table = {}
    for rr in range(1, r + 1):
        table[(rr, 0)] = 1.0 + 0j
        for nn in range(1, n + 1):
            if rr == 1:
                table[(1, nn)] = table[(1, nn - 1)] * 2 * nn / pq_poch * ell_gamma(t**nn, p, q, tr) / gt
                continue
            power = comb(nn + rr - 2, rr - 1)
            value = table[(rr - 1, nn)] * table[(rr, nn - 1)] * (2 * nn / pq_poch) ** power
            for i in range(1, nn + 1):
                value *= ell_gamma(t**i, p, q, tr) ** binom(nn - i + rr - 2, rr - 2)
            table[(rr, nn)] = value / gt**power
    return table[(r, n)]


def gamma_pair_product(a: Sequence[complex], r: int, n: int, bases: Bases,
                       tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """prod_{i<n} prod_{k<l} Gamma(t^i a_k a_l)^{C(n-i+r-2, r-1)}."""
    p, q, t = bases.p, bases.q, bases.t
    value = 1.0 + 0j
    for i in range(n):
        power = comb(n - i + r - 2, r - 1)
        for k in range(len(a)):
            for l in range(k + 1, len(a)):
                value *= ell_gamma(t**i * a[k] * a[l], p, q, tr) ** power
    return value


def edge_denominator(x: Sequence[complex], n: int, nome, t, tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """prod_{i+j<n} prod_{k<l} e(t^i x_k, t^j x_l; nome)^{C(n-i-j+r-3, r-2)}."""
    r = len(x)
    value = 1.0 + 0j
    for i in range(n):
        for j in range(n - i):
            power = binom(n - i - j + r - 3, r - 2)
            if power == 0:
                continue
            for k in range(r):
                for l in range(k + 1, r):
                    value *= e_pair(t**i * x[k], t**j * x[l], nome, tr) ** power
    return value


def _check_pq(a, r, n, bases):
    if len(a) != 2 * r + 4:
        raise ValueError(f"need m = 2r+4 = {2 * r + 4} parameters")
    _balance_check(a, n, bases, bases.p * bases.q)


def L_rn(a: Sequence[complex], r: int, n: int, bases: Bases, tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """det K(a) / c_{r,n}: gamma product over e-pair denominators at x = y = a_{1..r}."""
    a = [complex(x) for x in a]
    _check_pq(a, r, n, bases)
    return gamma_pair_product(a, r, n, bases, tr) / (
        edge_denominator(a[:r], n, bases.p, bases.t, tr) * edge_denominator(a[:r], n, bases.q, bases.t, tr))


def detKa_closed(a: Sequence[complex], r: int, n: int, bases: Bases, tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """det K(a) with x = y = a_{1..r}."""
    return c_rn(r, n, bases, tr) * L_rn(a, r, n, bases, tr)


def detK_closed(a: Sequence[complex], x: Sequence[complex], y: Sequence[complex], r: int, n: int,
                bases: Bases, tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """det K(a;x,y): the full determinant formula."""
    a = [complex(v) for v in a]
    _check_pq(a, r, n, bases)
    value = c_rn(r, n, bases, tr) * gamma_pair_product(a, r, n, bases, tr)
    return value / (edge_denominator(x, n, bases.p, bases.t, tr) * edge_denominator(y, n, bases.q, bases.t, tr))


def _F_edge_product(a, u, v, r, n, bases, tr):
    p, q, t = bases.p, bases.q, bases.t
    value = 1.0 + 0j
    for i in range(1, n + 1):
        power = binom(n - i + r - 2, r - 2)
        if power == 0:
            continue
        for k in range(r):
            for l in range(r - 1):
                value *= (e_fact(a[k], u[l], p, t, i, tr) * e_fact(a[k], v[l], q, t, i, tr)) ** power
    return value


def J0(a: Sequence[complex], u: Sequence[complex], v: Sequence[complex], r: int, n: int,
       bases: Bases, tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """Particular solution of the rank-one difference equations for det I."""
    a = [complex(x) for x in a]
    if len(u) != r - 1 or len(v) != r - 1:
        raise ValueError("u and v need r-1 entries")
    value = gamma_pair_product(a, r, n, bases, tr) * _F_edge_product(a, u, v, r, n, bases, tr)
    return value / (edge_denominator(a[:r], n, bases.p, bases.t, tr) * edge_denominator(a[:r], n, bases.q, bases.t, tr))


def detI_closed(a: Sequence[complex], u: Sequence[complex], v: Sequence[complex], r: int, n: int,
                bases: Bases, tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """det I(a;u,v) = c_{r,n} J0(a;u,v)."""
    _check_pq([complex(x) for x in a], r, n, bases)
    return c_rn(r, n, bases, tr) * J0(a, u, v, r, n, bases, tr)


def selberg_shift_ratio(a: Sequence[complex], k: int, n: int, bases: Bases, tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """I(.., q a_k, .., a_6/q) / I(a) for the m = 6 integral (k in 0..4)."""
    from .qseries import theta

    p, q, t = bases.p, bases.q, bases.t
    if not 0 <= k < 5:
        raise ValueError("k must lie in 0..4")
    value = 1.0 + 0j
    for i in range(n):
        for l in range(5):
            if l == k:
                continue
            value *= theta(a[l] * a[k] * t**i, p, tr) / theta(a[l] * a[5] * t**i / q, p, tr)
    return value
