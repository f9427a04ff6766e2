"""Elliptic interpolation functions E_mu(c;z;p) of type BC_n.

E_mu(c; . ;p) is the basis of W_n-invariant holomorphic functions with
p-quasi-periodicity of degree s-1 that takes the value delta_{mu,nu} at the
reference points (c)_{t,nu}.  Variables ``z`` may be scalars or NumPy arrays
(all broadcastable against each other), which is how the quadrature module
evaluates whole grids at once.

Parameter and part indices are 0-based throughout.
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from math import comb
from typing import Sequence

import numpy as np

from .combi import enumerate_compositions, leq, unit
from .errors import DegenerateParametersError
from .qseries import (
    DEFAULT_TRUNCATION,
    ExponentLedger,
    Monomial,
    Truncation,
    e_fact,
    e_pair,
    ledger_eval,
)

__all__ = [
    "E_n1",
    "E_all",
    "E_eval",
    "E_explicit",
    "E_vertex",
    "E_face",
    "special_value",
    "special_value_bracket",
    "F_mu",
    "dual_cauchy_residual",
    "partition_identity_check",
    "transC_entry",
    "transC_entry_bracket",
    "transC_entry_special",
    "transC_matrix",
    "transC_det_closed",
    "transition_to_reference_det_closed",
]


def _check_denominator(value, tr: Truncation, what: str):
    if abs(value) < tr.pole_eps:
        raise DegenerateParametersError(f"{what} is numerically zero ({abs(value):.3e})")


def _one_variable_factors(c: Sequence[complex], u, p, tr: Truncation, pairing=None) -> list:
    """[E_{eps_k}(c;u) for k in range(s)] sharing the numerator pairings.

    ``pairing(u, v)`` replaces e(u,v;p) when given (used for the p -> 0 limit).
    """
    s = len(c)
    if s == 1:
        return [1.0 + 0j]
    if pairing is None:
        def pairing(x, y):
            return e_pair(x, y, p, tr)
    numer = [pairing(u, cl) for cl in c]
    out = []
    for k in range(s):
        value = 1.0 + 0j
        for l in range(s):
            if l == k:
                continue
            den = pairing(c[k], c[l])
            _check_denominator(den, tr, f"e(c_{k}, c_{l})")
            value = value * (numer[l] / den)
        out.append(value)
    return out


def E_n1(c: Sequence[complex], k: int, u, p, tr: Truncation = DEFAULT_TRUNCATION):
    """One-variable interpolation function prod_{l != k} e(u,c_l)/e(c_k,c_l)."""
    if not 0 <= k < len(c):
        raise IndexError("k out of range")
    return _one_variable_factors(list(c), u, p, tr)[k]


def E_all(c: Sequence[complex], z: Sequence, p, t, tr: Truncation = DEFAULT_TRUNCATION,
          target: Sequence[int] | None = None, pairing=None) -> dict:
    """All E_mu(c;z) for mu in Z_{s,n}, built by the recursion over z_1, ..., z_n.

    Level j holds E_lambda(c; z_1..z_j) for |lambda| = j; each state lambda
    contributes E_lambda * E_{eps_k}(t^lambda c; z_{j+1}) to lambda + eps_k.
    When ``target`` is given only states below it are kept.
    """
    c = [complex(x) for x in c]
    s = len(c)
    level = {(0,) * s: 1.0 + 0j}
    for zj in z:
        nxt: dict = {}
        for lam, val in level.items():
            shifted = [c[i] * t ** lam[i] for i in range(s)]
            factors = _one_variable_factors(shifted, zj, p, tr, pairing)
            for k in range(s):
                mu = lam[:k] + (lam[k] + 1,) + lam[k + 1:]
                if target is not None and not leq(mu, target):
                    continue
                nxt[mu] = nxt.get(mu, 0) + val * factors[k]
        level = nxt
    return level


def E_eval(c: Sequence[complex], mu: Sequence[int], z: Sequence, p, t,
           tr: Truncation = DEFAULT_TRUNCATION, pairing=None):
    """E_mu(c;z;p) by the recursion formula."""
    mu = tuple(mu)
    if len(mu) != len(c) or sum(mu) != len(z):
        raise ValueError("need len(mu) == len(c) and |mu| == len(z)")
    return E_all(c, z, p, t, tr, target=mu, pairing=pairing)[mu]


def E_explicit(c: Sequence[complex], mu: Sequence[int], z: Sequence, p, t,
               tr: Truncation = DEFAULT_TRUNCATION, max_terms: int = 10**6):
    """E_mu(c;z;p) as the explicit sum over sequences (k_1, ..., k_n)."""
    c = [complex(x) for x in c]
    s, n = len(c), len(z)
    mu = tuple(mu)
    if s**n > max_terms:
        raise ValueError(f"explicit sum has {s**n} terms, above the guard {max_terms}")
    total = 0.0 + 0j
    for seq in itertools.product(range(s), repeat=n):
        if tuple(seq.count(k) for k in range(s)) != mu:
            continue
        before = [0] * s
        term = 1.0 + 0j
        for i, k in enumerate(seq):
            after = list(before)
            after[k] += 1
            for l in range(s):
                if l == k:
                    continue
                num = e_pair(z[i], t ** after[l] * c[l], p, tr)
                den = e_pair(t ** before[k] * c[k], t ** before[l] * c[l], p, tr)
                term = term * num / den
            before = after
        total = total + term
    return total


def E_vertex(c: Sequence[complex], k: int, z: Sequence, p, t,
             tr: Truncation = DEFAULT_TRUNCATION):
    """Factorized E_{n eps_k}(c;z) = prod_{l != k} prod_i e(z_i,c_l) / e(c_k,c_l)_n."""
    n = len(z)
    value = 1.0 + 0j
    for l, cl in enumerate(c):
        if l == k:
            continue
        den = e_fact(c[k], cl, p, t, n, tr)
        _check_denominator(den, tr, f"e(c_{k}, c_{l})_n")
        for zi in z:
            value = value * e_pair(zi, cl, p, tr)
        value = value / den
    return value


def E_face(c: Sequence[complex], mu: Sequence[int], z: Sequence, p, t,
           tr: Truncation = DEFAULT_TRUNCATION):
    """Factorized E_(mu',0)(c;z) on the face where the last part vanishes."""
    mu = tuple(mu)
    if mu[-1] != 0:
        raise ValueError("the last part of mu must be zero")
    head, last = list(c[:-1]), c[-1]
    value = E_eval(head, mu[:-1], z, p, t, tr)
    for zi in z:
        value = value * e_pair(zi, last, p, tr)
    for cl, ml in zip(head, mu[:-1]):
        value = value / e_fact(cl, last, p, t, ml, tr)
    return value


def _symbols(s: int):
    t = Monomial.symbol("t")
    cs = [Monomial.symbol(f"c{i}") for i in range(s)]
    return t, cs


@lru_cache(maxsize=None)
def _special_value_theta_ledger(mu: tuple[int, ...]) -> ExponentLedger:
    s, n = len(mu), sum(mu)
    t, c = _symbols(s)
    u = Monomial.symbol("u")
    lg = ExponentLedger()
    prefactor = t ** (-comb(n, 2)) * u ** (-n)
    for i in range(s):
        prefactor = prefactor * t ** comb(mu[i], 2) * c[i] ** mu[i]
    lg.monomial(prefactor, s - 1)
    lg.theta(t ** (-n), n)
    for i in range(s):
        lg.theta(u / c[i], n - mu[i])
        lg.theta(t ** mu[i] * u * c[i], n - mu[i])
    for i in range(s):
        for j in range(s):
            lg.theta(t ** (-mu[j]) * c[i] / c[j], mu[i], power=-1)
    for i in range(s):
        for j in range(i + 1, s):
            lg.theta(c[i] * c[j], mu[i] + mu[j], power=-1)
    return lg


@lru_cache(maxsize=None)
def _special_value_bracket_ledger(mu: tuple[int, ...]) -> ExponentLedger:
    s, n = len(mu), sum(mu)
    t, c = _symbols(s)
    u = Monomial.symbol("u")
    lg = ExponentLedger()
    lg.bracket(t ** (-n), n)
    for i in range(s):
        lg.bracket(u / c[i], n - mu[i])
        lg.bracket(t ** mu[i] * u * c[i], n - mu[i])
    for i in range(s):
        for j in range(s):
            lg.bracket(t ** (-mu[j]) * c[i] / c[j], mu[i], power=-1)
    for i in range(s):
        for j in range(i + 1, s):
            lg.bracket(c[i] * c[j], mu[i] + mu[j], power=-1)
    return lg


def _values(c, t, **extra) -> dict:
    vals = {f"c{i}": complex(ci) for i, ci in enumerate(c)}
    vals["t"] = complex(t)
    vals.update({k: complex(v) for k, v in extra.items()})
    return vals


def special_value(c: Sequence[complex], mu: Sequence[int], u: complex, p, t,
                  tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """E_mu(c;(u)_{t,n}) in theta-factorial form with its monomial prefactor."""
    return ledger_eval(_special_value_theta_ledger(tuple(mu)), _values(c, t, u=u), p, tr)


def special_value_bracket(c: Sequence[complex], mu: Sequence[int], u: complex, p, t,
                          tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """E_mu(c;(u)_{t,n}) compiled from the odd-theta bracket form."""
    return ledger_eval(_special_value_bracket_ledger(tuple(mu)), _values(c, t, u=u), p, tr)


def F_mu(c: Sequence[complex], mu: Sequence[int], w: Sequence[complex], p, t,
         tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """Dual Cauchy partner F_mu(c;w) = prod_k prod_l e(c_k,w_l)_{mu_k}."""
    value = 1.0 + 0j
    for ck, mk in zip(c, mu):
        for wl in w:
            value = value * e_fact(ck, wl, p, t, mk, tr)
    return value


def dual_cauchy_residual(c, z, w, p, t, tr: Truncation = DEFAULT_TRUNCATION) -> float:
    """Residual of prod e(z_j,w_l) = sum_mu E_mu(c;z) F_mu(c;w).

    Normalized by the larger of |lhs| and sum |E_mu F_mu|, since the
    expansion terms can exceed the product by many orders of magnitude.
    """
    lhs = 1.0 + 0j
    for zj in z:
        for wl in w:
            lhs *= e_pair(zj, wl, p, tr)
    values = E_all(c, z, p, t, tr)
    terms = [values[mu] * F_mu(c, mu, w, p, t, tr) for mu in values]
    scale = max(abs(lhs), sum(abs(x) for x in terms), 1e-300)
    return abs(lhs - sum(terms)) / scale


def partition_identity_check(c, lam, z, split: int, p, t,
                             tr: Truncation = DEFAULT_TRUNCATION) -> float:
    """Residual of E_lam(c;z) = sum_{mu+nu=lam} E_mu(c;z') E_nu(t^mu c;z'') with z' = z[:split].

    Scaled like :func:`dual_cauchy_residual`.
    """
    lam = tuple(lam)
    s = len(c)
    whole = E_eval(c, lam, z, p, t, tr)
    z1, z2 = list(z[:split]), list(z[split:])
    total = 0.0 + 0j
    size = 0.0
    for mu in enumerate_compositions(s, split):
        nu = tuple(a - b for a, b in zip(lam, mu))
        if min(nu) < 0:
            continue
        shifted = [c[i] * t ** mu[i] for i in range(s)]
        term = E_eval(c, mu, z1, p, t, tr) * E_eval(shifted, nu, z2, p, t, tr)
        total += term
        size += abs(term)
    return abs(whole - total) / max(abs(whole), size, 1e-300)


def _trans_symbols(s: int):
    t, c = _symbols(s - 1)
    return t, c, Monomial.symbol("cs"), Monomial.symbol("ds")


@lru_cache(maxsize=None)
def _transC_theta_ledger(mu: tuple[int, ...], nu: tuple[int, ...]) -> ExponentLedger:
    s = len(mu)
    t, c, cs, ds = _trans_symbols(s)
    ms, ns = mu[-1], nu[-1]
    lg = ExponentLedger()
    pref = t ** (comb(ms, 2) - comb(ns, 2)) * cs ** ms * ds ** (-ns)
    for i in range(s - 1):
        pref = pref * t ** (comb(mu[i], 2) - comb(nu[i], 2)) * c[i] ** (mu[i] - nu[i])
    lg.monomial(pref, s - 1)
    lg.theta(t ** (-ns), ns).theta(t ** (-ms), ms, -1)
    lg.theta(ds / (t ** ms * cs), ns).theta(ds / (t ** ms * cs), ms, -1)
    lg.theta(cs * ds, ns).theta(cs * ds, ms, -1)
    for i in range(s - 1):
        lg.theta(ds / (t ** mu[i] * c[i]), ns).theta(cs / (t ** mu[i] * c[i]), ms, -1)
        lg.theta(c[i] / (t ** ms * cs), nu[i]).theta(c[i] / (t ** ms * cs), mu[i], -1)
        lg.theta(ds / (t ** nu[i] * c[i]), nu[i]).theta(ds / (t ** mu[i] * c[i]), mu[i], -1)
        lg.theta(c[i] * cs, nu[i]).theta(c[i] * ds, nu[i] + ns)
        lg.theta(c[i] * cs, mu[i] + ms, -1).theta(c[i] * ds, mu[i], -1)
    for i in range(s - 1):
        for j in range(s - 1):
            lg.theta(c[i] / (t ** mu[j] * c[j]), nu[i])
            lg.theta(c[i] / (t ** mu[j] * c[j]), mu[i], -1)
    for i in range(s - 1):
        for j in range(i + 1, s - 1):
            lg.theta(c[i] * c[j], nu[i] + nu[j]).theta(c[i] * c[j], mu[i] + mu[j], -1)
    return lg


@lru_cache(maxsize=None)
def _transC_bracket_ledger(mu: tuple[int, ...], nu: tuple[int, ...]) -> ExponentLedger:
    s = len(mu)
    t, c, cs, ds = _trans_symbols(s)
    ms, ns = mu[-1], nu[-1]
    lg = ExponentLedger()
    lg.bracket(t ** (-ns), ns).bracket(t ** (-ms), ms, -1)
    lg.bracket(ds / (t ** ms * cs), ns).bracket(ds / (t ** ms * cs), ms, -1)
    lg.bracket(cs * ds, ns).bracket(cs * ds, ms, -1)
    for i in range(s - 1):
        lg.bracket(ds / (t ** mu[i] * c[i]), ns).bracket(cs / (t ** mu[i] * c[i]), ms, -1)
        lg.bracket(c[i] / (t ** ms * cs), nu[i]).bracket(c[i] / (t ** ms * cs), mu[i], -1)
        lg.bracket(ds / (t ** nu[i] * c[i]), nu[i]).bracket(ds / (t ** mu[i] * c[i]), mu[i], -1)
        lg.bracket(c[i] * cs, nu[i]).bracket(c[i] * ds, nu[i] + ns)
        lg.bracket(c[i] * cs, mu[i] + ms, -1).bracket(c[i] * ds, mu[i], -1)
    for i in range(s - 1):
        for j in range(s - 1):
            lg.bracket(c[i] / (t ** mu[j] * c[j]), nu[i])
            lg.bracket(c[i] / (t ** mu[j] * c[j]), mu[i], -1)
    for i in range(s - 1):
        for j in range(i + 1, s - 1):
            lg.bracket(c[i] * c[j], nu[i] + nu[j]).bracket(c[i] * c[j], mu[i] + mu[j], -1)
    return lg


def _check_trans_args(c_prime, mu, nu):
    mu, nu = tuple(mu), tuple(nu)
    if len(mu) != len(c_prime) + 1 or len(nu) != len(mu) or sum(mu) != sum(nu):
        raise ValueError("mu, nu must be compositions of the same n with s = len(c') + 1 parts")
    return mu, nu


def transC_entry(c_prime: Sequence[complex], c_s: complex, d_s: complex, mu, nu, p, t,
                 tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """Transition coefficient C_{mu,nu}(c';c_s,d_s) from the theta-factorial form.

    Zero unless mu' >= nu' componentwise on the first s-1 parts.
    """
    mu, nu = _check_trans_args(c_prime, mu, nu)
    if not leq(nu[:-1], mu[:-1]):
        return 0j
    vals = _values(c_prime, t, cs=c_s, ds=d_s)
    return ledger_eval(_transC_theta_ledger(mu, nu), vals, p, tr)


def transC_entry_bracket(c_prime, c_s, d_s, mu, nu, p, t,
                         tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """C_{mu,nu} compiled from the bracket form (transcription cross-check)."""
    mu, nu = _check_trans_args(c_prime, mu, nu)
    if not leq(nu[:-1], mu[:-1]):
        return 0j
    vals = _values(c_prime, t, cs=c_s, ds=d_s)
    return ledger_eval(_transC_bracket_ledger(mu, nu), vals, p, tr)


def transC_entry_special(c_prime, c_s, d_s, mu, nu, p, t,
                         tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """C_{mu,nu} as the special value E_(mu'-nu', mu_s)(t^{nu'} c', c_s; (d_s)_{t,nu_s})."""
    mu, nu = _check_trans_args(c_prime, mu, nu)
    if not leq(nu[:-1], mu[:-1]):
        return 0j
    params = [c_prime[i] * t ** nu[i] for i in range(len(c_prime))] + [c_s]
    lam = tuple(mu[i] - nu[i] for i in range(len(c_prime))) + (mu[-1],)
    if nu[-1] == 0:
        return 1.0 + 0j if sum(lam) == 0 else 0j
    return special_value(params, lam, d_s, p, t, tr)


def transC_matrix(a: Sequence[complex], I: Sequence[int], k: int, l: int, n: int, p, t,
                  tr: Truncation = DEFAULT_TRUNCATION) -> np.ndarray:
    """The matrix C^{I;k,l} expressing E_mu(a_{I+k}) in the basis E_nu(a_{I+l}).

    Rows and columns are compositions over (I..., extra) in canonical order,
    i.e. ordered by their I-part.  Entries outside mu_I >= nu_I are exact zeros.
    """
    I = list(I)
    if k in I or l in I:
        raise ValueError("k and l must lie outside I")
    basis = enumerate_compositions(len(I) + 1, n)
    c_prime = [a[i] for i in I]
    out = np.zeros((len(basis), len(basis)), dtype=complex)
    for row, mu in enumerate(basis):
        for col, nu in enumerate(basis):
            out[row, col] = transC_entry(c_prime, a[k], a[l], mu, nu, p, t, tr)
    return out


def transC_det_closed(a: Sequence[complex], I: Sequence[int], k: int, l: int, n: int, p, t,
                      tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """Closed form of det C^{I;k,l} as a product of e-pair ratios."""
    s = len(I) + 1
    value = 1.0 + 0j
    for u in range(n):
        for v in range(n - u):
            power = comb(n - u - v + s - 3, s - 2) if n - u - v + s - 3 >= 0 else 0
            if power == 0:
                continue
            for i in I:
                ratio = e_pair(t**u * a[l], t**v * a[i], p, tr) / e_pair(t**u * a[k], t**v * a[i], p, tr)
                value *= ratio**power
    return value


def transition_to_reference_det_closed(x: Sequence[complex], c: Sequence[complex], n: int, p, t,
                                       tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """Closed form of det(E_mu(x;(c)_{t,nu};p))_{mu,nu}."""
    r = len(x)
    value = 1.0 + 0j
    for i in range(n):
        for j in range(n - i):
            power = comb(n - i - j + r - 3, r - 2) if n - i - j + r - 3 >= 0 and r >= 2 else 0
            if power == 0:
                continue
            for k in range(r):
                for l in range(k + 1, r):
                    num = e_pair(t**i * c[k], t**j * c[l], p, tr)
                    den = e_pair(t**i * x[k], t**j * x[l], p, tr)
                    value *= (num / den) ** power
    return value
