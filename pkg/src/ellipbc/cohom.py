"""Weight function, symmetrized coboundaries and the coefficient matrices of the
q-difference systems.

Indices of parameters and composition parts are 0-based.  A parameter vector
``a`` has ``m = 2r + 4`` entries; its last entry is the dependent one fixed by
the balancing condition.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from math import comb, prod
from typing import Callable, Sequence

import numpy as np

from .combi import enumerate_compositions, leq, reference_point
from .errors import DegenerateParametersError, RegionError
from .interp import E_eval, F_mu, transC_matrix
from .qseries import (
    DEFAULT_TRUNCATION,
    Bases,
    ExponentLedger,
    Monomial,
    Truncation,
    e_fact,
    e_pair,
    ell_gamma,
    ledger_eval,
    theta,
    theta_fact,
)

__all__ = [
    "BALANCING_MODES",
    "ParamSet",
    "phi_weight",
    "f_plus",
    "f_minus",
    "nabla_sym",
    "C_lambda_k",
    "C_lambda_k_long",
    "R_entry",
    "R_entry_alt",
    "S_entry",
    "S_entry_direct",
    "K_normalizer",
    "B_entry",
    "B_entry_via_S",
    "B_diagonal",
    "B_matrix",
    "B_det_closed",
    "A_tilde",
    "A_matrix",
    "A_det_closed",
    "A_rescaled",
    "A_rescaled_det_closed",
    "G_matrix",
    "M_matrix",
    "labelled_to_canonical",
]

BALANCING_MODES = ("pq", "one", "q_only", "none")


def _balance_target(mode: str, bases: Bases) -> complex | None:
    return {"pq": bases.p * bases.q, "one": 1.0 + 0j, "q_only": bases.q, "none": None}[mode]


@dataclass(frozen=True)
class ParamSet:
    """Parameters a_1..a_m of the weight together with (r, n) and a balancing mode."""

    a: tuple
    r: int
    n: int
    balancing: str = "pq"
    dependent_last: bool = True

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(complex(x) for x in self.a))
        if self.balancing not in BALANCING_MODES:
            raise ValueError(f"balancing must be one of {BALANCING_MODES}")
        if len(self.a) != 2 * self.r + 4 and self.balancing != "none":
            raise ValueError(f"expected m = 2r+4 = {2 * self.r + 4} parameters, got {len(self.a)}")
        if any(x == 0 for x in self.a):
            raise ValueError("parameters must be nonzero")

    @property
    def m(self) -> int:
        return len(self.a)

    @classmethod
    def balanced(cls, free: Sequence[complex], r: int, n: int, bases: Bases,
                 mode: str = "pq") -> "ParamSet":
        """Complete ``free`` (m-1 entries) with the dependent last parameter."""
        target = _balance_target(mode, bases)
        if target is None:
            raise ValueError("mode 'none' has no dependent parameter")
        last = target / (bases.t ** (2 * n - 2) * prod(complex(x) for x in free))
        return cls(tuple(free) + (last,), r, n, mode)

    def balance_residual(self, bases: Bases) -> float:
        target = _balance_target(self.balancing, bases)
        if target is None:
            return 0.0
        value = bases.t ** (2 * self.n - 2) * prod(self.a)
        return abs(value - target) / abs(target)

    def with_values(self, a: Sequence[complex], balancing: str | None = None) -> "ParamSet":
        return replace(self, a=tuple(a), balancing=balancing or self.balancing)

    def scaled(self, factors: dict) -> "ParamSet":
        """Multiply selected entries by the given factors (a pure substitution)."""
        a = list(self.a)
        for k, f in factors.items():
            a[k] = a[k] * f
        return self.with_values(a)

    def substituted(self, k: int, factor: complex, bases: Bases) -> "ParamSet":
        """a_k -> factor * a_k, recomputing a_m from the balancing when it is dependent."""
        out = self.scaled({k: factor})
        if self.dependent_last and self.balancing != "none" and k != self.m - 1:
            out = ParamSet.balanced(out.a[:-1], self.r, self.n, bases, self.balancing)
        return out

    def shift_q_pair(self, k: int, q: complex) -> "ParamSet":
        """T_{q,a_k} T_{q,a_m}^{-1}: a_k -> q a_k, a_m -> a_m / q (balancing preserved)."""
        if k == self.m - 1:
            raise ValueError("k must differ from the dependent index")
        return self.scaled({k: q, self.m - 1: 1 / q})

    def to_one_balanced(self, bases: Bases) -> "ParamSet":
        """T_{pq,a_m}^{-1}: turn a pq-balanced set into the 1-balanced one."""
        if self.balancing != "pq":
            raise ValueError("expected a pq-balanced parameter set")
        out = self.scaled({self.m - 1: 1 / (bases.p * bases.q)})
        return replace(out, balancing="one")

    def require_inside_disk(self, what: str = "quadrature") -> None:
        bad = [k for k, x in enumerate(self.a) if not abs(x) < 1]
        if bad:
            raise RegionError(f"{what} needs |a_k| < 1; violated at indices {bad}")

    def values(self, bases: Bases | None = None) -> dict:
        vals = {f"a{k}": x for k, x in enumerate(self.a)}
        if bases is not None:
            vals["t"] = bases.t
        return vals

    def principal_roots(self, bases: Bases) -> dict:
        return {name: np.sqrt(complex(v)) for name, v in self.values(bases).items()}


def _as_array(z):
    return z if np.ndim(z) == 0 else np.asarray(z, dtype=complex)


def phi_weight(z: Sequence, a: ParamSet | Sequence[complex], bases: Bases,
               tr: Truncation = DEFAULT_TRUNCATION):
    """The weight Phi(z;a;p,q).

    The gamma factors in the denominator are paired through the reflection
    1/(Gamma(x)Gamma(1/x)) = theta(x;p) theta(1/x;q), which keeps the weight
    finite (and correctly zero) on the fixed points of W_n.
    """
    avals = a.a if isinstance(a, ParamSet) else tuple(complex(x) for x in a)
    p, q, t = bases.p, bases.q, bases.t
    zs = [_as_array(zi) for zi in z]
    out = 1.0 + 0j
    for zi in zs:
        for ak in avals:
            out = out * ell_gamma(ak * zi, p, q, tr) * ell_gamma(ak / zi, p, q, tr)
        out = out * theta(zi**2, p, tr) * theta(zi**-2, q, tr)
    for i in range(len(zs)):
        for j in range(i + 1, len(zs)):
            zi, zj = zs[i], zs[j]
            for x in (zi * zj, zi / zj, zj / zi, 1 / (zi * zj)):
                out = out * ell_gamma(t * x, p, q, tr)
            out = out * theta(zi * zj, p, tr) * theta(1 / (zi * zj), q, tr)
            out = out * theta(zi / zj, p, tr) * theta(zj / zi, q, tr)
    return out


def f_plus(i: int, z: Sequence, a: ParamSet, bases: Bases, tr: Truncation = DEFAULT_TRUNCATION):
    """Kernel f_i^+(z) of the symmetrized coboundary (s = r + 1)."""
    _check_one_balanced(a)
    s = a.r + 1
    p, t = bases.p, bases.t
    zs = [_as_array(x) for x in z]
    zi = zs[i]
    out = 1.0 + 0j
    for ak in a.a:
        out = out * theta(ak * zi, p, tr)
    out = out / (zi**s * theta(zi**2, p, tr))
    for j, zj in enumerate(zs):
        if j == i:
            continue
        for x in (zi * zj, zi / zj):
            out = out * theta(t * x, p, tr) / theta(x, p, tr)
    return out


def f_minus(i: int, z: Sequence, a: ParamSet, bases: Bases, tr: Truncation = DEFAULT_TRUNCATION):
    """Kernel f_i^-(z) = f_i^+(z^{-1})."""
    return f_plus(i, [1 / _as_array(x) for x in z], a, bases, tr)


def nabla_sym(phi_fn: Callable, z: Sequence, a: ParamSet, bases: Bases,
              tr: Truncation = DEFAULT_TRUNCATION):
    """sum_i (f_i^+ + f_i^-)(z) * phi(z with z_i removed)."""
    zs = list(z)
    total = 0j
    for i in range(len(zs)):
        rest = zs[:i] + zs[i + 1:]
        total = total + (f_plus(i, zs, a, bases, tr) + f_minus(i, zs, a, bases, tr)) * phi_fn(rest)
    return total


def C_lambda_k(a: ParamSet, lam: Sequence[int], k: int, bases: Bases,
               tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """Coefficient of E_{lam+eps_k}(a_{1..s}) in the coboundary of E_lam."""
    _check_one_balanced(a)
    s = a.r + 1
    p, t = bases.p, bases.t
    av = a.a
    base = t ** lam[k] * av[k]
    value = base ** (-s)
    for l in range(s):
        value *= theta(t ** (lam[k] + 1) * av[k] / av[l], p, tr)
        value /= theta(t ** (lam[k] - lam[l] + 1) * av[k] / av[l], p, tr)
        if l != k:
            value *= theta(t ** (lam[k] + lam[l]) * av[k] * av[l], p, tr)
    for l in range(s, a.m):
        value *= theta(base * av[l], p, tr)
    return value


def C_lambda_k_long(a: ParamSet, lam: Sequence[int], k: int, bases: Bases,
                    tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """The unsimplified form of the same coefficient (over all m parameters)."""
    s = a.r + 1
    p, t = bases.p, bases.t
    av = a.a
    base = t ** lam[k] * av[k]
    value = 1.0 + 0j
    for l in range(a.m):
        value *= theta(base * av[l], p, tr)
    value /= base**s * theta(t ** (2 * lam[k]) * av[k] ** 2, p, tr)
    for l in range(s):
        value *= theta(t ** (lam[k] + lam[l]) * av[k] * av[l], p, tr)
        value *= theta(t ** (lam[k] + 1) * av[k] / av[l], p, tr)
        value /= theta(t ** (lam[k]) * av[k] * av[l], p, tr)
        value /= theta(t ** (lam[k] - lam[l] + 1) * av[k] / av[l], p, tr)
    return value


# --- bracket ledgers for R, S, K and B --------------------------------------------

def _sym(m: int):
    return Monomial.symbol("t"), [Monomial.symbol(f"a{k}") for k in range(m)]


@lru_cache(maxsize=None)
def _R_ledger(mu: tuple, nu: tuple, m: int) -> ExponentLedger:
    s = len(mu)
    t, a = _sym(m)
    last = s - 1
    lg = ExponentLedger()
    for j in range(s - 1):
        lg.bracket(t ** (mu[last] - mu[j]) * a[last] / a[j])
        lg.bracket(t ** (nu[last] - nu[j]) * a[last] / a[j], power=-1)
    for j in range(s):
        lg.bracket(t ** (nu[last] - mu[j]) * a[last] / a[j], mu[last] - nu[last])
        for i in range(s - 1):
            lg.bracket(t ** (mu[i] - mu[j] + 1) * a[i] / a[j], nu[i] - mu[i], power=-1)
    return lg


@lru_cache(maxsize=None)
def _R_alt_ledger(mu: tuple, nu: tuple, m: int) -> ExponentLedger:
    s = len(mu)
    t, a = _sym(m)
    last = s - 1
    lg = ExponentLedger()
    lg.bracket(t, mu[last] - nu[last])
    for i in range(s - 1):
        for j in range(s - 1):
            lg.bracket(t ** (mu[i] - mu[j] + 1) * a[i] / a[j], nu[i] - mu[i], power=-1)
    for i in range(s - 1):
        lg.bracket(t ** (mu[last] - mu[i]) * a[last] / a[i])
        lg.bracket(t ** (nu[last] - nu[i]) * a[last] / a[i], power=-1)
        lg.bracket(t ** (nu[last] - mu[i]) * a[last] / a[i], mu[last] - nu[last])
        lg.bracket(t ** (mu[last] - nu[i]) * a[last] / a[i], nu[i] - mu[i], power=-1)
    return lg


@lru_cache(maxsize=None)
def _K_ledger(mu: tuple, m: int) -> ExponentLedger:
    s = len(mu)
    t, a = _sym(m)
    lg = ExponentLedger()
    for i in range(s):
        for j in range(s):
            lg.bracket(t * a[i] / a[j], mu[i])
        for j in range(s, m):
            lg.bracket(a[i] * a[j], mu[i])
        for j in range(i + 1, s):
            lg.bracket(a[i] * a[j], mu[i] + mu[j])
    return lg


@lru_cache(maxsize=None)
def _S_ledger_composed(mu: tuple, nu: tuple, m: int) -> ExponentLedger:
    lg = ExponentLedger()
    lg.merge(_K_ledger(mu, m), -1).merge(_R_ledger(mu, nu, m)).merge(_K_ledger(nu, m))
    return lg


@lru_cache(maxsize=None)
def _S_ledger_direct(mu: tuple, nu: tuple, m: int) -> ExponentLedger:
    s = len(mu)
    t, a = _sym(m)
    lg = _R_alt_ledger(mu, nu, m).copy()
    for i in range(s):
        for j in range(s):
            lg.bracket(t * a[i] / a[j], nu[i]).bracket(t * a[i] / a[j], mu[i], -1)
        for j in range(s, m):
            lg.bracket(a[i] * a[j], nu[i]).bracket(a[i] * a[j], mu[i], -1)
        for j in range(i + 1, s):
            lg.bracket(a[i] * a[j], nu[i] + nu[j]).bracket(a[i] * a[j], mu[i] + mu[j], -1)
    return lg


def _reduction_support(mu: Sequence[int], nu: Sequence[int]) -> bool:
    return nu[-1] <= mu[-1] and leq(mu[:-1], nu[:-1])


def _check_one_balanced(a: ParamSet):
    if a.balancing != "one":
        raise ValueError("this coefficient is defined under the balancing t^{2n-2} a_1...a_m = 1")


def R_entry(a: ParamSet, mu: Sequence[int], nu: Sequence[int], bases: Bases,
            tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """Reduction coefficient R_{mu,nu} lowering the last part (s = len(mu)).

    R relates the renormalized functions K_mu E_mu and, like K_mu, carries
    half-integer powers of the parameters.  Those are evaluated with the
    principal square root of each a_k and of t; the branch-free combination
    is S_entry.
    """
    _check_one_balanced(a)
    mu, nu = tuple(mu), tuple(nu)
    if sum(mu) != sum(nu) or not _reduction_support(mu, nu):
        return 0j
    return ledger_eval(_R_ledger(mu, nu, a.m), a.values(bases), bases.p, tr,
                       roots=a.principal_roots(bases))


def R_entry_alt(a: ParamSet, mu, nu, bases: Bases, tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """R_{mu,nu} in the rearranged form with the [t]-factorial."""
    _check_one_balanced(a)
    mu, nu = tuple(mu), tuple(nu)
    if sum(mu) != sum(nu) or not _reduction_support(mu, nu):
        return 0j
    return ledger_eval(_R_alt_ledger(mu, nu, a.m), a.values(bases), bases.p, tr,
                       roots=a.principal_roots(bases))


def S_entry(a: ParamSet, mu, nu, bases: Bases, tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """S_{mu,nu} = K_mu^{-1} R_{mu,nu} K_nu."""
    _check_one_balanced(a)
    mu, nu = tuple(mu), tuple(nu)
    if sum(mu) != sum(nu) or not _reduction_support(mu, nu):
        return 0j
    return ledger_eval(_S_ledger_composed(mu, nu, a.m), a.values(bases), bases.p, tr)


def S_entry_direct(a: ParamSet, mu, nu, bases: Bases, tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """S_{mu,nu} from its expanded bracket form."""
    _check_one_balanced(a)
    mu, nu = tuple(mu), tuple(nu)
    if sum(mu) != sum(nu) or not _reduction_support(mu, nu):
        return 0j
    return ledger_eval(_S_ledger_direct(mu, nu, a.m), a.values(bases), bases.p, tr)


def K_normalizer(a: ParamSet, mu: Sequence[int], bases: Bases,
                 tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """Normalizer K_mu with E~_mu = K_mu E_mu, under the principal-root convention."""
    return ledger_eval(_K_ledger(tuple(mu), a.m), a.values(bases), bases.p, tr,
                       roots=a.principal_roots(bases))


@lru_cache(maxsize=None)
def _B_ledger(mu: tuple, nu: tuple, I: tuple, k: int, l: int, m: int) -> ExponentLedger:
    t, a = _sym(m)
    # mu is over (I..., k), nu over (I..., l)
    mk, nl = mu[-1], nu[-1]
    mI = dict(zip(I, mu[:-1]))
    nI = dict(zip(I, nu[:-1]))
    others = [j for j in range(m) if j not in I and j not in (k, l)]
    lg = ExponentLedger()
    lg.negate(mk - nl)
    lg.bracket(a[k] / a[l], mk - nl)
    for i in I:
        lg.bracket(t ** mI[i] * a[i] / (t ** mk * a[k]))
        lg.bracket(t ** nI[i] * a[i] / (t ** mk * a[k]), power=-1)
        lg.bracket(a[i] / (t ** nl * a[l]), mI[i])
        lg.bracket(a[i] / (t ** mk * a[k]), nI[i], -1)
        lg.bracket(a[i] * a[l], nI[i] + nl)
        lg.bracket(a[i] * a[k], mI[i] + mk, -1)
    for j in others:
        lg.bracket(a[l] * a[j], nl).bracket(a[k] * a[j], mk, -1)
    for i in I:
        for j in I:
            lg.bracket(t ** (mI[i] + 1) * a[i] / a[j], nI[i] - mI[i])
            lg.bracket(t ** (mI[i] - mI[j] + 1) * a[i] / a[j], nI[i] - mI[i], -1)
    for x, i in enumerate(I):
        for j in I[x + 1:]:
            lg.bracket(a[i] * a[j], nI[i] + nI[j]).bracket(a[i] * a[j], mI[i] + mI[j], -1)
    for i in I:
        for j in others:
            lg.bracket(a[i] * a[j], nI[i]).bracket(a[i] * a[j], mI[i], -1)
    return lg


def _check_B_args(a: ParamSet, I, k, l):
    I = tuple(I)
    if len(I) != a.r - 1:
        raise ValueError(f"|I| must be r-1 = {a.r - 1}")
    if k in I or l in I:
        raise ValueError("k, l must lie outside I")
    return I


def B_entry(a: ParamSet, mu, nu, I, k: int, l: int, bases: Bases,
            tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """Face-change coefficient B^{I;k,l}_{mu,nu}; mu over (I..., k), nu over (I..., l)."""
    _check_one_balanced(a)
    I = _check_B_args(a, I, k, l)
    mu, nu = tuple(mu), tuple(nu)
    if k == l:
        return 1.0 + 0j if mu == nu else 0j
    if not leq(mu[:-1], nu[:-1]):
        return 0j
    return ledger_eval(_B_ledger(mu, nu, I, k, l, a.m), a.values(bases), bases.p, tr)


def B_entry_via_S(a: ParamSet, mu, nu, I, k: int, l: int, bases: Bases,
                  tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """B^{I;k,l}_{mu,nu} rebuilt from S with the parameters ordered (I, l, k, rest)."""
    _check_one_balanced(a)
    I = _check_B_args(a, I, k, l)
    mu, nu = tuple(mu), tuple(nu)
    if k == l:
        return 1.0 + 0j if mu == nu else 0j
    if not leq(mu[:-1], nu[:-1]):
        return 0j
    p, t = bases.p, bases.t
    rest = [j for j in range(a.m) if j not in I and j not in (k, l)]
    order = list(I) + [l, k] + rest
    reordered = a.with_values([a.a[j] for j in order])
    lam = tuple(mu[:-1]) + (0, mu[-1])
    target = tuple(nu[:-1]) + (nu[-1], 0)
    value = S_entry(reordered, lam, target, bases, tr)
    for j, part in zip(list(I) + [k], mu):
        value *= e_fact(a.a[j], a.a[l], p, t, part, tr)
    for j, part in zip(list(I) + [l], nu):
        value /= e_fact(a.a[j], a.a[k], p, t, part, tr)
    return value


def B_diagonal(a: ParamSet, mu, I, k: int, l: int, bases: Bases,
               tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """Diagonal entry of B^{I;k,l} in theta form; mu over (I..., k)."""
    I = _check_B_args(a, I, k, l)
    p, t = bases.p, bases.t
    av = a.a
    mk = mu[-1]
    value = (av[k] / av[l]) ** ((a.r + 1) * mk)
    for i, mi in zip(I, mu[:-1]):
        value *= e_fact(av[i], t**mk * av[l], p, t, mi, tr) / e_fact(av[i], t**mk * av[k], p, t, mi, tr)
    for j in range(a.m):
        if j in (k, l):
            continue
        value *= theta_fact(av[l] * av[j], p, t, mk, tr) / theta_fact(av[k] * av[j], p, t, mk, tr)
    return value


def B_matrix(a: ParamSet, I, k: int, l: int, n: int, bases: Bases,
             tr: Truncation = DEFAULT_TRUNCATION) -> np.ndarray:
    """B^{I;k,l} with rows over (I..., k) and columns over (I..., l), ordered by I-part."""
    basis = enumerate_compositions(len(tuple(I)) + 1, n)
    out = np.zeros((len(basis), len(basis)), dtype=complex)
    for row, mu in enumerate(basis):
        for col, nu in enumerate(basis):
            out[row, col] = B_entry(a, mu, nu, I, k, l, bases, tr)
    return out


def B_det_closed(a: ParamSet, I, k: int, l: int, n: int, bases: Bases,
                 tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """Closed-form determinant of B^{I;k,l}."""
    I = _check_B_args(a, I, k, l)
    r = a.r
    p, t = bases.p, bases.t
    av = a.a
    value = (av[k] / av[l]) ** ((r + 1) * comb(n + r - 1, r))
    for u in range(n):
        for v in range(n - u):
            if r < 2:
                continue
            power = comb(n - u - v + r - 3, r - 2) if n - u - v + r - 3 >= 0 else 0
            for i in I:
                ratio = e_pair(t**u * av[l], t**v * av[i], p, tr) / e_pair(t**u * av[k], t**v * av[i], p, tr)
                value *= ratio**power
    for u in range(n):
        power = comb(n - u + r - 2, r - 1)
        for j in range(a.m):
            if j in (k, l):
                continue
            ratio = theta(t**u * av[l] * av[j], p, tr) / theta(t**u * av[k] * av[j], p, tr)
            value *= ratio**power
    return value


# --- coefficient matrices of the q-difference system ---------------------------------

def labelled_to_canonical(I: Sequence[int], extra: int, r: int, n: int) -> list[int]:
    """Permutation taking (I..., extra)-ordered compositions to the canonical Z_{r,n} order.

    Entry x of the result is the canonical index of the x-th composition over
    (I..., extra).
    """
    from .combi import IndexedBasisOrder

    canon = IndexedBasisOrder(r, n)
    labels = list(I) + [extra]
    perm = []
    for mu in enumerate_compositions(len(labels), n):
        full = [0] * r
        for lab, part in zip(labels, mu):
            full[lab] = part
        perm.append(canon.index(full))
    return perm


def _to_canonical(matrix: np.ndarray, perm: list[int]) -> np.ndarray:
    out = np.empty_like(matrix)
    idx = np.array(perm)
    out[np.ix_(idx, idx)] = matrix
    return out


def A_tilde(a1: ParamSet, k: int, bases: Bases, tr: Truncation = DEFAULT_TRUNCATION,
            pivot: int = 0) -> np.ndarray:
    """The matrix A~^{k,m}(a) for a 1-balanced parameter set, in canonical order.

    ``pivot`` is the auxiliary index l in {0..r-1} used when k >= r.
    """
    _check_one_balanced(a1)
    r, n, m = a1.r, a1.n, a1.m
    p, q, t = bases.p, bases.q, bases.t
    last = m - 1
    if not 0 <= k < last:
        raise ValueError("k must lie in 0..m-2")
    av = a1.a
    if k < r:
        I = [i for i in range(r) if i != k]
        shifted = list(av)
        shifted[k] = q * av[k]
        C = transC_matrix(shifted, I, k, last, n, p, t, tr)
        B = B_matrix(a1, I, last, k, n, bases, tr)
        core = _to_canonical(C @ B, labelled_to_canonical(I, k, r, n))
    else:
        l = pivot
        I = [i for i in range(r) if i != l]
        C1 = transC_matrix(av, I, l, last, n, p, t, tr)
        B = B_matrix(a1, I, last, k, n, bases, tr)
        C2 = transC_matrix(av, I, k, l, n, p, t, tr)
        core = _to_canonical(C1 @ B @ C2, labelled_to_canonical(I, l, r, n))
    return (av[k] * av[last]) ** n * core


def _check_hypothesis(a: ParamSet, bases: Bases):
    if not abs(bases.p) < abs(bases.t) ** (2 * a.n - 2):
        raise RegionError("the difference system needs |p| < |t|^{2n-2}")


def A_matrix(a: ParamSet, k: int, bases: Bases, tr: Truncation = DEFAULT_TRUNCATION,
             pivot: int = 0) -> np.ndarray:
    """Coefficient matrix of T_{q,a_k}T_{q,a_m}^{-1} on the integrals of E_mu(a_1..a_r;z;p) g Phi."""
    if a.balancing != "pq":
        raise ValueError("A_matrix expects a pq-balanced parameter set")
    _check_hypothesis(a, bases)
    return A_tilde(a.to_one_balanced(bases), k, bases, tr, pivot)


def A_det_closed(a: ParamSet, k: int, bases: Bases, tr: Truncation = DEFAULT_TRUNCATION,
                 literal: bool = False) -> complex:
    """Closed-form determinant of A_matrix (pq-balanced parameters).

    The theta product runs over l not in {k, m}.  ``literal=True`` also keeps
    the l = m factor theta(t^i a_k a_m)/theta(t^i a_m^2/q); that variant does
    not match the assembled matrices or the r = 1 Selberg ratio.
    """
    r, n, m = a.r, a.n, a.m
    p, q, t = bases.p, bases.q, bases.t
    av = a.a
    value = 1.0 + 0j
    if k < r and r >= 2:
        for i in range(n):
            for j in range(n - i):
                power = comb(n - i - j + r - 3, r - 2) if n - i - j + r - 3 >= 0 else 0
                for l in range(r):
                    if l == k:
                        continue
                    num = e_pair(t**i * av[k], t**j * av[l], p, tr)
                    den = e_pair(t**i * q * av[k], t**j * av[l], p, tr)
                    value *= (num / den) ** power
    for i in range(n):
        power = comb(n - i + r - 2, r - 1)
        for l in range(m):
            if l == k or (l == m - 1 and not literal):
                continue
            ratio = theta(t**i * av[k] * av[l], p, tr) / theta(t**i * av[m - 1] * av[l] / q, p, tr)
            value *= ratio**power
    return value


def _F_shifted_ratio(a: ParamSet, k: int, u: Sequence[complex], bases: Bases, tr: Truncation):
    from .combi import IndexedBasisOrder

    r = a.r
    p, q, t = bases.p, bases.q, bases.t
    base = list(a.a[:r])
    shifted = list(base)
    if k < r:
        shifted[k] = q * shifted[k]
    basis = IndexedBasisOrder(r, a.n).elements
    num = np.array([F_mu(shifted, mu, u, p, t, tr) for mu in basis])
    den = np.array([F_mu(base, mu, u, p, t, tr) for mu in basis])
    return num, den


def A_rescaled(a: ParamSet, k: int, u: Sequence[complex], bases: Bases,
               tr: Truncation = DEFAULT_TRUNCATION, pivot: int = 0) -> np.ndarray:
    """A^{k,m}(a;u;p,q) acting on I_mu = F_mu(a;u;p) * integral of E_mu g Phi."""
    if len(u) != a.r - 1:
        raise ValueError(f"u must have r-1 = {a.r - 1} entries")
    num, den = _F_shifted_ratio(a, k, u, bases, tr)
    return num[:, None] * A_matrix(a, k, bases, tr, pivot) / den[None, :]


def A_rescaled_det_closed(a: ParamSet, k: int, u: Sequence[complex], bases: Bases,
                          tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """Closed-form determinant of A_rescaled."""
    r, n = a.r, a.n
    p, q, t = bases.p, bases.q, bases.t
    value = A_det_closed(a, k, bases, tr)
    if k < r and r >= 2:
        for i in range(1, n + 1):
            power = comb(n - i + r - 2, r - 2)
            for ul in u:
                ratio = e_fact(q * a.a[k], ul, p, t, i, tr) / e_fact(a.a[k], ul, p, t, i, tr)
                value *= ratio**power
    return value


def G_matrix(a: ParamSet, x: Sequence[complex], u: Sequence[complex], nome, bases: Bases,
             tr: Truncation = DEFAULT_TRUNCATION) -> np.ndarray:
    """G_{mu,nu} = E_mu(x;(a_1..a_r)_{t,nu};nome) / F_nu(a_1..a_r;u;nome)."""
    from .combi import IndexedBasisOrder

    r, n, t = a.r, a.n, bases.t
    base = list(a.a[:r])
    basis = IndexedBasisOrder(r, n).elements
    out = np.zeros((len(basis), len(basis)), dtype=complex)
    for col, nu in enumerate(basis):
        point = reference_point(base, t, nu)
        fnu = F_mu(base, nu, u, nome, t, tr)
        if abs(fnu) < tr.pole_eps:
            raise DegenerateParametersError("F_nu vanishes; choose other u")
        for row, mu in enumerate(basis):
            out[row, col] = E_eval(x, mu, point, nome, t, tr) / fnu
    return out


def M_matrix(a: ParamSet, k: int, x: Sequence[complex], u: Sequence[complex], bases: Bases,
             tr: Truncation = DEFAULT_TRUNCATION) -> np.ndarray:
    """M^{k,m}(a;x;p,q) = (T G) A^{k,m} G^{-1}; independent of u."""
    G = G_matrix(a, x, u, bases.p, bases, tr)
    Gs = G_matrix(a.shift_q_pair(k, bases.q), x, u, bases.p, bases, tr)
    A = A_rescaled(a, k, u, bases, tr)
    if abs(np.linalg.det(G)) < tr.pole_eps * max(1.0, np.max(np.abs(G))) ** len(G):
        raise DegenerateParametersError("G is numerically singular")
    return Gs @ A @ np.linalg.inv(G)
