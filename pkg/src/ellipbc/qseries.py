"""Pochhammer products, theta functions, the elliptic gamma function and bracket ledgers.

Every function accepts Python scalars or NumPy arrays.  Scalars are evaluated with
plain complex arithmetic and returned as ``complex``; arrays are evaluated
elementwise and returned as ``complex128`` arrays of the broadcast shape.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from .errors import BranchError, PoleError, TruncationError, ZeroArgumentError

__all__ = [
    "Bases",
    "Truncation",
    "DEFAULT_TRUNCATION",
    "poch_p",
    "poch_pq",
    "theta",
    "ell_gamma",
    "e_pair",
    "theta_fact",
    "e_fact",
    "Monomial",
    "ExponentLedger",
    "ledger_eval",
]


@dataclass(frozen=True)
class Bases:
    """The nomes ``p``, ``q`` and the shift parameter ``t``, all inside the unit disk."""

    p: complex
    q: complex
    t: complex

    def __post_init__(self):
        for name in ("p", "q", "t"):
            value = complex(getattr(self, name))
            if not abs(value) < 1:
                raise ValueError(f"|{name}| must be < 1, got {abs(value)!r}")
            object.__setattr__(self, name, value)

    def swapped(self) -> "Bases":
        """Exchange the roles of ``p`` and ``q``."""
        return Bases(self.q, self.p, self.t)


@dataclass(frozen=True)
class Truncation:
    """Accuracy policy for infinite products.

    ``rel_eps`` is the size below which a factor ``1 - x`` is treated as 1,
    ``max_index`` caps the product index and ``pole_eps`` is the threshold used
    to flag arguments that sit on a pole.
    """

    rel_eps: float = 1e-15
    max_index: int = 512
    pole_eps: float = 1e-10

    def __post_init__(self):
        if not 0 < self.rel_eps < 1:
            raise ValueError("rel_eps must lie in (0, 1)")
        if self.max_index < 1:
            raise ValueError("max_index must be >= 1")
        if self.pole_eps <= 0:
            raise ValueError("pole_eps must be positive")


DEFAULT_TRUNCATION = Truncation()

# Row budget for the outer-product evaluation of array arguments.
_CHUNK = 1 << 20


def _is_scalar(u) -> bool:
    return np.ndim(u) == 0


def _index_bound(nome_abs: float, scale: float, tr: Truncation) -> int:
    """Smallest I with nome_abs**I * scale < rel_eps."""
    if scale < tr.rel_eps:
        return 0
    if nome_abs == 0.0:
        return 1
    index = math.ceil(math.log(tr.rel_eps / scale) / math.log(nome_abs))
    index = max(index, 0)
    if index > tr.max_index:
        raise TruncationError(
            f"product needs {index} factors, cap is {tr.max_index}",
            bound=nome_abs**tr.max_index * scale,
        )
    return index


def _max_abs(u) -> float:
    if _is_scalar(u):
        return abs(u)
    return float(np.max(np.abs(u))) if np.size(u) else 0.0


def _product_of_factors(coeffs: np.ndarray, u: np.ndarray) -> np.ndarray:
    """prod_c (1 - c*u) over the coefficient list, evaluated in row chunks."""
    flat = u.reshape(-1)
    out = np.ones_like(flat)
    if flat.size == 0:
        return out.reshape(u.shape)
    rows = max(1, _CHUNK // flat.size)
    for start in range(0, coeffs.size, rows):
        block = coeffs[start:start + rows]
        out *= np.prod(1.0 - block[:, None] * flat[None, :], axis=0)
    return out.reshape(u.shape)


def poch_p(u, p, tr: Truncation = DEFAULT_TRUNCATION):
    """The q-Pochhammer symbol (u;p)_inf = prod_{i>=0} (1 - p^i u)."""
    p = complex(p)
    if not abs(p) < 1:
        raise ValueError("|p| must be < 1")
    scale = max(_max_abs(u), 1.0)
    top = _index_bound(abs(p), scale, tr)
    if _is_scalar(u):
        x = complex(u)
        acc = 1.0 + 0j
        for _ in range(top + 1):
            acc *= 1.0 - x
            x *= p
        return acc
    u = np.asarray(u, dtype=complex)
    coeffs = p ** np.arange(top + 1)
    return _product_of_factors(coeffs.astype(complex), u)


def _triangle_coeffs(p: complex, q: complex, top: int) -> np.ndarray:
    i, j = np.meshgrid(np.arange(top + 1), np.arange(top + 1), indexing="ij")
    mask = (i + j) <= top
    return (p ** i[mask]) * (q ** j[mask])


def poch_pq(u, p, q, tr: Truncation = DEFAULT_TRUNCATION):
    """The double Pochhammer symbol (u;p,q)_inf over the triangle i + j <= I."""
    p, q = complex(p), complex(q)
    if not (abs(p) < 1 and abs(q) < 1):
        raise ValueError("|p| and |q| must be < 1")
    scale = max(_max_abs(u), 1.0)
    top = _index_bound(max(abs(p), abs(q)), scale, tr)
    if _is_scalar(u):
        x0 = complex(u)
        acc = 1.0 + 0j
        qj = 1.0 + 0j
        for j in range(top + 1):
            x = x0 * qj
            for _ in range(top + 1 - j):
                acc *= 1.0 - x
                x *= p
            qj *= q
        return acc
    u = np.asarray(u, dtype=complex)
    return _product_of_factors(_triangle_coeffs(p, q, top), u)


def _check_nonzero(u):
    if _is_scalar(u):
        if u == 0:
            raise ZeroArgumentError("argument must be nonzero")
    elif np.any(np.asarray(u) == 0):
        raise ZeroArgumentError("argument must be nonzero")


def theta(u, p, tr: Truncation = DEFAULT_TRUNCATION):
    """Multiplicative theta function theta(u;p) = (u;p)_inf (p/u;p)_inf."""
    _check_nonzero(u)
    if not _is_scalar(u):
        u = np.asarray(u, dtype=complex)
    else:
        u = complex(u)
    return poch_p(u, p, tr) * poch_p(complex(p) / u, p, tr)


def ell_gamma(u, p, q, tr: Truncation = DEFAULT_TRUNCATION):
    """Elliptic gamma function Gamma(u;p,q) = (pq/u;p,q)_inf / (u;p,q)_inf."""
    _check_nonzero(u)
    if not _is_scalar(u):
        u = np.asarray(u, dtype=complex)
    else:
        u = complex(u)
    pq = complex(p) * complex(q)
    den = poch_pq(u, p, q, tr)
    if _max_abs_min(den) < tr.pole_eps:
        raise PoleError("elliptic gamma evaluated at (or near) a pole")
    return poch_pq(pq / u, p, q, tr) / den


def _max_abs_min(x) -> float:
    if _is_scalar(x):
        return abs(x)
    return float(np.min(np.abs(x))) if np.size(x) else math.inf


def e_pair(u, v, p, tr: Truncation = DEFAULT_TRUNCATION):
    """The pairing e(u,v;p) = u^{-1} theta(uv;p) theta(u/v;p)."""
    _check_nonzero(u)
    _check_nonzero(v)
    if not (_is_scalar(u) and _is_scalar(v)):
        u = np.asarray(u, dtype=complex)
        v = np.asarray(v, dtype=complex)
    return theta(u * v, p, tr) * theta(u / v, p, tr) / u


def theta_fact(u, p, t, k: int, tr: Truncation = DEFAULT_TRUNCATION):
    """t-shifted factorial theta(u;p)_k = prod_{i<k} theta(t^i u;p)."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    acc = 1.0 + 0j
    for i in range(k):
        acc = acc * theta(u * t**i, p, tr)
    return acc


def e_fact(u, v, p, t, k: int, tr: Truncation = DEFAULT_TRUNCATION):
    """t-shifted factorial e(u,v;p)_k = prod_{i<k} e(t^i u, v;p)."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    acc = 1.0 + 0j
    for i in range(k):
        acc = acc * e_pair(u * t**i, v, p, tr)
    return acc


class Monomial:
    """A Laurent monomial in named symbols with integer exponents."""

    __slots__ = ("_items", "_hash")

    def __init__(self, exponents: Mapping[str, int] | Iterable[tuple[str, int]] = ()):
        pairs = exponents.items() if isinstance(exponents, Mapping) else exponents
        merged: dict[str, int] = {}
        for name, power in pairs:
            if int(power) != power:
                raise ValueError("monomial exponents must be integers")
            merged[name] = merged.get(name, 0) + int(power)
        self._items = tuple(sorted((k, v) for k, v in merged.items() if v))
        self._hash = hash(self._items)

    @classmethod
    def symbol(cls, name: str) -> "Monomial":
        return cls({name: 1})

    def exponents(self) -> dict[str, int]:
        return dict(self._items)

    def __mul__(self, other: "Monomial") -> "Monomial":
        return Monomial(self._items + other._items)

    def __truediv__(self, other: "Monomial") -> "Monomial":
        return Monomial(self._items + tuple((k, -v) for k, v in other._items))

    def __pow__(self, power: int) -> "Monomial":
        return Monomial(tuple((k, v * power) for k, v in self._items))

    def __eq__(self, other) -> bool:
        return isinstance(other, Monomial) and self._items == other._items

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        if not self._items:
            return "Monomial(1)"
        return "Monomial(" + "*".join(f"{k}^{v}" for k, v in self._items) + ")"

    def evaluate(self, values: Mapping[str, complex]) -> complex:
        acc = 1.0 + 0j
        for name, power in self._items:
            acc *= complex(values[name]) ** power
        return acc


ONE = Monomial()


class ExponentLedger:
    """Exact bookkeeping for products of brackets [x] = x^{-1/2} theta(x).

    Each bracket contributes a theta factor and a half-integer power of its
    monomial argument.  The powers are accumulated per symbol as exact
    fractions; evaluation is only allowed once every exponent is an integer,
    which makes the result independent of any square-root branch.
    """

    def __init__(self, shift_symbol: str = "t"):
        self.shift = Monomial.symbol(shift_symbol)
        self._exponents: dict[str, Fraction] = {}
        self._thetas: Counter = Counter()
        self._sign = 1

    def copy(self) -> "ExponentLedger":
        other = ExponentLedger()
        other.shift = self.shift
        other._exponents = dict(self._exponents)
        other._thetas = Counter(self._thetas)
        other._sign = self._sign
        return other

    def _add_exponents(self, x: Monomial, weight: Fraction) -> None:
        for name, power in x.exponents().items():
            self._exponents[name] = self._exponents.get(name, Fraction(0)) + weight * power

    def _add_theta(self, x: Monomial, power: int) -> None:
        self._thetas[x] += power
        if self._thetas[x] == 0:
            del self._thetas[x]

    def monomial(self, x: Monomial, power: int = 1) -> "ExponentLedger":
        self._add_exponents(x, Fraction(power))
        return self

    def negate(self, times: int = 1) -> "ExponentLedger":
        if times % 2:
            self._sign = -self._sign
        return self

    def theta(self, x: Monomial, k: int = 1, power: int = 1) -> "ExponentLedger":
        """Multiply by theta(x)_k ** power; theta(x)_{-k} = 1 / theta(x t^{-k})_k."""
        if k < 0:
            return self.theta(x * self.shift**k, -k, -power)
        for j in range(k):
            self._add_theta(x * self.shift**j, power)
        return self

    def bracket(self, x: Monomial, k: int = 1, power: int = 1) -> "ExponentLedger":
        """Multiply by [x]_k ** power; [x]_{-k} = 1 / [x t^{-k}]_k."""
        if k < 0:
            return self.bracket(x * self.shift**k, -k, -power)
        for j in range(k):
            y = x * self.shift**j
            self._add_theta(y, power)
            self._add_exponents(y, Fraction(-power, 2))
        return self

    def merge(self, other: "ExponentLedger", power: int = 1) -> "ExponentLedger":
        for name, value in other._exponents.items():
            self._exponents[name] = self._exponents.get(name, Fraction(0)) + power * value
        for x, mult in other._thetas.items():
            self._add_theta(x, power * mult)
        if other._sign < 0 and power % 2:
            self._sign = -self._sign
        return self

    @property
    def half_exponents(self) -> dict[str, Fraction]:
        return {k: v for k, v in self._exponents.items() if v}

    @property
    def theta_num(self) -> list[Monomial]:
        return [x for x, m in self._thetas.items() for _ in range(m) if m > 0]

    @property
    def theta_den(self) -> list[Monomial]:
        return [x for x, m in self._thetas.items() for _ in range(-m) if m < 0]

    @property
    def sign(self) -> int:
        return self._sign

    def closable(self) -> bool:
        return all(v.denominator == 1 for v in self._exponents.values())

    def evaluate(self, values: Mapping[str, complex], p, tr: Truncation = DEFAULT_TRUNCATION) -> complex:
        return ledger_eval(self, values, p, tr)


def ledger_eval(lg: ExponentLedger, values: Mapping[str, complex], p,
                tr: Truncation = DEFAULT_TRUNCATION,
                roots: Mapping[str, complex] | None = None) -> complex:
    """Evaluate a closable ledger at concrete symbol values.

    ``roots`` opts into a fixed square root for each symbol, which makes
    half-integer exponents well defined as a convention.  Without it a
    non-integral exponent raises BranchError.
    """
    if not lg.closable() and roots is None:
        bad = {k: str(v) for k, v in lg.half_exponents.items() if v.denominator != 1}
        raise BranchError(f"ledger has non-integral exponents {bad}")
    acc = complex(lg.sign)
    for name, power in lg.half_exponents.items():
        if power.denominator == 1:
            acc *= complex(values[name]) ** int(power)
        else:
            acc *= complex(roots[name]) ** int(2 * power)
    if not lg._thetas:
        return acc
    items = list(lg._thetas.items())
    args = np.array([x.evaluate(values) for x, _ in items], dtype=complex)
    mults = np.array([m for _, m in items])
    vals = theta(args, p, tr)
    den = np.abs(vals[mults < 0])
    if den.size and np.min(den) < tr.pole_eps:
        raise PoleError("ledger denominator theta factor vanishes")
    return acc * complex(np.prod(vals.astype(complex) ** mults))
