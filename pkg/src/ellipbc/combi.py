"""Compositions of n into s parts, their canonical order, and reference points."""

from __future__ import annotations

from functools import lru_cache
from math import comb
from typing import Sequence

__all__ = [
    "Composition",
    "enumerate_compositions",
    "IndexedBasisOrder",
    "reference_point",
    "mult_exponent",
    "binom",
    "leq",
    "unit",
]

Composition = tuple  # a tuple of nonnegative ints


def _compositions_with_sum(parts: int, total: int):
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions_with_sum(parts - 1, total - first):
            yield (first,) + rest


def _order_key(mu: tuple[int, ...]):
    head = mu[:-1]
    return (sum(head), head)


@lru_cache(maxsize=None)
def enumerate_compositions(s: int, n: int) -> tuple[tuple[int, ...], ...]:
    """All compositions of ``n`` into ``s`` parts in graded lexicographic order.

    The order compares the head (mu_1, ..., mu_{s-1}) first by its total and
    then lexicographically, so it refines the componentwise partial order on
    heads.

    >>> enumerate_compositions(2, 2)
    ((0, 2), (1, 1), (2, 0))
    """
    if s < 1 or n < 0:
        raise ValueError("need s >= 1 and n >= 0")
    return tuple(sorted(_compositions_with_sum(s, n), key=_order_key))


class IndexedBasisOrder:
    """Position map for the canonical order of Z_{s,n}."""

    def __init__(self, s: int, n: int):
        self.s = s
        self.n = n
        self.elements = enumerate_compositions(s, n)
        self._index = {mu: i for i, mu in enumerate(self.elements)}

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def index(self, mu: Sequence[int]) -> int:
        return self._index[tuple(mu)]


def binom(a: int, b: int) -> int:
    """Binomial coefficient with C(a, b) = 0 whenever b < 0 or b > a, and C(a, 0) = 1."""
    if b == 0:
        return 1
    if b < 0 or a < b:
        return 0
    return comb(a, b)


def leq(mu: Sequence[int], nu: Sequence[int]) -> bool:
    """Componentwise mu <= nu."""
    return all(x <= y for x, y in zip(mu, nu))


def unit(s: int, k: int) -> tuple[int, ...]:
    """The k-th unit vector (0-based) of length s."""
    return tuple(1 if i == k else 0 for i in range(s))


def reference_point(c: Sequence[complex], t: complex, mu: Sequence[int]) -> list[complex]:
    """Concatenate the progressions (c_k, t c_k, ..., t^{mu_k - 1} c_k)."""
    if len(c) != len(mu):
        raise ValueError("c and mu must have the same length")
    point = []
    for ck, muk in zip(c, mu):
        point.extend(ck * t**j for j in range(muk))
    return point


def mult_exponent(kind: str, r: int, n: int, i: int, j: int = 0) -> int:
    """Multiplicity exponents of the determinant formulas.

    ``face``: C(n - i + r - 2, r - 1) for 0 <= i < n.
    ``edge``: C(n - i - j + r - 3, r - 2) for i, j >= 0 with i + j < n.
    """
    if kind == "face":
        if not 0 <= i < n:
            raise IndexError("face index out of range")
        return binom(n - i + r - 2, r - 1)
    if kind == "edge":
        if i < 0 or j < 0 or i + j >= n:
            raise IndexError("edge indices out of range")
        return binom(n - i - j + r - 3, r - 2)
    raise ValueError(f"unknown exponent kind {kind!r}")
