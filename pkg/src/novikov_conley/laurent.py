"""Sparse multivariate Laurent polynomials over the integers."""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Sequence

Exponent = tuple[int, ...]


class Laurent:
    """An element of Z[t_1^{±1}, ..., t_s^{±1}].

    Stored as a mapping from exponent vectors to nonzero integer
    coefficients.  Instances are immutable and hashable.
    """

    __slots__ = ("nvars", "_terms", "_hash")

    def __init__(self, nvars: int, terms: Mapping[Exponent, int] | Iterable = ()):
        self.nvars = nvars
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Exponent, int] = {}
        for exp, c in items:
            exp = tuple(exp)
            if len(exp) != nvars:
                raise ValueError(f"exponent {exp} does not have {nvars} entries")
            acc[exp] = acc.get(exp, 0) + int(c)
        self._terms = tuple(sorted((e, c) for e, c in acc.items() if c))
        self._hash = None

    @classmethod
    def zero(cls, nvars: int) -> "Laurent":
        return cls(nvars)

    @classmethod
    def const(cls, nvars: int, c: int) -> "Laurent":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def monomial(cls, exp: Sequence[int], c: int = 1) -> "Laurent":
        return cls(len(exp), {tuple(exp): c})

    @property
    def terms(self) -> dict[Exponent, int]:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self):
        return bool(self._terms)

    def __eq__(self, other):
        if isinstance(other, int):
            other = Laurent.const(self.nvars, other)
        if not isinstance(other, Laurent):
            return NotImplemented
        return self.nvars == other.nvars and self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, self._terms))
        return self._hash

    def _coerce(self, other) -> "Laurent":
        if isinstance(other, Laurent):
            if other.nvars != self.nvars:
                raise ValueError("mismatched number of variables")
            return other
        return Laurent.const(self.nvars, int(other))

    def __add__(self, other):
        other = self._coerce(other)
        return Laurent(self.nvars, list(self._terms) + list(other._terms))

    __radd__ = __add__

    def __neg__(self):
        return Laurent(self.nvars, [(e, -c) for e, c in self._terms])

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        out = []
        for e1, c1 in self._terms:
            for e2, c2 in other._terms:
                out.append((tuple(a + b for a, b in zip(e1, e2)), c1 * c2))
        return Laurent(self.nvars, out)

    __rmul__ = __mul__

    def shift(self, exp: Sequence[int]) -> "Laurent":
        """Multiply by the monomial t^exp."""
        return Laurent(self.nvars, [(tuple(a + b for a, b in zip(e, exp)), c) for e, c in self._terms])

    def min_exponents(self) -> Exponent | None:
        if not self._terms:
            return None
        return tuple(min(e[i] for e, _ in self._terms) for i in range(self.nvars))

    def evaluate(self, point: Sequence) -> Fraction:
        if len(point) != self.nvars:
            raise ValueError("evaluation point has the wrong length")
        total = Fraction(0)
        for exp, c in self._terms:
            term = Fraction(c)
            for x, k in zip(point, exp):
                if k:
                    if x == 0 and k < 0:
                        raise ZeroDivisionError("negative power evaluated at zero")
                    term *= Fraction(x) ** k
            total += term
        return total

    def __repr__(self):
        return f"Laurent({self})"

    def __str__(self):
        if not self._terms:
            return "0"
        names = ["t"] if self.nvars == 1 else [f"t{i + 1}" for i in range(self.nvars)]
        parts = []
        for exp, c in sorted(self._terms, reverse=True):
            mono = "*".join(n if k == 1 else f"{n}^{k}" for n, k in zip(names, exp) if k)
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append(f"-{mono}")
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")


LaurentMatrix = list[list[Laurent]]


def lzeros(m: int, n: int, nvars: int) -> LaurentMatrix:
    z = Laurent.zero(nvars)
    return [[z] * n for _ in range(m)]


def lmatmul(A: LaurentMatrix, B: LaurentMatrix, nvars: int) -> LaurentMatrix:
    if not A:
        return []
    n = len(B[0]) if B else 0
    out = []
    for row in A:
        acc = [Laurent.zero(nvars)] * n
        for k, a in enumerate(row):
            if not a:
                continue
            for j, b in enumerate(B[k]):
                if b:
                    acc[j] = acc[j] + a * b
        out.append(acc)
    return out


def evaluate_matrix(M: LaurentMatrix, point: Sequence) -> list[list[Fraction]]:
    return [[x.evaluate(point) for x in row] for row in M]
