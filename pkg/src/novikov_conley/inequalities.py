"""Conley index polynomials and Morse-Novikov type inequalities.

Polynomials are tuples of integer coefficients, lowest degree first.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .complexes import CellComplex, Coefficients, homology, relative_homology
from .flows import CarryReport, CombinatorialFlow, find_carry_parameters
from .linalg import is_prime
from .twisted import (CellularCocycle, MonodromyRep, NovikovNumbers, admissible_evaluation,
                      build_twisted_complex, evaluated_homology, novikov_numbers)

Poly = tuple[int, ...]


class InequalityError(ValueError):
    pass


def trim(p: Sequence[int]) -> Poly:
    p = list(p)
    while p and p[-1] == 0:
        p.pop()
    return tuple(p)


def pad(p: Sequence[int], n: int) -> Poly:
    return tuple(p) + (0,) * (n - len(p))


def poly_add(*ps: Sequence[int]) -> Poly:
    n = max((len(p) for p in ps), default=0)
    return tuple(sum(pad(p, n)[i] for p in ps) for i in range(n))


def poly_sub(a: Sequence[int], b: Sequence[int]) -> Poly:
    n = max(len(a), len(b))
    return tuple(x - y for x, y in zip(pad(a, n), pad(b, n)))


def at_minus_one(p: Sequence[int]) -> int:
    return sum((-1) ** i * c for i, c in enumerate(p))


def poly_str(p: Sequence[int]) -> str:
    terms = []
    for i, c in enumerate(p):
        if not c:
            continue
        mono = "" if i == 0 else ("t" if i == 1 else f"t^{i}")
        if not mono:
            terms.append(str(c))
        else:
            terms.append(mono if c == 1 else f"{c}{mono}")
    return " + ".join(terms) or "0"


def divide_by_one_plus_t(m: Sequence[int]) -> tuple[Poly, int]:
    """Long division of m(t) by (1 + t): returns (quotient, remainder), the remainder being m(-1)."""
    m = list(trim(m))
    if len(m) <= 1:
        return (), (m[0] if m else 0)
    q = [0] * (len(m) - 1)
    q[-1] = m[-1]
    for i in range(len(m) - 2, 0, -1):
        q[i - 1] = m[i] - q[i]
    return tuple(q), m[0] - q[0]


def alternating_sums(p: Sequence[int]) -> Poly:
    """S_j = sum over i <= j of (-1)^(j-i) p_i."""
    out, acc = [], 0
    for c in p:
        acc = c - acc
        out.append(acc)
    return tuple(out)


def alternating_criterion(m: Sequence[int]) -> bool:
    """All partial alternating sums nonnegative and the last one zero."""
    if not m:
        return True
    s = alternating_sums(m)
    return all(x >= 0 for x in s[:-1]) and s[-1] == 0


def division_criterion(m: Sequence[int]) -> bool:
    q, r = divide_by_one_plus_t(m)
    return r == 0 and all(c >= 0 for c in q)


# -- index polynomials -----------------------------------------------------------

@dataclass(frozen=True)
class IndexPolynomial:
    coeffs: Poly
    provenance: str = "declared"

    def __post_init__(self):
        if any(c < 0 for c in self.coeffs):
            raise InequalityError(f"index polynomial {self.coeffs} has a negative coefficient")
        object.__setattr__(self, "coeffs", trim(self.coeffs))

    def __str__(self):
        return poly_str(self.coeffs)

    def at(self, t: int) -> int:
        return sum(c * t ** i for i, c in enumerate(self.coeffs))


def index_polynomial_from_pair(N: CellComplex, L: Iterable[str], coeffs=2) -> IndexPolynomial:
    """Poincare polynomial of the relative homology of an index pair over a field."""
    co = Coefficients.parse(coeffs)
    if co.kind == "Z":
        raise InequalityError("index polynomials need field coefficients (a prime or Q)")
    h = relative_homology(N, L, co)
    return IndexPolynomial(tuple(h.ranks), f"index pair {N.name} over {co}")


def hyperbolic_index_polynomial(kind: str, j: int) -> IndexPolynomial:
    """t^j for a fixed point of index j; t^(j-1) + t^j for a periodic orbit of index j."""
    if j < 0:
        raise InequalityError("negative index")
    if kind == "fixed":
        return IndexPolynomial((0,) * j + (1,), f"fixed point of index {j}")
    if kind == "periodic":
        if j == 0:
            raise InequalityError("a periodic orbit has index at least 1")
        return IndexPolynomial((0,) * (j - 1) + (1, 1), f"periodic orbit of index {j}")
    raise InequalityError(f"unknown kind {kind!r}; expected 'fixed' or 'periodic'")


@dataclass(frozen=True)
class MorseData:
    polys: tuple[IndexPolynomial, ...]
    names: tuple[str, ...] = ()
    c: Poly | None = None                  # fixed point counts by index
    a: Poly | None = None                  # periodic orbit counts by index

    @classmethod
    def morse_smale(cls, c: Sequence[int], a: Sequence[int] = ()) -> "MorseData":
        polys, names = [], []
        for j, n in enumerate(c):
            polys += [hyperbolic_index_polynomial("fixed", j)] * n
            names += [f"fixed{j}"] * n
        for j, n in enumerate(a):
            if not n:
                continue
            polys += [hyperbolic_index_polynomial("periodic", j)] * n
            names += [f"periodic{j}"] * n
        return cls(tuple(polys), tuple(names), tuple(c), tuple(a))

    def total(self) -> Poly:
        return trim(poly_add(*(p.coeffs for p in self.polys)))

    @classmethod
    def from_json(cls, data: Mapping) -> "MorseData":
        polys, names = [], []
        try:
            for i, s in enumerate(data["sets"]):
                if "poly" in s:
                    polys.append(IndexPolynomial(tuple(int(x) for x in s["poly"]), "declared"))
                    names.append(s.get("name", f"set{i}"))
                elif "kind" in s:
                    for _ in range(int(s.get("count", 1))):
                        polys.append(hyperbolic_index_polynomial(s["kind"], int(s["index"])))
                        names.append(s.get("name", f"{s['kind']}{s['index']}"))
                else:
                    raise InequalityError(f"sets[{i}]: needs 'poly' or 'kind'/'index'")
        except KeyError as exc:
            raise InequalityError(f"Morse data is missing field {exc}") from exc
        return cls(tuple(polys), tuple(names))

    def to_json(self) -> dict:
        names = self.names or tuple(f"set{i}" for i in range(len(self.polys)))
        return {"sets": [{"name": n, "poly": list(p.coeffs)} for n, p in zip(names, self.polys)]}


def load_morse_data(path) -> MorseData:
    return MorseData.from_json(json.loads(Path(path).read_text()))


# -- reports ---------------------------------------------------------------------

@dataclass
class InequalityReport:
    verdict: bool
    lhs: Poly                               # sum of index polynomials (or mu / c)
    P: Poly                                 # Novikov / Betti polynomial
    M: Poly
    Q: Poly | None                          # M / (1+t) when divisible
    remainder: int
    slack: Poly                             # per-degree alternating slack
    euler_lhs: int
    euler_rhs: int
    failures: list[str] = field(default_factory=list)
    kind: str = "novikov-morse"
    provenance: dict = field(default_factory=dict)

    @property
    def euler_ok(self) -> bool:
        return self.euler_lhs == self.euler_rhs

    def as_dict(self):
        return {"kind": self.kind, "verdict": self.verdict, "lhs": list(self.lhs), "P": list(self.P),
                "M": list(self.M), "Q": None if self.Q is None else list(self.Q),
                "remainder": self.remainder, "slack": list(self.slack),
                "euler": {"lhs": self.euler_lhs, "rhs": self.euler_rhs, "equal": self.euler_ok},
                "failures": self.failures, "provenance": self.provenance}


def _compare(lhs: Sequence[int], P: Sequence[int], kind: str) -> InequalityReport:
    n = max(len(lhs), len(P), 1)
    lhs, P = pad(lhs, n), pad(P, n)
    M = poly_sub(lhs, P)
    q, r = divide_by_one_plus_t(M)
    failures = []
    if r:
        failures.append(f"M(t) is not divisible by 1+t (remainder {r})")
    else:
        for j, c in enumerate(q):
            if c < 0:
                failures.append(f"quotient coefficient of t^{j} is {c} < 0")
    return InequalityReport(not failures, lhs, P, M, q if r == 0 else None, r,
                            alternating_sums(M), at_minus_one(lhs), at_minus_one(P), failures, kind)


def check_novikov_morse(data: MorseData | Sequence, P: Sequence[int] | NovikovNumbers) -> InequalityReport:
    """Sum of index polynomials minus P must be (1+t) times a nonnegative polynomial."""
    if isinstance(P, NovikovNumbers):
        P = P.b
    total = data.total() if isinstance(data, MorseData) else trim(poly_add(*[getattr(p, "coeffs", p) for p in data]))
    return _compare(total, tuple(P), "novikov-morse")


def _partial_sum_report(lhs: Sequence[int], b: Sequence[int], kind: str) -> InequalityReport:
    rep = _compare(lhs, b, kind)
    lhs, b = rep.lhs, rep.P
    failures = []
    for j, (x, y) in enumerate(zip(lhs, b)):
        if x < y:
            failures.append(f"degree {j}: {x} < {y}")
    sl, sb = alternating_sums(lhs), alternating_sums(b)
    for j, (x, y) in enumerate(zip(sl, sb)):
        if x < y:
            failures.append(f"alternating sum at j={j}: {x} < {y}")
    # the (1+t)Q form asks for equality in the top alternating sum as well
    if (not failures and rep.remainder == 0) != rep.verdict:
        raise AssertionError("alternating-sum and division formulations disagree")
    rep.verdict = not failures
    rep.failures = failures
    return rep


def check_classical_novikov(c: Sequence[int], b: Sequence[int] | NovikovNumbers) -> InequalityReport:
    """Zero counts by index against Novikov numbers, degree by degree and in partial sums.

    ``euler_ok`` reports whether the top alternating sums agree as well.
    """
    if isinstance(b, NovikovNumbers):
        b = b.b
    return _partial_sum_report(tuple(c), tuple(b), "classical-novikov")


def morse_smale_mu(c: Sequence[int], a: Sequence[int]) -> Poly:
    n = max(len(c), len(a))
    c, a = pad(c, n), pad(a, n + 1)
    return tuple(c[j] + a[j] + a[j + 1] for j in range(n))


def check_alpha_morse_smale(c: Sequence[int], a: Sequence[int], b: Sequence[int] | NovikovNumbers) -> InequalityReport:
    if isinstance(b, NovikovNumbers):
        b = b.b
    rep = _partial_sum_report(morse_smale_mu(c, a), tuple(b), "alpha-morse-smale")
    rep.provenance = {"c": list(c), "a": list(a)}
    return rep


# -- pipeline --------------------------------------------------------------------

PRIMES = tuple(p for p in range(2, 98) if is_prime(p))


def evaluated_polynomial(X: CellComplex, alpha: CellularCocycle, point: Sequence,
                         E: MonodromyRep | None = None) -> Poly:
    T = build_twisted_complex(X, alpha, E)
    return tuple(evaluated_homology(T, point).padded(X.dimension))


def novikov_morse_pipeline(data: MorseData, X: CellComplex, alpha: CellularCocycle,
                           E: MonodromyRep | None = None, p: int = 2, seed: int = 0) -> InequalityReport:
    """Check the inequality with P evaluated at an admissible point for p.

    On failure the remaining primes below 100 are tried before giving up; the
    report records every prime attempted.
    """
    if not is_prime(p):
        raise InequalityError(f"{p} is not prime")
    tried = []
    rep = None
    for q in (p,) + tuple(x for x in PRIMES if x != p):
        ev = admissible_evaluation(q, seed, alpha.s)
        P = evaluated_polynomial(X, alpha, ev.a, E)
        rep = check_novikov_morse(data, P)
        tried.append({"p": q, "a": list(ev.a), "verdict": rep.verdict})
        if rep.verdict:
            break
    rep.provenance = {"seed": seed, "attempts": tried, "prime_search": len(tried) > 1}
    return rep


def trivial_class_euler(X: CellComplex, coeffs="Q") -> tuple[int, int]:
    """(P(-1) for the Betti polynomial, Euler characteristic from cell counts)."""
    h = homology(X, coeffs)
    chi = sum((-1) ** q * n for q, n in enumerate(X.counts()))
    return at_minus_one(h.ranks), chi


# -- vanishing ---------------------------------------------------------------------

@dataclass
class VanishingReport:
    ok: bool
    carry: CarryReport
    novikov: NovikovNumbers

    def as_dict(self):
        return {"ok": self.ok, "carry": self.carry.as_dict(), "novikov": self.novikov.as_dict()}


def vanishing_check(flow: CombinatorialFlow, X: CellComplex, alpha: CellularCocycle,
                    E: MonodromyRep | None = None, seed: int = 0, trials: int = 3) -> VanishingReport:
    """A fixed-point-free flow carrying the class forces all Novikov numbers to vanish."""
    if flow.fixed or flow.morse_sets:
        raise InequalityError("the flow must have no fixed nodes or Morse sets")
    if flow.edges and flow.s != alpha.s:
        raise InequalityError("flow weights and cocycle have different ranks")
    carry = find_carry_parameters(flow)
    if not carry.verdict:
        raise InequalityError("the flow does not carry the class: " + "; ".join(carry.reasons))
    nov = novikov_numbers(X, alpha, E, seed=seed, trials=trials)
    return VanishingReport(not any(nov.b), carry, nov)
