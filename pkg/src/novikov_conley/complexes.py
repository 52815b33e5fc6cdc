"""Finite cell complexes, chain complexes and their homology.

A :class:`CellComplex` stores every cell with its boundary as a list of
``(face id, incidence)`` entries.  Entries may repeat a face (a loop edge is
written ``[[v, 1], [v, -1]]``); the integer boundary matrix sums them, while
the twisted constructions in :mod:`novikov_conley.twisted` keep them apart.
"""
from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import linalg

Chain = dict  # cell id -> integer coefficient


class ComplexError(ValueError):
    """Raised on malformed complexes, subcomplexes or coefficient requests."""


@dataclass(frozen=True)
class Coefficients:
    """Coefficient ring: the integers, the rationals, or Z/p for a prime p."""

    kind: str
    p: int | None = None

    def __post_init__(self):
        if self.kind not in ("Z", "Q", "Zp"):
            raise ComplexError(f"unknown coefficient ring {self.kind!r}")
        if self.kind == "Zp" and (self.p is None or not linalg.is_prime(self.p)):
            raise ComplexError(f"modulus {self.p} is not prime")

    @classmethod
    def parse(cls, value) -> "Coefficients":
        if isinstance(value, Coefficients):
            return value
        if isinstance(value, int):
            return cls("Zp", value)
        s = str(value).strip().upper()
        if s.isdigit():
            return cls("Zp", int(s))
        if s in ("Z", "ZZ"):
            return cls("Z")
        if s in ("Q", "QQ"):
            return cls("Q")
        for prefix in ("ZP", "GF", "Z_", "Z/", "Z"):
            if s.startswith(prefix) and s[len(prefix):].isdigit():
                return cls("Zp", int(s[len(prefix):]))
        raise ComplexError(f"cannot parse coefficients {value!r}")

    @property
    def is_field(self) -> bool:
        return self.kind != "Z"

    def __str__(self):
        return f"Z{self.p}" if self.kind == "Zp" else self.kind


ZZ = Coefficients("Z")
QQ = Coefficients("Q")


def GF(p: int) -> Coefficients:
    return Coefficients("Zp", p)


@dataclass(frozen=True)
class Cell:
    id: str
    dim: int
    boundary: tuple[tuple[str, int], ...] = ()
    # attaching word of a 2-cell as signed edge steps; needed only for twisting
    loop: tuple[tuple[str, int], ...] | None = None

    def boundary_chain(self) -> Chain:
        out: Chain = defaultdict(int)
        for face, c in self.boundary:
            out[face] += c
        return {k: v for k, v in out.items() if v}


@dataclass
class ValidationIssue:
    cell: str | None
    degree: int | None
    message: str

    def as_dict(self):
        return {"cell": self.cell, "degree": self.degree, "message": self.message}


@dataclass
class ValidationReport:
    ok: bool
    issues: list[ValidationIssue] = field(default_factory=list)
    checked_degrees: list[int] = field(default_factory=list)

    def as_dict(self):
        return {
            "ok": self.ok,
            "checked_degrees": self.checked_degrees,
            "issues": [i.as_dict() for i in self.issues],
        }


@dataclass(frozen=True)
class HomologyResult:
    """Per-degree free ranks and (over Z) torsion coefficients."""

    coeffs: Coefficients
    ranks: tuple[int, ...]
    torsion: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self):
        if not self.torsion:
            object.__setattr__(self, "torsion", tuple(() for _ in self.ranks))

    def euler(self) -> int:
        return sum((-1) ** q * r for q, r in enumerate(self.ranks))

    def padded(self, top: int) -> tuple[int, ...]:
        return tuple(self.ranks) + (0,) * max(0, top + 1 - len(self.ranks))

    def as_dict(self):
        return {
            "coefficients": str(self.coeffs),
            "ranks": list(self.ranks),
            "torsion": [list(t) for t in self.torsion],
        }


@dataclass(frozen=True)
class ChainComplex:
    """Free chain complex with labelled bases.

    ``differential[q]`` is the matrix of d_q : C_q -> C_{q-1}; its rows follow
    ``basis[q-1]`` and its columns ``basis[q]``.  Missing degrees are zero.
    """

    basis: Mapping[int, tuple]
    differential: Mapping[int, list[list[int]]]

    @property
    def top(self) -> int:
        degs = [q for q, b in self.basis.items() if b]
        return max(degs) if degs else -1

    def size(self, q: int) -> int:
        return len(self.basis.get(q, ()))

    def matrix(self, q: int) -> list[list[int]]:
        M = self.differential.get(q)
        if M is None:
            return linalg.zeros(self.size(q - 1), self.size(q))
        return M

    def square_zero_failures(self) -> list[int]:
        bad = []
        for q in range(1, self.top + 1):
            if self.size(q - 1) == 0 or self.size(q) == 0 or self.size(q + 1) == 0:
                continue
            prod = linalg.matmul(self.matrix(q), self.matrix(q + 1))
            if not linalg.is_zero(prod):
                bad.append(q)
        return bad

    def homology(self, coeffs=ZZ) -> HomologyResult:
        return chain_homology(self, Coefficients.parse(coeffs))


def _rank(M, coeffs: Coefficients) -> int:
    if not M or not M[0]:
        return 0
    if coeffs.kind == "Zp":
        return linalg.rank_mod_p(M, coeffs.p)
    return linalg.rank_rational(M)


def chain_homology(cc: ChainComplex, coeffs: Coefficients) -> HomologyResult:
    top = cc.top
    if top < 0:
        return HomologyResult(coeffs, ())
    factors = {}
    ranks = {}
    for q in range(1, top + 1):
        M = cc.matrix(q)
        if coeffs.kind == "Z":
            factors[q] = linalg.invariant_factors(M) if M and M[0] else []
            ranks[q] = len(factors[q])
        else:
            ranks[q] = _rank(M, coeffs)
    out_r, out_t = [], []
    for q in range(top + 1):
        n = cc.size(q)
        r_out = ranks.get(q, 0)
        r_in = ranks.get(q + 1, 0)
        out_r.append(n - r_out - r_in)
        if coeffs.kind == "Z":
            out_t.append(tuple(d for d in factors.get(q + 1, []) if d > 1))
        else:
            out_t.append(())
    return HomologyResult(coeffs, tuple(out_r), tuple(out_t))


@dataclass(frozen=True)
class CellComplex:
    name: str
    cells: tuple[Cell, ...]

    @classmethod
    def build(cls, name: str, cells: Iterable) -> "CellComplex":
        """Build from Cells or ``(id, dim, boundary[, loop])`` tuples."""
        out = []
        for c in cells:
            if isinstance(c, Cell):
                out.append(c)
                continue
            cid, dim, bd, *rest = c
            loop = tuple((e, int(s)) for e, s in rest[0]) if rest and rest[0] is not None else None
            out.append(Cell(str(cid), int(dim), tuple((str(f), int(k)) for f, k in bd), loop))
        return cls(name, tuple(out))

    @cached_property
    def by_id(self) -> dict[str, Cell]:
        return {c.id: c for c in self.cells}

    def __contains__(self, cid) -> bool:
        return cid in self.by_id

    def __getitem__(self, cid) -> Cell:
        return self.by_id[cid]

    @property
    def dimension(self) -> int:
        return max((c.dim for c in self.cells), default=-1)

    def ids(self, q: int) -> tuple[str, ...]:
        return self._ids_by_dim.get(q, ())

    @cached_property
    def _ids_by_dim(self) -> dict[int, tuple[str, ...]]:
        groups = defaultdict(list)
        for c in self.cells:
            groups[c.dim].append(c.id)
        return {q: tuple(sorted(v)) for q, v in groups.items()}

    def counts(self) -> tuple[int, ...]:
        return tuple(len(self.ids(q)) for q in range(self.dimension + 1))

    def boundary(self, chain: Mapping[str, int]) -> Chain:
        out: Chain = defaultdict(int)
        for cid, c in chain.items():
            if not c:
                continue
            for face, k in self.by_id[cid].boundary:
                out[face] += c * k
        return {k: v for k, v in out.items() if v}

    def edge_ends(self, eid: str) -> tuple[str, str]:
        """``(tail, head)`` of a 1-cell."""
        cell = self.by_id[eid]
        heads = [f for f, k in cell.boundary if k == 1]
        tails = [f for f, k in cell.boundary if k == -1]
        if cell.dim != 1 or len(cell.boundary) != 2 or len(heads) != 1 or len(tails) != 1:
            raise ComplexError(f"1-cell {eid} must have boundary [[head, 1], [tail, -1]]")
        return tails[0], heads[0]

    def boundary_matrix(self, q: int) -> list[list[int]]:
        rows = self.ids(q - 1)
        cols = self.ids(q)
        index = {cid: i for i, cid in enumerate(rows)}
        M = linalg.zeros(len(rows), len(cols))
        for j, cid in enumerate(cols):
            for face, k in self.by_id[cid].boundary:
                M[index[face]][j] += k
        return M

    def chain_complex(self, exclude: Iterable[str] = ()) -> ChainComplex:
        """Cellular chain complex, optionally modulo the cells in ``exclude``."""
        excl = set(exclude)
        basis = {q: tuple(c for c in self.ids(q) if c not in excl) for q in range(self.dimension + 1)}
        diff = {}
        for q in range(1, self.dimension + 1):
            index = {cid: i for i, cid in enumerate(basis[q - 1])}
            M = linalg.zeros(len(basis[q - 1]), len(basis[q]))
            for j, cid in enumerate(basis[q]):
                for face, k in self.by_id[cid].boundary:
                    if face in index:
                        M[index[face]][j] += k
            diff[q] = M
        return ChainComplex(basis, diff)

    def closure(self, ids: Iterable[str]) -> set[str]:
        out = set()
        stack = list(ids)
        while stack:
            cid = stack.pop()
            if cid in out:
                continue
            out.add(cid)
            stack.extend(f for f, _ in self.by_id[cid].boundary)
        return out

    def is_subcomplex(self, ids: Iterable[str]) -> bool:
        ids = set(ids)
        return all(i in self.by_id for i in ids) and self.closure(ids) == ids

    def require_subcomplex(self, ids: Iterable[str]) -> frozenset[str]:
        ids = frozenset(ids)
        missing = sorted(i for i in ids if i not in self.by_id)
        if missing:
            raise ComplexError(f"unknown cells in subcomplex: {missing}")
        extra = sorted(self.closure(ids) - ids)
        if extra:
            raise ComplexError(f"subcomplex is not closed under boundary; missing faces {extra}")
        return ids

    def restrict(self, ids: Iterable[str], name: str | None = None) -> "CellComplex":
        ids = self.require_subcomplex(ids)
        return CellComplex(name or f"{self.name}|sub", tuple(c for c in self.cells if c.id in ids))

    @cached_property
    def report(self) -> ValidationReport:
        return validate_complex(self)

    def validated(self) -> "CellComplex":
        rep = self.report
        if not rep.ok:
            first = rep.issues[0]
            raise ComplexError(f"complex {self.name!r} invalid at cell {first.cell} "
                               f"(degree {first.degree}): {first.message}")
        return self

    def to_json(self) -> dict:
        cells = []
        for c in sorted(self.cells, key=lambda c: (c.dim, c.id)):
            entry = {"id": c.id, "dim": c.dim, "boundary": [[f, k] for f, k in c.boundary]}
            if c.loop is not None:
                entry["loop"] = [[e, s] for e, s in c.loop]
            cells.append(entry)
        return {"name": self.name, "cells": cells}

    @classmethod
    def from_json(cls, data: Mapping) -> "CellComplex":
        try:
            cells = []
            for i, entry in enumerate(data["cells"]):
                missing = [k for k in ("id", "dim") if k not in entry]
                if missing:
                    raise ComplexError(f"cells[{i}]: missing field(s) {missing}")
                cells.append((entry["id"], entry["dim"], entry.get("boundary", []), entry.get("loop")))
            return cls.build(data.get("name", "complex"), cells)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ComplexError):
                raise
            raise ComplexError(f"malformed complex JSON: {exc}") from exc


def validate_complex(complex: CellComplex) -> ValidationReport:
    """Check id uniqueness, face dimensions, edge endpoints, loops and d∘d = 0."""
    issues: list[ValidationIssue] = []
    seen = set()
    for c in complex.cells:
        if c.id in seen:
            issues.append(ValidationIssue(c.id, c.dim, "duplicate cell id"))
        seen.add(c.id)
        if c.dim < 0:
            issues.append(ValidationIssue(c.id, c.dim, "negative dimension"))
    by_id = {c.id: c for c in complex.cells}
    for c in complex.cells:
        if c.dim == 0 and c.boundary:
            issues.append(ValidationIssue(c.id, 0, "0-cell with nonempty boundary"))
        for face, _ in c.boundary:
            f = by_id.get(face)
            if f is None:
                issues.append(ValidationIssue(c.id, c.dim, f"boundary references unknown cell {face!r}"))
            elif f.dim != c.dim - 1:
                issues.append(ValidationIssue(c.id, c.dim, f"face {face!r} has dimension {f.dim}, expected {c.dim - 1}"))
        if c.dim == 1:
            ks = sorted(k for _, k in c.boundary)
            if ks != [-1, 1]:
                issues.append(ValidationIssue(c.id, 1, "1-cell boundary must be [[head, 1], [tail, -1]]"))
        if c.loop is not None:
            issues.extend(_loop_issues(c, by_id))
    if issues:
        return ValidationReport(False, issues)
    checked = []
    for q in range(2, complex.dimension + 1):
        checked.append(q)
        for cid in complex.ids(q):
            dd = complex.boundary(complex.boundary({cid: 1}))
            if dd:
                issues.append(ValidationIssue(cid, q, f"boundary of boundary is nonzero: {dict(sorted(dd.items()))}"))
    return ValidationReport(not issues, issues, checked)


def _loop_issues(c: Cell, by_id) -> list[ValidationIssue]:
    if c.dim != 2:
        return [ValidationIssue(c.id, c.dim, "attaching loops are only meaningful on 2-cells")]
    out = []
    total = defaultdict(int)
    here = None
    start = None
    for eid, s in c.loop:
        e = by_id.get(eid)
        if e is None or e.dim != 1 or s not in (1, -1):
            return [ValidationIssue(c.id, 2, f"bad loop step {(eid, s)!r}")]
        ends = {k: f for f, k in e.boundary}
        if set(ends) != {1, -1}:
            return [ValidationIssue(c.id, 2, f"loop edge {eid!r} lacks endpoints")]
        a, b = (ends[-1], ends[1]) if s == 1 else (ends[1], ends[-1])
        if here is None:
            start = a
        elif here != a:
            out.append(ValidationIssue(c.id, 2, f"loop is not contiguous at step {eid!r}"))
        here = b
        total[eid] += s
    if c.loop and here != start:
        out.append(ValidationIssue(c.id, 2, "loop is not closed"))
    if {k: v for k, v in total.items() if v} != c.boundary_chain():
        out.append(ValidationIssue(c.id, 2, "loop does not match the boundary incidences"))
    return out


def smith_normal_form(M):
    return linalg.smith_normal_form(M)


def homology(complex: CellComplex, coeffs=ZZ) -> HomologyResult:
    complex.validated()
    return complex.chain_complex().homology(Coefficients.parse(coeffs))


def relative_homology(complex: CellComplex, sub: Iterable[str], coeffs=ZZ) -> HomologyResult:
    """Homology of C(complex) / C(sub)."""
    complex.validated()
    sub = complex.require_subcomplex(sub)
    res = complex.chain_complex(exclude=sub).homology(Coefficients.parse(coeffs))
    return _pad(res, complex.dimension)


def _pad(res: HomologyResult, top: int) -> HomologyResult:
    extra = top + 1 - len(res.ranks)
    if extra <= 0:
        return res
    return HomologyResult(res.coeffs, res.ranks + (0,) * extra, res.torsion + ((),) * extra)


COLLAPSED = "*"


def quotient_by_subcomplex(complex: CellComplex, sub: Iterable[str], point: str = COLLAPSED) -> CellComplex:
    """Collapse ``sub`` to a single new 0-cell.

    Boundary references into ``sub`` from 1-cells are redirected to the new
    point; references into ``sub`` from higher cells are dropped, and edges of
    ``sub`` are removed from attaching loops.
    """
    sub = complex.require_subcomplex(sub)
    if not sub:
        return complex
    if point in complex.by_id and point not in sub:
        raise ComplexError(f"collapse point id {point!r} already in use")
    cells = [Cell(point, 0)]
    for c in complex.cells:
        if c.id in sub:
            continue
        if c.dim == 1:
            bd = tuple((point if f in sub else f, k) for f, k in c.boundary)
        else:
            bd = tuple((f, k) for f, k in c.boundary if f not in sub)
        loop = None
        if c.loop is not None:
            loop = tuple(step for step in c.loop if step[0] not in sub)
        cells.append(Cell(c.id, c.dim, bd, loop))
    return CellComplex(f"{complex.name}/sub", tuple(cells))


def euler_characteristic(complex: CellComplex) -> int:
    return sum((-1) ** q * n for q, n in enumerate(complex.counts()))


def load_complex(path) -> CellComplex:
    return CellComplex.from_json(json.loads(Path(path).read_text()))


def chain_add(a: Mapping, b: Mapping, scale: int = 1) -> Chain:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + scale * v
        if not out[k]:
            del out[k]
    return out


def chain_scale(a: Mapping, c: int) -> Chain:
    return {k: v * c for k, v in a.items() if v * c}
