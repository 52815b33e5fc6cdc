"""Fundamental domains, collars and the deformation complexes built from them.

A :class:`GluingData` holds a cut-open domain ``X0`` together with, for each
cut i, a pair of cross-sections ``N_minus``/``N_plus`` matched by ``l``, a
collar base ``R`` with its two embeddings, and the cylinder cells that sweep
``R`` onto ``N_plus``.

Cylinder orientation uses the product convention::

    d(e x I) = (de) x I + (-1)^dim(e) * (l i_minus(e) - i_plus(e))

A cylinder record ``{"base": e, "cell": c, "sign": s}`` states that the
product cell ``e x I`` is ``s`` times the oriented cell ``c``.  With this
convention ``theta(e) = (-1)^dim(e) * (e x I)`` satisfies
``d theta + theta d = f`` with ``f = l i_minus - i_plus``.

Chains are dicts from basis labels to integers.  Deformation-complex labels
are ``("R", n, cell)`` for the shifted collar summands and ``("N", cell)``
for the remaining domain.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import linalg
from .complexes import (
    Cell,
    CellComplex,
    ChainComplex,
    ComplexError,
    Coefficients,
    HomologyResult,
    chain_add,
    chain_scale,
    relative_homology,
)
from .laurent import Laurent, evaluate_matrix, lzeros
from .twisted import CellularCocycle, MonodromyRep, build_twisted_complex, evaluated_homology

Chain = dict
Label = tuple


class GluingError(ValueError):
    pass


class GluingMismatch(RuntimeError):
    """Two independent computations that must agree did not."""


@dataclass(frozen=True)
class Cylinder:
    base: str
    cell: str
    sign: int = 1


@dataclass(frozen=True)
class Cut:
    N_minus: frozenset
    N_plus: frozenset
    l: Mapping[str, str]
    R: frozenset
    i_minus: Mapping[str, str]
    cylinders: tuple[Cylinder, ...]
    i_plus: Mapping[str, str] | None = None

    def iplus(self, e: str) -> str:
        return self.i_plus[e] if self.i_plus else e

    @cached_property
    def by_base(self) -> dict[str, Cylinder]:
        return {c.base: c for c in self.cylinders}

    @cached_property
    def by_cell(self) -> dict[str, Cylinder]:
        return {c.cell: c for c in self.cylinders}

    @cached_property
    def l_inverse(self) -> dict[str, str]:
        return {v: k for k, v in self.l.items()}

    def to_json(self) -> dict:
        out = {
            "N_minus": sorted(self.N_minus),
            "N_plus": sorted(self.N_plus),
            "l": dict(sorted(self.l.items())),
            "R": sorted(self.R),
            "i_minus": dict(sorted(self.i_minus.items())),
            "cylinders": [{"base": c.base, "cell": c.cell, "sign": c.sign} for c in self.cylinders],
        }
        if self.i_plus:
            out["i_plus"] = dict(sorted(self.i_plus.items()))
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> "Cut":
        try:
            cyl = tuple(Cylinder(str(c["base"]), str(c["cell"]), int(c.get("sign", 1))) for c in data["cylinders"])
            return cls(frozenset(data["N_minus"]), frozenset(data["N_plus"]), dict(data["l"]),
                       frozenset(data["R"]), dict(data["i_minus"]), cyl,
                       dict(data["i_plus"]) if data.get("i_plus") else None)
        except KeyError as exc:
            raise GluingError(f"cut is missing field {exc}") from exc


@dataclass(frozen=True)
class GluingData:
    name: str
    domain: CellComplex
    cuts: tuple[Cut, ...]

    @property
    def s(self) -> int:
        return len(self.cuts)

    def cut(self, k: int) -> Cut:
        if not 1 <= k <= self.s:
            raise GluingError(f"stage {k} outside 1..{self.s}")
        return self.cuts[k - 1]

    # -- the nested domains N_{0,k} ------------------------------------------
    @cached_property
    def _stages(self) -> list[frozenset]:
        cells = frozenset(c.id for c in self.domain.cells)
        out = [cells]
        for cut in self.cuts:
            cells = cells - {c.cell for c in cut.cylinders}
            out.append(cells)
        return out

    def N0(self, k: int) -> frozenset:
        """Cell ids of N_{0,k}; ``N0(0)`` is the whole domain."""
        return self._stages[k]

    def collar_base(self, k: int) -> list[str]:
        """Cells of R_k that survive the earlier excisions, ascending id."""
        keep = self.N0(k - 1)
        return sorted(c for c in self.cut(k).R if c in keep)

    @cached_property
    def plus_cells(self) -> frozenset:
        out = frozenset()
        for cut in self.cuts:
            out |= cut.N_plus
        return out

    def dim(self, cid: str) -> int:
        return self.domain[cid].dim

    # -- the maps of the construction ---------------------------------------
    def d(self, chain: Mapping) -> Chain:
        return self.domain.boundary(chain)

    def theta(self, k: int, chain: Mapping) -> Chain:
        cut = self.cut(k)
        out: Chain = {}
        for e, a in chain.items():
            cyl = cut.by_base.get(e)
            if cyl is None:
                raise GluingError(f"cell {e!r} has no cylinder in collar {k}")
            out = chain_add(out, {cyl.cell: a * cyl.sign * (-1) ** self.dim(e)})
        return out

    def decompose(self, k: int, chain: Mapping) -> tuple[Chain, Chain]:
        """Split a chain of N_{0,k-1} into its collar part and the rest."""
        cut = self.cut(k)
        allowed = self.N0(k - 1)
        beta: Chain = {}
        rest: Chain = {}
        for c, a in chain.items():
            if c not in allowed:
                raise GluingError(f"cell {c!r} is not in N_(0,{k - 1})")
            cyl = cut.by_cell.get(c)
            if cyl is None:
                rest = chain_add(rest, {c: a})
            else:
                beta = chain_add(beta, {cyl.base: a * cyl.sign * (-1) ** self.dim(cyl.base)})
        return beta, rest

    def beta(self, k: int, chain: Mapping) -> Chain:
        return self.decompose(k, chain)[0]

    def beta_prime(self, k: int, chain: Mapping) -> Chain:
        return self.decompose(k, chain)[1]

    def f(self, k: int, chain: Mapping) -> Chain:
        """l_k i_{k,-} - i_{k,+} on chains of the collar base."""
        cut = self.cut(k)
        out: Chain = {}
        for e, a in chain.items():
            out = chain_add(out, {cut.l[cut.i_minus[e]]: a})
            out = chain_add(out, {cut.iplus(e): -a})
        return out

    def i_plus(self, k: int, chain: Mapping) -> Chain:
        cut = self.cut(k)
        out: Chain = {}
        for e, a in chain.items():
            out = chain_add(out, {cut.iplus(e): a})
        return out

    def reduce(self, cid: str) -> tuple[tuple[int, ...], str]:
        """Translate a cell of some N_plus back to its representative.

        Returns the deck exponent m and the representative cell; the cell
        equals t^m times the representative in the cover.
        """
        m = [0] * self.s
        seen = 0
        while True:
            for i, cut in enumerate(self.cuts):
                if cid in cut.N_plus:
                    cid = cut.l_inverse[cid]
                    m[i] += 1
                    break
            else:
                return tuple(m), cid
            seen += 1
            if seen > 64 * max(1, self.s):
                raise GluingError("N_plus translations do not terminate")

    # -- I/O ------------------------------------------------------------------
    def to_json(self) -> dict:
        return {"name": self.name, "domain": self.domain.to_json(), "cuts": [c.to_json() for c in self.cuts]}

    @classmethod
    def from_json(cls, data: Mapping) -> "GluingData":
        try:
            domain = CellComplex.from_json(data["domain"])
            cuts = tuple(Cut.from_json(c) for c in data["cuts"])
        except KeyError as exc:
            raise GluingError(f"gluing JSON is missing field {exc}") from exc
        return cls(data.get("name", "gluing"), domain, cuts)

    @cached_property
    def report(self) -> list[str]:
        return _gluing_issues(self)

    def validated(self) -> "GluingData":
        if self.report:
            raise GluingError(f"invalid gluing data {self.name!r}: " + "; ".join(self.report))
        return self


def load_gluing(path) -> GluingData:
    return GluingData.from_json(json.loads(Path(path).read_text()))


def _is_chain_map(X: CellComplex, mapping: Mapping[str, str]) -> list[str]:
    bad = []
    for src, dst in mapping.items():
        if X[src].dim != X[dst].dim:
            bad.append(f"{src}->{dst} changes dimension")
            continue
        image: Chain = {}
        for face, a in X[src].boundary_chain().items():
            if face not in mapping:
                bad.append(f"face {face} of {src} is outside the map's domain")
                break
            image = chain_add(image, {mapping[face]: a})
        else:
            if image != X[dst].boundary_chain():
                bad.append(f"{src}->{dst} does not commute with the boundary")
    return bad


def _gluing_issues(G: GluingData) -> list[str]:
    X = G.domain
    issues = [f"domain: {i.cell}: {i.message}" for i in X.report.issues]
    if issues:
        return issues
    used = set()
    for k, cut in enumerate(G.cuts, start=1):
        tag = f"cut {k}"
        for label, ids in (("N_minus", cut.N_minus), ("N_plus", cut.N_plus), ("R", cut.R)):
            if not X.is_subcomplex(ids):
                issues.append(f"{tag}: {label} is not a subcomplex")
        if issues:
            continue
        if set(cut.l) != set(cut.N_minus) or sorted(cut.l.values()) != sorted(cut.N_plus):
            issues.append(f"{tag}: l is not a bijection N_minus -> N_plus")
        else:
            issues += [f"{tag}: l: {m}" for m in _is_chain_map(X, cut.l)]
        if set(cut.i_minus) != set(cut.R) or sorted(cut.i_minus.values()) != sorted(cut.N_minus):
            issues.append(f"{tag}: i_minus is not a bijection R -> N_minus")
        else:
            issues += [f"{tag}: i_minus: {m}" for m in _is_chain_map(X, cut.i_minus)]
        if cut.i_plus:
            if set(cut.i_plus) != set(cut.R) or len(set(cut.i_plus.values())) != len(cut.R):
                issues.append(f"{tag}: i_plus is not injective on R")
            else:
                issues += [f"{tag}: i_plus: {m}" for m in _is_chain_map(X, cut.i_plus)]
        prev = G.N0(k - 1)
        bases = [c.base for c in cut.cylinders]
        if len(set(bases)) != len(bases):
            issues.append(f"{tag}: repeated cylinder base")
        expected = set(G.collar_base(k))
        if set(bases) != expected:
            issues.append(f"{tag}: cylinder bases {sorted(set(bases))} differ from R cells still present "
                          f"{sorted(expected)}")
        for c in cut.cylinders:
            if c.cell not in X:
                issues.append(f"{tag}: cylinder cell {c.cell!r} does not exist")
            elif c.cell not in prev or c.cell in used:
                issues.append(f"{tag}: cylinder cell {c.cell!r} was already excised")
            elif c.base in X and X[c.cell].dim != X[c.base].dim + 1:
                issues.append(f"{tag}: cylinder cell {c.cell!r} has the wrong dimension")
            if c.sign not in (1, -1):
                issues.append(f"{tag}: cylinder sign for {c.base!r} must be ±1")
            used.add(c.cell)
        if issues:
            continue
        if not X.is_subcomplex(G.N0(k)):
            issues.append(f"{tag}: removing the collar leaves a non-subcomplex")
            continue
        for e in G.collar_base(k):
            bad = [c for c in G.f(k, {e: 1}) if c not in G.N0(k)]
            if bad:
                issues.append(f"{tag}: f({e}) leaves N_(0,{k}) at {bad}")
    return issues


# -- deformation complexes ----------------------------------------------------

@dataclass(frozen=True)
class DeformationComplex:
    """D^k with its block lower-triangular differential.

    ``positive`` marks the t = 0 complex in which f_n is replaced by -i_{n,+}
    and all cells of the N_plus sections are dropped.
    """

    gluing: GluingData
    k: int
    basis: Mapping[int, tuple[Label, ...]]
    columns: Mapping[Label, Chain]
    positive: bool = False

    def degree(self, label: Label) -> int:
        return self.gluing.dim(label[-1]) + (1 if label[0] == "R" else 0)

    def differential(self, chain: Mapping) -> Chain:
        out: Chain = {}
        for lab, a in chain.items():
            out = chain_add(out, self.columns[lab], a)
        return out

    @cached_property
    def chain_complex(self) -> ChainComplex:
        diff = {}
        top = max(self.basis, default=-1)
        for q in range(1, top + 1):
            rows = {lab: i for i, lab in enumerate(self.basis.get(q - 1, ()))}
            cols = self.basis.get(q, ())
            M = linalg.zeros(len(rows), len(cols))
            for j, lab in enumerate(cols):
                for r, a in self.columns[lab].items():
                    M[rows[r]][j] += a
            diff[q] = M
        return ChainComplex(dict(self.basis), diff)

    def square_zero_failures(self) -> list[Label]:
        bad = []
        for lab, col in self.columns.items():
            if self.differential(col):
                bad.append(lab)
        return bad

    def homology(self, coeffs="Z") -> HomologyResult:
        return self.chain_complex.homology(coeffs)

    def block(self, row_tag: tuple, col_tag: tuple) -> dict[tuple[str, str], int]:
        """Nonzero entries of one block, keyed by (row cell, column cell)."""
        out = {}
        for lab, col in self.columns.items():
            if lab[:-1] != col_tag:
                continue
            for r, a in col.items():
                if r[:-1] == row_tag:
                    out[(r[-1], lab[-1])] = a
        return out


def _push_through(G: GluingData, start: int, k: int, chain: Chain) -> Chain:
    """Apply beta_m to successive remainders for m = start..k."""
    out: Chain = {}
    c = chain
    for m in range(start, k + 1):
        b, c = G.decompose(m, c)
        for e, a in b.items():
            out[("R", m, e)] = out.get(("R", m, e), 0) + a
    for x, a in c.items():
        out[("N", x)] = out.get(("N", x), 0) + a
    return {lab: a for lab, a in out.items() if a}


def _assemble(G: GluingData, k: int, positive: bool) -> DeformationComplex:
    labels: list[Label] = []
    columns: dict[Label, Chain] = {}
    for n in range(1, k + 1):
        for e in G.collar_base(n):
            lab = ("R", n, e)
            labels.append(lab)
            col = {("R", n, x): -a for x, a in G.d({e: 1}).items()}
            image = chain_scale(G.i_plus(n, {e: 1}), -1) if positive else G.f(n, {e: 1})
            for r, a in _push_through(G, n + 1, k, image).items():
                col[r] = col.get(r, 0) + a
            columns[lab] = {r: a for r, a in col.items() if a}
    for x in sorted(G.N0(k)):
        lab = ("N", x)
        labels.append(lab)
        columns[lab] = {("N", y): a for y, a in G.d({x: 1}).items()}
    if positive:
        dead = G.plus_cells
        labels = [lab for lab in labels if lab[-1] not in dead]
        columns = {lab: {r: a for r, a in columns[lab].items() if r[-1] not in dead} for lab in labels}
    basis: dict[int, list] = {}
    for lab in labels:
        q = G.dim(lab[-1]) + (1 if lab[0] == "R" else 0)
        basis.setdefault(q, []).append(lab)
    top = max(basis, default=-1)
    basis_t = {q: tuple(basis.get(q, ())) for q in range(top + 1)}
    return DeformationComplex(G, k, basis_t, columns, positive)


def build_deformation_complex(G: GluingData, k: int) -> DeformationComplex:
    """D^k; ``k = 0`` gives the cellular complex of the whole domain."""
    G.validated()
    if not 0 <= k <= G.s:
        raise GluingError(f"stage {k} outside 0..{G.s}")
    D = _assemble(G, k, positive=False)
    bad = D.square_zero_failures()
    if bad:
        raise AssertionError(f"D^{k} differential does not square to zero at {bad[:5]}")
    return D


def decompose_chain(G: GluingData, k: int, chain: Mapping) -> tuple[Chain, Chain]:
    """(beta_k(c), beta'_k(c)); raises unless theta_k(beta) + beta' == c."""
    beta, rest = G.decompose(k, dict(chain))
    if chain_add(G.theta(k, beta), rest) != {c: a for c, a in chain.items() if a}:
        raise AssertionError("decomposition does not reconstruct the chain")
    return beta, rest


# -- verification of the identities -----------------------------------------

@dataclass
class IdentityReport:
    k: int
    checked: dict[int, int] = field(default_factory=dict)
    failures: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def fail(self, identity: int, cell: str, detail: str, **extra):
        self.failures.append({"identity": identity, "cell": cell, "detail": detail, **extra})

    def as_dict(self):
        return {"k": self.k, "ok": self.ok, "checked": {str(i): n for i, n in sorted(self.checked.items())},
                "failures": self.failures}


def _fmt(chain: Mapping) -> str:
    return "{" + ", ".join(f"{k}: {v}" for k, v in sorted(chain.items(), key=str)) + "}"


def _cone_d(G: GluingData, k: int, chain: Mapping) -> Chain:
    """Cone differential (x, y) -> (-d x, f x + d y); labels ("R", e) / ("N", c)."""
    out: Chain = {}
    for (tag, cell), a in chain.items():
        if tag == "R":
            for x, b in G.d({cell: 1}).items():
                out = chain_add(out, {("R", x): -a * b})
            for x, b in G.f(k, {cell: 1}).items():
                out = chain_add(out, {("N", x): a * b})
        else:
            for x, b in G.d({cell: 1}).items():
                out = chain_add(out, {("N", x): a * b})
    return out


def _theta_one(G: GluingData, k: int, chain: Mapping) -> Chain:
    out: Chain = {}
    for (tag, cell), a in chain.items():
        out = chain_add(out, G.theta(k, {cell: a}) if tag == "R" else {cell: a})
    return out


def _beta_pair(G: GluingData, k: int, chain: Mapping) -> Chain:
    beta, rest = G.decompose(k, chain)
    out = {("R", e): a for e, a in beta.items()}
    out.update({("N", c): a for c, a in rest.items()})
    return out


def verify_gluing_identities(G: GluingData, k: int) -> IdentityReport:
    """Check the five chain-level identities of stage k on every basis cell."""
    G.validated()
    rep = IdentityReport(k)
    cut = G.cut(k)
    base = G.collar_base(k)
    prev = sorted(G.N0(k - 1))
    cone_basis = [("R", e) for e in base] + [("N", c) for c in sorted(G.N0(k))]
    rep.checked = {1: len(base), 2: len(prev), 3: len(prev), 4: len(cone_basis), 5: len(prev)}
    for e in base:
        lhs = chain_add(G.d(G.theta(k, {e: 1})), G.theta(k, G.d({e: 1})))
        rhs = G.f(k, {e: 1})
        if lhs != rhs:
            rep.fail(1, e, f"d theta + theta d = {_fmt(lhs)} but f = {_fmt(rhs)}",
                     cylinder=cut.by_base[e].cell)
    for c in prev:
        beta, rest = G.decompose(k, {c: 1})
        dc = G.d({c: 1})
        b_dc, r_dc = G.decompose(k, dc)
        lhs2 = chain_add(b_dc, G.d(beta))
        if lhs2:
            rep.fail(2, c, f"beta d + d beta = {_fmt(lhs2)}")
        lhs3 = chain_add(r_dc, G.d(rest), -1)
        rhs3 = G.f(k, beta)
        if lhs3 != rhs3:
            rep.fail(3, c, f"beta' d - d beta' = {_fmt(lhs3)} but f beta = {_fmt(rhs3)}")
        lhs5 = _beta_pair(G, k, dc)
        rhs5 = _cone_d(G, k, _beta_pair(G, k, {c: 1}))
        if lhs5 != rhs5:
            rep.fail(5, c, f"(beta; beta') d = {_fmt(lhs5)} but d_c (beta; beta') = {_fmt(rhs5)}")
    for lab in cone_basis:
        lhs4 = G.d(_theta_one(G, k, {lab: 1}))
        rhs4 = _theta_one(G, k, _cone_d(G, k, {lab: 1}))
        if lhs4 != rhs4:
            rep.fail(4, lab[1], f"d (theta, 1) = {_fmt(lhs4)} but (theta, 1) d_c = {_fmt(rhs4)}",
                     summand=lab[0])
    return rep


@dataclass
class ConeReport:
    k: int
    left_identity: bool
    right_identity: bool
    chain_maps: bool
    cone_ranks: tuple[int, ...]
    domain_ranks: tuple[int, ...]
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.left_identity and self.right_identity and self.chain_maps and self.cone_ranks == self.domain_ranks

    def as_dict(self):
        return {"k": self.k, "ok": self.ok, "left_identity": self.left_identity,
                "right_identity": self.right_identity, "chain_maps": self.chain_maps,
                "cone_ranks": list(self.cone_ranks), "domain_ranks": list(self.domain_ranks),
                "failures": self.failures}


def cone_isomorphism_check(G: GluingData, k: int, coeffs="Z") -> ConeReport:
    """(theta, 1) and (beta; beta') are inverse chain isomorphisms at stage k."""
    G.validated()
    prev = sorted(G.N0(k - 1))
    cone_basis = [("R", e) for e in G.collar_base(k)] + [("N", c) for c in sorted(G.N0(k))]
    failures = []
    left = True
    for c in prev:
        back = _theta_one(G, k, _beta_pair(G, k, {c: 1}))
        if back != {c: 1}:
            left = False
            failures.append(f"(theta,1)(beta;beta') moves {c}")
    right = True
    for lab in cone_basis:
        back = _beta_pair(G, k, _theta_one(G, k, {lab: 1}))
        if back != {lab: 1}:
            right = False
            failures.append(f"(beta;beta')(theta,1) moves {lab}")
    chain_maps = verify_gluing_identities(G, k)
    maps_ok = not [f for f in chain_maps.failures if f["identity"] in (4, 5)]
    # homology of the cone, degree q = C_{q-1}(R) + C_q(N_{0,k})
    basis: dict[int, list] = {}
    for lab in cone_basis:
        q = G.dim(lab[1]) + (1 if lab[0] == "R" else 0)
        basis.setdefault(q, []).append(lab)
    top = max(basis, default=-1)
    diff = {}
    for q in range(1, top + 1):
        rows = {lab: i for i, lab in enumerate(basis.get(q - 1, []))}
        M = linalg.zeros(len(rows), len(basis.get(q, [])))
        for j, lab in enumerate(basis.get(q, [])):
            for r, a in _cone_d(G, k, {lab: 1}).items():
                M[rows[r]][j] += a
        diff[q] = M
    cone = ChainComplex({q: tuple(basis.get(q, [])) for q in range(top + 1)}, diff)
    cone_ranks = cone.homology(coeffs).padded(G.domain.dimension)
    before = G.domain.chain_complex(exclude=set(G.domain.by_id) - G.N0(k - 1))
    domain_ranks = before.homology(coeffs).padded(G.domain.dimension)
    return ConeReport(k, left, right, maps_ok, cone_ranks, domain_ranks, failures)


@dataclass
class StageReport:
    ranks: dict[int, tuple[int, ...]]
    square_zero: dict[int, bool]
    chain_maps: dict[int, bool]
    inverses: dict[int, bool]

    @property
    def k_independent(self) -> bool:
        return len(set(self.ranks.values())) == 1

    @property
    def ok(self) -> bool:
        return (self.k_independent and all(self.square_zero.values()) and all(self.chain_maps.values())
                and all(self.inverses.values()))

    def as_dict(self):
        return {"ok": self.ok, "k_independent": self.k_independent,
                "ranks": {str(k): list(r) for k, r in sorted(self.ranks.items())},
                "square_zero": {str(k): v for k, v in sorted(self.square_zero.items())},
                "chain_maps": {str(k): v for k, v in sorted(self.chain_maps.items())},
                "inverses": {str(k): v for k, v in sorted(self.inverses.items())}}


def _stage_map(G: GluingData, k: int, chain: Mapping) -> Chain:
    """D^k -> D^{k-1}: identity on earlier collars, (theta_k, 1) on the rest."""
    out: Chain = {}
    for lab, a in chain.items():
        if lab[0] == "R" and lab[1] < k:
            out = chain_add(out, {lab: a})
        elif lab[0] == "R":
            out = chain_add(out, {("N", c): b for c, b in G.theta(k, {lab[2]: a}).items()})
        else:
            out = chain_add(out, {lab: a})
    return out


def _stage_inverse(G: GluingData, k: int, chain: Mapping) -> Chain:
    out: Chain = {}
    for lab, a in chain.items():
        if lab[0] == "R":
            out = chain_add(out, {lab: a})
        else:
            beta, rest = G.decompose(k, {lab[1]: a})
            out = chain_add(out, {("R", k, e): b for e, b in beta.items()})
            out = chain_add(out, {("N", c): b for c, b in rest.items()})
    return out


def stage_independence(G: GluingData, coeffs="Z") -> StageReport:
    """Homology of D^0..D^s and the explicit isomorphisms D^k -> D^{k-1}."""
    G.validated()
    complexes = {k: _assemble(G, k, False) for k in range(G.s + 1)}
    top = G.domain.dimension
    ranks = {k: D.homology(coeffs).padded(top) for k, D in complexes.items()}
    square_zero = {k: not D.square_zero_failures() for k, D in complexes.items()}
    chain_maps, inverses = {}, {}
    for k in range(1, G.s + 1):
        D, Dprev = complexes[k], complexes[k - 1]
        labels = [lab for q in sorted(D.basis) for lab in D.basis[q]]
        prev_labels = [lab for q in sorted(Dprev.basis) for lab in Dprev.basis[q]]
        chain_maps[k] = all(
            _stage_map(G, k, D.columns[lab]) == Dprev.differential(_stage_map(G, k, {lab: 1}))
            for lab in labels)
        inverses[k] = (all(_stage_inverse(G, k, _stage_map(G, k, {lab: 1})) == {lab: 1} for lab in labels)
                       and all(_stage_map(G, k, _stage_inverse(G, k, {lab: 1})) == {lab: 1}
                               for lab in prev_labels))
    return StageReport(ranks, square_zero, chain_maps, inverses)


# -- evaluation at t = 0 -------------------------------------------------------

def _kron_identity(M: list[list[int]], k: int) -> list[list[int]]:
    if k == 1:
        return M
    rows = len(M) * k
    cols = (len(M[0]) if M else 0) * k
    out = linalg.zeros(rows, cols)
    for i, row in enumerate(M):
        for j, a in enumerate(row):
            if a:
                for r in range(k):
                    out[i * k + r][j * k + r] = a
    return out


def _fiber_rank(E) -> int:
    if E is None:
        return 1
    if isinstance(E, int):
        return E
    return E.k


@dataclass
class ZeroEvaluationReport:
    coefficients: str
    fiber_rank: int
    complex_ranks: tuple[int, ...]
    relative_ranks: tuple[int, ...]
    positive: DeformationComplex

    @property
    def agree(self) -> bool:
        return self.complex_ranks == self.relative_ranks

    def as_dict(self):
        return {"coefficients": self.coefficients, "fiber_rank": self.fiber_rank, "agree": self.agree,
                "positive_complex_ranks": list(self.complex_ranks),
                "relative_ranks": list(self.relative_ranks)}


def positive_complex(G: GluingData) -> DeformationComplex:
    """D^{s,0}: the deformation complex at t = 0 with N_plus cells removed."""
    G.validated()
    D = _assemble(G, G.s, positive=True)
    bad = D.square_zero_failures()
    if bad:
        raise AssertionError(f"t = 0 complex does not square to zero at {bad[:5]}")
    return D


def zero_evaluation_complex(G: GluingData, p: int | None = 2, E=None, coeffs=None) -> ZeroEvaluationReport:
    """Homology of D^{s,0} versus relative homology of the cut domain.

    At t = 0 every nontrivial deck translate dies, so a local system pulled
    back along the cut contributes ``k`` untwisted copies.  ``coeffs``
    overrides ``p`` (e.g. "Q" or "Z" for the untwisted-field variant).
    """
    ring = Coefficients.parse(coeffs if coeffs is not None else p)
    k = _fiber_rank(E)
    D = positive_complex(G)
    cc = D.chain_complex
    top = G.domain.dimension
    tensored = ChainComplex(
        {q: tuple((lab, i) for lab in b for i in range(k)) for q, b in cc.basis.items()},
        {q: _kron_identity(M, k) for q, M in cc.differential.items()})
    lhs = tensored.homology(ring).padded(top)
    sub = set(G.plus_cells)
    last = G.N0(G.s)
    for cut in G.cuts:
        sub |= {cut.iplus(e) for e in cut.R if cut.iplus(e) in last}
    domain = G.domain.restrict(last, name=f"{G.name}:N0s")
    rel = relative_homology(domain, sub & last, ring)
    rhs = tuple(k * r for r in rel.padded(top))
    rep = ZeroEvaluationReport(str(ring), k, lhs, rhs, D)
    if not rep.agree:
        raise GluingMismatch(f"t = 0 homology {lhs} differs from relative homology {rhs} over {ring}")
    return rep


# -- reassembly and the twisted cross-check ------------------------------------

def glued_complex(G: GluingData) -> tuple[CellComplex, CellularCocycle]:
    """Reassemble X from the domain and return it with the cut-dual cocycle."""
    G.validated()
    X0 = G.domain
    dead = G.plus_cells
    rep = {c.id: G.reduce(c.id) for c in X0.cells}
    cells = []
    values = {}
    for c in X0.cells:
        if c.id in dead:
            continue
        bd = tuple((rep[f][1], a) for f, a in c.boundary)
        loop = tuple((rep[e][1], s) for e, s in c.loop) if c.loop is not None else None
        if c.dim == 2 and loop is None:
            loop = tuple((rep[e][1], 1 if a > 0 else -1) for e, a in c.boundary for _ in range(abs(a)))
        cells.append(Cell(c.id, c.dim, bd, loop))
        if c.dim == 1:
            tail, head = X0.edge_ends(c.id)
            values[c.id] = tuple(h - t for h, t in zip(rep[head][0], rep[tail][0]))
    X = CellComplex(f"{G.name}:glued", tuple(cells)).validated()
    return X, CellularCocycle(X, G.s, values).check()


def _matrix_power_product(mats: Sequence, m: Sequence[int], k: int):
    out = linalg.identity(k)
    for A, e in zip(mats, m):
        if e:
            B = A if e > 0 else linalg.inverse_unimodular(A)
            for _ in range(abs(e)):
                out = linalg.matmul(out, B)
    return out


def _check_commuting(mats: Sequence, k: int) -> list:
    mats = [[list(map(int, r)) for r in A] for A in mats]
    for A in mats:
        if len(A) != k or abs(linalg.determinant(A)) != 1:
            raise GluingError("cut monodromy must be unimodular k x k matrices")
    for i, A in enumerate(mats):
        for B in mats[i + 1:]:
            if linalg.matmul(A, B) != linalg.matmul(B, A):
                raise GluingError("cut monodromies must commute")
    return mats


@dataclass(frozen=True)
class TwistedDeformation:
    """D^s over Z[t^{±1}] obtained by folding N_plus cells onto their translates."""

    basis: Mapping[int, tuple]
    matrices: Mapping[int, list]
    nvars: int
    equivariant: bool

    def evaluate_ranks(self, point, top: int) -> tuple[int, ...]:
        rank = {}
        for q, M in self.matrices.items():
            rank[q] = linalg.rank_rational(evaluate_matrix(M, point)) if M and M[0] else 0
        return tuple(len(self.basis.get(q, ())) - rank.get(q, 0) - rank.get(q + 1, 0) for q in range(top + 1))


def twisted_deformation_complex(G: GluingData, cut_monodromy: Sequence | None = None) -> TwistedDeformation:
    G.validated()
    s = G.s
    k = len(cut_monodromy[0]) if cut_monodromy else 1
    mats = _check_commuting(cut_monodromy, k) if cut_monodromy else None
    D = _assemble(G, s, positive=False)
    dead = G.plus_cells

    def fold(chain: Mapping) -> dict[Label, Laurent]:
        out: dict[Label, Laurent] = {}
        for lab, a in chain.items():
            m, r = G.reduce(lab[-1])
            key = lab[:-1] + (r,)
            if key not in D.columns:
                raise GluingError(f"translate of {lab} is not a basis cell of its summand")
            out[key] = out.get(key, Laurent.zero(s)) + Laurent.monomial(m, a)
        return {lab: v for lab, v in out.items() if v}

    equivariant = True
    for lab in D.columns:
        if lab[-1] not in dead:
            continue
        m, r = G.reduce(lab[-1])
        rep_lab = lab[:-1] + (r,)
        lhs = fold(D.columns[lab])
        rhs = {x: v.shift(m) for x, v in fold(D.columns[rep_lab]).items()}
        if lhs != rhs:
            equivariant = False
    basis = {q: tuple((lab, i) for lab in labs if lab[-1] not in dead for i in range(k))
             for q, labs in D.basis.items()}
    matrices = {}
    for q in range(1, max(basis, default=0) + 1):
        rows = {b: i for i, b in enumerate(basis.get(q - 1, ()))}
        cols = [lab for lab in D.basis.get(q, ()) if lab[-1] not in dead]
        M = lzeros(len(rows), len(cols) * k, s)
        for j, lab in enumerate(cols):
            for r, poly in fold(D.columns[lab]).items():
                for exp, a in poly.terms.items():
                    blk = _matrix_power_product(mats, exp, k) if mats else [[1]]
                    for i in range(k):
                        for jj in range(k):
                            if blk[i][jj]:
                                # row-vector block, stored transposed
                                ri = rows[(r, jj)]
                                M[ri][j * k + i] = M[ri][j * k + i] + Laurent.monomial(exp, a * blk[i][jj])
        matrices[q] = M
    return TwistedDeformation(basis, matrices, s, equivariant)


@dataclass
class CrosscheckReport:
    point: tuple
    gluing_ranks: tuple[int, ...]
    direct_ranks: tuple[int, ...]
    equivariant: bool

    @property
    def agree(self) -> bool:
        return self.gluing_ranks == self.direct_ranks

    def as_dict(self):
        return {"point": [str(x) for x in self.point], "gluing_ranks": list(self.gluing_ranks),
                "direct_ranks": list(self.direct_ranks), "equivariant": self.equivariant, "agree": self.agree}


def reconstruct_and_crosscheck(G: GluingData, a, cut_monodromy: Sequence | None = None) -> CrosscheckReport:
    """Compare twisted ranks at t = a computed from the cuts and from the glued space."""
    point = tuple(a) if isinstance(a, (list, tuple)) else (a,)
    if len(point) != G.s or any(x == 0 for x in point):
        raise GluingError(f"need {G.s} nonzero evaluation coordinate(s)")
    top = G.domain.dimension
    TD = twisted_deformation_complex(G, cut_monodromy)
    fpoint = tuple(Fraction(x) for x in point)
    lhs = TD.evaluate_ranks(fpoint, top)
    X, alpha = glued_complex(G)
    E = None
    if cut_monodromy:
        k = len(cut_monodromy[0])
        mats = _check_commuting(cut_monodromy, k)
        E = MonodromyRep(k, {e: _matrix_power_product(mats, alpha(e), k) for e in X.ids(1) if any(alpha(e))})
    rhs = evaluated_homology(build_twisted_complex(X, alpha, E), fpoint).padded(top)
    rep = CrosscheckReport(point, lhs, rhs, TD.equivariant)
    if not rep.agree or not rep.equivariant:
        raise GluingMismatch(f"gluing route {lhs} vs direct route {rhs} at {point} "
                             f"(equivariant: {TD.equivariant})")
    return rep


# -- orientation conventions -----------------------------------------------------

def reorient(X: CellComplex, ids: Iterable[str], name: str | None = None) -> CellComplex:
    """Reverse the orientation of the given cells."""
    flip = set(ids)
    cells = []
    for c in X.cells:
        bd = tuple((f, -a if f in flip else a) for f, a in c.boundary)
        if c.id in flip:
            bd = tuple((f, -a) for f, a in bd)
        loop = c.loop
        if loop is not None:
            loop = tuple((e, -s if e in flip else s) for e, s in loop)
            if c.id in flip:
                loop = tuple((e, -s) for e, s in reversed(loop))
        cells.append(Cell(c.id, c.dim, bd, loop))
    return CellComplex(name or X.name, tuple(cells))


def flip_convention(G: GluingData) -> GluingData:
    """Same space with every cylinder cell oriented the other way.

    Cylinder signs are negated too, so the data stay consistent while every
    theta_k changes sign in the cell basis.  A corner base that is itself a
    cylinder is reoriented as well, which flips its product cell once more.
    """
    cyl_cells = {c.cell for cut in G.cuts for c in cut.cylinders}
    domain = reorient(G.domain, cyl_cells)

    def new_sign(c: Cylinder) -> int:
        return c.sign if c.base in cyl_cells else -c.sign

    cuts = tuple(replace(cut, cylinders=tuple(Cylinder(c.base, c.cell, new_sign(c)) for c in cut.cylinders))
                 for cut in G.cuts)
    return GluingData(f"{G.name}:flipped", domain, cuts)


def flip_cylinder(G: GluingData, k: int, base: str) -> GluingData:
    """Corrupt one cylinder record by negating its sign (for negative tests)."""
    cuts = list(G.cuts)
    cut = cuts[k - 1]
    cuts[k - 1] = replace(cut, cylinders=tuple(
        Cylinder(c.base, c.cell, -c.sign if c.base == base else c.sign) for c in cut.cylinders))
    return GluingData(f"{G.name}:bad", G.domain, tuple(cuts))
