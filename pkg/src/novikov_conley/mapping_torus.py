"""Mapping tori of cellular automorphisms and their suspension flows."""
from __future__ import annotations

from typing import Mapping

from .complexes import Cell, CellComplex, ComplexError
from .flows import CombinatorialFlow
from .twisted import CellularCocycle


def cylinder_id(cid: str) -> str:
    return f"{cid}~I"


def check_automorphism(X: CellComplex, f: Mapping[str, str]) -> dict[str, str]:
    """Validate that f permutes cells, preserves dimension and commutes with the boundary."""
    X.validated()
    ids = {c.id for c in X.cells}
    f = {str(k): str(v) for k, v in f.items()}
    f = {c: f.get(c, c) for c in ids}
    if set(f.values()) != ids or any(k not in ids for k in f):
        raise ComplexError("the map is not a bijection of the cells")
    for c in X.cells:
        img = X[f[c.id]]
        if img.dim != c.dim:
            raise ComplexError(f"{c.id} and its image {img.id} have different dimensions")
        pushed: dict[str, int] = {}
        for face, a in c.boundary_chain().items():
            pushed[f[face]] = pushed.get(f[face], 0) + a
        if {k: v for k, v in pushed.items() if v} != {k: v for k, v in img.boundary_chain().items() if v}:
            raise ComplexError(f"the map does not commute with the boundary at {c.id}")
    return f


def mapping_torus(X: CellComplex, f: Mapping[str, str] | None = None) -> tuple[CellComplex, CellularCocycle]:
    """The mapping torus of f with its fiber class.

    Each cell e gains a cylinder e~I one dimension up, with boundary
    f(e) - e - (boundary of e)~I.  The class is 1 on every vertex cylinder.
    """
    f = check_automorphism(X, f or {})
    cells = list(X.cells)
    for c in X.cells:
        cyl = cylinder_id(c.id)
        if cyl in X:
            raise ComplexError(f"cell id {cyl} is already taken")
        # entries are kept unmerged: f(e) and e are different lifts even when equal as cells
        boundary = ((f[c.id], 1), (c.id, -1)) + tuple((cylinder_id(face), -a) for face, a in c.boundary)
        loop = None
        if c.dim == 1:
            tail, head = X.edge_ends(c.id)
            loop = ((cylinder_id(tail), 1), (f[c.id], 1), (cylinder_id(head), -1), (c.id, -1))
            boundary = loop
        cells.append(Cell(cyl, c.dim + 1, boundary, loop))
    T = CellComplex(f"mapping torus of {X.name}", tuple(cells)).validated()
    alpha = CellularCocycle(T, 1, {cylinder_id(v): (1,) for v in X.ids(0)}).check()
    return T, alpha


def suspension_flow(X: CellComplex, f: Mapping[str, str] | None = None) -> CombinatorialFlow:
    """Each vertex flows to its image in unit time, gaining 1 of the fiber class."""
    f = check_automorphism(X, f or {})
    return CombinatorialFlow.build(X.ids(0), [(v, f[v], (1,)) for v in X.ids(0)],
                                   name=f"suspension of {X.name}")
