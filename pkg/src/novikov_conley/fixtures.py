"""Built-in example complexes and gluing data."""
from __future__ import annotations

from .complexes import Cell, CellComplex
from .flows import CombinatorialFlow
from .gluing import Cut, Cylinder, GluingData
from .twisted import CellularCocycle


def _edge(eid: str, tail: str, head: str) -> Cell:
    return Cell(eid, 1, ((head, 1), (tail, -1)))


def point() -> CellComplex:
    return CellComplex("point", (Cell("v", 0),))


def two_points() -> CellComplex:
    return CellComplex("two points", (Cell("a", 0), Cell("b", 0)))


def interval() -> CellComplex:
    return CellComplex("interval", (Cell("v0", 0), Cell("v1", 0), _edge("e", "v0", "v1")))


def circle() -> CellComplex:
    """One vertex, one edge with zero boundary."""
    return CellComplex("circle", (Cell("v", 0), _edge("e", "v", "v")))


def two_cell_circle() -> CellComplex:
    return CellComplex("circle2", (Cell("v1", 0), Cell("v2", 0), _edge("e1", "v1", "v2"), _edge("e2", "v2", "v1")))


def torus() -> CellComplex:
    """Minimal torus; the 2-cell is attached along a b a^-1 b^-1."""
    word = (("a", 1), ("b", 1), ("a", -1), ("b", -1))
    return CellComplex("torus", (Cell("v", 0), _edge("a", "v", "v"), _edge("b", "v", "v"), Cell("F", 2, word, word)))


def sphere() -> CellComplex:
    return CellComplex("sphere", (Cell("v", 0), Cell("F", 2)))


def projective_plane() -> CellComplex:
    word = (("e", 1), ("e", 1))
    return CellComplex("projective plane", (Cell("v", 0), _edge("e", "v", "v"), Cell("f", 2, (("e", 2),), word)))


def square() -> CellComplex:
    """Unit square with vertices p00, p10, p01, p11."""
    return CellComplex("square", (
        Cell("p00", 0), Cell("p10", 0), Cell("p01", 0), Cell("p11", 0),
        _edge("bottom", "p00", "p10"), _edge("top", "p01", "p11"),
        _edge("left", "p00", "p01"), _edge("right", "p10", "p11"),
        Cell("Q", 2, (("bottom", 1), ("right", 1), ("top", -1), ("left", -1))),
    ))


def disk() -> CellComplex:
    return CellComplex("disk", (Cell("v", 0), _edge("e", "v", "v"), Cell("D", 2, (("e", 1),))))


def bad_torus() -> CellComplex:
    """A 3x3 torus-like square where one face has a flipped incidence."""
    X = grid_square()
    cells = []
    for c in X.cells:
        if c.id == "F00":
            bd = tuple((f, -a if f == "h00" else a) for f, a in c.boundary)
            c = Cell(c.id, 2, bd)
        cells.append(c)
    return CellComplex("torus with a flipped sign", tuple(cells))


BUILTIN_COMPLEXES = {
    "point": point,
    "two-points": two_points,
    "interval": interval,
    "circle": circle,
    "circle2": two_cell_circle,
    "torus": torus,
    "sphere": sphere,
    "projective-plane": projective_plane,
    "square": square,
    "disk": disk,
}


def circle_class(X: CellComplex | None = None) -> CellularCocycle:
    X = X or circle()
    return CellularCocycle(X, 1, {"e": (1,)})


def torus_fiber_class(X: CellComplex | None = None) -> CellularCocycle:
    X = X or torus()
    return CellularCocycle(X, 1, {"a": (1,), "b": (0,)})


# -- gluing data -----------------------------------------------------------------

def circle_gluing() -> GluingData:
    """The circle cut at one point: the domain is a path v0 - v1 - v2.

    ``e1`` is the collar cylinder over ``v1``; ``v2`` is glued back to ``v0``.
    """
    X0 = CellComplex("circle domain", (
        Cell("v0", 0), Cell("v1", 0), Cell("v2", 0),
        _edge("e0", "v0", "v1"), _edge("e1", "v1", "v2"),
    ))
    cut = Cut(
        N_minus=frozenset({"v0"}), N_plus=frozenset({"v2"}), l={"v0": "v2"},
        R=frozenset({"v1"}), i_minus={"v1": "v0"},
        cylinders=(Cylinder("v1", "e1", 1),),
    )
    return GluingData("circle", X0, (cut,))


def grid_square() -> CellComplex:
    """3 x 3 vertex grid: v{x}{y}, edges h{x}{y} (x-direction), u{x}{y} (y-direction)."""
    cells = [Cell(f"v{x}{y}", 0) for x in range(3) for y in range(3)]
    cells += [_edge(f"h{x}{y}", f"v{x}{y}", f"v{x + 1}{y}") for x in range(2) for y in range(3)]
    cells += [_edge(f"u{x}{y}", f"v{x}{y}", f"v{x}{y + 1}") for x in range(3) for y in range(2)]
    for x in range(2):
        for y in range(2):
            word = ((f"h{x}{y}", 1), (f"u{x + 1}{y}", 1), (f"h{x}{y + 1}", -1), (f"u{x}{y}", -1))
            cells.append(Cell(f"F{x}{y}", 2, word, word))
    return CellComplex("torus domain", tuple(cells))


def torus_gluing() -> GluingData:
    """The torus cut along two circles; the domain is a 2 x 2 grid of squares.

    Cut 1 glues column x=2 to column x=0 with collar base column x=1; cut 2
    glues row y=2 to row y=0 with collar base row y=1.  The corner square
    F11 is excised with the first collar.
    """
    X0 = grid_square()
    col = lambda x: {f"v{x}{y}" for y in range(3)} | {f"u{x}{y}" for y in range(2)}
    row = lambda y: {f"v{x}{y}" for x in range(3)} | {f"h{x}{y}" for x in range(2)}

    def shift_x(cells, a, b):
        return {c: c[0] + str(b) + c[2] for c in cells if c[1] == str(a)}

    def shift_y(cells, a, b):
        return {c: c[:2] + str(b) for c in cells if c[2] == str(a)}

    cut1 = Cut(
        N_minus=frozenset(col(0)), N_plus=frozenset(col(2)), l=shift_x(col(0), 0, 2),
        R=frozenset(col(1)), i_minus=shift_x(col(1), 1, 0),
        cylinders=(
            Cylinder("v10", "h10", 1), Cylinder("v11", "h11", 1), Cylinder("v12", "h12", 1),
            Cylinder("u10", "F10", -1), Cylinder("u11", "F11", -1),
        ),
    )
    cut2 = Cut(
        N_minus=frozenset(row(0)), N_plus=frozenset(row(2)), l=shift_y(row(0), 0, 2),
        R=frozenset(row(1)), i_minus=shift_y(row(1), 1, 0),
        cylinders=(
            Cylinder("v01", "u01", 1), Cylinder("v11", "u11", 1), Cylinder("v21", "u21", 1),
            Cylinder("h01", "F01", 1),
        ),
    )
    return GluingData("torus", X0, (cut1, cut2))


BUILTIN_GLUINGS = {"circle": circle_gluing, "torus": torus_gluing}


# -- flows -----------------------------------------------------------------------

def ex31_flow() -> CombinatorialFlow:
    """Height flow on a circle with a circle-valued potential.

    Both arcs run from the top rest point to the bottom one; the cocycle gains
    3 along one arc and 1 along the other (rational stand-ins for 3pi and pi).
    """
    return CombinatorialFlow.build([("N", True), ("S", True)], [("N", "S", (3,)), ("N", "S", (1,))],
                                   name="two arcs")


def ex32_flow() -> CombinatorialFlow:
    """Three rest points on a circle, flow turning one way; each arc gains 2/3."""
    w = ("2/3",)
    return CombinatorialFlow.build([("p0", True), ("p1", True), ("p2", True)],
                                   [("p0", "p1", w), ("p1", "p2", w), ("p2", "p0", w)],
                                   name="three rest points")


def chain_flow() -> CombinatorialFlow:
    return CombinatorialFlow.build(["a", "b", "c"], [("a", "b", (1,)), ("b", "c", (1,))], name="chain")


BUILTIN_FLOWS = {"ex31": ex31_flow, "ex32": ex32_flow, "chain": chain_flow}
