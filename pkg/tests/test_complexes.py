import json

import pytest

from novikov_conley import fixtures
from novikov_conley.complexes import (Cell, CellComplex, Coefficients, ComplexError, euler_characteristic,
                                      homology, quotient_by_subcomplex, relative_homology)
from oracles import betti_from_boundaries, rank_mod_p_oracle, sympy_rank

KNOWN_Q = {
    "point": (1,),
    "two-points": (2,),
    "interval": (1, 0),
    "circle": (1, 1),
    "circle2": (1, 1),
    "torus": (1, 2, 1),
    "sphere": (1, 0, 1),
    "projective-plane": (1, 0, 0),
    "square": (1, 0, 0),
    "disk": (1, 0, 0),
}


@pytest.mark.parametrize("name", sorted(fixtures.BUILTIN_COMPLEXES))
def test_builtin_complexes_validate_and_square_to_zero(name):
    X = fixtures.BUILTIN_COMPLEXES[name]()
    assert X.report.ok, X.report.as_dict()
    cc = X.chain_complex()
    assert cc.square_zero_failures() == []


@pytest.mark.parametrize("name", sorted(KNOWN_Q))
def test_rational_homology_of_builtins(name):
    X = fixtures.BUILTIN_COMPLEXES[name]()
    assert homology(X, "Q").ranks == KNOWN_Q[name]


@pytest.mark.parametrize("name", sorted(KNOWN_Q))
def test_homology_matches_independent_rank_computation(name):
    X = fixtures.BUILTIN_COMPLEXES[name]()
    sizes = X.counts()
    mats = {q: X.boundary_matrix(q) for q in range(1, X.dimension + 1)}
    assert homology(X, "Q").ranks == betti_from_boundaries(sizes, mats, sympy_rank)
    assert homology(X, 3).ranks == betti_from_boundaries(sizes, mats, lambda M: rank_mod_p_oracle(M, 3))


def test_projective_plane_torsion_and_mod_two():
    X = fixtures.projective_plane()
    h = homology(X, "Z")
    assert h.ranks == (1, 0, 0)
    assert h.torsion == ((), (2,), ())
    assert homology(X, 2).ranks == (1, 1, 1)
    assert homology(X, 3).ranks == (1, 0, 0)


def test_torus_boundary_matrices_are_zero():
    X = fixtures.torus()
    assert X.boundary_matrix(1) == [[0, 0]]
    assert X.boundary_matrix(2) == [[0], [0]]


def test_euler_characteristic_matches_betti():
    for make in fixtures.BUILTIN_COMPLEXES.values():
        X = make()
        assert euler_characteristic(X) == homology(X, "Q").euler()


def test_bad_torus_names_the_offending_cell():
    X = fixtures.bad_torus()
    rep = X.report
    assert not rep.ok
    assert any(i.cell == "F00" for i in rep.issues)
    with pytest.raises(ComplexError, match="F00"):
        X.validated()


def test_validation_catches_structural_errors():
    bad_face = CellComplex.build("x", [("v", 0, []), ("e", 1, [["w", 1], ["v", -1]])])
    assert not bad_face.report.ok
    dup = CellComplex.build("x", [("v", 0, []), ("v", 0, [])])
    assert not dup.report.ok
    wrong_dim = CellComplex.build("x", [("v", 0, []), ("F", 2, [["v", 1]])])
    assert not wrong_dim.report.ok


def test_loop_must_match_boundary():
    X = CellComplex.build("x", [("v", 0, []), ("a", 1, [["v", 1], ["v", -1]]),
                                ("F", 2, [["a", 1]], [["a", 1], ["a", 1]])])
    assert not X.report.ok


def test_json_round_trip():
    X = fixtures.torus()
    Y = CellComplex.from_json(json.loads(json.dumps(X.to_json())))
    assert Y.to_json() == X.to_json()
    assert homology(Y).ranks == (1, 2, 1)


def test_json_missing_field_is_reported():
    with pytest.raises(ComplexError, match="cells\\[1\\]"):
        CellComplex.from_json({"cells": [{"id": "v", "dim": 0}, {"dim": 1}]})


def test_relative_homology_of_square_pairs():
    X = fixtures.square()
    sides = ["p00", "p01", "left", "p10", "p11", "right"]
    assert relative_homology(X, sides, "Q").ranks == (0, 1, 0)
    adjacent = ["p00", "p10", "p01", "bottom", "left"]
    assert relative_homology(X, adjacent, "Q").ranks == (0, 0, 0)
    assert relative_homology(X, [], "Q").ranks == (1, 0, 0)


def test_relative_homology_requires_subcomplex():
    with pytest.raises(ComplexError):
        relative_homology(fixtures.square(), ["left"])


def test_quotient_matches_relative_homology():
    X = fixtures.square()
    sub = ["p00", "p01", "left", "p10", "p11", "right"]
    Y = quotient_by_subcomplex(X, sub)
    h = homology(Y, "Q").ranks
    rel = relative_homology(X, sub, "Q").ranks
    # reduced homology of the quotient equals relative homology
    assert (h[0] - 1,) + h[1:] == rel


def test_coefficient_parsing():
    assert Coefficients.parse("Z").kind == "Z"
    assert Coefficients.parse("GF5").p == 5
    assert Coefficients.parse(7).p == 7
    assert Coefficients.parse("3").p == 3
    with pytest.raises(ComplexError):
        Coefficients.parse(4)


def test_repeated_boundary_entries_add_up():
    X = CellComplex("x", (Cell("v", 0), Cell("e", 1, (("v", 1), ("v", -1))), Cell("f", 2, (("e", 1), ("e", 1)))))
    assert X.boundary_matrix(2) == [[2]]
