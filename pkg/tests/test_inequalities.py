import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from novikov_conley import fixtures
from novikov_conley.complexes import homology
from novikov_conley.flows import CombinatorialFlow
from novikov_conley.inequalities import (InequalityError, MorseData, alternating_criterion, at_minus_one,
                                         check_alpha_morse_smale, check_classical_novikov, check_novikov_morse,
                                         divide_by_one_plus_t, division_criterion, hyperbolic_index_polynomial,
                                         index_polynomial_from_pair, morse_smale_mu, novikov_morse_pipeline,
                                         poly_sub, trivial_class_euler, vanishing_check)
from novikov_conley.mapping_torus import mapping_torus, suspension_flow
from novikov_conley.twisted import CellularCocycle
from oracles import divide_by_one_plus_t_sympy

polys = st.lists(st.integers(0, 5), min_size=0, max_size=5)


def test_index_pairs():
    assert index_polynomial_from_pair(fixtures.disk(), []).coeffs == (1,)
    saddle = ["p00", "p01", "left", "p10", "p11", "right"]
    assert index_polynomial_from_pair(fixtures.square(), saddle, "Q").coeffs == (0, 1)
    assert index_polynomial_from_pair(fixtures.interval(), ["v1"], 3).coeffs == ()
    with pytest.raises(InequalityError):
        index_polynomial_from_pair(fixtures.disk(), [], "Z")


def test_projective_plane_index_depends_on_the_field():
    X = fixtures.projective_plane()
    assert index_polynomial_from_pair(X, [], 2).coeffs == (1, 1, 1)
    assert index_polynomial_from_pair(X, [], 3).coeffs == (1,)


def test_hyperbolic_polynomials():
    assert hyperbolic_index_polynomial("fixed", 0).coeffs == (1,)
    assert hyperbolic_index_polynomial("fixed", 2).coeffs == (0, 0, 1)
    assert hyperbolic_index_polynomial("periodic", 1).coeffs == (1, 1)
    assert hyperbolic_index_polynomial("periodic", 2).coeffs == (0, 1, 1)
    with pytest.raises(InequalityError):
        hyperbolic_index_polynomial("fixed", -1)
    with pytest.raises(InequalityError):
        hyperbolic_index_polynomial("periodic", 0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 4), min_size=3, max_size=3), st.lists(st.integers(0, 4), min_size=4, max_size=4))
def test_morse_smale_totals_equal_mu(c, a):
    a[0] = 0
    data = MorseData.morse_smale(c, a)
    mu = morse_smale_mu(c, a)
    assert data.total() == tuple(mu[: len(data.total())])
    assert all(x == 0 for x in mu[len(data.total()):])


def test_sphere_with_periodic_orbit():
    c, a, b = (1, 0, 1), (0, 1, 0), (1, 0, 1)
    assert morse_smale_mu(c, a) == (2, 1, 1)
    rep = check_alpha_morse_smale(c, a, b)
    assert rep.verdict and rep.Q == (1,)
    rep = check_novikov_morse(MorseData.morse_smale(c, a), b)
    assert rep.verdict and rep.euler_ok and at_minus_one(rep.M) == 0


def test_novikov_morse_examples():
    assert check_novikov_morse([(0,), (0,), (0,)], (0, 0)).verdict
    rep = check_novikov_morse([(1,)], (1, 1))
    assert not rep.verdict and rep.remainder != 0


def test_classical_novikov_examples():
    rep = check_classical_novikov((1, 1), (0, 0))
    assert rep.verdict and rep.euler_ok
    assert rep.euler_lhs == 0 == homology(fixtures.circle(), "Q").euler()
    assert check_classical_novikov((0, 0, 0), (0, 0, 0)).verdict
    rep = check_classical_novikov((0, 1), (1, 1))
    assert not rep.verdict
    assert rep.failures[0].startswith("degree 0")


def test_alpha_morse_smale_edge_cases():
    assert check_alpha_morse_smale((0, 0, 0), (0, 0, 0), (0, 0, 0)).verdict
    assert not check_alpha_morse_smale((0, 0), (0, 0), (1, 0)).verdict


@settings(max_examples=200, deadline=None)
@given(polys)
def test_synthetic_division_matches_sympy(m):
    q, r = divide_by_one_plus_t(m)
    q2, r2 = divide_by_one_plus_t_sympy(m)
    assert r == r2
    assert list(q) + [0] * (len(q2) - len(q)) == q2 + [0] * (len(q) - len(q2))


@settings(max_examples=300, deadline=None)
@given(polys, polys)
def test_division_and_alternating_criteria_agree(a, b):
    m = poly_sub(a, b)
    assert division_criterion(m) == alternating_criterion(m)


def test_morse_data_json():
    data = MorseData.from_json({"sets": [{"name": "min", "poly": [1]},
                                         {"kind": "periodic", "index": 1, "count": 1},
                                         {"kind": "fixed", "index": 2}]})
    assert data.total() == (2, 1, 1)
    with pytest.raises(InequalityError):
        MorseData.from_json({"sets": [{"name": "x"}]})
    with pytest.raises(InequalityError):
        MorseData.from_json({"sets": [{"poly": [1, -1]}]})


def test_pipeline_on_sphere_and_circle():
    X = fixtures.sphere()
    rep = novikov_morse_pipeline(MorseData.morse_smale((1, 0, 1)), X, CellularCocycle.zero(X), p=3, seed=1)
    assert rep.verdict and rep.provenance["attempts"][0]["p"] == 3
    assert rep.provenance["attempts"][0]["a"][0] % 3 == 0
    circle = fixtures.circle()
    rep = novikov_morse_pipeline(MorseData.morse_smale((1, 1)), circle, fixtures.circle_class())
    assert rep.verdict and rep.P == (0, 0)


def test_pipeline_reports_prime_search_on_failure():
    X = fixtures.sphere()
    rep = novikov_morse_pipeline(MorseData.morse_smale((1,)), X, CellularCocycle.zero(X))
    assert not rep.verdict
    assert len(rep.provenance["attempts"]) == 25 and rep.provenance["prime_search"]


@pytest.mark.parametrize("name", sorted(fixtures.BUILTIN_COMPLEXES))
def test_trivial_class_euler_poincare(name):
    p_at_minus_one, chi = trivial_class_euler(fixtures.BUILTIN_COMPLEXES[name]())
    assert p_at_minus_one == chi


def test_vanishing_on_mapping_tori():
    for X, f in ((fixtures.point(), {}), (fixtures.circle(), {}), (fixtures.two_points(), {"a": "b", "b": "a"})):
        T, alpha = mapping_torus(X, f)
        rep = vanishing_check(suspension_flow(X, f), T, alpha, seed=2)
        assert rep.ok and rep.carry.verdict and not any(rep.novikov.b)


def test_vanishing_rejects_fixed_nodes():
    X = fixtures.circle()
    T, alpha = mapping_torus(X)
    flow = suspension_flow(X).with_fixed("v")
    with pytest.raises(InequalityError):
        vanishing_check(flow, T, alpha)


def test_vanishing_rejects_non_carrying_flow():
    T, alpha = mapping_torus(fixtures.point())
    flow = CombinatorialFlow.build(["v"], [("v", "v", (-1,))])
    with pytest.raises(InequalityError):
        vanishing_check(flow, T, alpha)
