import pytest

from novikov_conley import fixtures
from novikov_conley.complexes import ComplexError, euler_characteristic, homology
from novikov_conley.laurent import Laurent
from novikov_conley.linalg import determinant
from novikov_conley.mapping_torus import mapping_torus, suspension_flow
from novikov_conley.twisted import TwistError, build_twisted_complex, evaluated_homology, novikov_numbers

SWAP = {"a": "b", "b": "a"}


def test_point_gives_circle():
    T, alpha = mapping_torus(fixtures.point())
    assert T.counts() == (1, 1)
    assert alpha.values == {"v~I": (1,)}
    assert homology(T).ranks == (1, 1)
    assert novikov_numbers(T, alpha).b == (0, 0)


def test_circle_identity_gives_torus():
    T, alpha = mapping_torus(fixtures.circle())
    assert T.counts() == (1, 2, 1)
    assert homology(T).ranks == (1, 2, 1)
    assert novikov_numbers(T, alpha, seed=4).b == (0, 0, 0)


def test_two_point_swap_gives_one_circle():
    T, alpha = mapping_torus(fixtures.two_points(), SWAP)
    assert T.counts() == (2, 2)
    assert homology(T).ranks == (1, 1)
    TC = build_twisted_complex(T, alpha)
    # the determinant of the evaluated boundary is 1 - t^2 up to units
    for t in (2, 3, 5):
        M = [[int(x) for x in row] for row in TC.evaluate((t,))[1]]
        assert abs(determinant(M)) % abs(1 - t * t) == 0 and determinant(M) != 0
    assert evaluated_homology(TC, 1).ranks == (1, 1)
    assert novikov_numbers(T, alpha).b == (0, 0)


@pytest.mark.parametrize("X,f", [(fixtures.point(), {}), (fixtures.circle(), {}), (fixtures.two_points(), SWAP),
                                 (fixtures.torus(), {}), (fixtures.sphere(), {})])
def test_mapping_torus_invariants(X, f):
    T, alpha = mapping_torus(X, f)
    assert T.report.ok
    assert T.chain_complex().square_zero_failures() == []
    assert euler_characteristic(T) == 0
    assert alpha.cocycle_violations() == []


def test_cylinder_boundary_formula():
    T, _ = mapping_torus(fixtures.circle())
    assert T["e~I"].boundary_chain() == {}
    assert T["v~I"].boundary_chain() == {}
    T, _ = mapping_torus(fixtures.interval())
    assert T["e~I"].boundary_chain() == {"v0~I": 1, "v1~I": -1}


def test_higher_cylinders_refuse_to_twist():
    T, alpha = mapping_torus(fixtures.torus())
    with pytest.raises(TwistError):
        build_twisted_complex(T, alpha)


def test_non_automorphisms_rejected():
    with pytest.raises(ComplexError):
        mapping_torus(fixtures.two_points(), {"a": "b", "b": "b"})
    with pytest.raises(ComplexError):
        mapping_torus(fixtures.interval(), {"v0": "v1", "v1": "v0"})
    with pytest.raises(ComplexError):
        mapping_torus(fixtures.interval(), {"v0": "e", "e": "v0"})


def test_suspension_flow_is_fixed_point_free():
    flow = suspension_flow(fixtures.two_points(), SWAP)
    assert not flow.fixed
    assert {(e.src, e.dst) for e in flow.edges} == {("a", "b"), ("b", "a")}
