"""Acceptance suite: ten exact checks, one PASS/FAIL line each.

Run with pytest (lines appear in the terminal summary) or directly with
``python tests/test_acceptance.py``.
"""
from __future__ import annotations

import itertools
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from novikov_conley import fixtures  # noqa: E402
from novikov_conley.complexes import euler_characteristic, homology, relative_homology  # noqa: E402
from novikov_conley.flows import (CombinatorialFlow, carries_cocycle, classify_gradient_like,  # noqa: E402
                                  find_carry_parameters, find_drift_cycle, path_weight)
from novikov_conley.gluing import (build_deformation_complex, cone_isomorphism_check, glued_complex,  # noqa: E402
                                   positive_complex, reconstruct_and_crosscheck, stage_independence,
                                   verify_gluing_identities, zero_evaluation_complex)
from novikov_conley.inequalities import (MorseData, alternating_criterion, at_minus_one,  # noqa: E402
                                         check_alpha_morse_smale, check_classical_novikov, check_novikov_morse,
                                         division_criterion, novikov_morse_pipeline, vanishing_check)
from novikov_conley.mapping_torus import mapping_torus, suspension_flow  # noqa: E402
from novikov_conley.twisted import (CellularCocycle, MonodromyRep, build_twisted_complex,  # noqa: E402
                                    novikov_numbers)
from oracles import cycle_weight, simple_cycles  # noqa: E402

RESULTS: dict[int, tuple[bool, str]] = {}
GLUINGS = ("circle", "torus")
MAPPING_TORI = (("point", {}), ("circle", {}), ("two-points", {"a": "b", "b": "a"}))


def _gluing(name):
    return fixtures.BUILTIN_GLUINGS[name]()


def _twisted_cases():
    yield fixtures.circle(), fixtures.circle_class(), None
    yield fixtures.torus(), fixtures.torus_fiber_class(), None
    T2 = fixtures.torus()
    yield T2, CellularCocycle(T2, 2, {"a": (1, 0), "b": (0, 1)}), None
    yield fixtures.circle(), CellularCocycle.zero(fixtures.circle()), MonodromyRep(2, {"e": ((0, 1), (1, 0))})
    for make in fixtures.BUILTIN_COMPLEXES.values():
        X = make()
        yield X, CellularCocycle.zero(X), None
    for name in GLUINGS:
        X, alpha = glued_complex(_gluing(name))
        yield X, alpha, None
    for name, f in MAPPING_TORI:
        X, alpha = mapping_torus(fixtures.BUILTIN_COMPLEXES[name](), f)
        yield X, alpha, None


# -- criteria ---------------------------------------------------------------------

def criterion_1():
    """d o d = 0 on built-in complexes, deformation complexes, twisted complexes, mapping tori."""
    for make in fixtures.BUILTIN_COMPLEXES.values():
        assert make().chain_complex().square_zero_failures() == []
    for name in GLUINGS:
        G = _gluing(name)
        for k in range(G.s + 1):
            D = build_deformation_complex(G, k)
            assert D.square_zero_failures() == [] and D.chain_complex.square_zero_failures() == []
        assert positive_complex(G).square_zero_failures() == []
    for X, alpha, E in _twisted_cases():
        assert build_twisted_complex(X, alpha, E).square_zero_failures() == []
    for name in ("point", "circle", "two-points", "torus", "sphere", "projective-plane"):
        f = {"a": "b", "b": "a"} if name == "two-points" else {}
        T, _ = mapping_torus(fixtures.BUILTIN_COMPLEXES[name](), f)
        assert T.chain_complex().square_zero_failures() == []


def criterion_2():
    """Homology ranks: circle, torus, sphere, projective plane mod 2."""
    assert homology(fixtures.circle()).ranks == (1, 1)
    assert homology(fixtures.torus()).ranks == (1, 2, 1)
    assert homology(fixtures.sphere()).ranks == (1, 0, 1)
    assert homology(fixtures.projective_plane(), 2).ranks == (1, 1, 1)


def criterion_3():
    """Gluing identities on every cell, cone composites, k-independent stage homology."""
    for name in GLUINGS:
        G = _gluing(name)
        for k in range(1, G.s + 1):
            rep = verify_gluing_identities(G, k)
            assert rep.ok, rep.failures
            assert sorted(rep.checked) == [1, 2, 3, 4, 5]
            cone = cone_isomorphism_check(G, k)
            assert cone.left_identity and cone.right_identity and cone.chain_maps and cone.ok
        st = stage_independence(G)
        assert st.ok
        domain = homology(G.domain).ranks
        assert all(r == domain for r in st.ranks.values())


def criterion_4():
    """Gluing route equals direct twisted route at a = 2, (3, 5) and at a = 1."""
    cases = [("circle", (2,), (0, 0)), ("torus", (3, 5), (0, 0, 0)),
             ("circle", (1,), homology(fixtures.circle(), "Q").ranks),
             ("torus", (1, 1), homology(fixtures.torus(), "Q").ranks)]
    for name, a, want in cases:
        rep = reconstruct_and_crosscheck(_gluing(name), a)
        assert rep.agree and rep.gluing_ranks == rep.direct_ranks == want


def criterion_5():
    """t = 0 complex against relative homology of the cut domain, p = 2, 3, 5."""
    for name in GLUINGS:
        G = _gluing(name)
        last = G.N0(G.s)
        sub = set(G.plus_cells)
        for cut in G.cuts:
            sub |= {cut.iplus(e) for e in cut.R}
        domain = G.domain.restrict(last)
        for p in (2, 3, 5):
            rep = zero_evaluation_complex(G, p)
            rel = relative_homology(domain, sub & last, p).padded(G.domain.dimension)
            assert rep.complex_ranks == rel


def criterion_6():
    """Novikov numbers of standard classes, trivial classes and coboundary invariance."""
    nov = novikov_numbers(fixtures.circle(), fixtures.circle_class(), seed=0, trials=3)
    assert nov.b == (0, 0) and nov.agree
    nov = novikov_numbers(fixtures.torus(), fixtures.torus_fiber_class(), seed=0, trials=3)
    assert nov.b == (0, 0, 0) and nov.agree
    for make in fixtures.BUILTIN_COMPLEXES.values():
        X = make()
        nov = novikov_numbers(X, CellularCocycle.zero(X), seed=1, trials=3)
        assert nov.agree and nov.b == homology(X, "Q").padded(X.dimension)
    rng = random.Random(2024)
    for X, alpha in ((fixtures.circle(), fixtures.circle_class()),
                     (fixtures.torus(), fixtures.torus_fiber_class())):
        base = novikov_numbers(X, alpha, seed=0).b
        for i in range(10):
            g = {v: (rng.randint(-9, 9),) for v in X.ids(0)}
            shifted = alpha.plus_coboundary(g)
            nov = novikov_numbers(X, shifted, seed=100 + i, trials=3)
            assert nov.agree and nov.b == base
    # a complex with several vertices, so coboundaries really move the cocycle
    Y = fixtures.two_cell_circle()
    alpha = CellularCocycle(Y, 1, {"e1": 1})
    base = novikov_numbers(Y, alpha, seed=0).b
    assert base == (0, 0)
    for i in range(10):
        g = {v: (rng.randint(-9, 9),) for v in Y.ids(0)}
        assert novikov_numbers(Y, alpha.plus_coboundary(g), seed=200 + i, trials=3).b == base


def _random_flow(rng, all_fixed):
    n = rng.randint(1, 8)
    nodes = [f"n{i}" for i in range(n)]
    edges = []
    for _ in range(rng.randint(0, 2 * n)):
        u, v = rng.choice(nodes), rng.choice(nodes)
        if all_fixed and u == v:
            continue
        w = Fraction(rng.randint(1, 6), rng.randint(1, 3)) if all_fixed else Fraction(rng.randint(-4, 6), 2)
        edges.append((u, v, (w,)))
    return CombinatorialFlow.build([(x, all_fixed) for x in nodes], edges)


def _brute_drift(flow):
    edges = [(e.src, e.dst, e.w) for e in flow.edges]
    return any(any(cycle_weight(edges, c)) for c in simple_cycles(list(flow.nodes), edges))


def criterion_7():
    """Flow classification: examples, invariances, brute-force equivalence on 50 graphs."""
    ex31, ex32 = fixtures.ex31_flow(), fixtures.ex32_flow()
    c = classify_gradient_like(ex31)
    assert c.gradient_like and c.potential == {"N": 1, "S": 0}
    assert all(c.potential[e.src] > c.potential[e.dst] for e in ex31.edges)
    c = classify_gradient_like(ex32)
    assert not c.gradient_like and any(path_weight(ex32, c.cycle.edges)) and c.cycle.weight == (2,)
    rng = random.Random(7)
    for flow in (ex31, ex32):
        base = classify_gradient_like(flow).verdict
        for _ in range(5):
            k = Fraction(rng.randint(1, 9), rng.randint(1, 9))
            scaled = flow.scaled(k)
            params = find_carry_parameters(flow)
            assert carries_cocycle(scaled, params.rho * k, params.lam).verdict
            assert classify_gradient_like(scaled).verdict == base
            g = {n: (Fraction(rng.randint(-9, 9), rng.randint(1, 4)),) for n in flow.nodes}
            assert classify_gradient_like(flow.shifted(g), require_carry=False).verdict == base
    checked_precondition = 0
    for i in range(50):
        flow = _random_flow(random.Random(i), all_fixed=i % 2 == 0)
        brute = _brute_drift(flow)
        assert (find_drift_cycle(flow) is not None) == brute
        if find_carry_parameters(flow).verdict:
            checked_precondition += 1
            c = classify_gradient_like(flow)
            assert (not c.gradient_like) == brute
            g = {n: (Fraction(rng.randint(-5, 5)),) for n in flow.nodes}
            assert (find_drift_cycle(flow.shifted(g)) is not None) == brute
    assert checked_precondition >= 25


def criterion_8():
    """Inequalities: sphere data, circle with two zeros, and the brute-force equivalence."""
    rep = check_alpha_morse_smale((1, 0, 1), (0, 1, 0), (1, 0, 1))
    assert rep.verdict and rep.lhs == (2, 1, 1)
    INEQUALITY_REPORTS.append(rep)
    rep = check_classical_novikov((1, 1), (0, 0))
    assert rep.verdict and rep.euler_lhs == 0 == euler_characteristic(fixtures.circle())
    INEQUALITY_REPORTS.append(rep)
    rep = check_novikov_morse(MorseData.morse_smale((1, 0, 1), (0, 1, 0)), (1, 0, 1))
    assert rep.verdict
    INEQUALITY_REPORTS.append(rep)
    polys = list(itertools.product(range(4), repeat=5))
    memo: dict = {}
    for a in polys:
        for b in polys:
            m = (a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3], a[4] - b[4])
            if m not in memo:
                memo[m] = division_criterion(m) == alternating_criterion(m)
                assert memo[m], m
    assert len(memo) == 7 ** 5


INEQUALITY_REPORTS: list = []


def criterion_9():
    """Euler-Poincare: M(-1) = 0 on passing reports and P(-1) = chi for trivial classes."""
    if not INEQUALITY_REPORTS:
        criterion_8()
    X = fixtures.sphere()
    INEQUALITY_REPORTS.append(novikov_morse_pipeline(MorseData.morse_smale((1, 0, 1)), X,
                                                     CellularCocycle.zero(X), p=2, seed=0))
    INEQUALITY_REPORTS.append(novikov_morse_pipeline(MorseData.morse_smale((1, 1)), fixtures.circle(),
                                                     fixtures.circle_class(), p=3, seed=0))
    passing = [r for r in INEQUALITY_REPORTS if r.verdict]
    assert len(passing) == len(INEQUALITY_REPORTS)
    for r in passing:
        assert at_minus_one(r.M) == 0 and r.euler_ok
    spaces = [make() for make in fixtures.BUILTIN_COMPLEXES.values()]
    spaces += [glued_complex(_gluing(n))[0] for n in GLUINGS]
    spaces += [mapping_torus(fixtures.BUILTIN_COMPLEXES[n](), f)[0] for n, f in MAPPING_TORI]
    for X in spaces:
        b = novikov_numbers(X, CellularCocycle.zero(X), seed=0).b
        assert at_minus_one(b) == euler_characteristic(X)


def criterion_10():
    """Vanishing: mapping tori carry fixed-point-free flows and have zero Novikov numbers."""
    for name, f in MAPPING_TORI:
        X = fixtures.BUILTIN_COMPLEXES[name]()
        T, alpha = mapping_torus(X, f)
        flow = suspension_flow(X, f)
        assert not flow.fixed
        rep = vanishing_check(flow, T, alpha, seed=0, trials=3)
        assert rep.carry.verdict and rep.ok and rep.novikov.b == (0,) * (T.dimension + 1)


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 11)}


def run_criterion(i: int) -> tuple[bool, str]:
    start = time.perf_counter()
    try:
        CRITERIA[i]()
        ok, detail = True, ""
    except Exception as exc:  # noqa: BLE001 - every failure is reported, then re-raised under pytest
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    line = f"criterion {i:2d}: {'PASS' if ok else 'FAIL'} ({time.perf_counter() - start:.2f}s) {CRITERIA[i].__doc__}"
    if detail:
        line += f" -- {detail}"
    RESULTS[i] = (ok, line)
    return ok, line


@pytest.mark.parametrize("i", range(1, 11))
def test_criterion(i):
    ok, line = run_criterion(i)
    print(line)
    assert ok, line


if __name__ == "__main__":
    results = [run_criterion(i) for i in CRITERIA]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
