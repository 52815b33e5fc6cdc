"""Integer cocycles, monodromy and twisted chain complexes.

The twisted complex is the cellular complex of the free abelian cover
determined by a cocycle, written over Z[t_1^{±1}, ..., t_s^{±1}] (tensored
with a rank-k local system when a monodromy is given).  Cells are lifted
with a deterministic tree gauge: the lowest-id spanning forest of the
1-skeleton fixes a lift of every vertex, an edge is lifted starting at its
tail, and a 2-cell is lifted starting at the first vertex of its attaching
loop.
"""
from __future__ import annotations

import json
import random
from collections import defaultdict, deque
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

from . import linalg
from .complexes import QQ, CellComplex, ComplexError, HomologyResult
from .laurent import Laurent, LaurentMatrix, evaluate_matrix, lmatmul, lzeros

Vector = tuple[int, ...]
Step = tuple[str, int]


class CocycleError(ValueError):
    pass


class TwistError(ValueError):
    pass


class NovikovDisagreement(RuntimeError):
    """Random evaluation trials disagreed even after a retry."""


def _vadd(a, b, sign=1):
    return tuple(x + sign * y for x, y in zip(a, b))


@dataclass(frozen=True)
class CellularCocycle:
    complex: CellComplex
    s: int
    values: Mapping[str, Vector]

    def __post_init__(self):
        vals = {}
        for e, v in self.values.items():
            if e not in self.complex or self.complex[e].dim != 1:
                raise CocycleError(f"cocycle value on {e!r}, which is not a 1-cell")
            v = tuple(int(x) for x in (v if isinstance(v, (list, tuple)) else [v]))
            if len(v) != self.s:
                raise CocycleError(f"value on {e!r} has length {len(v)}, expected {self.s}")
            vals[e] = v
        object.__setattr__(self, "values", vals)

    def __call__(self, edge: str) -> Vector:
        return self.values.get(edge, (0,) * self.s)

    def cocycle_violations(self) -> list[str]:
        bad = []
        for cid in self.complex.ids(2):
            total = (0,) * self.s
            for e, k in self.complex[cid].boundary:
                total = _vadd(total, tuple(k * x for x in self(e)))
            if any(total):
                bad.append(cid)
        return bad

    def check(self) -> "CellularCocycle":
        bad = self.cocycle_violations()
        if bad:
            raise CocycleError(f"cocycle condition fails on 2-cell(s) {bad}")
        return self

    def plus_coboundary(self, g: Mapping[str, Sequence[int]]) -> "CellularCocycle":
        """alpha + delta g, with (delta g)(e) = g(head) - g(tail)."""
        zero = (0,) * self.s
        vals = {}
        for e in self.complex.ids(1):
            tail, head = self.complex.edge_ends(e)
            vals[e] = _vadd(_vadd(self(e), tuple(g.get(head, zero))), tuple(g.get(tail, zero)), -1)
        return CellularCocycle(self.complex, self.s, vals)

    def is_trivial_values(self) -> bool:
        return not any(any(v) for v in self.values.values())

    def to_json(self) -> dict:
        return {"s": self.s, "values": {e: list(v) for e, v in sorted(self.values.items())}}

    @classmethod
    def from_json(cls, complex: CellComplex, data: Mapping) -> "CellularCocycle":
        try:
            return cls(complex, int(data["s"]), dict(data["values"]))
        except KeyError as exc:
            raise CocycleError(f"cocycle JSON is missing field {exc}") from exc

    @classmethod
    def zero(cls, complex: CellComplex, s: int = 1) -> "CellularCocycle":
        return cls(complex, s, {})


def load_cocycle(complex: CellComplex, path) -> CellularCocycle:
    return CellularCocycle.from_json(complex, json.loads(Path(path).read_text()))


def _as_steps(path) -> list[Step]:
    out = []
    for step in path:
        if isinstance(step, str):
            out.append((step, 1))
        else:
            e, s = step
            if s not in (1, -1):
                raise CocycleError(f"path step direction must be ±1, got {s}")
            out.append((e, s))
    return out


def walk(complex: CellComplex, path) -> tuple[str | None, str | None]:
    """Check contiguity of an oriented edge path; return its endpoints."""
    start = here = None
    for e, s in _as_steps(path):
        if e not in complex or complex[e].dim != 1:
            raise CocycleError(f"path step {e!r} is not a 1-cell")
        tail, head = complex.edge_ends(e)
        a, b = (tail, head) if s == 1 else (head, tail)
        if here is None:
            start = a
        elif here != a:
            raise CocycleError(f"path is not contiguous at {e!r}: at {here!r}, step starts at {a!r}")
        here = b
    return start, here


def integrate_cocycle(alpha: CellularCocycle, path) -> Vector:
    steps = _as_steps(path)
    walk(alpha.complex, steps)
    total = (0,) * alpha.s
    for e, s in steps:
        total = _vadd(total, alpha(e), s)
    return total


def spanning_forest(complex: CellComplex) -> tuple[list[str], dict[str, str]]:
    """Lowest-id spanning forest of the 1-skeleton.

    Edges are scanned in ascending id order and kept when they join two
    components (Kruskal with unit weights).  Returns the tree edges and the
    root (lowest vertex id) of every vertex's component.
    """
    parent = {v: v for v in complex.ids(0)}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    tree = []
    for e in complex.ids(1):
        tail, head = complex.edge_ends(e)
        a, b = find(tail), find(head)
        if a != b:
            if b < a:
                a, b = b, a
            parent[b] = a
            tree.append(e)
    return tree, {v: find(v) for v in complex.ids(0)}


def _tree_walk(complex: CellComplex, tree: Sequence[str]):
    """BFS over the forest from each root, yielding (edge, from, to, sign)."""
    adj = defaultdict(list)
    for e in tree:
        tail, head = complex.edge_ends(e)
        adj[tail].append((e, head, 1))
        adj[head].append((e, tail, -1))
    seen = set()
    for root in complex.ids(0):
        if root in seen:
            continue
        seen.add(root)
        queue = deque([root])
        yield None, None, root, 0
        while queue:
            v = queue.popleft()
            for e, w, s in sorted(adj[v]):
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
                    yield e, v, w, s


def is_coboundary(alpha: CellularCocycle) -> tuple[bool, dict[str, Vector] | None]:
    """Decide whether alpha = delta g; return a witness g when it is."""
    X = alpha.complex
    tree, _ = spanning_forest(X)
    g: dict[str, Vector] = {}
    for e, v, w, s in _tree_walk(X, tree):
        if e is None:
            g[w] = (0,) * alpha.s
        else:
            g[w] = _vadd(g[v], alpha(e), s)
    for e in X.ids(1):
        tail, head = X.edge_ends(e)
        if _vadd(g[head], g[tail], -1) != alpha(e):
            return False, None
    return True, g


@dataclass(frozen=True)
class MonodromyRep:
    """Integer local system of rank k given by a matrix per edge.

    Edges without a matrix carry the identity.  Matrices act on row vectors
    and compose in the order a path is traversed.
    """

    k: int
    matrices: Mapping[str, tuple[tuple[int, ...], ...]] = field(default_factory=dict)
    tree: tuple[str, ...] | None = None

    def __post_init__(self):
        mats = {}
        for e, M in self.matrices.items():
            M = tuple(tuple(int(x) for x in row) for row in M)
            if len(M) != self.k or any(len(r) != self.k for r in M):
                raise TwistError(f"monodromy on {e!r} is not {self.k}x{self.k}")
            if abs(linalg.determinant(M)) != 1:
                raise TwistError(f"monodromy on {e!r} has determinant other than ±1")
            mats[e] = M
        object.__setattr__(self, "matrices", mats)

    def matrix(self, e: str):
        return self.matrices.get(e) or tuple(tuple(int(i == j) for j in range(self.k)) for i in range(self.k))

    @classmethod
    def trivial(cls, k: int = 1) -> "MonodromyRep":
        return cls(k)

    def to_json(self) -> dict:
        return {"k": self.k, "edges": {e: [list(r) for r in M] for e, M in sorted(self.matrices.items())}}

    @classmethod
    def from_json(cls, data: Mapping) -> "MonodromyRep":
        return cls(int(data["k"]), dict(data.get("edges", {})), tuple(data["tree"]) if data.get("tree") else None)


def load_monodromy(path) -> MonodromyRep:
    return MonodromyRep.from_json(json.loads(Path(path).read_text()))


def attaching_loop(X: CellComplex, cid: str) -> tuple[Step, ...]:
    """The attaching word of a 2-cell: explicit, or its boundary list in order."""
    cell = X[cid]
    if cell.loop is not None:
        return cell.loop
    steps = []
    for e, k in cell.boundary:
        steps.extend([(e, 1 if k > 0 else -1)] * abs(k))
    try:
        start, end = walk(X, steps)
    except CocycleError:
        start, end = None, ""
    if start != end:
        raise TwistError(f"2-cell {cid!r}: boundary list is not a closed edge walk; give an explicit loop")
    return tuple(steps)


def _loop_start(X: CellComplex, loop) -> str | None:
    if not loop:
        return None
    e, s = loop[0]
    tail, head = X.edge_ends(e)
    return tail if s == 1 else head


def _matmul(A, B):
    return tuple(tuple(r) for r in linalg.matmul(A, B))


@dataclass(frozen=True)
class TwistedComplex:
    """Boundary matrices with Laurent entries; block size k per cell.

    ``basis[q]`` lists ``(cell id, fiber index)`` pairs; ``matrices[q]`` maps
    degree q to degree q-1 (rows follow ``basis[q-1]``).  Entries may carry
    negative exponents.
    """

    complex: CellComplex
    nvars: int
    k: int
    basis: Mapping[int, tuple[tuple[str, int], ...]]
    matrices: Mapping[int, LaurentMatrix]
    tree: tuple[str, ...] = ()

    @property
    def top(self) -> int:
        return self.complex.dimension

    def size(self, q: int) -> int:
        return len(self.basis.get(q, ()))

    def square_zero_failures(self) -> list[int]:
        bad = []
        for q in range(1, self.top):
            A, B = self.matrices[q], self.matrices[q + 1]
            if not A or not B or not B[0]:
                continue
            prod = lmatmul(A, B, self.nvars)
            if any(x for row in prod for x in row):
                bad.append(q)
        return bad

    def evaluate(self, point: Sequence) -> dict[int, list[list[Fraction]]]:
        return {q: evaluate_matrix(M, point) for q, M in self.matrices.items()}

    def entry(self, q: int, row_cell: str, col_cell: str, i: int = 0, j: int = 0) -> Laurent:
        r = self.basis[q - 1].index((row_cell, i))
        c = self.basis[q].index((col_cell, j))
        return self.matrices[q][r][c]


def build_twisted_complex(X: CellComplex, alpha: CellularCocycle,
                          E: MonodromyRep | None = None) -> TwistedComplex:
    X.validated()
    alpha.check()
    if alpha.complex is not X and alpha.complex.to_json() != X.to_json():
        raise CocycleError("cocycle belongs to a different complex")
    s = alpha.s
    k = E.k if E is not None else 1
    ident = tuple(tuple(int(i == j) for j in range(k)) for i in range(k))
    tree = list(E.tree) if E is not None and E.tree else spanning_forest(X)[0]

    # vertex gauge: cocycle potential and transport matrix along the tree
    phi: dict[str, Vector] = {}
    P: dict[str, tuple] = {}
    for e, v, w, sgn in _tree_walk(X, tree):
        if e is None:
            phi[w], P[w] = (0,) * s, ident
            continue
        A = E.matrix(e) if E is not None else ident
        phi[w] = _vadd(phi[v], alpha(e), sgn)
        P[w] = _matmul(P[v], A if sgn == 1 else linalg.inverse_unimodular(A))
    if len(phi) != len(X.ids(0)):
        raise TwistError("tree does not span the 1-skeleton")

    a_corr: dict[str, Vector] = {}
    A_corr: dict[str, tuple] = {}
    A_inv: dict[str, tuple] = {}
    for e in X.ids(1):
        tail, head = X.edge_ends(e)
        a_corr[e] = _vadd(_vadd(phi[tail], alpha(e)), phi[head], -1)
        A = E.matrix(e) if E is not None else ident
        A_corr[e] = _matmul(_matmul(P[tail], A), linalg.inverse_unimodular(P[head]))
        A_inv[e] = tuple(tuple(r) for r in linalg.inverse_unimodular(A_corr[e]))

    def transport(state, step):
        acc, G = state
        e, sgn = step
        if sgn == 1:
            return _vadd(acc, a_corr[e]), _matmul(G, A_corr[e])
        return _vadd(acc, a_corr[e], -1), _matmul(G, A_inv[e])

    # entries[cell][face] accumulates k x k blocks of Laurent polynomials
    def add_block(blocks, face, exp, G, coeff):
        cur = blocks.setdefault(face, [[Laurent.zero(s)] * k for _ in range(k)])
        for i in range(k):
            for j in range(k):
                if G[i][j]:
                    cur[i][j] = cur[i][j] + Laurent.monomial(exp, coeff * G[i][j])

    start_state = ((0,) * s, ident)
    base: dict[str, str] = {v: v for v in X.ids(0)}
    columns: dict[str, dict] = {}
    for e in X.ids(1):
        tail, head = X.edge_ends(e)
        blocks: dict = {}
        add_block(blocks, head, a_corr[e], A_corr[e], 1)
        add_block(blocks, tail, (0,) * s, ident, -1)
        columns[e] = blocks
        base[e] = tail
    for F in X.ids(2):
        loop = attaching_loop(X, F)
        blocks = {}
        state = start_state
        for step in loop:
            if step[1] == 1:
                add_block(blocks, step[0], state[0], state[1], 1)
                state = transport(state, step)
            else:
                state = transport(state, step)
                add_block(blocks, step[0], state[0], state[1], -1)
        if loop and state[1] != ident:
            raise TwistError(f"monodromy is not flat around 2-cell {F!r}")
        if loop and any(state[0]):
            raise CocycleError(f"cocycle condition fails on 2-cell {F!r}")
        columns[F] = blocks
        base[F] = _loop_start(X, loop) or min((v for v in X.closure([F]) if X[v].dim == 0), default=None)
    for q in range(3, X.dimension + 1):
        for c in X.ids(q):
            closure = X.closure([c])
            faces = [f for f, _ in X[c].boundary]
            if len(set(faces)) != len(faces):
                raise TwistError(f"cell {c!r} meets a face more than once; twisting needs one lift per face")
            root = min((v for v in closure if X[v].dim == 0), default=None)
            base[c] = root
            states = _closure_transport(X, closure, root, transport, start_state)
            if states is None:
                raise TwistError(f"the closure of {c!r} carries nontrivial holonomy; "
                                 "twisting cells of dimension 3 and up needs simply connected closures")
            blocks = {}
            for f, coeff in X[c].boundary:
                acc, G = states[base[f]]
                add_block(blocks, f, acc, G, coeff)
            columns[c] = blocks

    basis = {q: tuple((c, i) for c in X.ids(q) for i in range(k)) for q in range(X.dimension + 1)}
    matrices = {}
    for q in range(1, X.dimension + 1):
        rows = {b: n for n, b in enumerate(basis[q - 1])}
        M = lzeros(len(basis[q - 1]), len(basis[q]), s)
        for cidx, c in enumerate(X.ids(q)):
            for face, blk in columns[c].items():
                for i in range(k):
                    for j in range(k):
                        # blocks act on row vectors; the matrix acts on columns
                        if blk[i][j]:
                            r = rows[(face, j)]
                            M[r][cidx * k + i] = M[r][cidx * k + i] + blk[i][j]
        matrices[q] = M
    T = TwistedComplex(X, s, k, basis, matrices, tuple(tree))
    bad = T.square_zero_failures()
    if bad:
        raise TwistError(f"twisted boundary does not square to zero in degree(s) {bad}; "
                         "a cell closure is not simply connected or a loop is inconsistent")
    return T


def _closure_transport(X, closure, root, transport, start):
    adj = defaultdict(list)
    for e in sorted(c for c in closure if X[c].dim == 1):
        tail, head = X.edge_ends(e)
        adj[tail].append((e, head, 1))
        adj[head].append((e, tail, -1))
    states = {root: start}
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for e, w, sgn in adj[v]:
            if w not in states:
                states[w] = transport(states[v], (e, sgn))
                queue.append(w)
    for v, nbrs in adj.items():
        for e, w, sgn in nbrs:
            if sgn == 1 and transport(states[v], (e, 1)) != states[w]:
                return None
    return states


def _check_point(T: TwistedComplex, at) -> tuple[Fraction, ...]:
    point = tuple(Fraction(x) for x in (at if isinstance(at, (list, tuple)) else [at]))
    if len(point) != T.nvars:
        raise ValueError(f"evaluation point needs {T.nvars} coordinate(s), got {len(point)}")
    if any(x == 0 for x in point):
        raise ValueError("evaluation point has a zero coordinate; Laurent entries are undefined there")
    return point


def evaluated_homology(T: TwistedComplex, at) -> HomologyResult:
    """Ranks over Q of the complex obtained by substituting t = at."""
    point = _check_point(T, at)
    evaluated = T.evaluate(point)
    rank = {q: linalg.rank_rational(M) if M and M[0] else 0 for q, M in evaluated.items()}
    ranks = tuple(T.size(q) - rank.get(q, 0) - rank.get(q + 1, 0) for q in range(T.top + 1))
    return HomologyResult(QQ, ranks)


@dataclass(frozen=True)
class NovikovNumbers:
    b: tuple[int, ...]
    points: tuple[tuple[int, ...], ...]
    agree: bool
    retried: bool = False
    seed: int | None = None

    def as_dict(self):
        return {"b": list(self.b), "evaluation_points": [list(p) for p in self.points],
                "agree": self.agree, "retried": self.retried, "seed": self.seed}


def random_prime(rng: random.Random, lo: int = 10**3, hi: int = 10**6) -> int:
    while True:
        n = rng.randrange(lo, hi + 1)
        if linalg.is_prime(n):
            return n


def novikov_numbers(X: CellComplex, alpha: CellularCocycle, E: MonodromyRep | None = None,
                    seed: int = 0, trials: int = 3) -> NovikovNumbers:
    """Generic ranks of the twisted homology, by random prime evaluation points.

    The rank only drops on a proper subvariety, so the generic value is the
    minimum over points; all trials must also agree (one retry allowed).
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    T = build_twisted_complex(X, alpha, E)
    rng = random.Random(seed)
    all_points = []
    for attempt in range(2):
        points = [tuple(random_prime(rng) for _ in range(alpha.s)) for _ in range(trials)]
        all_points.extend(points)
        results = [evaluated_homology(T, p).ranks for p in points]
        if all(r == results[0] for r in results):
            return NovikovNumbers(results[0], tuple(all_points), True, attempt > 0, seed)
    raise NovikovDisagreement(f"evaluation trials disagree after a retry (seed {seed}); rerun with another seed")


@dataclass(frozen=True)
class AdmissibleEvaluation:
    a: tuple[int, ...]
    p: int

    def as_dict(self):
        return {"a": list(self.a), "p": self.p}


def admissible_evaluation(p: int, seed: int = 0, s: int = 1) -> AdmissibleEvaluation:
    """A point whose coordinates are nonzero multiples of the prime p.

    Any integer polynomial vanishing there has constant term divisible by p.
    """
    if not linalg.is_prime(p):
        raise ValueError(f"{p} is not prime")
    rng = random.Random(seed)
    a = tuple(p * rng.choice([-1, 1]) * rng.randint(1, 9) for _ in range(s))
    return AdmissibleEvaluation(a, p)
