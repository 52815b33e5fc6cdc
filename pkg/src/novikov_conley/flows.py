"""Combinatorial flows: weighted digraphs standing in for flows carrying a cocycle.

Nodes are rest points, Morse-set states or waypoints; an edge is an orbit
segment labelled with the exact integral of the cocycle along it (a vector of
rationals).  In a finite graph, chain integrals are bounded exactly when
every directed cycle has zero total weight, which is what the classifier
decides.
"""
from __future__ import annotations

import itertools
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import networkx as nx

Weight = tuple[Fraction, ...]


class FlowError(ValueError):
    pass


class NotGradientLike(Exception):
    """Raised when a potential is requested for a flow with recurrence."""

    def __init__(self, cycle: "Cycle"):
        super().__init__(f"cycle {' -> '.join(cycle.nodes)} has weight {[str(x) for x in cycle.weight]}")
        self.cycle = cycle


@dataclass(frozen=True)
class FlowEdge:
    src: str
    dst: str
    w: Weight


@dataclass(frozen=True)
class Cycle:
    """A closed edge path; ``edges`` index into ``flow.edges``."""

    edges: tuple[int, ...]
    nodes: tuple[str, ...]
    weight: Weight

    def as_dict(self):
        return {"nodes": list(self.nodes), "edges": list(self.edges), "weight": [str(x) for x in self.weight]}


def _frac(x) -> Fraction:
    if isinstance(x, float):
        raise FlowError("weights must be exact (ints, Fractions or rational strings)")
    return Fraction(x)


@dataclass(frozen=True)
class CombinatorialFlow:
    nodes: tuple[str, ...]
    fixed: frozenset
    edges: tuple[FlowEdge, ...]
    morse_sets: tuple[frozenset, ...] | None = None
    name: str = "flow"

    @classmethod
    def build(cls, nodes: Iterable, edges: Iterable, morse_sets: Iterable | None = None,
              name: str = "flow") -> "CombinatorialFlow":
        """Nodes are ids or ``(id, fixed)`` pairs; edges are ``(src, dst, weight)``."""
        ids, fixed = [], set()
        for n in nodes:
            if isinstance(n, str):
                ids.append(n)
            else:
                ids.append(str(n[0]))
                if n[1]:
                    fixed.add(str(n[0]))
        if len(set(ids)) != len(ids):
            raise FlowError("duplicate node id")
        out = []
        dim = None
        for src, dst, w in edges:
            w = tuple(_frac(x) for x in (w if isinstance(w, (list, tuple)) else [w]))
            if dim is None:
                dim = len(w)
            elif len(w) != dim:
                raise FlowError("edge weights have different lengths")
            out.append(FlowEdge(str(src), str(dst), w))
        sets = None if morse_sets is None else tuple(frozenset(map(str, m)) for m in morse_sets)
        flow = cls(tuple(ids), frozenset(fixed), tuple(out), sets, name)
        flow.check()
        return flow

    @property
    def s(self) -> int:
        return len(self.edges[0].w) if self.edges else 1

    def check(self):
        known = set(self.nodes)
        for e in self.edges:
            if e.src not in known or e.dst not in known:
                raise FlowError(f"edge {e.src}->{e.dst} references an unknown node")
            if e.src == e.dst and e.src in self.fixed:
                raise FlowError(f"self-loop on fixed node {e.src}")
        if self.morse_sets is not None:
            seen = set()
            for m in self.morse_sets:
                if not m or not m <= known:
                    raise FlowError(f"Morse set {sorted(m)} is empty or has unknown nodes")
                if m & seen:
                    raise FlowError("Morse sets overlap")
                seen |= m

    @property
    def sets(self) -> tuple[frozenset, ...]:
        """Designated Morse sets, plus a singleton for every uncovered fixed node."""
        given = list(self.morse_sets or ())
        covered = set().union(*given) if given else set()
        given += [frozenset({n}) for n in sorted(self.fixed) if n not in covered]
        return tuple(given)

    def digraph(self) -> nx.MultiDiGraph:
        G = nx.MultiDiGraph()
        G.add_nodes_from(self.nodes)
        for i, e in enumerate(self.edges):
            G.add_edge(e.src, e.dst, key=i)
        return G

    def scaled(self, c) -> "CombinatorialFlow":
        c = Fraction(c)
        return CombinatorialFlow(self.nodes, self.fixed,
                                 tuple(FlowEdge(e.src, e.dst, tuple(c * x for x in e.w)) for e in self.edges),
                                 self.morse_sets, self.name)

    def shifted(self, g: Mapping[str, Sequence]) -> "CombinatorialFlow":
        """Add the coboundary of a node potential: w(u->v) += g(v) - g(u)."""
        zero = (0,) * self.s
        edges = []
        for e in self.edges:
            gu, gv = g.get(e.src, zero), g.get(e.dst, zero)
            edges.append(FlowEdge(e.src, e.dst, tuple(x + _frac(b) - _frac(a) for x, a, b in zip(e.w, gu, gv))))
        return CombinatorialFlow(self.nodes, self.fixed, tuple(edges), self.morse_sets, self.name)

    def with_fixed(self, node: str) -> "CombinatorialFlow":
        nodes = self.nodes if node in self.nodes else self.nodes + (node,)
        return CombinatorialFlow(nodes, self.fixed | {node}, self.edges, self.morse_sets, self.name)

    def to_json(self) -> dict:
        out = {
            "name": self.name,
            "nodes": [{"id": n, "fixed": n in self.fixed} for n in self.nodes],
            "edges": [{"from": e.src, "to": e.dst, "w": [str(x) for x in e.w]} for e in self.edges],
        }
        if self.morse_sets is not None:
            out["morse_sets"] = [sorted(m) for m in self.morse_sets]
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> "CombinatorialFlow":
        try:
            nodes = [(n["id"], bool(n.get("fixed", False))) for n in data["nodes"]]
            edges = []
            for i, e in enumerate(data.get("edges", [])):
                try:
                    edges.append((e["from"], e["to"], e["w"]))
                except KeyError as exc:
                    raise FlowError(f"edges[{i}]: missing field {exc}") from exc
        except KeyError as exc:
            raise FlowError(f"flow JSON is missing field {exc}") from exc
        except (ValueError, ZeroDivisionError) as exc:
            raise FlowError(f"bad weight: {exc}") from exc
        return cls.build(nodes, edges, data.get("morse_sets"), data.get("name", "flow"))


def load_flow(path) -> CombinatorialFlow:
    return CombinatorialFlow.from_json(json.loads(Path(path).read_text()))


def path_weight(flow: CombinatorialFlow, edge_ids: Sequence[int]) -> Weight:
    """Integrate along consecutive edges, checking contiguity."""
    total = (Fraction(0),) * flow.s
    here = None
    for i in edge_ids:
        e = flow.edges[i]
        if here is not None and e.src != here:
            raise FlowError(f"edge {i} does not start at {here}")
        here = e.dst
        total = tuple(a + b for a, b in zip(total, e.w))
    return total


def _scalar(w: Weight, functional: Sequence | None) -> Fraction:
    if functional is None:
        return sum(w, Fraction(0))
    return sum((Fraction(c) * x for c, x in zip(functional, w)), Fraction(0))


# -- Morse decomposition ---------------------------------------------------------

@dataclass(frozen=True)
class MorseDecomposition:
    classes: tuple[frozenset, ...]          # recurrent classes, sources first
    order: frozenset                        # (i, j): class i flows to class j

    def as_dict(self):
        return {"classes": [sorted(c) for c in self.classes],
                "order": sorted([list(p) for p in self.order])}


def _condensation(flow: CombinatorialFlow):
    G = nx.DiGraph()
    G.add_nodes_from(flow.nodes)
    G.add_edges_from((e.src, e.dst) for e in flow.edges)
    C = nx.condensation(G)
    return G, C


def morse_decomposition(flow: CombinatorialFlow) -> MorseDecomposition:
    """Recurrent strongly connected components, ordered along the flow."""
    G, C = _condensation(flow)
    loops = {e.src for e in flow.edges if e.src == e.dst}
    order = list(nx.lexicographical_topological_sort(C, key=lambda c: min(C.nodes[c]["members"])))
    recurrent = []
    for c in order:
        members = frozenset(C.nodes[c]["members"])
        if len(members) > 1 or members & loops or members & flow.fixed:
            recurrent.append((c, members))
    pairs = set()
    for i, (ci, _) in enumerate(recurrent):
        below = nx.descendants(C, ci)
        for j, (cj, _) in enumerate(recurrent):
            if cj in below:
                pairs.add((i, j))
    return MorseDecomposition(tuple(m for _, m in recurrent), frozenset(pairs))


# -- cycles ----------------------------------------------------------------------

def _edge_cycle(flow: CombinatorialFlow, nodes: Sequence[str], pick) -> Cycle:
    """Turn a closed node sequence into a cycle choosing edges via ``pick``."""
    edges = []
    for u, v in zip(nodes, nodes[1:]):
        cands = [i for i, e in enumerate(flow.edges) if e.src == u and e.dst == v]
        edges.append(pick(u, v, cands))
    return Cycle(tuple(edges), tuple(nodes), path_weight(flow, edges))


def find_drift_cycle(flow: CombinatorialFlow) -> Cycle | None:
    """A simple directed cycle with nonzero total weight, if one exists.

    For each weight component, look for a negative cycle and then for a
    positive one (a negative cycle of the negated weights) by Bellman-Ford.
    """
    for comp in range(flow.s):
        for sign in (1, -1):
            G = nx.DiGraph()
            G.add_nodes_from(flow.nodes)
            best: dict[tuple[str, str], int] = {}
            for i, e in enumerate(flow.edges):
                key = (e.src, e.dst)
                if key not in best or sign * e.w[comp] < sign * flow.edges[best[key]].w[comp]:
                    best[key] = i
            for (u, v), i in best.items():
                G.add_edge(u, v, weight=sign * flow.edges[i].w[comp])
            root = ("__root__",)
            G.add_node(root)
            for n in flow.nodes:
                G.add_edge(root, n, weight=Fraction(0))
            try:
                cyc = nx.find_negative_cycle(G, root)
            except nx.NetworkXError:
                continue
            cyc = _simple_cycle(cyc)
            c = _edge_cycle(flow, cyc, lambda u, v, cands: best[(u, v)])
            if c.weight[comp] != 0:
                return c
    return None


def _simple_cycle(nodes: list) -> list:
    """Extract a simple closed sub-walk from a closed node walk."""
    seen = {}
    for i, n in enumerate(nodes):
        if n in seen:
            return nodes[seen[n]:i + 1]
        seen[n] = i
    return nodes


def _internal(flow: CombinatorialFlow, e: FlowEdge) -> bool:
    return any(e.src in m and e.dst in m for m in flow.sets)


def find_cycle_outside_sets(flow: CombinatorialFlow) -> Cycle | None:
    """Any directed cycle using an edge that is not internal to a Morse set."""
    G = nx.DiGraph()
    G.add_nodes_from(flow.nodes)
    first = {}
    for i, e in enumerate(flow.edges):
        G.add_edge(e.src, e.dst)
        first.setdefault((e.src, e.dst), i)
    for comp in nx.strongly_connected_components(G):
        sub = G.subgraph(comp)
        for u, v in sorted(sub.edges()):
            e = flow.edges[first[(u, v)]]
            if _internal(flow, e):
                continue
            if u == v:
                return _edge_cycle(flow, [u, u], lambda a, b, c: min(c))
            back = nx.shortest_path(sub, v, u)
            return _edge_cycle(flow, [u] + back, lambda a, b, c: min(c))
    return None


# -- potentials and classification ---------------------------------------------

def lyapunov_potential(flow: CombinatorialFlow) -> dict[str, int]:
    """Integer potential strictly decreasing along every edge between classes.

    The value is the longest-path rank of a node's component in the
    condensation (sinks get 0).  Edges inside a Morse set are exempt; any
    other recurrence raises :class:`NotGradientLike` with a witness cycle.
    """
    drift = find_drift_cycle(flow)
    if drift is not None:
        raise NotGradientLike(drift)
    loop = find_cycle_outside_sets(flow)
    if loop is not None:
        raise NotGradientLike(loop)
    G, C = _condensation(flow)
    rank = {}
    for c in reversed(list(nx.topological_sort(C))):
        rank[c] = max((rank[d] + 1 for d in C.successors(c)), default=0)
    return {n: rank[C.graph["mapping"][n]] for n in flow.nodes}


@dataclass(frozen=True)
class Classification:
    verdict: str                       # "GradientLike" | "NotGradientLike"
    potential: Mapping[str, int] | None = None
    cycle: Cycle | None = None
    caveat: str | None = None
    carry: "CarryReport | None" = None

    @property
    def gradient_like(self) -> bool:
        return self.verdict == "GradientLike"

    def as_dict(self):
        out = {"verdict": self.verdict, "caveat": self.caveat}
        if self.potential is not None:
            out["potential"] = dict(sorted(self.potential.items()))
        if self.cycle is not None:
            out["cycle"] = self.cycle.as_dict()
        if self.carry is not None:
            out["carry"] = self.carry.as_dict()
        return out


def classify_gradient_like(flow: CombinatorialFlow, require_carry: bool = True,
                           functional: Sequence | None = None) -> Classification:
    """Gradient-like (with a potential) or not (with a recurrent cycle).

    The drift test is exhaustive only for flows carrying the cocycle, so by
    default that is certified first.  With ``require_carry=False`` the
    verdict falls back to acyclicity off the Morse sets and carries a caveat.
    """
    carry = find_carry_parameters(flow, functional)
    caveat = None
    if not carry.verdict:
        if require_carry:
            raise FlowError("flow does not carry its cocycle for any parameters: "
                            + "; ".join(carry.reasons))
        caveat = "carrying precondition not verified; verdict based on acyclicity off the Morse sets"
    try:
        g = lyapunov_potential(flow)
    except NotGradientLike as exc:
        return Classification("NotGradientLike", cycle=exc.cycle, caveat=caveat, carry=carry)
    return Classification("GradientLike", potential=g, caveat=caveat, carry=carry)


# -- carrying a cocycle ----------------------------------------------------------

@dataclass
class CarryReport:
    verdict: bool
    rho: Fraction
    lam: Fraction
    condition1: bool
    condition2: bool
    condition3: bool
    oscillation: Fraction
    min_connecting: Fraction | None       # None: no connecting paths
    min_cycle_mean: Fraction | None       # None: no cycles off the Morse sets
    T0: int | None
    reasons: list[str] = field(default_factory=list)

    def as_dict(self):
        s = lambda x: None if x is None else str(x)
        return {"verdict": self.verdict, "rho": str(self.rho), "lambda": str(self.lam),
                "conditions": {"1": self.condition1, "2": self.condition2, "3": self.condition3},
                "oscillation": str(self.oscillation), "min_connecting": s(self.min_connecting),
                "min_cycle_mean": s(self.min_cycle_mean), "T0": self.T0, "reasons": self.reasons}


def _set_potentials(flow: CombinatorialFlow, functional) -> tuple[bool, Fraction, list[str]]:
    """Condition (1): coboundary on every Morse set and its oscillation."""
    osc = Fraction(0)
    reasons = []
    ok = True
    for m in flow.sets:
        adj = defaultdict(list)
        for e in flow.edges:
            if e.src in m and e.dst in m:
                adj[e.src].append((e.dst, e.w))
                adj[e.dst].append((e.src, tuple(-x for x in e.w)))
        pot: dict[str, Weight] = {}
        for start in sorted(m):
            if start in pot:
                continue
            pot[start] = (Fraction(0),) * flow.s
            comp = [start]
            stack = [start]
            while stack:
                u = stack.pop()
                for v, w in adj[u]:
                    val = tuple(a + b for a, b in zip(pot[u], w))
                    if v not in pot:
                        pot[v] = val
                        comp.append(v)
                        stack.append(v)
                    elif pot[v] != val:
                        ok = False
                        reasons.append(f"(1) cocycle is not a coboundary on Morse set {sorted(m)}")
                        break
                else:
                    continue
                break
            vals = [_scalar(pot[v], functional) for v in comp]
            osc = max(osc, max(vals) - min(vals))
    return ok, osc, reasons


def _connecting_minimum(flow: CombinatorialFlow, functional) -> tuple[Fraction | None, bool]:
    """Least weight of a path leaving a Morse set and first re-entering one.

    Returns (minimum or None if no such path, bounded?) where unbounded means
    a negative cycle among outside nodes can be threaded in.
    """
    inside = set().union(*flow.sets) if flow.sets else set()
    outside = [n for n in flow.nodes if n not in inside]
    inf = None
    best: dict[str, Fraction | None] = {n: inf for n in outside}
    scal = [_scalar(e.w, functional) for e in flow.edges]

    def better(a, b):
        return b is None or (a is not None and a < b)

    for _ in range(len(outside) + 1):
        changed = False
        for i, e in enumerate(flow.edges):
            if e.src not in best:
                continue
            tail = Fraction(0) if e.dst in inside else best[e.dst]
            if tail is None:
                continue
            cand = scal[i] + tail
            if better(cand, best[e.src]):
                best[e.src] = cand
                changed = True
        if not changed:
            break
    else:
        return None, False
    low = None
    for i, e in enumerate(flow.edges):
        if e.src not in inside or _internal(flow, e):
            continue
        tail = Fraction(0) if e.dst in inside else best[e.dst]
        if tail is None:
            continue
        cand = scal[i] + tail
        if low is None or cand < low:
            low = cand
    return low, True


def _min_cycle_mean(flow: CombinatorialFlow, nodes: set, functional) -> Fraction | None:
    """Karp's minimum mean cycle over the subgraph induced on ``nodes``."""
    G = nx.DiGraph()
    best: dict[tuple[str, str], Fraction] = {}
    for e in flow.edges:
        if e.src in nodes and e.dst in nodes:
            w = _scalar(e.w, functional)
            key = (e.src, e.dst)
            if key not in best or w < best[key]:
                best[key] = w
    G.add_nodes_from(nodes)
    for (u, v), w in best.items():
        G.add_edge(u, v, weight=w)
    result = None
    for comp in nx.strongly_connected_components(G):
        sub = G.subgraph(comp)
        if sub.number_of_edges() == 0:
            continue
        order = sorted(comp)
        n = len(order)
        src = order[0]
        D = [{v: None for v in order} for _ in range(n + 1)]
        D[0][src] = Fraction(0)
        for k in range(1, n + 1):
            for u, v, w in sub.edges(data="weight"):
                if D[k - 1][u] is not None:
                    cand = D[k - 1][u] + w
                    if D[k][v] is None or cand < D[k][v]:
                        D[k][v] = cand
        mean = None
        for v in order:
            if D[n][v] is None:
                continue
            worst = max((D[n][v] - D[k][v]) / (n - k) for k in range(n) if D[k][v] is not None)
            if mean is None or worst < mean:
                mean = worst
        if mean is not None and (result is None or mean < result):
            result = mean
    return result


def _window_time(flow: CombinatorialFlow, nodes: set, rho: Fraction, mean: Fraction | None,
                 functional) -> int | None:
    """Least T such that every T-step walk among ``nodes`` gains at least rho."""
    n = len(nodes)
    if n == 0:
        return 0
    edges = [(e.src, e.dst, _scalar(e.w, functional)) for e in flow.edges if e.src in nodes and e.dst in nodes]
    if mean is None:
        cap = n
    elif mean <= 0:
        return None
    else:
        worst = max((-w for _, _, w in edges if w < 0), default=Fraction(0))
        cap = n + math.ceil((rho + (n - 1) * worst) / mean) + 1
    W = {v: Fraction(0) for v in nodes}
    for T in range(1, cap + 1):
        nxt: dict[str, Fraction] = {}
        for u, v, w in edges:
            if v in W:
                cand = w + W[v]
                if u not in nxt or cand < nxt[u]:
                    nxt[u] = cand
        W = nxt
        if not W or min(W.values()) >= rho:
            return T
    return None


def carries_cocycle(flow: CombinatorialFlow, rho, lam=0, functional: Sequence | None = None) -> CarryReport:
    """Check the three carrying conditions for the given rho > 0 and 0 <= lam < 1.

    Vector weights are reduced to scalars by ``functional`` (default: the sum
    of components).
    """
    rho, lam = Fraction(rho), Fraction(lam)
    if rho <= 0 or not 0 <= lam < 1:
        raise FlowError("need rho > 0 and 0 <= lambda < 1")
    reasons = []
    c1, osc, r1 = _set_potentials(flow, functional)
    reasons += r1
    if c1 and osc > lam * rho:
        c1 = False
        reasons.append(f"(1) oscillation {osc} exceeds lambda*rho = {lam * rho}")
    low, bounded = _connecting_minimum(flow, functional)
    c2 = bounded and (low is None or low >= rho)
    if not bounded:
        reasons.append("(2) connecting weights are unbounded below")
    elif not c2:
        reasons.append(f"(2) a connecting path has weight {low} < rho = {rho}")
    inside = set().union(*flow.sets) if flow.sets else set()
    outside = {n for n in flow.nodes if n not in inside}
    mean = _min_cycle_mean(flow, outside, functional)
    c3 = mean is None or mean > 0
    T0 = _window_time(flow, outside, rho, mean, functional) if c3 else None
    if not c3:
        reasons.append(f"(3) a cycle off the Morse sets has mean weight {mean} <= 0")
    return CarryReport(c1 and c2 and c3, rho, lam, c1, c2, c3, osc, low, mean, T0, reasons)


def find_carry_parameters(flow: CombinatorialFlow, functional: Sequence | None = None) -> CarryReport:
    """Pick rho and lambda that certify carrying, if any do."""
    c1, osc, _ = _set_potentials(flow, functional)
    low, bounded = _connecting_minimum(flow, functional)
    rho = low if (bounded and low is not None and low > 0) else Fraction(1)
    lam = osc / rho if rho > 0 and osc < rho else Fraction(0)
    return carries_cocycle(flow, rho, lam, functional)


# -- brute force (test oracle and small-graph cross-checks) ------------------------

def simple_cycles_brute(flow: CombinatorialFlow) -> list[Cycle]:
    """All simple cycles with every choice of parallel edge (small graphs only)."""
    out = []
    G = nx.DiGraph()
    G.add_nodes_from(flow.nodes)
    G.add_edges_from((e.src, e.dst) for e in flow.edges)
    by_pair = defaultdict(list)
    for i, e in enumerate(flow.edges):
        by_pair[(e.src, e.dst)].append(i)
    for nodes in nx.simple_cycles(G):
        closed = list(nodes) + [nodes[0]]
        choices = [by_pair[(u, v)] for u, v in zip(closed, closed[1:])]
        for pick in itertools.product(*choices):
            out.append(Cycle(tuple(pick), tuple(closed), path_weight(flow, pick)))
    return out
