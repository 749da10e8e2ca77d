"""Adjacency graph of a task: edges, blocks, cut vertices and cycle bases."""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import linalg as la
from .linalg import mpq
from .lp import linprog_exact, linprog_float
from .model import Belief, Task

# optimum margin above which a float LP declares adjacency
FLOAT_ADJ_EPS = 1e-9

Edge = tuple[str, str]
Cycle = tuple[str, ...]


@dataclass(frozen=True, eq=False)
class AdjacencyWitness:
    """Belief at which exactly ``{a, b}`` are optimal, with its margin."""

    a: str
    b: str
    p: Belief
    gap: object


def orient(a: str, b: str) -> Edge:
    return (a, b) if a <= b else (b, a)


def cycle_edges(cycle: Sequence[str]) -> list[Edge]:
    """Consecutive oriented steps of a closed vertex cycle."""
    n = len(cycle)
    return [(cycle[i], cycle[(i + 1) % n]) for i in range(n)]


def is_adjacent(task: Task, a: str, b: str) -> AdjacencyWitness | None:
    """Return a witness belief if ``a`` and ``b`` can be the only optima.

    Solves ``max ε`` over beliefs with ``p·(u(a) - u(b)) = 0`` and
    ``p·(u(a) - u(c)) >= ε`` for every other action, capped at ``ε <= 1``.
    """
    ia, ib = task.index(a), task.index(b)
    if ia == ib:
        raise ValueError("an action is never adjacent to itself")
    S = task.n_states
    u = task.u
    exact = task.exact
    one = la.like(1, exact)
    zero = la.like(0, exact)
    others = [c for c in range(task.n_actions) if c not in (ia, ib)]
    A_eq = [[one] * S + [zero], list(u[ia] - u[ib]) + [zero]]
    b_eq = [one, zero]
    A_ub = [list(u[c] - u[ia]) + [one] for c in others] + [[zero] * S + [one]]
    b_ub = [zero] * len(others) + [one]
    c = [zero] * S + [one]
    solver = linprog_exact if exact else linprog_float
    res = solver(c, A_ub, b_ub, A_eq, b_eq)
    if res.status != "optimal":
        return None
    eps = res.value
    if (eps <= 0) if exact else (eps <= FLOAT_ADJ_EPS):
        return None
    p = res.x[:S]
    if not exact:
        p = np.clip(p, 0.0, None)
        p = p / p.sum()
    vals = u @ p
    gap = min((vals[ia] - vals[k] for k in others), default=eps)
    return AdjacencyWitness(a, b, Belief(p), gap)


@dataclass(frozen=True, eq=False)
class AdjacencyGraph:
    """Adjacency graph with its block structure and a minimum cycle basis.

    Edges are oriented from the lexicographically smaller label.
    """

    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]
    witnesses: dict = field(repr=False)
    blocks: tuple[tuple[Edge, ...], ...]
    cut_vertices: tuple[str, ...]
    components: tuple[frozenset[str], ...]
    mcb: tuple[Cycle, ...]

    @property
    def incidence(self) -> np.ndarray:
        """Vertex-edge incidence: +1 where an edge enters, -1 where it leaves."""
        vi = {v: i for i, v in enumerate(self.vertices)}
        A = np.zeros((len(self.vertices), len(self.edges)), dtype=int)
        for k, (s, t) in enumerate(self.edges):
            A[vi[s], k] = -1
            A[vi[t], k] = 1
        return A

    def neighbors(self, v: str) -> list[str]:
        return self._adj[v]

    def has_edge(self, a: str, b: str) -> bool:
        return orient(a, b) in self._edge_set

    def block_vertices(self) -> list[frozenset[str]]:
        return [frozenset(x for e in blk for x in e) for blk in self.blocks]

    def cycle_vector(self, cycle: Sequence[str]) -> np.ndarray:
        """Signed incidence vector of a closed cycle (lies in ker A)."""
        ei = {e: k for k, e in enumerate(self.edges)}
        x = np.zeros(len(self.edges), dtype=int)
        for s, t in cycle_edges(cycle):
            if (s, t) in ei:
                x[ei[(s, t)]] += 1
            else:
                x[ei[(t, s)]] -= 1
        return x

    def is_tree(self) -> bool:
        return len(self.components) == 1 and len(self.edges) == len(self.vertices) - 1

    def is_complete(self) -> bool:
        n = len(self.vertices)
        return len(self.edges) == n * (n - 1) // 2

    def cycle_space_dim(self) -> int:
        return len(self.edges) - len(self.vertices) + len(self.components)


def _make_graph(vertices: Sequence[str], edges: Iterable[Edge], witnesses=None) -> AdjacencyGraph:
    vertices = tuple(vertices)
    edges = tuple(sorted({orient(*e) for e in edges}, key=lambda e: (vertices.index(e[0]), vertices.index(e[1]))))
    adj = {v: [] for v in vertices}
    for s, t in edges:
        adj[s].append(t)
        adj[t].append(s)
    order = {v: i for i, v in enumerate(vertices)}
    for v in adj:
        adj[v].sort(key=order.get)
    blocks, cuts = biconnected_blocks(vertices, adj)
    comps = connected_components(vertices, adj)
    mcb = []
    for blk in blocks:
        bverts = [v for v in vertices if any(v in e for e in blk)]
        mcb.extend(horton_mcb(bverts, blk))
    g = AdjacencyGraph(vertices, edges, dict(witnesses or {}), tuple(blocks), tuple(cuts),
                       tuple(comps), tuple(mcb))
    object.__setattr__(g, "_adj", adj)
    object.__setattr__(g, "_edge_set", frozenset(edges))
    return g


def build_graph(task: Task) -> AdjacencyGraph:
    """Run the adjacency test on every pair and assemble the graph."""
    witnesses = {}
    for a, b in itertools.combinations(task.actions, 2):
        w = is_adjacent(task, a, b)
        if w is not None:
            witnesses[orient(a, b)] = w
    return _make_graph(task.actions, witnesses.keys(), witnesses)


def graph_from_edges(vertices: Sequence[str], edges: Iterable[Edge]) -> AdjacencyGraph:
    """Graph with the given edges; handy for purely combinatorial use."""
    return _make_graph(vertices, edges)


def connected_components(vertices, adj) -> list[frozenset[str]]:
    seen: set[str] = set()
    comps = []
    for v in vertices:
        if v in seen:
            continue
        comp = {v}
        queue = deque([v])
        while queue:
            x = queue.popleft()
            for y in adj[x]:
                if y not in comp:
                    comp.add(y)
                    queue.append(y)
        seen |= comp
        comps.append(frozenset(comp))
    return comps


def biconnected_blocks(vertices, adj) -> tuple[list[tuple[Edge, ...]], list[str]]:
    """Edge blocks and cut vertices by depth-first lowpoints."""
    disc: dict[str, int] = {}
    low: dict[str, int] = {}
    blocks: list[tuple[Edge, ...]] = []
    cuts: list[str] = []
    stack: list[Edge] = []
    time = itertools.count()

    def visit(u: str, parent: str | None) -> None:
        disc[u] = low[u] = next(time)
        children = 0
        is_cut = False
        for v in adj[u]:
            if v not in disc:
                children += 1
                stack.append((u, v))
                visit(v, u)
                low[u] = min(low[u], low[v])
                if low[v] >= disc[u]:
                    if parent is not None:
                        is_cut = True
                    blk = []
                    while True:
                        e = stack.pop()
                        blk.append(orient(*e))
                        if e == (u, v):
                            break
                    blocks.append(tuple(sorted(blk)))
            elif v != parent and disc[v] < disc[u]:
                stack.append((u, v))
                low[u] = min(low[u], disc[v])
        if parent is None and children > 1:
            is_cut = True
        if is_cut:
            cuts.append(u)

    for v in vertices:
        if v not in disc:
            visit(v, None)
    order = {v: i for i, v in enumerate(vertices)}
    cuts.sort(key=order.get)
    return blocks, cuts


def _bfs_tree(root: str, adj) -> tuple[dict, dict]:
    parent = {root: None}
    dist = {root: 0}
    queue = deque([root])
    while queue:
        x = queue.popleft()
        for y in adj[x]:
            if y not in dist:
                dist[y] = dist[x] + 1
                parent[y] = x
                queue.append(y)
    return parent, dist


def _path_to_root(x: str, parent: dict) -> list[str]:
    path = [x]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])
    return path


def canonical_cycle(cycle: Sequence[str], order: dict) -> Cycle:
    """Rotate to start at the first vertex and fix the direction."""
    c = list(cycle)
    k = min(range(len(c)), key=lambda i: order[c[i]])
    c = c[k:] + c[:k]
    if len(c) > 2 and order[c[-1]] < order[c[1]]:
        c = [c[0]] + c[1:][::-1]
    return tuple(c)


class GF2Basis:
    """Incremental independence test over GF(2) using int bitmasks."""

    def __init__(self):
        self._pivots: dict[int, int] = {}

    def reduce(self, x: int) -> int:
        while x:
            top = x.bit_length() - 1
            if top not in self._pivots:
                return x
            x ^= self._pivots[top]
        return 0

    def add(self, x: int) -> bool:
        r = self.reduce(x)
        if r == 0:
            return False
        self._pivots[r.bit_length() - 1] = r
        return True

    def __len__(self) -> int:
        return len(self._pivots)


def _edge_mask(cycle: Sequence[str], eindex: dict) -> int:
    mask = 0
    for s, t in cycle_edges(cycle):
        mask |= 1 << eindex[orient(s, t)]
    return mask


def horton_mcb(vertices: Sequence[str], edges: Sequence[Edge]) -> list[Cycle]:
    """Minimum cycle basis by Horton candidates and a greedy GF(2) sieve.

    Candidates are ``P(v,x) + (x,y) + P(y,v)`` over a BFS tree per root
    ``v``, kept only when the two tree paths meet at ``v`` alone.
    """
    vertices = list(vertices)
    order = {v: i for i, v in enumerate(vertices)}
    adj = {v: [] for v in vertices}
    for s, t in edges:
        adj[s].append(t)
        adj[t].append(s)
    for v in adj:
        adj[v].sort(key=order.get)
    eindex = {orient(*e): k for k, e in enumerate(edges)}
    target = len(edges) - len(vertices) + len(connected_components(vertices, adj))
    if target <= 0:
        return []
    cands = {}
    for v in vertices:
        parent, dist = _bfs_tree(v, adj)
        for x, y in edges:
            if x not in dist or y not in dist or parent.get(y) == x or parent.get(x) == y:
                continue
            px = _path_to_root(x, parent)
            py = _path_to_root(y, parent)
            if set(px[:-1]) & set(py[:-1]):
                continue
            cyc = canonical_cycle(px[::-1] + py[:-1], order)
            if len(set(cyc)) != len(cyc):
                continue
            mask = _edge_mask(cyc, eindex)
            if mask not in cands:
                cands[mask] = cyc
    ranked = sorted(cands.items(), key=lambda kv: (len(kv[1]), [order[v] for v in kv[1]]))
    basis = GF2Basis()
    out = []
    for mask, cyc in ranked:
        if basis.add(mask):
            out.append(cyc)
            if len(out) == target:
                break
    return out


def minimum_cycle_basis(graph: AdjacencyGraph) -> list[Cycle]:
    """Blockwise union of per-block Horton bases (an MCB of the graph)."""
    return list(graph.mcb)


def longest_cycle(mcb: Sequence[Cycle]) -> int:
    return max((len(c) for c in mcb), default=0)


# product structure ---------------------------------------------------------

def structured_mcb(task: Task, factor_graphs: Sequence[AdjacencyGraph] | None = None) -> list[Cycle]:
    """Cycle basis of a product graph built from factor bases.

    Factor triangles in every fiber, one fiber copy of each longer factor
    cycle, then an independent set of cross squares ``e x f``.
    """
    if task.factors is None:
        raise ValueError("structured_mcb needs a product task")
    if factor_graphs is None:
        factor_graphs = [build_graph(f) for f in task.factors]
    # work on tuples of factor labels, fold factors left to right
    verts = [(v,) for v in factor_graphs[0].vertices]
    edges = [((s,), (t,)) for s, t in factor_graphs[0].edges]
    mcb = [tuple((v,) for v in c) for c in factor_graphs[0].mcb]
    for g2 in factor_graphs[1:]:
        verts, edges, mcb = _product_mcb(verts, edges, mcb, list(g2.vertices), list(g2.edges), list(g2.mcb))
    label = {v: ",".join(v) for v in verts}
    out = [tuple(label[v] for v in c) for c in mcb]
    order = {a: i for i, a in enumerate(task.actions)}
    return [canonical_cycle(c, order) for c in out]


def _product_mcb(v1, e1, c1, v2, e2, c2):
    verts = [x + (y,) for x in v1 for y in v2]
    edges = [(s + (y,), t + (y,)) for s, t in e1 for y in v2] + \
            [(x + (s,), x + (t,)) for x in v1 for s, t in e2]
    order = {v: i for i, v in enumerate(verts)}
    eindex = {}
    for k, (s, t) in enumerate(edges):
        eindex[(s, t) if order[s] <= order[t] else (t, s)] = k

    def mask(cyc):
        m = 0
        for a, b in cycle_edges(cyc):
            m |= 1 << eindex[(a, b) if order[a] <= order[b] else (b, a)]
        return m

    chosen = []
    basis = GF2Basis()

    def take(cyc):
        if basis.add(mask(cyc)):
            chosen.append(cyc)

    for c in c1:
        if len(c) == 3:
            for y in v2:
                take(tuple(x + (y,) for x in c))
        else:
            take(tuple(x + (v2[0],) for x in c))
    for c in c2:
        if len(c) == 3:
            for x in v1:
                take(tuple(x + (y,) for y in c))
        else:
            take(tuple(v1[0] + (y,) for y in c))
    target = len(edges) - len(verts) + 1
    for (s, t) in e1:
        for (p, q) in e2:
            if len(chosen) == target:
                break
            take((s + (p,), t + (p,), t + (q,), s + (q,)))
    if len(chosen) != target:
        raise RuntimeError(f"structured basis has {len(chosen)} cycles, cycle space has dimension {target}")
    return verts, edges, chosen


def changed_factors(task: Task, a: str, b: str) -> list[int]:
    pa, pb = task.action_parts(a), task.action_parts(b)
    return [i for i, (x, y) in enumerate(zip(pa, pb)) if x != y]


# export --------------------------------------------------------------------

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"]


def to_dot(graph: AdjacencyGraph, name: str = "adjacency") -> str:
    """Graphviz DOT with edges colored by block and cut vertices boxed."""
    def q(s):
        return '"' + str(s).replace('"', r'\"') + '"'

    lines = [f"graph {q(name)} {{"]
    cuts = set(graph.cut_vertices)
    for v in graph.vertices:
        attrs = 'shape=box, style=filled, fillcolor="#ffd966", xlabel="cut"' if v in cuts else "shape=ellipse"
        lines.append(f"  {q(v)} [{attrs}];")
    block_of = {e: k for k, blk in enumerate(graph.blocks) for e in blk}
    for s, t in graph.edges:
        k = block_of.get((s, t), 0)
        lines.append(f'  {q(s)} -- {q(t)} [color="{_PALETTE[k % len(_PALETTE)]}", label="B{k}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
