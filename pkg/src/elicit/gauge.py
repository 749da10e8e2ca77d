"""Matrix edge lengths, cycle products and the Kirchhoff potential.

``w(a, b)`` maps the part of ``X̄(a)`` orthogonal to ``Δ_a^b`` onto the same
part of ``X̄(b)``.  A potential ``Γ`` with ``w(a, b) = Γ(b) Γ(a)^{-1}`` exists
on a connected graph iff every cycle has product ``I``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import linalg as la
from .graph import AdjacencyGraph, Cycle, Edge, changed_factors, cycle_edges
from .linalg import mpq
from .model import QuestionProfile, Task, delta, project_bar

# float tolerance for potential and cycle-product checks
POTENTIAL_ATOL = 1e-8
# extrapolated limits must agree this closely
LIMIT_TOL = 1e-6
EPS_LADDER = ("1/100", "1/1000", "1/10000")
T_RETRIES = 64


class AssumptionError(ValueError):
    """A precondition of the construction does not hold."""


@dataclass(frozen=True)
class RankDeficient:
    edge: Edge
    rank: int


@dataclass(frozen=True)
class EdgeMismatch:
    """``X̄(b)^⊥`` is not in the row space of ``X̄(a)^⊥``."""

    edge: Edge


@dataclass(frozen=True, eq=False)
class EdgeLengths:
    lengths: dict
    deficient: tuple[RankDeficient, ...] = ()
    mismatched: tuple[EdgeMismatch, ...] = ()

    @property
    def complete(self) -> bool:
        return not self.deficient and not self.mismatched


@dataclass(frozen=True, eq=False)
class Potential:
    gamma: dict
    references: tuple[str, ...]
    parent: dict = field(repr=False)


@dataclass(frozen=True, eq=False)
class CycleObstruction:
    cycle: Cycle
    product: np.ndarray
    edge: Edge


def _perp(rows: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Remove the ``d`` component from each row."""
    dd = d @ d
    if dd == 0:
        return rows
    coef = (rows @ d) / dd
    return rows - np.outer(coef, d)


def edge_length(task: Task, X: QuestionProfile, a: str, b: str):
    """``w`` with ``X̄(b)^⊥ = w X̄(a)^⊥``, else ``RankDeficient``/``EdgeMismatch``."""
    d = delta(task, a, b)
    xa = _perp(project_bar(X.of(a)), d)
    xb = _perp(project_bar(X.of(b)), d)
    r = la.rank(xa)
    if r < X.m:
        return RankDeficient((a, b), r)
    w = la.solve_left(xa, xb)
    if w is None:
        return EdgeMismatch((a, b))
    return w


def compute_edge_lengths(task: Task, X: QuestionProfile, graph: AdjacencyGraph) -> EdgeLengths:
    lengths, deficient, mismatched = {}, [], []
    for e in graph.edges:
        w = edge_length(task, X, *e)
        if isinstance(w, RankDeficient):
            deficient.append(w)
        elif isinstance(w, EdgeMismatch):
            mismatched.append(w)
        else:
            lengths[e] = w
    return EdgeLengths(lengths, tuple(deficient), tuple(mismatched))


def length(lengths: Mapping[Edge, np.ndarray], s: str, t: str) -> np.ndarray:
    """Oriented lookup with ``w(b, a) = w(a, b)^{-1}``."""
    if (s, t) in lengths:
        return lengths[(s, t)]
    if (t, s) in lengths:
        return la.inv(lengths[(t, s)])
    raise KeyError(f"no edge length for {s!r}-{t!r}")


def cycle_product(lengths: Mapping[Edge, np.ndarray], cycle: Sequence[str]) -> np.ndarray:
    """``w(v_{n-1}, v_0) ··· w(v_1, v_2) w(v_0, v_1)``."""
    steps = cycle_edges(cycle)
    out = length(lengths, *steps[0])
    for s, t in steps[1:]:
        out = length(lengths, s, t) @ out
    return out


def path_product(lengths: Mapping[Edge, np.ndarray], path: Sequence[str]) -> np.ndarray:
    m = next(iter(lengths.values())).shape[0]
    exact = la.is_exact(next(iter(lengths.values())))
    out = la.eye(m, exact)
    for s, t in zip(path, path[1:]):
        out = length(lengths, s, t) @ out
    return out


def _close(a: np.ndarray, b: np.ndarray) -> bool:
    diff = a - b
    if la.is_exact(diff):
        return la.is_zero(diff)
    return float(la.max_abs(diff)) <= POTENTIAL_ATOL * max(1.0, float(la.max_abs(b)))


def is_identity(M: np.ndarray) -> bool:
    return _close(M, la.eye(M.shape[0], la.is_exact(M)))


def lengths_from_potential(gamma: Mapping[str, np.ndarray], edges: Sequence[Edge]) -> dict:
    return {(a, b): gamma[b] @ la.inv(gamma[a]) for a, b in edges}


def build_potential(graph: AdjacencyGraph, lengths: Mapping[Edge, np.ndarray]):
    """Spanning-tree propagation from the smallest label of each component.

    Returns a ``Potential`` or the first ``CycleObstruction`` found on a
    non-tree edge.
    """
    missing = [e for e in graph.edges if e not in lengths]
    if missing:
        raise ValueError(f"edge lengths undefined on {missing}")
    if not lengths:
        raise ValueError("no edge lengths: the question dimension is unknown")
    sample = next(iter(lengths.values()))
    m, exact = sample.shape[0], la.is_exact(sample)
    gamma, parent, refs = {}, {}, []
    for comp in graph.components:
        ref = min(comp)
        refs.append(ref)
        gamma[ref] = la.eye(m, exact)
        parent[ref] = None
        queue = deque([ref])
        while queue:
            v = queue.popleft()
            for x in graph.neighbors(v):
                if x not in gamma:
                    gamma[x] = length(lengths, v, x) @ gamma[v]
                    parent[x] = v
                    queue.append(x)
    for a, b in graph.edges:
        if parent.get(b) == a or parent.get(a) == b:
            continue
        if not _close(lengths[(a, b)] @ gamma[a], gamma[b]):
            cyc = fundamental_cycle(parent, a, b)
            return CycleObstruction(cyc, cycle_product(lengths, cyc), (a, b))
    return Potential(gamma, tuple(refs), parent)


def fundamental_cycle(parent: Mapping[str, str | None], a: str, b: str) -> Cycle:
    """Cycle ``a -> b ->`` tree path back to ``a`` closed by a non-tree edge."""
    def up(x):
        out = [x]
        while parent[x] is not None:
            x = parent[x]
            out.append(x)
        return out

    pa, pb = up(a), up(b)
    common = set(pa) & set(pb)
    ia = next(i for i, x in enumerate(pa) if x in common)
    ib = pb.index(pa[ia])
    if ia == 0:
        return tuple([a] + pb[:ib])
    return tuple([a] + pb[:ib + 1] + list(reversed(pa[1:ia])))


# perturbation --------------------------------------------------------------

def check_assumption_cycle_length(mcb: Sequence[Cycle], n_states: int, m: int) -> list[bool]:
    """Per cycle: ``|C| < |Θ| - (m - 1)``."""
    return [len(c) < n_states - (m - 1) for c in mcb]


def characterization_regime(n_states: int, m: int) -> str:
    """``"applicable"`` or ``"inapplicable"`` for the adjacency-based characterization."""
    if n_states <= 2 or m >= n_states - 2:
        return "inapplicable"
    return "applicable"


def _delta_rows(task: Task, cycle: Sequence[str]) -> np.ndarray:
    return np.stack([delta(task, s, t) for s, t in cycle_edges(cycle)])


def _t_ok(t_bar: np.ndarray, spans: Sequence[np.ndarray]) -> bool:
    m = t_bar.shape[0]
    if la.rank(t_bar) < m:
        return False
    for D in spans:
        if la.rank(np.concatenate([D, t_bar])) != la.rank(D) + m:
            return False
    return True


def choose_t(task: Task, X: QuestionProfile, graph: AdjacencyGraph, mcb: Sequence[Cycle] | None = None,
             seed: int = 0) -> np.ndarray:
    """Rows whose centered span meets no ``span(Δ_C)`` and no edge ``Δ`` nontrivially."""
    mcb = graph.mcb if mcb is None else mcb
    m, S, exact = X.m, task.n_states, task.exact
    spans = [_delta_rows(task, c) for c in mcb]
    if 1 + m <= S - 1:
        spans += [delta(task, a, b)[None, :] for a, b in graph.edges]
    rng = np.random.default_rng(seed)
    for _ in range(T_RETRIES):
        t = la.random_rational(rng, (m, S), -9, 9, 7)
        t = t if exact else la.to_float(t)
        if _t_ok(project_bar(t), spans):
            return t
    t = la.as_array([[(j + 1) ** (k + 1) for j in range(S)] for k in range(m)], exact)
    if _t_ok(project_bar(t), spans):
        return t
    raise AssumptionError("no perturbation direction avoids every cycle span")


def _extrapolate(eps: Sequence, ws: Sequence[np.ndarray]):
    """Linear (two smallest steps) and quadratic (Neville) values at zero."""
    e1, e2, e3 = eps
    w1, w2, w3 = ws
    lin = (e2 * w3 - e3 * w2) / (e2 - e3)
    # Lagrange weights at zero
    l1 = (e2 * e3) / ((e1 - e2) * (e1 - e3))
    l2 = (e1 * e3) / ((e2 - e1) * (e2 - e3))
    l3 = (e1 * e2) / ((e3 - e1) * (e3 - e2))
    quad = w1 * l1 + w2 * l2 + w3 * l3
    return lin, quad


def perturb_edge_lengths(task: Task, X: QuestionProfile, mu: Mapping[str, np.ndarray],
                         graph: AdjacencyGraph, mcb: Sequence[Cycle] | None = None,
                         seed: int = 0, t: np.ndarray | None = None) -> dict:
    """Limit edge lengths of ``X(a) + ε μ(a) t`` as ``ε -> 0``.

    Edges whose extrapolated limits disagree beyond ``LIMIT_TOL`` (or whose
    perturbed lengths are still undefined) map to ``None``.
    """
    mcb = graph.mcb if mcb is None else mcb
    bad = [c for c, ok in zip(mcb, check_assumption_cycle_length(mcb, task.n_states, X.m)) if not ok]
    if bad:
        raise AssumptionError(
            f"cycle length assumption fails: |C| must be < {task.n_states - X.m + 1}, "
            f"violated by {len(bad)} basis cycle(s), e.g. {bad[0]}")
    exact = task.exact
    t = choose_t(task, X, graph, mcb, seed) if t is None else t
    eps = [la.like(e, exact) if exact else float(mpq(e)) for e in EPS_LADDER]
    per_eps = []
    for e in eps:
        Xe = np.stack([X.of(a) + (np.asarray(mu[a]) @ t) * e for a in X.actions])
        per_eps.append(QuestionProfile(X.actions, Xe))
    out = {}
    for edge in graph.edges:
        ws = [edge_length(task, Xe, *edge) for Xe in per_eps]
        if any(not isinstance(w, np.ndarray) for w in ws):
            out[edge] = None
            continue
        lin, quad = _extrapolate(eps, ws)
        if float(la.max_abs(la.to_float(quad - lin))) > LIMIT_TOL:
            out[edge] = None
        else:
            out[edge] = quad
    return out


def check_assumption_independence(task: Task, mcb: Sequence[Cycle], variant: str = "one-block") -> list[bool]:
    """Rank of the cycle's ``Δ`` vectors: ``|C| - 1``, or 2 for product cross squares."""
    if variant not in ("one-block", "product"):
        raise ValueError(f"unknown variant {variant!r}")
    out = []
    for c in mcb:
        r = la.rank(_delta_rows(task, c))
        target = len(c) - 1
        if variant == "product" and len(c) == 4:
            moved = {tuple(changed_factors(task, s, t)) for s, t in cycle_edges(c)}
            if len(moved) == 2:
                target = 2
        out.append(r == target)
    return out
