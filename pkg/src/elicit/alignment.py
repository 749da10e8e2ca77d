"""Deciding and certifying joint alignment and its variants.

Every variant has the form

    X(a) = Γ(a) Σ_{k ∈ scope} (λ_k u_k(a) + d_k) + κ(a) 1

where ``u_k`` is the task payoff or a lifted factor payoff.  Writing
``H(a) = Γ(a)^{-1}`` and ``c(a) = H(a) κ(a)`` the identity is linear in
``(H, λ, d, c)`` and decouples across the m rows, which all satisfy the
same homogeneous system.  A certificate exists iff, for every action, the
solution space projected onto the ``H(a)`` row coordinates has rank m.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import linalg as la
from .gauge import (
    CycleObstruction,
    build_potential,
    compute_edge_lengths,
    cycle_product,
    is_identity,
)
from .graph import AdjacencyGraph, build_graph, cycle_edges
from .linalg import mpq
from .model import QuestionProfile, Task, label_value

KINDS = ("joint", "individual", "taskwise", "blockwise", "task-block-wise")
# float residual tolerance for certificates
RESIDUAL_ATOL = 1e-9
FLOAT_DET_TOL = 1e-10
GAMMA_RETRIES = 64


class SingularGammaError(ValueError):
    pass


class RankExceeded(ValueError):
    def __init__(self, rank: int, m: int):
        super().__init__(f"rank {rank} exceeds m={m}")
        self.rank = rank
        self.m = m


@dataclass(frozen=True, eq=False)
class AlignmentCertificate:
    """Witness ``(λ, d, Γ, κ)`` of an alignment variant.

    ``lam`` and ``d`` are keyed by term: ``"*"`` for the single joint term,
    ``"block:z"``, ``"task:i"`` or ``"task:i/block:z"``.  ``terms[a]`` lists
    the term groups whose identity action ``a`` must satisfy (a cut vertex
    has one group per block).
    """

    kind: str
    lam: dict
    d: dict
    gamma: dict
    kappa: dict
    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown certificate kind {self.kind!r}")
        if not self.terms:
            object.__setattr__(self, "terms", {a: [["*"]] for a in self.gamma})

    @property
    def m(self) -> int:
        return next(iter(self.gamma.values())).shape[0]

    @property
    def exact(self) -> bool:
        return la.is_exact(next(iter(self.gamma.values())))


@dataclass(frozen=True)
class CertificateCheck:
    ok: bool
    residual: object
    worst_action: str | None = None
    worst_row: int | None = None

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True, eq=False)
class NotAligned:
    """Failure with a concrete witness.

    ``reason`` is one of ``edge-mismatch``, ``singular-length``, ``cycle``,
    ``lambda-mismatch`` or ``rank``.
    """

    reason: str
    detail: str
    actions: tuple[str, ...] = ()
    edge: tuple[str, str] | None = None
    cycle: tuple[str, ...] | None = None
    product: np.ndarray | None = None

    def __bool__(self) -> bool:
        return False


@dataclass(frozen=True, eq=False)
class Decomposition:
    G: np.ndarray
    D: np.ndarray
    rank: int
    rows: tuple[int, ...] = ()


# payoff lookup ---------------------------------------------------------------

def term_factor(key: str) -> int | None:
    """Factor index whose payoff a term loads on; ``None`` for the full ``u``."""
    if key.startswith("task:"):
        return int(key.split("/")[0][5:])
    return None


def term_payoff(task: Task, key: str) -> np.ndarray:
    i = term_factor(key)
    return task.u if i is None else task.factor_payoff(i)


def _close_zero(a, exact: bool) -> bool:
    return la.is_zero(a) if exact else float(la.max_abs(a)) <= RESIDUAL_ATOL


# verification ------------------------------------------------------------------

def verify_certificate(task: Task, X: QuestionProfile, cert: AlignmentCertificate) -> CertificateCheck:
    """Check ``X(a) = Γ(a) Σ(λ u + d) + κ(a) 1`` for every action and term group."""
    if X.m != cert.m:
        raise ValueError(f"certificate has m={cert.m}, questions have m={X.m}")
    exact = X.exact and cert.exact
    worst, worst_a, worst_row = (mpq(0) if exact else 0.0), None, None
    one = la.zeros(task.n_states, exact) + la.like(1, exact)
    for i, a in enumerate(task.actions):
        G = np.asarray(cert.gamma[a])
        if not la.is_invertible(G, FLOAT_DET_TOL):
            raise SingularGammaError(f"Γ({a}) is singular")
        for group in cert.terms[a]:
            inner = la.zeros((cert.m, task.n_states), exact)
            for k in group:
                inner = inner + np.outer(np.asarray(cert.lam[k]), term_payoff(task, k)[i]) + np.asarray(cert.d[k])
            R = X.of(a) - G @ inner - np.outer(np.asarray(cert.kappa[a]), one)
            for j in range(cert.m):
                r = la.max_abs(R[j])
                if (r if exact else float(r)) > worst:
                    worst, worst_a, worst_row = (r if exact else float(r)), a, j
    ok = worst == 0 if exact else worst <= RESIDUAL_ATOL
    return CertificateCheck(bool(ok), worst, worst_a, worst_row)


def regauge(cert: AlignmentCertificate, M: np.ndarray) -> AlignmentCertificate:
    """``Γ -> ΓM``, ``λ -> M^{-1}λ``, ``d -> M^{-1}d``; ``κ`` unchanged."""
    Mi = la.inv(M)
    return AlignmentCertificate(
        cert.kind,
        {k: Mi @ np.asarray(v) for k, v in cert.lam.items()},
        {k: Mi @ np.asarray(v) for k, v in cert.d.items()},
        {a: np.asarray(g) @ M for a, g in cert.gamma.items()},
        dict(cert.kappa),
        cert.terms,
    )


# linear engine --------------------------------------------------------------

class _System:
    """Row system of an alignment variant; variables ``h(a), λ_k, d_k, c(a)``."""

    def __init__(self, task: Task, X: QuestionProfile, terms: Mapping[str, list[list[str]]]):
        self.task, self.X, self.terms = task, X, terms
        self.exact = task.exact and X.exact
        self.m, self.S = X.m, task.n_states
        self.actions = list(task.actions)
        self.keys = sorted({k for a in self.actions for g in terms[a] for k in g})
        m, S = self.m, self.S
        self.h_off = {a: i * m for i, a in enumerate(self.actions)}
        base = m * len(self.actions)
        self.lam_off = {k: base + i for i, k in enumerate(self.keys)}
        base += len(self.keys)
        self.d_off = {k: base + i * S for i, k in enumerate(self.keys)}
        base += S * len(self.keys)
        self.c_off = {a: base + i for i, a in enumerate(self.actions)}
        self.n = base + len(self.actions)

    def equations(self, actions=None, fixed_h: Mapping[str, np.ndarray] | None = None):
        """Rows of ``E v = 0`` (or ``E v = rhs`` with ``h`` fixed)."""
        exact, m, S = self.exact, self.m, self.S
        actions = self.actions if actions is None else actions
        blocks = []
        for a in actions:
            i = self.task.index(a)
            Xa = self.X.of(a)
            for group in self.terms[a]:
                E = la.zeros((S, self.n), exact)
                for s in range(S):
                    E[s, self.h_off[a]:self.h_off[a] + m] = Xa[:, s]
                    for k in group:
                        E[s, self.lam_off[k]] = -term_payoff(self.task, k)[i, s]
                        E[s, self.d_off[k] + s] = la.like(-1, exact)
                    E[s, self.c_off[a]] = la.like(-1, exact)
                blocks.append((a, E))
        if fixed_h is None:
            return np.concatenate([E for _, E in blocks])
        hcols = [c for a in self.actions for c in range(self.h_off[a], self.h_off[a] + m)]
        keep = [c for c in range(self.n) if c not in set(hcols)]
        A = np.concatenate([E[:, keep] for _, E in blocks])
        rhs = np.concatenate([-(E[:, self.h_off[a]:self.h_off[a] + m] @ np.asarray(fixed_h[a]).T)
                              for a, E in blocks])
        return A, rhs, keep

    def unpack(self, rows: np.ndarray, kind: str) -> AlignmentCertificate:
        """Certificate from m solution rows (H(a) read off the h-coordinates)."""
        m = self.m
        gamma, kappa = {}, {}
        for a in self.actions:
            H = rows[:, self.h_off[a]:self.h_off[a] + m]
            G = la.inv(H)
            gamma[a] = G
            kappa[a] = G @ rows[:, self.c_off[a]]
        lam = {k: rows[:, self.lam_off[k]].copy() for k in self.keys}
        d = {k: rows[:, self.d_off[k]:self.d_off[k] + self.S].copy() for k in self.keys}
        return AlignmentCertificate(kind, lam, d, gamma, kappa, {a: [list(g) for g in self.terms[a]] for a in self.actions})


def _random_combo(rng, shape, exact):
    if exact:
        return la.random_rational(rng, shape, -6, 6, 3)
    return rng.standard_normal(shape)


def solve_alignment(task: Task, X: QuestionProfile, terms: Mapping[str, list[list[str]]],
                    kind: str, seed: int = 0):
    """Certificate for the given term structure, or ``NotAligned``."""
    sysm = _System(task, X, terms)
    m = sysm.m
    N = la.nullspace(sysm.equations())
    for a in sysm.actions:
        P = N[:, sysm.h_off[a]:sysm.h_off[a] + m]
        r = la.rank(P) if P.size else 0
        if r < m:
            return NotAligned("rank", f"no invertible Γ({a}) is compatible: the solution space "
                              f"reaches rank {r} < m={m} in its coordinates", actions=(a,))
    rng = np.random.default_rng(seed)
    q = N.shape[0]
    # consecutive basis windows first: they give the sparsest certificates
    windows = [la.eye(q, sysm.exact)[j:j + m] for j in range(q - m + 1)]
    for attempt in range(len(windows) + GAMMA_RETRIES):
        C = windows[attempt] if attempt < len(windows) else _random_combo(rng, (m, q), sysm.exact)
        rows = C @ N
        if all(la.is_invertible(rows[:, sysm.h_off[a]:sysm.h_off[a] + m], FLOAT_DET_TOL) for a in sysm.actions):
            return sysm.unpack(rows, kind)
    raise RuntimeError("no invertible combination found; the solution space is degenerate")


def solve_with_potential(task: Task, X: QuestionProfile, gamma: Mapping[str, np.ndarray],
                         order: Sequence[str] | None = None):
    """Given ``Γ``, solve for ``(λ, d, κ)`` row by row; ``NotAligned`` on inconsistency."""
    terms = {a: [["*"]] for a in task.actions}
    sysm = _System(task, X, terms)
    H = {a: la.inv(np.asarray(g)) for a, g in gamma.items()}
    A, rhs, keep = sysm.equations(fixed_h=H)
    sol = la.solve(A, rhs)
    if sol is None:
        order = list(order or task.actions)
        for n in range(2, len(order) + 1):
            A2, rhs2, _ = sysm.equations(order[:n], fixed_h=H)
            if la.solve(A2, rhs2) is None:
                return NotAligned("lambda-mismatch",
                                  f"no common (λ, d) fits {order[n - 1]} together with the actions before it",
                                  actions=(order[0], order[n - 1]))
        return NotAligned("lambda-mismatch", "no common (λ, d)", actions=tuple(order))
    rows = la.zeros((sysm.m, sysm.n), sysm.exact)
    for a in sysm.actions:
        rows[:, sysm.h_off[a]:sysm.h_off[a] + sysm.m] = H[a]
    rows[:, keep] = sol.T
    return sysm.unpack(rows, "joint")


def _joint_terms(task: Task) -> dict:
    return {a: [["*"]] for a in task.actions}


def find_joint_certificate(task: Task, X: QuestionProfile, graph: AdjacencyGraph | None = None,
                           seed: int = 0, route: str = "auto"):
    """Joint-alignment certificate or ``NotAligned`` with a witness.

    With every edge length defined on a connected graph the potential is
    propagated from the smallest label and ``(λ, d)`` solved for it.
    Mismatched or singular lengths and nontrivial cycle products are
    conclusive on their own.  Otherwise the linear engine decides.
    """
    if route not in ("auto", "potential", "nullspace"):
        raise ValueError(f"unknown route {route!r}")
    if route == "nullspace":
        return solve_alignment(task, X, _joint_terms(task), "joint", seed)
    graph = build_graph(task) if graph is None else graph
    el = compute_edge_lengths(task, X, graph)
    if el.mismatched:
        e = el.mismatched[0].edge
        return NotAligned("edge-mismatch", f"X̄({e[1]})^⊥ is not a linear image of X̄({e[0]})^⊥",
                          actions=e, edge=e)
    for e, w in el.lengths.items():
        if not la.is_invertible(w, FLOAT_DET_TOL):
            return NotAligned("singular-length", f"edge length w{e} is singular", actions=e, edge=e)
    for c in graph.mcb:
        if all(((s, t) in el.lengths or (t, s) in el.lengths) for s, t in cycle_edges(c)):
            P = cycle_product(el.lengths, c)
            if not is_identity(P):
                return NotAligned("cycle", f"cycle {c} has length product != I", actions=tuple(c),
                                  cycle=tuple(c), product=P)
    if el.complete and len(graph.components) == 1 and graph.edges:
        pot = build_potential(graph, el.lengths)
        if isinstance(pot, CycleObstruction):
            return NotAligned("cycle", f"cycle {pot.cycle} has length product != I",
                              actions=tuple(pot.cycle), edge=pot.edge, cycle=pot.cycle, product=pot.product)
        order = _bfs_order(graph, pot.references[0])
        return solve_with_potential(task, X, pot.gamma, order)
    if route == "potential":
        raise ValueError("potential route needs a connected graph with every edge length defined")
    return solve_alignment(task, X, _joint_terms(task), "joint", seed)


def _bfs_order(graph: AdjacencyGraph, root: str) -> list[str]:
    seen, order = {root}, [root]
    for v in order:
        for x in graph.neighbors(v):
            if x not in seen:
                seen.add(x)
                order.append(x)
    return order + [v for v in graph.vertices if v not in seen]


def find_individual_certificate(task: Task, X: QuestionProfile, graph: AdjacencyGraph | None = None,
                                seed: int = 0):
    """Each question aligned on its own; the certificate has diagonal ``Γ``."""
    graph = build_graph(task) if graph is None else graph
    parts = []
    for j in range(X.m):
        c = find_joint_certificate(task, X.subset([j]), graph, seed)
        if isinstance(c, NotAligned):
            return NotAligned(c.reason, f"question {j}: {c.detail}", c.actions, c.edge, c.cycle, c.product)
        parts.append(c)
    exact = task.exact
    m = X.m
    gamma, kappa = {}, {}
    for a in task.actions:
        G = la.zeros((m, m), exact)
        for j, c in enumerate(parts):
            G[j, j] = c.gamma[a][0, 0]
        gamma[a] = G
        kappa[a] = np.concatenate([c.kappa[a] for c in parts])
    lam = {"*": np.concatenate([c.lam["*"] for c in parts])}
    d = {"*": np.concatenate([c.d["*"] for c in parts])}
    return AlignmentCertificate("individual", lam, d, gamma, kappa)


def _block_terms(graph: AdjacencyGraph, prefix: str = "") -> dict:
    """Term groups per vertex, one per block; isolated vertices get their own."""
    out = {v: [] for v in graph.vertices}
    for z, verts in enumerate(graph.block_vertices()):
        for v in verts:
            out[v].append(z)
    n = len(graph.blocks)
    for v in graph.vertices:
        if not out[v]:
            out[v].append(n)
            n += 1
    return out


def check_blockwise(task: Task, X: QuestionProfile, graph: AdjacencyGraph | None = None, seed: int = 0):
    graph = build_graph(task) if graph is None else graph
    blocks = _block_terms(graph)
    terms = {a: [[f"block:{z}"] for z in blocks[a]] for a in task.actions}
    return solve_alignment(task, X, terms, "blockwise", seed)


def check_taskwise(task: Task, X: QuestionProfile, graph: AdjacencyGraph | None = None, seed: int = 0):
    if task.factors is None:
        raise ValueError("taskwise alignment needs a product task")
    keys = [f"task:{i}" for i in range(len(task.factors))]
    return solve_alignment(task, X, {a: [list(keys)] for a in task.actions}, "taskwise", seed)


def check_task_block_wise(task: Task, X: QuestionProfile, graph: AdjacencyGraph | None = None,
                          seed: int = 0, factor_graphs: Sequence[AdjacencyGraph] | None = None):
    """Per-(task, factor-block) terms; every block tuple containing ``a`` must fit."""
    if task.factors is None:
        raise ValueError("task-block-wise alignment needs a product task")
    if factor_graphs is None:
        factor_graphs = [build_graph(f) for f in task.factors]
    fblocks = [_block_terms(g) for g in factor_graphs]
    terms = {}
    for a in task.actions:
        parts = task.action_parts(a)
        choices = []
        for i, (g, ai) in enumerate(zip(factor_graphs, parts)):
            label = task.factors[i].actions[ai]
            choices.append([f"task:{i}/block:{z}" for z in fblocks[i][label]])
        terms[a] = [list(t) for t in itertools.product(*choices)]
    return solve_alignment(task, X, terms, "task-block-wise", seed)


def align(task: Task, X: QuestionProfile, kind: str, graph: AdjacencyGraph | None = None, seed: int = 0):
    graph = build_graph(task) if graph is None else graph
    fn = {
        "joint": find_joint_certificate,
        "individual": find_individual_certificate,
        "blockwise": check_blockwise,
        "taskwise": check_taskwise,
        "task-block-wise": check_task_block_wise,
    }.get(kind)
    if fn is None:
        raise ValueError(f"unknown alignment kind {kind!r}")
    return fn(task, X, graph, seed=seed)


def auto_kind(task: Task, graph: AdjacencyGraph) -> str:
    if task.factors is not None:
        fgs = [build_graph(f) for f in task.factors]
        return "task-block-wise" if any(len(g.blocks) > 1 for g in fgs) else "taskwise"
    return "blockwise" if len(graph.blocks) > 1 else "joint"


# decomposition ----------------------------------------------------------------

def check_m_decomposable(Y) -> int:
    """Smallest m with ``Y = G D``: the rank of ``Y``."""
    return la.rank(np.asarray(Y))


def rank_decompose(Y, m: int) -> Decomposition:
    """``Y = G D`` with ``D``'s leading rows independent rows of ``Y``, zero-padded to m."""
    if m < 1:
        raise ValueError("m must be at least 1")
    Y = np.asarray(Y)
    exact = la.is_exact(Y)
    _, piv = la.rref(Y.T)
    r = len(piv) if exact else la.rank(Y)
    if not exact:
        piv = _independent_rows(Y, r)
    if r > m:
        raise RankExceeded(r, m)
    D = la.zeros((m, Y.shape[1]), exact)
    G = la.zeros((Y.shape[0], m), exact)
    if r:
        Dr = Y[piv]
        D[:r] = Dr
        Gr = la.solve_left(Dr, Y)
        if Gr is None:
            raise RuntimeError("rows outside the span of the chosen basis")
        G[:, :r] = Gr
    return Decomposition(G, D, r, tuple(piv))


def _independent_rows(Y: np.ndarray, r: int) -> list[int]:
    rows: list[int] = []
    for i in range(Y.shape[0]):
        if la.rank(Y[rows + [i]]) > len(rows):
            rows.append(i)
        if len(rows) == r:
            break
    return rows


def moment_questions(task: Task, k: int) -> np.ndarray:
    """Rows ``θ^1 .. θ^k`` over numeric state labels."""
    vals = [label_value(s) for s in task.states]
    rows = [[v ** j for v in vals] for j in range(1, k + 1)]
    return la.as_array(rows, task.exact)


def _y_matrix(task: Task, Y) -> np.ndarray:
    if isinstance(Y, QuestionProfile):
        if Y.m != 1:
            raise ValueError("supplemental_profile takes a single question")
        return Y.question(0)
    Y = np.asarray(Y) if isinstance(Y, np.ndarray) else la.as_array(Y, task.exact)
    if Y.shape != task.u.shape:
        raise ValueError(f"question matrix has shape {Y.shape}, expected {task.u.shape}")
    return Y


def _zero_lam(m: int, exact: bool) -> dict:
    return {"*": la.zeros(m, exact)}


def supplemental_profile(task: Task, Y, strategy: str = "minimal", basis=None, seed: int = 0):
    """Augment a single question so the profile is jointly aligned with ``λ = 0``.

    ``full``: m = |A| permuted copies of ``Y``.  ``minimal``: m = rank(Y)
    with action-independent basis rows as the supplemental questions.
    ``basis``: the given rows (e.g. moments), plus ``Y``; ``κ`` absorbs any
    action-dependent constant.
    """
    Ym = _y_matrix(task, Y)
    exact = la.is_exact(Ym)
    A, S = Ym.shape
    zero_kappa = lambda m: {a: la.zeros(m, exact) for a in task.actions}  # noqa: E731
    if basis is not None:
        return _basis_profile(task, Ym, la.as_array(basis, exact) if not isinstance(basis, np.ndarray) else basis)
    if strategy == "full" or A == 1:
        m = A
        X = la.zeros((A, m, S), exact)
        gamma = {}
        for i, a in enumerate(task.actions):
            sigma = la.zeros((m, m), exact)
            for k in range(m):
                sigma[k, (i + k) % m] = la.like(1, exact)
                X[i, k] = Ym[(i + k) % m]
            gamma[a] = sigma
        cert = AlignmentCertificate("joint", _zero_lam(m, exact), {"*": Ym.copy()}, gamma, zero_kappa(m))
        return QuestionProfile(task.actions, X), cert
    if strategy != "minimal":
        raise ValueError(f"unknown strategy {strategy!r}")
    r = check_m_decomposable(Ym)
    if r == 0:
        gamma = {a: la.eye(1, exact) for a in task.actions}
        cert = AlignmentCertificate("joint", _zero_lam(1, exact), {"*": la.zeros((1, S), exact)}, gamma, zero_kappa(1))
        return QuestionProfile(task.actions, Ym[:, None, :]), cert
    dec = rank_decompose(Ym, r)
    g, D = dec.G, dec.D
    if any(la.is_zero(g[i]) for i in range(A)):
        return _padded_profile(task, Ym, g, D)
    nz = lambda x: (x != 0) if exact else abs(x) > 1e-9  # noqa: E731
    k = next((k for k in range(r) if all(nz(g[i, k]) for i in range(A))), None)
    if k is None:
        g, D = _rotate_basis(g, D, exact, seed)
        k = 0
    order = [k] + [j for j in range(r) if j != k]
    d = D[order]
    X = np.stack([np.concatenate([Ym[i:i + 1], D[order[1:]]]) for i in range(A)])
    gamma = {}
    for i, a in enumerate(task.actions):
        G = la.zeros((r, r), exact)
        G[0] = g[i, order]
        for row in range(1, r):
            G[row, row] = la.like(1, exact)
        gamma[a] = G
    cert = AlignmentCertificate("joint", _zero_lam(r, exact), {"*": d}, gamma, zero_kappa(r))
    return QuestionProfile(task.actions, X), cert


def _rotate_basis(g: np.ndarray, D: np.ndarray, exact: bool, seed: int):
    """Change basis so the first coefficient is nonzero for every action."""
    r = D.shape[0]
    rng = np.random.default_rng(seed)
    for _ in range(GAMMA_RETRIES):
        v = _random_combo(rng, (r,), exact)
        vals = g @ v
        if all((x != 0) if exact else abs(x) > 1e-9 for x in vals):
            break
    else:
        raise RuntimeError("no hyperplane avoids every coefficient row")
    j = next(j for j in range(r) if ((v[j] != 0) if exact else abs(v[j]) > 1e-12))
    Tinv = la.eye(r, exact)
    Tinv[:, 0] = v
    if j != 0:
        Tinv[:, j] = la.eye(r, exact)[:, 0]
    T = la.inv(Tinv)
    return g @ Tinv, T @ D


def _padded_profile(task: Task, Ym, g, D):
    """Some ``Y(a)`` is zero: use m = rank + 1 with ``Γ(a) = [[g(a), 1], [I, 0]]``."""
    exact = la.is_exact(Ym)
    A, S = Ym.shape
    r = D.shape[0]
    m = r + 1
    d = la.zeros((m, S), exact)
    d[:r] = D
    X = np.stack([np.concatenate([Ym[i:i + 1], D]) for i in range(A)])
    gamma = {}
    for i, a in enumerate(task.actions):
        G = la.zeros((m, m), exact)
        G[0, :r] = g[i]
        G[0, r] = la.like(1, exact)
        for row in range(r):
            G[row + 1, row] = la.like(1, exact)
        gamma[a] = G
    kappa = {a: la.zeros(m, exact) for a in task.actions}
    cert = AlignmentCertificate("joint", _zero_lam(m, exact), {"*": d}, gamma, kappa)
    return QuestionProfile(task.actions, X), cert


def _basis_profile(task: Task, Ym, B):
    """``X(a) = (Y(a); B)`` with ``Y(a) = g(a) B + c(a) 1``."""
    exact = la.is_exact(Ym)
    A, S = Ym.shape
    k = B.shape[0]
    one = la.zeros((1, S), exact) + la.like(1, exact)
    aug = np.concatenate([B, one])
    coef = la.solve_left(aug, Ym)
    if coef is None:
        raise ValueError("question is not in the span of the basis rows and constants")
    m = k + 1
    d = la.zeros((m, S), exact)
    d[:k] = B
    X = np.stack([np.concatenate([Ym[i:i + 1], B]) for i in range(A)])
    gamma, kappa = {}, {}
    for i, a in enumerate(task.actions):
        G = la.zeros((m, m), exact)
        G[0, :k] = coef[i, :k]
        G[0, k] = la.like(1, exact)
        for row in range(k):
            G[row + 1, row] = la.like(1, exact)
        gamma[a] = G
        kap = la.zeros(m, exact)
        kap[0] = coef[i, k]
        kappa[a] = kap
    cert = AlignmentCertificate("joint", _zero_lam(m, exact), {"*": d}, gamma, kappa)
    return QuestionProfile(task.actions, X), cert


# Γ family diagnostics --------------------------------------------------------------

def _is_diagonal(G: np.ndarray) -> bool:
    off = G - np.diag(np.diag(G)) if not la.is_exact(G) else np.array(
        [[G[i, j] if i != j else mpq(0) for j in range(G.shape[1])] for i in range(G.shape[0])], dtype=object)
    return _close_zero(off, la.is_exact(G))


def classify_gamma_family(cert: AlignmentCertificate) -> str:
    """``diagonal``, ``jointly-diagonalizable`` or ``general``.

    Commuting diagonalizable matrices share an eigenbasis, so the family
    test is pairwise commutation plus per-matrix diagonalizability.
    """
    import sympy

    mats = [np.asarray(g) for g in cert.gamma.values()]
    if all(_is_diagonal(G) for G in mats):
        return "diagonal"
    exact = cert.exact
    for A, B in itertools.combinations(mats, 2):
        if not _close_zero(A @ B - B @ A, exact):
            return "general"

    def to_sym(G):
        return sympy.Matrix([[sympy.Rational(str(la.to_exact(x))) for x in row] for row in G])

    distinct = {tuple(map(str, G.ravel())): G for G in mats}
    if all(to_sym(G).is_diagonalizable() for G in distinct.values()):
        return "jointly-diagonalizable"
    return "general"
