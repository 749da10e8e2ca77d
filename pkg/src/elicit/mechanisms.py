"""Payment-scheme constructors and closed-form best responses.

All schemes are quadratic and diagonal in the scored report coordinates, so
for a fixed action the expected payment is maximized coordinate by
coordinate at ``r'_k = -E[lin_k] / (2 E[quad_k])``.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from . import linalg as la
from .linalg import mpq
from .model import (
    PaymentScheme,
    QuestionProfile,
    Task,
    argmax_set,
    _belief_array,
)


class NonConcaveError(ValueError):
    """The scheme is not strictly concave in some report coordinate."""


class InvalidPartition(ValueError):
    pass


def _full(task: Task, shape, value) -> np.ndarray:
    out = la.zeros(shape, task.exact)
    out[...] = la.like(value, task.exact)
    return out


def _question_matrix(task: Task, Y) -> np.ndarray:
    if isinstance(Y, QuestionProfile):
        if Y.m != 1:
            raise ValueError(f"expected a single question, got m={Y.m}; use the rank-decomposition path")
        return Y.question(0)
    Y = np.asarray(Y)
    if Y.shape != task.u.shape:
        raise ValueError(f"question matrix has shape {Y.shape}, expected {task.u.shape}")
    return Y


def _scoring_scheme(task: Task, targets: np.ndarray, name: str) -> PaymentScheme:
    """``-sum_k (target[a,k,s] - r_k)**2 + u(a,s)``; targets is (A, R, S)."""
    A, R, S = targets.shape
    quad = _full(task, (A, S, R), -1)
    lin = np.transpose(targets, (0, 2, 1)) * la.like(2, task.exact)
    const = task.u - (targets * targets).sum(axis=1)
    return PaymentScheme(task.actions, quad, lin, const,
                         questions=QuestionProfile(task.actions, targets), name=name)


def build_csr(task: Task, Y) -> PaymentScheme:
    """Counterfactual scoring rule for a single question ``Y``.

    One report per action ``a_j``; coordinate ``j`` is scored against
    ``Y(a_j, θ)`` whichever action was chosen, so the scoring part does
    not depend on the choice and the task payoff decides the action.
    """
    Ymat = _question_matrix(task, Y)
    targets = np.stack([Ymat] * task.n_actions)
    return _scoring_scheme(task, targets, "csr")


def build_belief_revelation(task: Task) -> PaymentScheme:
    """Quadratic (Brier) scoring of the full belief plus the task payoff."""
    ident = la.eye(task.n_states, task.exact)
    targets = np.stack([ident] * task.n_actions)
    return _scoring_scheme(task, targets, "br")


def build_coarse_csr(task: Task, Y, partition: Sequence[Sequence[str]]) -> PaymentScheme:
    """CSR over a partition of the actions.

    Coordinate ``k`` asks for ``E Y`` had an action of cell ``k`` been
    chosen.  The chosen action's own cell is scored against the chosen
    action itself and every other cell against its first action, so any
    action dependence of ``Y`` inside a cell survives.
    """
    Ymat = _question_matrix(task, Y)
    cells = [[str(a) for a in cell] for cell in partition]
    flat = [a for cell in cells for a in cell]
    if any(not cell for cell in cells) or sorted(flat) != sorted(task.actions) or len(set(flat)) != len(flat):
        raise InvalidPartition("partition must cover the actions disjointly with non-empty cells")
    cell_of = {a: k for k, cell in enumerate(cells) for a in cell}
    reps = [min(cell, key=task.index) for cell in cells]
    targets = []
    for a in task.actions:
        rows = [Ymat[task.index(a)] if cell_of[a] == k else Ymat[task.index(reps[k])]
                for k in range(len(cells))]
        targets.append(np.stack(rows))
    return _scoring_scheme(task, np.stack(targets), "coarse-csr")


def _bdm_floor(q: np.ndarray, exact: bool):
    """Strict lower bound on every scored value, with unit slack."""
    return min(q.ravel()) - la.like(1, exact)


def build_bdm(task: Task, d=None, mode: str = "u-plus-d") -> PaymentScheme:
    """Single-question BDM payment ``q (r - L) - r**2 / 2``.

    ``mode="u-plus-d"`` scores ``q = u(a) + d``; ``mode="d"`` scores the
    action-independent ``q = d`` and adds ``u(a)`` to keep the action
    incentive.  ``d`` defaults to zero.
    """
    exact = task.exact
    d = la.zeros(task.n_states, exact) if d is None else la.as_array(d, exact) if not isinstance(d, np.ndarray) else d
    if d.shape != (task.n_states,):
        raise ValueError("d must be a state-indexed vector")
    if mode == "u-plus-d":
        q = task.u + d[None, :]
        extra = la.zeros(task.u.shape, exact)
    elif mode == "d":
        q = np.stack([d] * task.n_actions)
        extra = task.u
    else:
        raise ValueError(f"unknown BDM mode {mode!r}")
    return _bdm_scheme(task, q[:, None, :], extra, f"bdm[{mode}]")


def bdm_on_question(task: Task, Y) -> PaymentScheme:
    """BDM applied directly to an arbitrary single question, without ``u``.

    The induced action maximizes ``E Y(a)``; this is the scheme that
    distorts whenever ``Y`` is not aligned with the task.
    """
    Ymat = _question_matrix(task, Y)
    return _bdm_scheme(task, Ymat[:, None, :], la.zeros(task.u.shape, task.exact), "naive-bdm")


def _bdm_scheme(task: Task, q: np.ndarray, extra: np.ndarray, name: str,
                gamma=None, kappa=None, gamma_inv=None, questions=None) -> PaymentScheme:
    """Sum of BDM terms, one per scored row of ``q`` (A, R, S)."""
    exact = task.exact
    A, R, S = q.shape
    floors = [_bdm_floor(q[:, k, :], exact) for k in range(R)]
    quad = _full(task, (A, S, R), mpq(-1, 2) if exact else -0.5)
    lin = np.transpose(q, (0, 2, 1)).copy()
    const = extra.copy()
    for k in range(R):
        const = const - q[:, k, :] * floors[k]
    if questions is None:
        questions = QuestionProfile(task.actions, q)
    return PaymentScheme(task.actions, quad, lin, const, gamma, kappa, questions, name, gamma_inv)


def build_joint_bdm(task: Task, X: QuestionProfile, cert) -> PaymentScheme:
    """BDM on the transformed questions of a joint-alignment certificate.

    Raw reports are mapped through ``Γ(a)^{-1}(r - κ(a))``; each transformed
    row equals ``λ_j u(a) + d_j`` and gets its own BDM term.  Rows with
    negative ``λ_j`` are sign-flipped first.  When no row loads on ``u``
    the task payoff is added once.
    """
    from .alignment import verify_certificate

    if cert.kind not in ("joint", "individual"):
        raise ValueError(f"joint BDM needs a joint certificate, got kind {cert.kind!r}")
    check = verify_certificate(task, X, cert)
    if not check.ok:
        raise ValueError(f"certificate does not verify (residual {check.residual})")
    exact = task.exact
    lam = np.asarray(cert.lam["*"])
    d = np.asarray(cert.d["*"])
    signs = [la.like(-1 if x < 0 else 1, exact) for x in lam]
    S = _diag(signs, exact)
    lam = S @ lam
    d = S @ d
    gamma = np.stack([np.asarray(cert.gamma[a]) @ S for a in task.actions])
    gamma_inv = np.stack([S @ la.inv(np.asarray(cert.gamma[a])) for a in task.actions])
    kappa = np.stack([np.asarray(cert.kappa[a]) for a in task.actions])
    q = np.stack([np.outer(lam, task.u[i]) + d for i in range(task.n_actions)])
    loads_on_u = any((x != 0) if exact else abs(x) > 1e-12 for x in lam)
    extra = la.zeros(task.u.shape, exact) if loads_on_u else task.u
    return _bdm_scheme(task, q, extra, "joint-bdm", gamma, kappa, gamma_inv, questions=X)


def _diag(values, exact: bool) -> np.ndarray:
    n = len(values)
    out = la.zeros((n, n), exact)
    for i, v in enumerate(values):
        out[i, i] = v
    return out


def expected_coefficients(V: PaymentScheme, p, a: str):
    """Belief-averaged (quad, lin, const) for action ``a``."""
    p = _belief_array(p)
    i = V.index(a)
    return p @ V.quad[i], p @ V.lin[i], V.const[i] @ p


def _check_concave(q) -> None:
    if any(x >= 0 for x in q):
        raise NonConcaveError("scheme is not strictly concave in the report")


def optimal_report(V: PaymentScheme, task: Task, p, a: str) -> np.ndarray:
    """Unique maximizer of the expected payment over raw reports."""
    q, l, _ = expected_coefficients(V, p, a)
    _check_concave(q)
    rp = -l / (q * 2)
    return V.untransform(rp, V.index(a))


def optimal_value(V: PaymentScheme, p, a: str):
    q, l, c = expected_coefficients(V, p, a)
    _check_concave(q)
    return c - (l * l / (q * 4)).sum()


def induced_actions(V: PaymentScheme, task: Task, p) -> frozenset[str]:
    """Actions maximizing the expected payment after an optimal report."""
    p = _belief_array(p)
    vals = [optimal_value(V, p, a) for a in V.actions]
    return argmax_set(vals, V.actions, V.exact and p.dtype == object)
