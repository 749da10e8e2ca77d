"""Tasks, beliefs, question profiles and payment schemes.

Everything here is immutable after construction.  Arrays are backed either
by exact rationals (object dtype holding ``gmpy2.mpq``) or by float64; the
choice is made once when a :class:`Task` is built and propagates to every
object derived from it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import linalg as la
from .linalg import mpq

# relative tolerance for argmax ties under floats
TIE_RTOL = 1e-9
# belief normalization tolerance under floats
SUM_TOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def label_value(label: str):
    """Numeric value carried by a state/action label such as ``"1/2"``."""
    try:
        return la.to_exact(label)
    except (ValueError, TypeError):
        raise ValueError(f"label {label!r} carries no numeric value") from None


@dataclass(frozen=True, eq=False)
class Task:
    """A finite state-contingent decision problem ``(states, actions, u)``.

    ``u`` has one row per action and one column per state.  ``factors`` is
    set only for product tasks and lists the component tasks in order.
    """

    states: tuple[str, ...]
    actions: tuple[str, ...]
    u: np.ndarray
    factors: tuple["Task", ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(str(s) for s in self.states))
        object.__setattr__(self, "actions", tuple(str(a) for a in self.actions))
        u = np.asarray(self.u)
        if u.shape != (len(self.actions), len(self.states)):
            raise ValueError(
                f"payoff matrix has shape {u.shape}, expected "
                f"({len(self.actions)}, {len(self.states)})"
            )
        if len(self.states) < 2 and self.factors is None:
            raise ValueError("a task needs at least two states")
        if len(set(self.states)) != len(self.states) or len(set(self.actions)) != len(self.actions):
            raise ValueError("state and action labels must be unique")
        if u.dtype != object:
            u = u.astype(float)
            if not np.all(np.isfinite(u)):
                raise ValueError("payoffs must be finite")
        object.__setattr__(self, "u", _frozen(np.array(u, copy=True)))
        object.__setattr__(self, "_index", {a: i for i, a in enumerate(self.actions)})
        object.__setattr__(self, "_sindex", {s: i for i, s in enumerate(self.states)})

    @classmethod
    def from_rows(cls, states: Sequence, actions: Sequence, u, exact: bool = True,
                  factors=None) -> "Task":
        return cls(tuple(map(str, states)), tuple(map(str, actions)), la.as_array(u, exact), factors)

    @classmethod
    def from_function(cls, states: Sequence, actions: Sequence,
                      f: Callable, exact: bool = True) -> "Task":
        """Build ``u[a, s] = f(value(a), value(s))`` from numeric labels."""
        states = [str(s) for s in states]
        actions = [str(a) for a in actions]
        rows = [[f(label_value(a), label_value(s)) for s in states] for a in actions]
        return cls.from_rows(states, actions, rows, exact)

    @property
    def exact(self) -> bool:
        return self.u.dtype == object

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    def index(self, a: str) -> int:
        try:
            return self._index[a]
        except KeyError:
            raise KeyError(f"unknown action {a!r}") from None

    def state_index(self, s: str) -> int:
        try:
            return self._sindex[s]
        except KeyError:
            raise KeyError(f"unknown state {s!r}") from None

    def row(self, a: str) -> np.ndarray:
        return self.u[self.index(a)]

    def state_values(self) -> list:
        return [label_value(s) for s in self.states]

    def with_backend(self, exact: bool) -> "Task":
        if exact == self.exact:
            return self
        factors = None if self.factors is None else tuple(f.with_backend(exact) for f in self.factors)
        if exact:
            return Task(self.states, self.actions, la.as_array(self.u, True), factors)
        return Task(self.states, self.actions, la.to_float(self.u), factors)

    # product structure -------------------------------------------------
    def action_parts(self, a: str) -> tuple[int, ...]:
        """Per-factor action indices of a product action."""
        if self.factors is None:
            return (self.index(a),)
        return self._action_parts[self.index(a)]

    def factor_payoff(self, i: int) -> np.ndarray:
        """Payoff of factor ``i`` lifted to the product: ``u_i(a_i, θ_i)``."""
        if self.factors is None:
            if i != 0:
                raise IndexError("task has a single factor")
            return self.u
        return self._factor_payoffs[i]


def product_task(tasks: Sequence[Task]) -> Task:
    """Product of independent tasks with additive payoff."""
    tasks = list(tasks)
    if not tasks:
        raise ValueError("product of an empty list of tasks")
    if len(tasks) == 1:
        return tasks[0]
    exact = all(t.exact for t in tasks)
    tasks = [t.with_backend(exact) for t in tasks]
    a_idx = list(itertools.product(*[range(t.n_actions) for t in tasks]))
    s_idx = list(itertools.product(*[range(t.n_states) for t in tasks]))
    actions = [",".join(t.actions[i] for t, i in zip(tasks, ix)) for ix in a_idx]
    states = [",".join(t.states[i] for t, i in zip(tasks, ix)) for ix in s_idx]
    parts = []
    for k, t in enumerate(tasks):
        m = la.zeros((len(a_idx), len(s_idx)), exact)
        for r, ai in enumerate(a_idx):
            for c, si in enumerate(s_idx):
                m[r, c] = t.u[ai[k], si[k]]
        parts.append(_frozen(m))
    u = parts[0]
    for p in parts[1:]:
        u = u + p
    task = Task(tuple(states), tuple(actions), u, tuple(tasks))
    object.__setattr__(task, "_action_parts", tuple(a_idx))
    object.__setattr__(task, "_factor_payoffs", tuple(parts))
    return task


@dataclass(frozen=True, eq=False)
class Belief:
    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, copy=True)
        if p.dtype != object:
            p = p.astype(float)
            if np.any(p < 0) or abs(float(p.sum()) - 1.0) > SUM_TOL * max(1, len(p)):
                raise ValueError(f"not a probability vector: {p}")
        else:
            if any(x < 0 for x in p) or sum(p) != 1:
                raise ValueError(f"not a probability vector: {list(map(str, p))}")
        object.__setattr__(self, "p", _frozen(p))

    @classmethod
    def of(cls, values: Iterable, exact: bool = True) -> "Belief":
        return cls(la.as_array(list(values), exact))

    @classmethod
    def uniform(cls, n: int, exact: bool = True) -> "Belief":
        return cls(la.as_array([mpq(1, n)] * n, exact))

    @property
    def exact(self) -> bool:
        return self.p.dtype == object

    def __len__(self) -> int:
        return len(self.p)


def _belief_array(p) -> np.ndarray:
    return p.p if isinstance(p, Belief) else np.asarray(p)


@dataclass(frozen=True, eq=False)
class QuestionProfile:
    """Action-dependent questions: ``X[i]`` is the m x |states| matrix of action i."""

    actions: tuple[str, ...]
    X: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X)
        if X.ndim != 3 or X.shape[0] != len(self.actions):
            raise ValueError(f"question array must be (actions, m, states), got {X.shape}")
        if X.shape[1] < 1:
            raise ValueError("a question profile needs at least one question")
        object.__setattr__(self, "actions", tuple(map(str, self.actions)))
        object.__setattr__(self, "X", _frozen(np.array(X, copy=True)))
        object.__setattr__(self, "_index", {a: i for i, a in enumerate(self.actions)})

    @classmethod
    def from_mapping(cls, task: Task, X: Mapping[str, Sequence], exact: bool | None = None) -> "QuestionProfile":
        exact = task.exact if exact is None else exact
        missing = [a for a in task.actions if a not in X]
        if missing:
            raise ValueError(f"no question matrix for actions {missing}")
        mats = [la.as_array(X[a], exact) for a in task.actions]
        m = mats[0].shape[0]
        for a, mat in zip(task.actions, mats):
            if mat.shape != (m, task.n_states):
                raise ValueError(f"question matrix for {a!r} has shape {mat.shape}, expected ({m}, {task.n_states})")
        return cls(task.actions, np.stack(mats))

    @classmethod
    def single(cls, task: Task, Y) -> "QuestionProfile":
        """One question given as an |actions| x |states| matrix."""
        Y = la.as_array(Y, task.exact) if not isinstance(Y, np.ndarray) else Y
        if Y.shape != task.u.shape:
            raise ValueError(f"question matrix has shape {Y.shape}, expected {task.u.shape}")
        return cls(task.actions, Y[:, None, :])

    @classmethod
    def from_functions(cls, task: Task, fs: Sequence[Callable]) -> "QuestionProfile":
        """Questions ``f(value(a), value(s))`` over numeric labels."""
        mats = []
        for a in task.actions:
            av = label_value(a)
            mats.append([[f(av, label_value(s)) for s in task.states] for f in fs])
        return cls(task.actions, la.as_array(mats, task.exact))

    @property
    def m(self) -> int:
        return self.X.shape[1]

    @property
    def exact(self) -> bool:
        return self.X.dtype == object

    @property
    def n_states(self) -> int:
        return self.X.shape[2]

    def of(self, a: str) -> np.ndarray:
        try:
            return self.X[self._index[a]]
        except KeyError:
            raise KeyError(f"unknown action {a!r}") from None

    def question(self, j: int) -> np.ndarray:
        """Question ``j`` as an |actions| x |states| matrix."""
        return self.X[:, j, :]

    def subset(self, rows: Sequence[int]) -> "QuestionProfile":
        return QuestionProfile(self.actions, self.X[:, list(rows), :])

    def stacked(self, other: "QuestionProfile") -> "QuestionProfile":
        return QuestionProfile(self.actions, np.concatenate([self.X, other.X], axis=1))

    def with_backend(self, exact: bool) -> "QuestionProfile":
        if exact == self.exact:
            return self
        return QuestionProfile(self.actions, la.as_array(self.X, True) if exact else la.to_float(self.X))


@dataclass(frozen=True, eq=False)
class PaymentScheme:
    """Payment quadratic and diagonal in the (transformed) report.

    ``V(r, a, s) = sum_k quad[a,s,k] r'_k**2 + lin[a,s,k] r'_k + const[a,s]``
    with ``r' = gamma_inv[a] @ (r - kappa[a])`` when a report map is set and
    ``r' = r`` otherwise.  ``questions`` records what a truthful reporter is
    expected to report (the raw-report targets), when known.
    """

    actions: tuple[str, ...]
    quad: np.ndarray
    lin: np.ndarray
    const: np.ndarray
    gamma: np.ndarray | None = None
    kappa: np.ndarray | None = None
    questions: QuestionProfile | None = None
    name: str = "custom"
    gamma_inv: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        A, S, R = np.shape(self.quad)
        if np.shape(self.lin) != (A, S, R) or np.shape(self.const) != (A, S):
            raise ValueError("inconsistent payment coefficient shapes")
        if len(self.actions) != A:
            raise ValueError("one coefficient block per action required")
        if any(x > 0 for x in np.asarray(self.quad).ravel()):
            raise ValueError("quadratic coefficients must be <= 0")
        for name in ("quad", "lin", "const"):
            object.__setattr__(self, name, _frozen(np.array(getattr(self, name), copy=True)))
        if self.gamma is not None:
            g = np.array(self.gamma, copy=True)
            kap = la.zeros((A, R), g.dtype == object) if self.kappa is None else np.array(self.kappa, copy=True)
            if g.shape != (A, R, R) or kap.shape != (A, R):
                raise ValueError("report map must be (actions, R, R) with shifts (actions, R)")
            ginv = self.gamma_inv
            if ginv is None:
                ginv = np.stack([la.inv(gi) for gi in g])
            object.__setattr__(self, "gamma", _frozen(g))
            object.__setattr__(self, "kappa", _frozen(kap))
            object.__setattr__(self, "gamma_inv", _frozen(np.array(ginv, copy=True)))
        object.__setattr__(self, "actions", tuple(self.actions))
        object.__setattr__(self, "_index", {a: i for i, a in enumerate(self.actions)})

    @property
    def report_dim(self) -> int:
        return self.quad.shape[2]

    @property
    def exact(self) -> bool:
        return self.quad.dtype == object

    def index(self, a: str) -> int:
        try:
            return self._index[a]
        except KeyError:
            raise KeyError(f"unknown action {a!r}") from None

    def transform(self, r, i: int) -> np.ndarray:
        """Raw report -> scored coordinates for action index ``i``."""
        r = np.asarray(r)
        if self.gamma is None:
            return r
        return self.gamma_inv[i] @ (r - self.kappa[i])

    def untransform(self, rp, i: int) -> np.ndarray:
        if self.gamma is None:
            return np.asarray(rp)
        return self.gamma[i] @ np.asarray(rp) + self.kappa[i]


def project_bar(v) -> np.ndarray:
    """Center a state-indexed vector (or each row of a matrix) to sum zero."""
    v = np.asarray(v)
    n = v.shape[-1]
    if v.dtype == object:
        mean = v.sum(axis=-1, keepdims=True) * mpq(1, n)
    else:
        mean = v.mean(axis=-1, keepdims=True)
    return v - mean


def delta(task: Task, a: str, b: str) -> np.ndarray:
    """Centered payoff difference ``ū(b) - ū(a)``."""
    return project_bar(task.row(b)) - project_bar(task.row(a))


def expected_value(p, row) -> object:
    p = _belief_array(p)
    row = np.asarray(row)
    if len(p) != row.shape[-1]:
        raise ValueError("belief and vector lengths differ")
    return row @ p


def argmax_set(values: Sequence, labels: Sequence[str], exact: bool) -> frozenset[str]:
    best = max(values)
    if exact:
        return frozenset(l for l, v in zip(labels, values) if v == best)
    tol = TIE_RTOL * max(1.0, abs(float(best)))
    return frozenset(l for l, v in zip(labels, values) if float(best) - float(v) <= tol)


def task_optimal_actions(task: Task, p) -> frozenset[str]:
    p = _belief_array(p)
    vals = task.u @ p
    return argmax_set(list(vals), task.actions, task.exact and p.dtype == object)


def evaluate_payment(V: PaymentScheme, r, a: str, theta: str | int, task: Task | None = None):
    """Payment for raw report ``r`` after action ``a`` in state ``theta``.

    ``theta`` is a state index, or a label when ``task`` is given.
    """
    r = np.asarray(r)
    if r.shape != (V.report_dim,):
        raise ValueError(f"report has shape {r.shape}, expected ({V.report_dim},)")
    i = V.index(a)
    s = task.state_index(theta) if isinstance(theta, str) else int(theta)
    rp = V.transform(r, i)
    return (V.quad[i, s] * rp * rp).sum() + V.lin[i, s] @ rp + V.const[i, s]


def affine_rescale(V: PaymentScheme, lo, hi, task: Task, report_box: float = 1.0) -> PaymentScheme:
    """Rescale payments into ``[lo, hi]`` over reports with |r'_k| <= report_box.

    A positive affine transform leaves every argmax unchanged.  The bound is
    computed from coefficient magnitudes, so the range is conservative.
    """
    exact = V.exact
    box = la.like(report_box, exact)
    A, S, R = V.quad.shape
    vmax = None
    vmin = None
    for i in range(A):
        for s in range(S):
            spread = sum(abs(V.quad[i, s, k]) * box * box + abs(V.lin[i, s, k]) * box for k in range(R))
            hi_v, lo_v = V.const[i, s] + spread, V.const[i, s] - spread
            vmax = hi_v if vmax is None else max(vmax, hi_v)
            vmin = lo_v if vmin is None else min(vmin, lo_v)
    width = vmax - vmin
    if width == 0:
        width = la.like(1, exact)
    scale = (la.like(hi, exact) - la.like(lo, exact)) / width
    shift = la.like(lo, exact) - scale * vmin
    return PaymentScheme(V.actions, V.quad * scale, V.lin * scale, V.const * scale + shift,
                         V.gamma, V.kappa, V.questions, V.name, V.gamma_inv)
