"""Brute-force belief-grid oracle.

Beliefs are the compositions ``K / n`` of the simplex.  Under the exact
backend every coefficient tensor is scaled to integers, so all belief
expectations are exact integer matrix products.  Action values are first
ranked in floats; points whose top two values are within a safety margin
are re-evaluated in exact rationals, so the reported sets are exact.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Iterator, Mapping

import numpy as np

from . import linalg as la
from .linalg import mpq
from .mechanisms import NonConcaveError, build_joint_bdm
from .model import Belief, PaymentScheme, QuestionProfile, Task

DEFAULT_MAX_GRID = 10 ** 7
REPORT_TOL = 1e-9
# float ranking is trusted only above this relative gap
_SAFE_GAP = 1e-9


class GridTooLarge(ValueError):
    pass


def max_grid() -> int:
    env = os.environ.get("ELICIT_MAX_GRID")
    return int(env) if env else DEFAULT_MAX_GRID


def grid_size(n_states: int, n: int) -> int:
    return math.comb(n + n_states - 1, n_states - 1)


def default_resolution(n_states: int) -> int:
    return 20 if n_states <= 4 else 10


def simplex_grid(n_states: int, n: int) -> np.ndarray:
    """All compositions of ``n`` into ``n_states`` parts, first coordinate descending."""
    if n < 1 or n_states < 1:
        raise ValueError("need n >= 1 and at least one state")
    size = grid_size(n_states, n)
    if size > max_grid():
        raise GridTooLarge(f"{size} grid points exceed the limit {max_grid()} (set ELICIT_MAX_GRID to raise it)")
    out = np.zeros((size, n_states), dtype=np.int64)
    row = 0
    stack = [(0, n, [])]
    # iterative DFS keeps the order deterministic
    while stack:
        pos, left, prefix = stack.pop()
        if pos == n_states - 1:
            out[row, :-1] = prefix
            out[row, -1] = left
            row += 1
            continue
        for k in range(0, left + 1):
            stack.append((pos + 1, left - k, prefix + [k]))
    return out


def enumerate_simplex(n_states: int, n: int, exact: bool = True) -> Iterator[Belief]:
    for k in simplex_grid(n_states, n):
        yield Belief(np.array([mpq(int(x), n) for x in k], dtype=object) if exact else k / n)


@dataclass(frozen=True)
class VerifyConfig:
    n: int | None = None
    tol: float = REPORT_TOL
    max_violations: int = 1000


@dataclass(frozen=True, eq=False)
class Violation:
    belief: tuple
    induced: frozenset
    optimal: frozenset
    report_error: float

    @property
    def distorted(self) -> bool:
        return self.induced != self.optimal


@dataclass(frozen=True, eq=False)
class VerificationReport:
    grid_resolution: int
    checked: int
    violations: tuple[Violation, ...]
    max_report_error: float
    tolerance: float
    exact: bool
    truncated: bool = False

    @property
    def verdict(self) -> str:
        return "pass" if not self.violations and self.max_report_error <= self.tolerance else "fail"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def summary(self) -> str:
        mode = "exact" if self.exact else "float"
        return (f"{self.verdict} at resolution n={self.grid_resolution} ({mode}): "
                f"{self.checked} beliefs, {len(self.violations)} violation(s), "
                f"max report error {self.max_report_error:.3g}")


# scaled tensors ------------------------------------------------------------------

def _lcd(a: np.ndarray) -> int:
    return math.lcm(1, *(int(mpq(x).denominator) for x in a.ravel()))


def _scaled(a: np.ndarray) -> tuple[np.ndarray, int]:
    """Integer tensor and the common denominator it was scaled by."""
    D = _lcd(a)
    ints = [int(mpq(x) * D) for x in a.ravel()]
    big = max((abs(v) for v in ints), default=0)
    dtype = np.int64 if big < 2 ** 40 else object
    return np.array(ints, dtype=dtype).reshape(a.shape), D


def _contract(K: np.ndarray, T: np.ndarray) -> np.ndarray:
    """``sum_s K[p, s] T[a, s, ...]`` -> (P, A, ...)."""
    if T.dtype == object or K.dtype == object:
        return np.tensordot(K.astype(object), T.astype(object), axes=([1], [1]))
    return np.tensordot(K, T, axes=([1], [1]))


def _targets(V: PaymentScheme, X: QuestionProfile | None) -> np.ndarray | None:
    """What the scored coordinates should equal, per (action, coordinate, state)."""
    if X is None:
        X = V.questions
    if X is None:
        return None
    T = np.asarray(X.X)
    if V.gamma is None:
        return T
    exact = la.is_exact(T)
    S = T.shape[2]
    one = la.zeros(S, exact) + la.like(1, exact)
    return np.stack([V.gamma_inv[i] @ (T[i] - np.outer(V.kappa[i], one)) for i in range(T.shape[0])])


def verify_incentivizable(V: PaymentScheme, task: Task, X: QuestionProfile | None = None,
                          n: int | None = None, config: VerifyConfig | None = None) -> VerificationReport:
    """Check truthful reports and undistorted actions at every grid belief.

    ``X`` defaults to the questions recorded on the scheme.  Reports are
    compared in the scored coordinates, which is equivalent to comparing raw
    reports because every report map is invertible.
    """
    config = config or VerifyConfig()
    n = n or config.n or default_resolution(task.n_states)
    K = simplex_grid(task.n_states, n)
    exact = V.exact and task.exact and (X is None or X.exact)
    if any(x >= 0 for x in np.asarray(V.quad).ravel()):
        raise NonConcaveError("verification needs strictly negative quadratic coefficients")
    T = _targets(V, X)
    if T is not None and T.shape[:2] != (len(V.actions), V.report_dim):
        raise ValueError(f"questions have shape {T.shape[:2]}, scheme reports {V.report_dim}")
    if exact:
        return _verify_exact(V, task, T, K, n, config)
    return _verify_float(V, task, T, K, n, config)


def _float_values(Eq, El, Ec):
    return Ec - (El * El / (4.0 * Eq)).sum(axis=2)


def _verify_float(V, task, T, K, n, config) -> VerificationReport:
    P = K.shape[0]
    Kf = K.astype(float) / n
    Eq = _contract(Kf, la.to_float(V.quad))
    El = _contract(Kf, la.to_float(V.lin))
    Ec = Kf @ la.to_float(V.const).T
    vals = _float_values(Eq, El, Ec)
    uvals = Kf @ la.to_float(task.u).T
    rp = -El / (2.0 * Eq)
    tgt = None if T is None else _contract(Kf, np.transpose(la.to_float(T), (0, 2, 1)))
    violations, worst = [], 0.0
    labels = np.array(V.actions, dtype=object)
    tlabels = np.array(task.actions, dtype=object)
    for p in range(P):
        vb = vals[p].max()
        induced = frozenset(labels[vals[p] >= vb - 1e-9 * max(1.0, abs(vb))])
        ub = uvals[p].max()
        optimal = frozenset(tlabels[uvals[p] >= ub - 1e-9 * max(1.0, abs(ub))])
        err = 0.0
        if tgt is not None:
            idx = [V.index(a) for a in induced]
            err = float(np.max(np.abs(rp[p, idx] - tgt[p, idx])))
        worst = max(worst, err)
        if induced != optimal or err > config.tol:
            if len(violations) < config.max_violations:
                violations.append(Violation(tuple(Kf[p]), induced, optimal, err))
    return VerificationReport(n, P, tuple(violations), worst, config.tol, False,
                              len(violations) >= config.max_violations)


def _verify_exact(V, task, T, K, n, config) -> VerificationReport:
    P = K.shape[0]
    Qi, Dq = _scaled(np.asarray(V.quad))
    Li, Dl = _scaled(np.asarray(V.lin))
    Ci, Dc = _scaled(np.asarray(V.const))
    Ui, _ = _scaled(np.asarray(task.u))
    Kq = _contract(K, Qi)            # (P, A, R) = n Dq E[quad]
    Kl = _contract(K, Li)            # n Dl E[lin]
    Kc = _contract(K, Ci)            # n Dc E[const]
    Ku = _contract(K, Ui)            # n Du E[u]
    # task optimum: exact integer argmax
    ubest = Ku.max(axis=1, keepdims=True)
    opt_mask = Ku == ubest
    # n value = Kc / Dc - Dq / (4 Dl^2) sum Kl^2 / Kq, ranked in floats first
    Kqf, Klf = Kq.astype(float), Kl.astype(float)
    quad_part = (Klf * Klf / Kqf).sum(axis=2)
    vals = Kc.astype(float) / Dc - (Dq / (4.0 * Dl * Dl)) * quad_part
    scale = np.abs(Kc.astype(float) / Dc).max(axis=1) + (Dq / (4.0 * Dl * Dl)) * np.abs(quad_part).max(axis=1)
    order = np.sort(vals, axis=1)
    vb = order[:, -1]
    second = order[:, -2] if vals.shape[1] > 1 else np.full(P, -np.inf)
    ambiguous = (vb - second) <= _SAFE_GAP * np.maximum(1.0, scale)
    ind_mask = vals == vb[:, None]
    for p in np.nonzero(ambiguous)[0]:
        ev = [mpq(int(Kc[p, a]), Dc) - mpq(Dq, 4 * Dl * Dl) * sum(
            (mpq(int(Kl[p, a, k])) ** 2 / int(Kq[p, a, k]) for k in range(Kq.shape[2])), mpq(0))
            for a in range(Kq.shape[1])]
        best = max(ev)
        ind_mask[p] = [v == best for v in ev]
    # reports: -Kl Dq / (2 Dl Kq) == Kt / (n Dt), cross-multiplied in Python ints
    report_bad = np.zeros(ind_mask.shape, dtype=bool)
    if T is not None:
        Ti, Dt = _scaled(np.transpose(np.asarray(T), (0, 2, 1)))  # (A, S, R)
        Kt = _contract(K, Ti)
        lhs = -(Kl.astype(object) * (Dq * n * Dt))
        rhs = (Kq.astype(object) * (2 * Dl)) * Kt.astype(object)
        report_bad = (lhs != rhs).any(axis=2)
    violations, worst = [], 0.0
    labels = V.actions
    tlabels = task.actions
    for p in range(P):
        induced = frozenset(a for a, f in zip(labels, ind_mask[p]) if f)
        optimal = frozenset(a for a, f in zip(tlabels, opt_mask[p]) if f)
        bad_idx = [V.index(a) for a in induced if report_bad[p, V.index(a)]]
        err = 0.0
        if bad_idx:
            err = max(
                abs(float(mpq(-int(Kl[p, i, k]) * Dq, 2 * Dl * int(Kq[p, i, k])) - mpq(int(Kt[p, i, k]), n * Dt)))
                for i in bad_idx for k in range(Kq.shape[2]))
            err = max(err, 1e-300)
        worst = max(worst, err)
        if induced != optimal or bad_idx:
            if len(violations) < config.max_violations:
                violations.append(Violation(tuple(mpq(int(x), n) for x in K[p]), induced, optimal, err))
    return VerificationReport(n, P, tuple(violations), worst, 0.0, True,
                              len(violations) >= config.max_violations)


def detect_distortion(V: PaymentScheme, task: Task, n: int | None = None,
                      X: QuestionProfile | None = None) -> list[Violation]:
    """Grid beliefs where the induced action set differs from the task optimum."""
    rep = verify_incentivizable(V, task, X, n)
    return [v for v in rep.violations if v.distorted]


# robustness -------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RobustTrial:
    index: int
    aligned: bool
    verdict: str
    detail: str = ""


@dataclass(frozen=True, eq=False)
class RobustReport:
    seed: int
    magnitude: float
    grid_resolution: int
    trials: tuple[RobustTrial, ...] = field(default_factory=tuple)

    @property
    def failures(self) -> int:
        return sum(t.verdict != "pass" for t in self.trials)

    @property
    def verdict(self) -> str:
        return "pass" if self.failures == 0 else "fail"


def _random_t(rng, shape, magnitude, exact: bool):
    if exact:
        mag = mpq(str(magnitude)) if not isinstance(magnitude, type(mpq(0))) else magnitude
        den = 16
        nums = rng.integers(-den, den + 1, size=shape)
        out = np.empty(shape, dtype=object)
        for idx in np.ndindex(*shape):
            out[idx] = mag * mpq(int(nums[idx]), den)
        return out
    return rng.uniform(-float(magnitude), float(magnitude), size=shape)


def verify_robust(task: Task, X: QuestionProfile, mu: Mapping[str, np.ndarray] | None = None,
                  trials: int = 50, magnitude=1, n: int | None = None, seed: int = 0,
                  graph=None) -> RobustReport:
    """Perturb ``X(a) + μ(a) t`` and rerun alignment, joint BDM and the grid check."""
    from .alignment import NotAligned, find_joint_certificate
    from .graph import build_graph

    exact = task.exact and X.exact
    graph = build_graph(task) if graph is None else graph
    n = n or default_resolution(task.n_states)
    mu = mu or {a: la.eye(X.m, exact) for a in task.actions}
    rng = np.random.default_rng(seed)
    out = []
    for k in range(trials):
        t = _random_t(rng, (X.m, task.n_states), magnitude, exact)
        Xt = QuestionProfile(X.actions, np.stack([X.of(a) + np.asarray(mu[a]) @ t for a in X.actions]))
        cert = find_joint_certificate(task, Xt, graph, seed=seed + k)
        if isinstance(cert, NotAligned):
            out.append(RobustTrial(k, False, "fail", f"not aligned: {cert.reason}: {cert.detail}"))
            continue
        rep = verify_incentivizable(build_joint_bdm(task, Xt, cert), task, Xt, n)
        out.append(RobustTrial(k, True, rep.verdict, rep.summary()))
    return RobustReport(seed, float(mpq(str(magnitude))) if exact else float(magnitude), n, tuple(out))
