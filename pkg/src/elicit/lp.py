"""Small linear programs: exact two-phase simplex and a float fallback.

Only what adjacency testing needs: maximize ``c @ x`` subject to
``A_ub @ x <= b_ub``, ``A_eq @ x == b_eq``, ``x >= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import mpq, to_exact, to_float


@dataclass(frozen=True)
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None = None
    value: object = None


def _pivot(T: list[list], basis: list[int], r: int, c: int) -> None:
    piv = T[r][c]
    row = [v / piv for v in T[r]]
    T[r] = row
    for i in range(len(T)):
        if i != r:
            f = T[i][c]
            if f != 0:
                Ti = T[i]
                T[i] = [a - f * b for a, b in zip(Ti, row)]
    basis[r] = c


def _simplex(T: list[list], basis: list[int], cols: list[int]) -> str:
    """Maximize the objective held in the last row of ``T``.

    The last row stores reduced costs ``z_j - c_j``; entering column is the
    lowest-index column in ``cols`` with negative reduced cost (Bland).
    """
    m = len(T) - 1
    while True:
        obj = T[m]
        enter = next((j for j in cols if obj[j] < 0), None)
        if enter is None:
            return "optimal"
        best = None
        for i in range(m):
            a = T[i][enter]
            if a > 0:
                ratio = T[i][-1] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            return "unbounded"
        _pivot(T, basis, best[1], enter)


def linprog_exact(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None) -> LPResult:
    """Exact rational LP via a two-phase tableau simplex with Bland's rule."""
    c = [to_exact(v) for v in c]
    n = len(c)
    rows: list[list] = []
    rhs: list = []
    n_slack = 0 if A_ub is None else len(A_ub)
    if A_ub is not None:
        for k, (row, b) in enumerate(zip(A_ub, b_ub)):
            slack = [mpq(0)] * n_slack
            slack[k] = mpq(1)
            rows.append([to_exact(v) for v in row] + slack)
            rhs.append(to_exact(b))
    if A_eq is not None:
        for row, b in zip(A_eq, b_eq):
            rows.append([to_exact(v) for v in row] + [mpq(0)] * n_slack)
            rhs.append(to_exact(b))
    m = len(rows)
    for i in range(m):
        if rhs[i] < 0:
            rows[i] = [-v for v in rows[i]]
            rhs[i] = -rhs[i]
    nv = n + n_slack
    # one artificial per row keeps phase 1 trivial to initialize
    T = []
    for i in range(m):
        art = [mpq(0)] * m
        art[i] = mpq(1)
        T.append(rows[i] + art + [rhs[i]])
    basis = [nv + i for i in range(m)]
    # phase 1: maximize -sum(artificials)
    obj = [mpq(0)] * (nv + m + 1)
    for i in range(m):
        for j in range(nv):
            obj[j] -= T[i][j]
        obj[-1] -= T[i][-1]
    T.append(obj)
    _simplex(T, basis, list(range(nv + m)))
    if T[m][-1] != 0:
        return LPResult("infeasible")
    # drive remaining artificials out of the basis
    for i in range(m):
        if basis[i] >= nv:
            j = next((j for j in range(nv) if T[i][j] != 0), None)
            if j is not None:
                _pivot(T, basis, i, j)
    keep = [i for i in range(m) if basis[i] < nv]
    T = [T[i][:nv] + [T[i][-1]] for i in keep]
    basis = [basis[i] for i in keep]
    obj = [-(c[j] if j < n else mpq(0)) for j in range(nv)] + [mpq(0)]
    for i, b in enumerate(basis):
        cb = c[b] if b < n else mpq(0)
        if cb != 0:
            obj = [o + cb * t for o, t in zip(obj, T[i])]
    T.append(obj)
    status = _simplex(T, basis, list(range(nv)))
    if status == "unbounded":
        return LPResult("unbounded")
    x = np.empty(n, dtype=object)
    x.fill(mpq(0))
    for i, b in enumerate(basis):
        if b < n:
            x[b] = T[i][-1]
    return LPResult("optimal", x, T[-1][-1])


def linprog_float(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None) -> LPResult:
    from scipy.optimize import linprog

    res = linprog(
        -to_float(np.asarray(c, dtype=object)),
        A_ub=None if A_ub is None else to_float(np.asarray(A_ub, dtype=object)),
        b_ub=None if b_ub is None else to_float(np.asarray(b_ub, dtype=object)),
        A_eq=None if A_eq is None else to_float(np.asarray(A_eq, dtype=object)),
        b_eq=None if b_eq is None else to_float(np.asarray(b_eq, dtype=object)),
        bounds=(0, None),
        method="highs",
    )
    if res.status == 2:
        return LPResult("infeasible")
    if res.status == 3:
        return LPResult("unbounded")
    if res.status != 0:
        raise RuntimeError(f"linprog failed: {res.message}")
    return LPResult("optimal", np.asarray(res.x), -float(res.fun))
