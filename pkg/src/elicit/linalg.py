"""Two-backend dense linear algebra.

Exact matrices are numpy object arrays of ``gmpy2.mpq``; float matrices are
ordinary float64 arrays.  Every routine dispatches on ``dtype`` so callers
can stay agnostic of the backend they were handed.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import gmpy2
import numpy as np

mpq = gmpy2.mpq

# singular values below RANK_RTOL * largest are treated as zero
RANK_RTOL = 1e-9
# absolute floor for float residual checks
FLOAT_ATOL = 1e-9


class LinAlgError(ValueError):
    pass


def to_exact(x) -> "gmpy2.mpq":
    """Convert a scalar to an exact rational.

    Accepts ints, ``Fraction``/``mpq``, decimal strings ("0.6") and
    ratio strings ("3/5").  Floats are converted through their shortest
    repr so that ``0.1`` becomes 1/10 rather than the binary expansion.
    """
    if isinstance(x, bool):
        return mpq(int(x))
    if isinstance(x, (int, Rational)) or type(x).__name__ == "mpq":
        return mpq(x)
    if isinstance(x, str):
        return mpq(x.strip())
    if isinstance(x, (float, np.floating)):
        if not np.isfinite(x):
            raise ValueError(f"non-finite value {x!r}")
        return mpq(repr(float(x)))
    if isinstance(x, np.integer):
        return mpq(int(x))
    raise TypeError(f"cannot convert {type(x).__name__} to a rational")


def is_exact_scalar(x) -> bool:
    return isinstance(x, (int, Rational, str)) or type(x).__name__ == "mpq"


def is_exact(a: np.ndarray) -> bool:
    return np.asarray(a).dtype == object


def as_array(data, exact: bool) -> np.ndarray:
    """Build a backend array from nested sequences."""
    arr = np.array(data, dtype=object)
    if exact:
        flat = [to_exact(x) for x in arr.ravel()]
        out = np.empty(arr.shape, dtype=object)
        out.ravel()[:] = flat
        return out
    return np.array([float(x) for x in arr.ravel()], dtype=float).reshape(arr.shape)


def to_float(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    if a.dtype == object:
        return np.array([float(x) for x in a.ravel()], dtype=float).reshape(a.shape)
    return a.astype(float)


def zeros(shape, exact: bool) -> np.ndarray:
    if exact:
        out = np.empty(shape, dtype=object)
        out.fill(mpq(0))
        return out
    return np.zeros(shape)


def eye(n: int, exact: bool) -> np.ndarray:
    out = zeros((n, n), exact)
    for i in range(n):
        out[i, i] = mpq(1) if exact else 1.0
    return out


def like(value, exact: bool):
    return to_exact(value) if exact else float(value)


def max_abs(a) -> float | "gmpy2.mpq":
    a = np.asarray(a)
    if a.size == 0:
        return mpq(0) if a.dtype == object else 0.0
    if a.dtype == object:
        return max(abs(x) for x in a.ravel())
    return float(np.max(np.abs(a)))


def _scale(a: np.ndarray) -> float:
    return max(1.0, float(max_abs(a)))


def is_zero(a, tol: float | None = None) -> bool:
    """Exact zero test for rationals; scaled tolerance test for floats."""
    a = np.asarray(a)
    if a.dtype == object:
        return all(x == 0 for x in a.ravel())
    tol = FLOAT_ATOL if tol is None else tol
    return float(max_abs(a)) <= tol


def rref(a: np.ndarray, tol: float | None = None) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form and pivot columns.

    Exact for object arrays.  For floats, partial pivoting with entries
    below ``tol * max|a|`` treated as zero.
    """
    m = np.array(a, copy=True)
    rows, cols = m.shape
    exact = m.dtype == object
    if not exact:
        m = m.astype(float)
        thresh = (RANK_RTOL if tol is None else tol) * _scale(m)
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        if exact:
            nz = [i for i in range(r, rows) if m[i, c] != 0]
            if not nz:
                continue
            p = nz[0]
        else:
            p = r + int(np.argmax(np.abs(m[r:, c])))
            if abs(m[p, c]) <= thresh:
                m[r:, c] = 0.0
                continue
        if p != r:
            m[[p, r]] = m[[r, p]]
        m[r] = m[r] / m[r, c]
        for i in range(rows):
            if i != r and m[i, c] != 0:
                m[i] = m[i] - m[i, c] * m[r]
        pivots.append(c)
        r += 1
    return m, pivots


def rank(a: np.ndarray) -> int:
    a = np.asarray(a)
    if a.size == 0:
        return 0
    if a.dtype == object:
        return len(rref(a)[1])
    s = np.linalg.svd(a.astype(float), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > RANK_RTOL * s[0]))


def nullspace(a: np.ndarray) -> np.ndarray:
    """Rows spanning the right kernel ``{x : a @ x = 0}``."""
    a = np.asarray(a)
    rows, cols = a.shape
    exact = a.dtype == object
    if exact:
        r, piv = rref(a)
        free = [j for j in range(cols) if j not in piv]
        basis = zeros((len(free), cols), True)
        for k, f in enumerate(free):
            basis[k, f] = mpq(1)
            for i, pc in enumerate(piv):
                basis[k, pc] = -r[i, f]
        return basis
    if rows == 0:
        return np.eye(cols)
    _, s, vt = np.linalg.svd(a.astype(float))
    rk = int(np.sum(s > RANK_RTOL * s[0])) if s.size and s[0] > 0 else 0
    return vt[rk:].copy()


def solve(a: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """A particular solution of ``a @ x = b`` or ``None`` if inconsistent.

    ``b`` may be a vector or a matrix of right-hand sides.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    vec = b.ndim == 1
    bb = b.reshape(-1, 1) if vec else b
    if a.dtype == object or bb.dtype == object:
        aug = np.concatenate([a, bb], axis=1)
        r, piv = rref(aug)
        n = a.shape[1]
        if any(p >= n for p in piv):
            return None
        x = zeros((n, bb.shape[1]), True)
        for i, pc in enumerate(piv):
            x[pc] = r[i, n:]
    else:
        x, *_ = np.linalg.lstsq(a, bb, rcond=None)
        resid = a @ x - bb
        if float(max_abs(resid)) > FLOAT_ATOL * max(_scale(a), _scale(bb)):
            return None
    return x.ravel() if vec else x


def solve_left(a: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """Solve ``x @ a = b`` for ``x``."""
    x = solve(np.asarray(a).T, np.asarray(b).T)
    return None if x is None else x.T


def det(a: np.ndarray):
    a = np.asarray(a)
    n = a.shape[0]
    if a.dtype != object:
        return float(np.linalg.det(a))
    m = np.array(a, copy=True)
    d = mpq(1)
    for c in range(n):
        p = next((i for i in range(c, n) if m[i, c] != 0), None)
        if p is None:
            return mpq(0)
        if p != c:
            m[[p, c]] = m[[c, p]]
            d = -d
        d *= m[c, c]
        for i in range(c + 1, n):
            if m[i, c] != 0:
                m[i] = m[i] - (m[i, c] / m[c, c]) * m[c]
    return d


def is_invertible(a: np.ndarray, tol: float = 1e-10) -> bool:
    a = np.asarray(a)
    if a.dtype == object:
        return det(a) != 0
    if a.size == 0:
        return True
    return abs(np.linalg.det(a)) > tol and rank(a) == a.shape[0]


def inv(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    n = a.shape[0]
    if a.dtype != object:
        if not is_invertible(a):
            raise LinAlgError("singular matrix")
        return np.linalg.inv(a)
    x = solve(a, eye(n, True))
    if x is None or rank(a) < n:
        raise LinAlgError("singular matrix")
    return x


def matmul_chain(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = mats[0]
    for m in mats[1:]:
        out = out @ m
    return out


def stack_rows(rows: Iterable[np.ndarray], ncols: int, exact: bool) -> np.ndarray:
    rows = [np.asarray(r).reshape(-1, ncols) for r in rows]
    if not rows:
        return zeros((0, ncols), exact)
    return np.concatenate(rows, axis=0)


def random_rational(rng: np.random.Generator, shape, lo: int = -5, hi: int = 5,
                    max_den: int = 4) -> np.ndarray:
    """Small random rationals; used by tests, scripts and t-vector search."""
    num = rng.integers(lo, hi + 1, size=shape)
    den = rng.integers(1, max_den + 1, size=shape)
    out = np.empty(shape, dtype=object)
    for idx in np.ndindex(*np.atleast_1d(np.empty(shape)).shape if shape else ()):
        out[idx] = mpq(int(num[idx]), int(den[idx]))
    return out


def fraction(x) -> Fraction:
    return Fraction(int(x.numerator), int(x.denominator))
