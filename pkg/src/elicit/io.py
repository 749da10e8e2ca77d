"""JSON import and export.

Numbers are read as decimals or ``"p/q"`` strings without passing through
binary floats, and exact values are written back as ``"p/q"`` strings, so
an export re-imports to identical rationals.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from . import linalg as la
from .alignment import AlignmentCertificate, Decomposition, NotAligned
from .graph import AdjacencyGraph
from .model import PaymentScheme, QuestionProfile, Task, product_task


class ParseError(ValueError):
    """Malformed JSON; carries the line and column when known."""

    def __init__(self, msg: str, line: int | None = None, col: int | None = None, path: str | None = None):
        where = ""
        if path:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:{col}: "
        super().__init__(where + msg)
        self.line, self.col = line, col


class InvalidDimensions(ValueError):
    pass


def loads(text: str, path: str | None = None) -> Any:
    try:
        return json.loads(text, parse_float=str)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, e.lineno, e.colno, path) from None


def load_file(path) -> Any:
    path = Path(path)
    return loads(path.read_text(), str(path))


# scalars ------------------------------------------------------------------------

def num(x, exact: bool):
    if isinstance(x, bool) or x is None:
        raise ParseError(f"expected a number, got {x!r}")
    try:
        return la.to_exact(x) if exact else float(la.to_exact(x)) if isinstance(x, str) else float(x)
    except (ValueError, TypeError, ZeroDivisionError):
        raise ParseError(f"not a number: {x!r}") from None


def array(data, exact: bool, ndim: int | None = None) -> np.ndarray:
    arr = np.array(data, dtype=object)
    if ndim is not None and arr.ndim != ndim:
        raise InvalidDimensions(f"expected a {ndim}-dimensional array, got shape {arr.shape}")
    out = np.empty(arr.shape, dtype=object if exact else float)
    for idx in np.ndindex(*arr.shape):
        out[idx] = num(arr[idx], exact)
    return out


def enc(x):
    """JSON value for a scalar or array."""
    if isinstance(x, np.ndarray):
        return [enc(v) for v in x]
    if la.is_exact_scalar(x) and not isinstance(x, str):
        return str(la.to_exact(x))
    if isinstance(x, (float, np.floating)):
        return float(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    return x


# task and questions ------------------------------------------------------------------

def task_from_json(obj: dict, exact: bool = True) -> Task:
    if not isinstance(obj, dict):
        raise ParseError("a task must be a JSON object")
    if "factors" in obj and "u" not in obj:
        factors = [task_from_json(f, exact) for f in obj["factors"]]
        if not factors:
            raise InvalidDimensions("empty factor list")
        return product_task(factors)
    for key in ("states", "actions", "u"):
        if key not in obj:
            raise ParseError(f"task is missing {key!r}")
    u = array(obj["u"], exact, 2) if obj["u"] else None
    if u is None:
        raise InvalidDimensions("empty payoff matrix")
    try:
        return Task(tuple(map(str, obj["states"])), tuple(map(str, obj["actions"])), u)
    except ValueError as e:
        raise InvalidDimensions(str(e)) from None


def questions_from_json(obj: dict, task: Task) -> QuestionProfile:
    if "questions" in obj:
        obj = obj["questions"]
    if "X" not in obj:
        raise ParseError("questions need an 'X' mapping from action to matrix")
    X = obj["X"]
    missing = [a for a in task.actions if a not in X]
    if missing:
        raise InvalidDimensions(f"no question matrix for actions {missing}")
    mats = [array(X[a], task.exact, 2) for a in task.actions]
    m = int(obj.get("m", mats[0].shape[0]))
    for a, mat in zip(task.actions, mats):
        if mat.shape != (m, task.n_states):
            raise InvalidDimensions(f"question matrix for {a!r} has shape {mat.shape}, expected ({m}, {task.n_states})")
    return QuestionProfile(task.actions, np.stack(mats))


def task_to_json(task: Task, X: QuestionProfile | None = None) -> dict:
    if task.factors is not None:
        out = {"factors": [task_to_json(f) for f in task.factors]}
    else:
        out = {"states": list(task.states), "actions": list(task.actions), "u": enc(task.u)}
    if X is not None:
        out["questions"] = questions_to_json(X)
    return out


def questions_to_json(X: QuestionProfile) -> dict:
    return {"m": X.m, "X": {a: enc(X.of(a)) for a in X.actions}}


# schemes ----------------------------------------------------------------------------

def scheme_to_json(V: PaymentScheme) -> dict:
    out = {
        "name": V.name,
        "actions": list(V.actions),
        "exact": V.exact,
        "report_dim": V.report_dim,
        "quad": enc(V.quad),
        "lin": enc(V.lin),
        "const": enc(V.const),
        "report_map": None,
        "questions": None if V.questions is None else questions_to_json(V.questions),
    }
    if V.gamma is not None:
        out["report_map"] = {
            "gamma": {a: enc(V.gamma[i]) for i, a in enumerate(V.actions)},
            "kappa": {a: enc(V.kappa[i]) for i, a in enumerate(V.actions)},
        }
    return out


def scheme_from_json(obj: dict) -> PaymentScheme:
    exact = bool(obj.get("exact", True))
    actions = tuple(obj["actions"])
    quad, lin, const = array(obj["quad"], exact, 3), array(obj["lin"], exact, 3), array(obj["const"], exact, 2)
    gamma = kappa = None
    rm = obj.get("report_map")
    if rm:
        gamma = np.stack([array(rm["gamma"][a], exact, 2) for a in actions])
        kappa = np.stack([array(rm["kappa"][a], exact, 1) for a in actions])
    questions = None
    if obj.get("questions"):
        q = obj["questions"]
        mats = [array(q["X"][a], exact, 2) for a in actions]
        questions = QuestionProfile(actions, np.stack(mats))
    try:
        return PaymentScheme(actions, quad, lin, const, gamma, kappa, questions, obj.get("name", "custom"))
    except ValueError as e:
        raise InvalidDimensions(str(e)) from None


# certificates and decompositions ------------------------------------------------------

def certificate_to_json(cert: AlignmentCertificate) -> dict:
    return {
        "kind": cert.kind,
        "exact": cert.exact,
        "lam": {k: enc(np.asarray(v)) for k, v in cert.lam.items()},
        "d": {k: enc(np.asarray(v)) for k, v in cert.d.items()},
        "gamma": {a: enc(np.asarray(g)) for a, g in cert.gamma.items()},
        "kappa": {a: enc(np.asarray(k)) for a, k in cert.kappa.items()},
        "terms": cert.terms,
    }


def certificate_from_json(obj: dict) -> AlignmentCertificate:
    exact = bool(obj.get("exact", True))
    return AlignmentCertificate(
        obj["kind"],
        {k: array(v, exact, 1) for k, v in obj["lam"].items()},
        {k: array(v, exact, 2) for k, v in obj["d"].items()},
        {a: array(v, exact, 2) for a, v in obj["gamma"].items()},
        {a: array(v, exact, 1) for a, v in obj["kappa"].items()},
        {a: [list(g) for g in groups] for a, groups in obj.get("terms", {}).items()},
    )


def not_aligned_to_json(na: NotAligned) -> dict:
    return {
        "aligned": False,
        "reason": na.reason,
        "detail": na.detail,
        "actions": list(na.actions),
        "edge": None if na.edge is None else list(na.edge),
        "cycle": None if na.cycle is None else list(na.cycle),
        "product": None if na.product is None else enc(np.asarray(na.product)),
    }


def decomposition_to_json(dec: Decomposition) -> dict:
    return {"rank": dec.rank, "rows": list(dec.rows), "G": enc(dec.G), "D": enc(dec.D)}


# graph and reports -----------------------------------------------------------------

def _edge_key(e) -> str:
    return f"{e[0]}|{e[1]}"


def graph_to_json(graph: AdjacencyGraph, lengths: dict | None = None, potential: dict | None = None) -> dict:
    out = {
        "vertices": list(graph.vertices),
        "edges": [list(e) for e in graph.edges],
        "incidence": graph.incidence.tolist(),
        "blocks": [[list(e) for e in blk] for blk in graph.blocks],
        "cut_vertices": list(graph.cut_vertices),
        "components": [sorted(c) for c in graph.components],
        "mcb": [list(c) for c in graph.mcb],
        "witnesses": {_edge_key(e): {"p": enc(w.p.p), "gap": enc(w.gap)} for e, w in graph.witnesses.items()},
    }
    if lengths is not None:
        out["edge_lengths"] = {_edge_key(e): enc(np.asarray(w)) for e, w in lengths.items()}
    if potential is not None:
        out["potential"] = {a: enc(np.asarray(g)) for a, g in potential.items()}
    return out


def report_to_json(rep) -> dict:
    return {
        "verdict": rep.verdict,
        "grid_resolution": rep.grid_resolution,
        "checked": rep.checked,
        "exact": rep.exact,
        "tolerance": rep.tolerance,
        "max_report_error": rep.max_report_error,
        "truncated": rep.truncated,
        "violations": [
            {"belief": enc(np.array(v.belief, dtype=object)), "induced": sorted(v.induced),
             "optimal": sorted(v.optimal), "report_error": v.report_error}
            for v in rep.violations
        ],
    }


def _is_flat(x) -> bool:
    return isinstance(x, list) and all(not isinstance(v, (list, dict)) for v in x)


def _write(obj: Any, indent: int) -> str:
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k), ensure_ascii=False)}: {_write(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list) and obj and not _is_flat(obj):
        return "[\n" + ",\n".join(inner + _write(v, indent + 1) for v in obj) + "\n" + pad + "]"
    return json.dumps(obj, ensure_ascii=False)


def dumps(obj: Any) -> str:
    """Indented JSON with innermost arrays kept on one line."""
    return _write(obj, 0) + "\n"


def dump_file(obj: Any, path) -> None:
    Path(path).write_text(dumps(obj))
