"""Command-line front end.

Exit codes:
  0  success
  1  verification failed
  2  usage or parse error
  3  invalid dimensions or inconsistent input
  4  questions not aligned
  5  mechanism unavailable for the requested kind
  6  belief grid too large
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io
from .alignment import (
    AlignmentCertificate,
    NotAligned,
    RankExceeded,
    align,
    auto_kind,
    check_m_decomposable,
    rank_decompose,
    supplemental_profile,
    verify_certificate,
)
from .gauge import (
    build_potential,
    characterization_regime,
    check_assumption_cycle_length,
    check_assumption_independence,
    compute_edge_lengths,
    Potential,
)
from .graph import build_graph, to_dot
from .mechanisms import (
    build_belief_revelation,
    build_bdm,
    build_coarse_csr,
    build_csr,
    build_joint_bdm,
)
from .verify import GridTooLarge, verify_incentivizable

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_DIMS, EXIT_NOT_ALIGNED, EXIT_NO_MECH, EXIT_GRID = range(7)


class CliError(Exception):
    def __init__(self, code: int, msg: str):
        super().__init__(msg)
        self.code = code


# loading -------------------------------------------------------------------------

def _load_task(args):
    obj = io.load_file(args.task)
    task = io.task_from_json(obj, exact=args.backend == "rational")
    return task, obj


def _load_questions(args, task, task_obj, required=True):
    if getattr(args, "questions", None):
        return io.questions_from_json(io.load_file(args.questions), task)
    if "questions" in task_obj:
        return io.questions_from_json(task_obj, task)
    if required:
        raise CliError(EXIT_USAGE, "no questions: pass --questions or embed them in the task file")
    return None


def _write_json(path, obj):
    if path:
        io.dump_file(obj, path)


# analyze ---------------------------------------------------------------------------

def _plural(n: int, word: str) -> str:
    return f"{n} {word}" + ("" if n == 1 else "s")


def describe_graph(task, graph, m: int) -> list[str]:
    lines = []
    E, mcb = len(graph.edges), graph.mcb
    if graph.is_complete() and len(graph.vertices) > 2:
        head = "complete graph"
    elif graph.is_tree():
        head = _plural(E, "edge") + ", tree"
    else:
        head = _plural(E, "edge")
    head += ", " + _plural(len(graph.blocks), "block")
    if graph.cut_vertices:
        head += ", cut vertex " + ", ".join(graph.cut_vertices)
    if len(graph.components) > 1:
        head += f", {len(graph.components)} components"
    lines.append(head)
    if not mcb:
        lines.append("no cycles")
    else:
        sizes = sorted({len(c) for c in mcb})
        names = {3: "triangle", 4: "square"}
        parts = [_plural(sum(len(c) == s for c in mcb), names.get(s, f"{s}-cycle")) for s in sizes]
        lines.append("MCB: " + ", ".join(parts))
        longest = max(len(c) for c in mcb)
        ok1 = all(check_assumption_cycle_length(mcb, task.n_states, m))
        lines.append(f"Assumption 1: requires |Θ|≥m+{longest} "
                     f"(|Θ|={task.n_states}, m={m}: {'holds' if ok1 else 'fails'})")
        ok2 = check_assumption_independence(task, mcb)
        lines.append(f"Assumption 2: {sum(ok2)}/{len(ok2)} basis cycles have independent payoff differences")
    lines.append(f"characterization: {characterization_regime(task.n_states, m)} (|Θ|={task.n_states}, m={m})")
    return lines


def cmd_analyze(args) -> int:
    task, obj = _load_task(args)
    X = _load_questions(args, task, obj, required=False)
    m = args.m or (X.m if X is not None else 1)
    graph = build_graph(task)
    print(f"task: {task.n_actions} actions, {task.n_states} states")
    for line in describe_graph(task, graph, m):
        print(line)
    print("edges: " + (", ".join(f"{a}-{b}" for a, b in graph.edges) or "none"))
    for z, blk in enumerate(graph.blocks):
        verts = sorted({v for e in blk for v in e}, key=task.index)
        print(f"block B{z}: {', '.join(verts)}")
    for c in graph.mcb:
        print("cycle: " + " -> ".join(c))
    lengths = potential = None
    if X is not None:
        el = compute_edge_lengths(task, X, graph)
        lengths = el.lengths
        print(f"edge lengths: {len(el.lengths)} defined, {len(el.deficient)} rank-deficient, "
              f"{len(el.mismatched)} mismatched")
        if el.complete and len(graph.components) == 1 and graph.edges:
            pot = build_potential(graph, el.lengths)
            if isinstance(pot, Potential):
                potential = pot.gamma
                print("potential: exists")
            else:
                print(f"potential: obstructed by cycle {' -> '.join(pot.cycle)}")
    if args.dot:
        Path(args.dot).write_text(to_dot(graph))
    _write_json(args.json_out, io.graph_to_json(graph, lengths, potential))
    return EXIT_OK


# align -----------------------------------------------------------------------------

def _print_alignment(result) -> None:
    if isinstance(result, NotAligned):
        print(f"not aligned ({result.reason}): {result.detail}")
        if result.edge:
            print(f"witness edge: {result.edge[0]} - {result.edge[1]}")
        if result.cycle:
            print(f"witness cycle: {' -> '.join(result.cycle)}")
        if result.actions and not result.edge and not result.cycle:
            print("witness actions: " + ", ".join(result.actions))
    else:
        print(f"aligned ({result.kind}), m={result.m}")
        for k, v in result.lam.items():
            print(f"  λ[{k}] = {io.enc(np.asarray(v))}")


def _align(task, X, kind, graph, seed):
    kind = auto_kind(task, graph) if kind == "auto" else kind
    try:
        return kind, align(task, X, kind, graph, seed)
    except ValueError as e:
        raise CliError(EXIT_USAGE, str(e)) from None


def cmd_align(args) -> int:
    task, obj = _load_task(args)
    X = _load_questions(args, task, obj)
    if args.kind == "decompose":
        return _decompose(args, task, X)
    graph = build_graph(task)
    kind, res = _align(task, X, args.kind, graph, args.seed)
    _print_alignment(res)
    if isinstance(res, NotAligned):
        _write_json(args.json_out, io.not_aligned_to_json(res))
        return EXIT_NOT_ALIGNED
    chk = verify_certificate(task, X, res)
    print(f"certificate check: {'ok' if chk.ok else 'FAILED'} (residual {io.enc(chk.residual)})")
    _write_json(args.json_out, io.certificate_to_json(res))
    return EXIT_OK


def _single(X):
    if X.m != 1:
        raise CliError(EXIT_DIMS, f"expected a single question, got m={X.m}")
    return X.question(0)


def _decompose(args, task, X) -> int:
    Y = _single(X)
    r = check_m_decomposable(Y)
    m = args.m or r
    print(f"rank(Y) = {r}")
    try:
        dec = rank_decompose(Y, m)
    except RankExceeded as e:
        print(f"not {m}-decomposable: rank {e.rank} > m")
        return EXIT_NOT_ALIGNED
    out = io.decomposition_to_json(dec)
    _write_json(args.json_out, out)
    print(f"{m}-decomposable: Y = G D with basis rows {', '.join(task.actions[i] for i in dec.rows)}")
    return EXIT_OK


def cmd_decompose(args) -> int:
    task, obj = _load_task(args)
    X = _load_questions(args, task, obj)
    Y = _single(X)
    P, cert = supplemental_profile(task, Y, args.strategy)
    print(f"rank(Y) = {check_m_decomposable(Y)}; supplemented profile has m={P.m} ({args.strategy})")
    chk = verify_certificate(task, P, cert)
    print(f"certificate check: {'ok' if chk.ok else 'FAILED'}")
    _write_json(args.json_out, {"task": io.task_to_json(task, P), "certificate": io.certificate_to_json(cert)})
    return EXIT_OK


# mechanism -----------------------------------------------------------------------------

def _parse_partition(text: str):
    return [[a.strip() for a in cell.split(",") if a.strip()] for cell in text.split(";")]


def cmd_mechanism(args) -> int:
    task, obj = _load_task(args)
    kind = args.scheme_kind
    if kind == "br":
        V = build_belief_revelation(task)
    elif kind == "bdm":
        d = None if args.d is None else io.array(io.loads(args.d), task.exact, 1)
        V = build_bdm(task, d, args.mode)
    else:
        X = _load_questions(args, task, obj)
        if kind == "csr":
            V = build_csr(task, X)
        elif kind == "coarse-csr":
            if not args.partition:
                raise CliError(EXIT_USAGE, "coarse-csr needs --partition 'a,b;c'")
            V = build_coarse_csr(task, X, _parse_partition(args.partition))
        else:
            if args.cert:
                cert = io.certificate_from_json(io.load_file(args.cert))
            else:
                graph = build_graph(task)
                _, cert = _align(task, X, "joint", graph, args.seed)
                if isinstance(cert, NotAligned):
                    _print_alignment(cert)
                    return EXIT_NOT_ALIGNED
            if cert.kind not in ("joint", "individual"):
                raise CliError(EXIT_NO_MECH, f"no mechanism is built for {cert.kind} certificates")
            V = build_joint_bdm(task, X, cert)
    print(f"built {V.name}: report dimension {V.report_dim}")
    _write_json(args.json_out, io.scheme_to_json(V))
    return EXIT_OK


# verify ----------------------------------------------------------------------------------

def cmd_verify(args) -> int:
    task, obj = _load_task(args)
    V = io.scheme_from_json(io.load_file(args.scheme))
    if V.exact != task.exact:
        task = task.with_backend(V.exact)
    X = _load_questions(args, task, obj, required=False) if args.questions else None
    if X is not None and X.exact != V.exact:
        X = X.with_backend(V.exact)
    rep = verify_incentivizable(V, task, X, args.n)
    _print_report(rep)
    _write_json(args.json_out, io.report_to_json(rep))
    return EXIT_OK if rep.passed else EXIT_VERIFY


def _print_report(rep, limit: int = 10) -> None:
    print(rep.summary())
    if rep.violations:
        print(f"{'belief':<40} {'induced':<16} {'optimal':<16} report error")
        for v in rep.violations[:limit]:
            b = "(" + ", ".join(str(x) for x in v.belief) + ")"
            print(f"{b:<40} {','.join(sorted(v.induced)):<16} {','.join(sorted(v.optimal)):<16} {v.report_error:.3g}")
        if len(rep.violations) > limit:
            print(f"... {len(rep.violations) - limit} more")


# pipeline ----------------------------------------------------------------------------------

def cmd_pipeline(args) -> int:
    task, obj = _load_task(args)
    X = _load_questions(args, task, obj)
    out = Path(args.out_dir) if args.out_dir else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    graph = build_graph(task)
    for line in describe_graph(task, graph, X.m):
        print(line)
    if out:
        io.dump_file(io.graph_to_json(graph), out / "graph.json")
    kind, res = _align(task, X, args.kind, graph, args.seed)
    print(f"alignment kind: {kind}")
    _print_alignment(res)
    if isinstance(res, NotAligned):
        if out:
            io.dump_file(io.not_aligned_to_json(res), out / "alignment.json")
        if args.fallback == "csr" and X.m == 1:
            print("falling back to CSR")
            V = build_csr(task, X)
        else:
            return EXIT_NOT_ALIGNED
    else:
        if out:
            io.dump_file(io.certificate_to_json(res), out / "certificate.json")
        res = _collapse(task, X, res)
        if res is None:
            if args.fallback == "csr" and X.m == 1:
                print(f"no mechanism for a {kind} certificate; falling back to CSR")
                V = build_csr(task, X)
            else:
                print(f"no mechanism is built for {kind} certificates")
                return EXIT_NO_MECH
        else:
            V = build_joint_bdm(task, X, res)
    print(f"mechanism: {V.name}")
    if out:
        io.dump_file(io.scheme_to_json(V), out / "scheme.json")
    rep = verify_incentivizable(V, task, X if V.name != "csr" else None, args.n)
    _print_report(rep)
    if out:
        io.dump_file(io.report_to_json(rep), out / "report.json")
    _write_json(args.json_out, io.report_to_json(rep))
    return EXIT_OK if rep.passed else EXIT_VERIFY


def _collapse(task, X, cert: AlignmentCertificate):
    """A joint certificate, or ``None`` when the variant needs a dedicated mechanism."""
    if cert.kind in ("joint", "individual"):
        return cert
    if len(cert.lam) == 1 and cert.kind in ("blockwise", "task-block-wise"):
        return _as_joint(cert)
    # a variant with several terms may still admit a joint certificate
    res = align(task, X, "joint", build_graph(task))
    return None if isinstance(res, NotAligned) else res


def _as_joint(cert: AlignmentCertificate) -> AlignmentCertificate:
    (k, lam), = cert.lam.items()
    return AlignmentCertificate("joint", {"*": lam}, {"*": cert.d[k]}, cert.gamma, cert.kappa)


# parser ------------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="elicit", description="Nondistortionary belief elicitation toolkit.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--backend", choices=["rational", "float"], default="rational")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--json-out", metavar="FILE")
    sub = p.add_subparsers(dest="command", required=True)

    for name in ("analyze", "graph"):
        a = sub.add_parser(name, parents=[common], help="adjacency graph, blocks, MCB and assumption checks")
        a.add_argument("task")
        a.add_argument("--questions")
        a.add_argument("--m", type=int, help="question count for the assumption checks")
        a.add_argument("--dot", metavar="FILE")
        a.set_defaults(func=cmd_analyze)

    a = sub.add_parser("align", parents=[common], help="decide an alignment variant")
    a.add_argument("task")
    a.add_argument("--questions")
    a.add_argument("--kind", default="auto",
                   choices=["auto", "joint", "individual", "taskwise", "blockwise", "task-block-wise", "decompose"])
    a.add_argument("--m", type=int)
    a.set_defaults(func=cmd_align)

    a = sub.add_parser("mechanism", parents=[common], help="build a payment scheme")
    a.add_argument("scheme_kind", choices=["csr", "bdm", "joint-bdm", "br", "coarse-csr"])
    a.add_argument("task")
    a.add_argument("--questions")
    a.add_argument("--cert", help="certificate JSON for joint-bdm")
    a.add_argument("--partition", help="coarse-csr cells, e.g. 'a,b;c'")
    a.add_argument("--d", help="BDM shift vector as a JSON list")
    a.add_argument("--mode", choices=["u-plus-d", "d"], default="u-plus-d")
    a.set_defaults(func=cmd_mechanism)

    a = sub.add_parser("verify", parents=[common], help="check a scheme on a belief grid")
    a.add_argument("--scheme", required=True)
    a.add_argument("--task", required=True)
    a.add_argument("--questions")
    a.add_argument("--n", type=int)
    a.set_defaults(func=cmd_verify)

    a = sub.add_parser("decompose", parents=[common], help="supplement a single question")
    a.add_argument("task")
    a.add_argument("--questions")
    a.add_argument("--strategy", choices=["minimal", "full"], default="minimal")
    a.set_defaults(func=cmd_decompose)

    a = sub.add_parser("pipeline", parents=[common], help="analyze, align, build and verify")
    a.add_argument("task")
    a.add_argument("--questions")
    a.add_argument("--kind", default="auto",
                   choices=["auto", "joint", "individual", "taskwise", "blockwise", "task-block-wise"])
    a.add_argument("--fallback", choices=["none", "csr"], default="none")
    a.add_argument("--n", type=int)
    a.add_argument("--out-dir")
    a.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        return args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except io.ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except io.InvalidDimensions as e:
        print(f"invalid dimensions: {e}", file=sys.stderr)
        return EXIT_DIMS
    except GridTooLarge as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_GRID
    except (OSError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_DIMS


if __name__ == "__main__":
    sys.exit(main())
