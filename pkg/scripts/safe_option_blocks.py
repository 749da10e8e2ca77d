"""A safe option splits the adjacency graph into blocks; blockwise alignment checks each separately."""

import argparse
from dataclasses import dataclass
from fractions import Fraction

from elicit import QuestionProfile, Task, build_graph
from elicit.alignment import NotAligned, align
from elicit.cli import describe_graph


@dataclass
class Config:
    r: str = "3/5"
    kind: str = "blockwise"


def safe_option_task(r) -> Task:
    u = [[1, r, 0, 0], [r, 1, 0, 0], [r, r, r, r], [0, 0, 1, r], [0, 0, r, 1]]
    return Task.from_rows(["a1", "a2", "b1", "b2"], ["a1", "a2", "o", "b1", "b2"], u)


def run(cfg: Config) -> None:
    r = Fraction(cfg.r)
    if not 0 < r < 1:
        raise SystemExit("r must lie strictly between 0 and 1")
    t = safe_option_task(r)
    g = build_graph(t)
    for line in describe_graph(t, g, 1):
        print(line)
    res = align(t, QuestionProfile.single(t, t.u), cfg.kind, g)
    if isinstance(res, NotAligned):
        print(f"{cfg.kind} alignment of X = u: not aligned ({res.reason})")
    else:
        print(f"{cfg.kind} alignment of X = u: aligned")
        for k, v in res.lam.items():
            print(f"  λ[{k}] = {[str(x) for x in v]}")


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--r", default=Config.r, help="partial credit, a fraction in (0, 1)")
    p.add_argument("--kind", default=Config.kind, choices=["joint", "blockwise", "individual"])
    run(Config(**vars(p.parse_args())))


if __name__ == "__main__":
    main()
