"""Naive BDM on the squared-error question distorts the MCQ choice; the joint profile fixes it."""

import argparse
from dataclasses import dataclass

from elicit import QuestionProfile, Task, bdm_on_question, build_joint_bdm, find_joint_certificate
from elicit.verify import verify_incentivizable


@dataclass
class Config:
    n: int = 10
    show: int = 5


def mcq3() -> Task:
    labels = ["0", "1/2", "1"]
    return Task.from_rows(labels, labels, [[1, 0, 0], [0, 1, 0], [0, 0, 1]])


def run(cfg: Config) -> None:
    t = mcq3()
    x1 = QuestionProfile.from_functions(t, [lambda a, s: (a - s) ** 2])
    rep = verify_incentivizable(bdm_on_question(t, x1), t, n=cfg.n)
    print("naive BDM on (a-θ)²:", rep.summary())
    for v in rep.violations[:cfg.show]:
        print("  belief", tuple(map(str, v.belief)), "induces", sorted(v.induced), "optimal", sorted(v.optimal))

    joint = QuestionProfile.from_functions(t, [lambda a, s: (a - s) ** 2, lambda a, s: s ** 2])
    cert = find_joint_certificate(t, joint)
    rep = verify_incentivizable(build_joint_bdm(t, joint, cert), t, joint, n=cfg.n)
    print("joint BDM on ((a-θ)², θ²):", rep.summary())


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=Config.n, help="grid resolution")
    p.add_argument("--show", type=int, default=Config.show, help="violations to list")
    run(Config(**vars(p.parse_args())))


if __name__ == "__main__":
    main()
