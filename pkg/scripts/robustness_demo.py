"""Perturbation test: an aligned profile stays sound, a misaligned one breaks."""

import argparse
from dataclasses import dataclass

import numpy as np

from elicit import QuestionProfile, Task
from elicit import linalg as la
from elicit.verify import verify_robust


@dataclass
class Config:
    trials: int = 20
    n: int = 8
    seed: int = 0


def five_state_task() -> Task:
    vals = [str(i) for i in range(5)]
    return Task.from_rows(vals, vals, [[int(i == j) for j in range(5)] for i in range(5)])


def run(cfg: Config) -> None:
    t = five_state_task()
    rng = np.random.default_rng(cfg.seed)
    scale = {a: la.as_array([[int(rng.integers(1, 5))]], True) for a in t.actions}
    aligned = QuestionProfile(t.actions, np.stack([scale[a] @ t.row(a)[None, :] for a in t.actions]))
    # question rows borrowed from the wrong action break every edge
    shifted = QuestionProfile(t.actions, np.stack([t.u[None, (i + 2) % 5] for i in range(5)]))
    for name, X, mu in (("aligned", aligned, scale), ("misaligned", shifted, None)):
        rep = verify_robust(t, X, mu, trials=cfg.trials, n=cfg.n, seed=cfg.seed)
        print(f"{name}: {rep.failures}/{len(rep.trials)} perturbed trials fail")


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    for name, default in vars(Config()).items():
        p.add_argument("--" + name, type=int, default=default)
    run(Config(**vars(p.parse_args())))


if __name__ == "__main__":
    main()
