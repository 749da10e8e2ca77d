"""CSR on random tasks and questions: every grid belief induces an optimal action and a truthful report."""

import argparse
import time
from dataclasses import dataclass

import numpy as np

from elicit import Task, build_csr
from elicit import linalg as la
from elicit.verify import verify_incentivizable


@dataclass
class Config:
    trials: int = 100
    max_actions: int = 4
    max_states: int = 5
    n: int = 20
    seed: int = 0


def run(cfg: Config) -> int:
    rng = np.random.default_rng(cfg.seed)
    failures = 0
    t0 = time.perf_counter()
    for k in range(cfg.trials):
        nA = int(rng.integers(1, cfg.max_actions + 1))
        S = int(rng.integers(2, cfg.max_states + 1))
        t = Task([f"s{j}" for j in range(S)], [f"a{i}" for i in range(nA)],
                 la.random_rational(rng, (nA, S), -5, 5, 4))
        Y = la.random_rational(rng, (nA, S), -5, 5, 4)
        rep = verify_incentivizable(build_csr(t, Y), t, n=cfg.n)
        if not rep.passed:
            failures += 1
            print(f"trial {k}: {rep.summary()}")
    print(f"{cfg.trials} trials, {failures} failing, {time.perf_counter() - t0:.1f}s")
    return failures


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    for name, default in vars(Config()).items():
        p.add_argument("--" + name.replace("_", "-"), type=int, default=default)
    raise SystemExit(1 if run(Config(**vars(p.parse_args()))) else 0)


if __name__ == "__main__":
    main()
