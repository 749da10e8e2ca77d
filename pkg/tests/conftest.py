from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from elicit import linalg as la
from elicit.linalg import mpq
from elicit.model import QuestionProfile, Task

DATA = Path(__file__).resolve().parents[1] / "data"

settings.register_profile(
    "default", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")

HALF = mpq(1, 2)
MCQ_VALUES = (mpq(0), HALF, mpq(1))


def mcq(n: int = 3) -> Task:
    labels = ["0", "1/2", "1"] if n == 3 else [str(i) for i in range(n)]
    return Task.from_rows(labels, labels, [[int(i == j) for j in range(n)] for i in range(n)])


def x1_profile(task: Task) -> QuestionProfile:
    return QuestionProfile.from_functions(task, [lambda a, t: (a - t) ** 2])


def joint_profile(task: Task) -> QuestionProfile:
    return QuestionProfile.from_functions(task, [lambda a, t: (a - t) ** 2, lambda a, t: t ** 2])


def safe_option() -> Task:
    r = mpq(3, 5)
    u = [[1, r, 0, 0], [r, 1, 0, 0], [r, r, r, r], [0, 0, 1, r], [0, 0, r, 1]]
    return Task.from_rows(["a1", "a2", "b1", "b2"], ["a1", "a2", "o", "b1", "b2"], u)


def random_task(rng: np.random.Generator, n_actions: int, n_states: int, exact: bool = True) -> Task:
    u = la.random_rational(rng, (n_actions, n_states), -5, 5, 4)
    if not exact:
        u = la.to_float(u)
    return Task([f"s{j}" for j in range(n_states)], [f"a{i}" for i in range(n_actions)], u)


def random_invertible(rng: np.random.Generator, m: int, exact: bool = True) -> np.ndarray:
    while True:
        g = la.random_rational(rng, (m, m), -4, 4, 3)
        if la.is_invertible(g):
            return g if exact else la.to_float(g)


@pytest.fixture
def mcq3() -> Task:
    return mcq(3)


@pytest.fixture
def t4() -> Task:
    return safe_option()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
