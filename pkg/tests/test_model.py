import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from elicit import linalg as la
from elicit.linalg import mpq
from elicit.model import (
    Belief,
    PaymentScheme,
    QuestionProfile,
    Task,
    affine_rescale,
    delta,
    evaluate_payment,
    expected_value,
    product_task,
    project_bar,
    task_optimal_actions,
)
from elicit.mechanisms import build_bdm, build_csr, induced_actions

from conftest import mcq, random_task, safe_option, x1_profile

P_MCQ = Belief.of([mpq(3, 10), mpq(3, 5), mpq(1, 10)])

rationals = st.fractions(min_value=-10, max_value=10, max_denominator=12).map(mpq)


def vec(values):
    return la.as_array(values, True)


class TestTask:
    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            Task.from_rows(["x", "y"], ["a"], [[1, 2, 3]])

    def test_needs_two_states(self):
        with pytest.raises(ValueError):
            Task.from_rows(["x"], ["a", "b"], [[1], [2]])

    def test_duplicate_labels(self):
        with pytest.raises(ValueError, match="unique"):
            Task.from_rows(["x", "x"], ["a"], [[1, 2]])

    def test_non_finite(self):
        with pytest.raises(ValueError, match="finite"):
            Task.from_rows(["x", "y"], ["a"], [[1.0, np.inf]], exact=False)

    def test_single_action_allowed(self):
        t = Task.from_rows(["x", "y"], ["a"], [[1, 2]])
        assert task_optimal_actions(t, Belief.uniform(2)) == {"a"}

    def test_unknown_action(self, mcq3):
        with pytest.raises(KeyError):
            mcq3.index("7")

    def test_backend_switch(self, mcq3):
        f = mcq3.with_backend(False)
        assert not f.exact and f.u.dtype == float
        assert f.with_backend(True).exact

    def test_immutable(self, mcq3):
        with pytest.raises(ValueError):
            mcq3.u[0, 0] = 5


class TestBelief:
    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            Belief.of([mpq(3, 2), mpq(-1, 2)])

    def test_rejects_bad_sum_exact(self):
        with pytest.raises(ValueError):
            Belief.of([mpq(1, 3), mpq(1, 3)])

    def test_float_tolerance(self):
        Belief.of([0.1, 0.2, 0.7 + 1e-14], exact=False)
        with pytest.raises(ValueError):
            Belief.of([0.1, 0.2, 0.71], exact=False)


class TestProjectBar:
    def test_constant(self):
        assert list(project_bar(vec([1, 1, 1]))) == [0, 0, 0]

    def test_unit(self):
        assert list(project_bar(vec([1, 0, 0]))) == [mpq(2, 3), mpq(-1, 3), mpq(-1, 3)]

    def test_safe_option_row(self):
        out = project_bar(safe_option().row("a1"))
        assert list(out) == [mpq(3, 5), mpq(1, 5), mpq(-2, 5), mpq(-2, 5)]

    @given(st.lists(rationals, min_size=2, max_size=6))
    def test_idempotent_and_centered(self, xs):
        v = vec(xs)
        p = project_bar(v)
        assert sum(p) == 0
        assert list(project_bar(p)) == list(p)

    @given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=6))
    def test_float_sum_zero(self, xs):
        assert abs(project_bar(np.array(xs)).sum()) <= 1e-12 * max(1.0, max(map(abs, xs))) * len(xs)

    @given(st.lists(rationals, min_size=3, max_size=3), st.lists(rationals, min_size=3, max_size=3), rationals)
    def test_linear(self, xs, ys, c):
        x, y = vec(xs), vec(ys)
        assert list(project_bar(x * c + y)) == list(project_bar(x) * c + project_bar(y))


class TestDelta:
    def test_mcq(self, mcq3):
        assert list(delta(mcq3, "0", "1/2")) == [-1, 1, 0]

    def test_safe_option(self, t4):
        # raw row difference is (-2/5, 0, 3/5, 3/5); centering removes its mean 1/5
        raw = t4.row("o") - t4.row("a1")
        assert list(raw) == [mpq(-2, 5), mpq(0), mpq(3, 5), mpq(3, 5)]
        assert list(delta(t4, "a1", "o")) == [mpq(-3, 5), mpq(-1, 5), mpq(2, 5), mpq(2, 5)]

    def test_antisymmetric(self, t4):
        for a in t4.actions:
            for b in t4.actions:
                assert list(delta(t4, a, b) + delta(t4, b, a)) == [0] * 4

    def test_unknown_label(self, mcq3):
        with pytest.raises(KeyError):
            delta(mcq3, "0", "z")


class TestExpectedValue:
    def test_uniform_constant(self):
        assert expected_value(Belief.uniform(4), vec([7, 7, 7, 7])) == 7

    def test_x1_rows(self, mcq3):
        X = x1_profile(mcq3)
        assert expected_value(P_MCQ, X.of("0")[0]) == mpq(1, 4)
        assert expected_value(P_MCQ, X.of("1/2")[0]) == mpq(1, 10)
        assert expected_value(P_MCQ, X.of("1")[0]) == mpq(9, 20)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            expected_value(Belief.uniform(3), vec([1, 2]))


class TestTaskOptimal:
    def test_single_action(self):
        t = Task.from_rows(["x", "y"], ["only"], [[0, 1]])
        assert task_optimal_actions(t, Belief.uniform(2)) == {"only"}

    def test_mcq(self, mcq3):
        assert task_optimal_actions(mcq3, P_MCQ) == {"1/2"}

    def test_safe_option_point_mass(self, t4):
        assert task_optimal_actions(t4, Belief.of([0, 0, 1, 0])) == {"b1"}

    @given(st.integers(0, 10_000), st.lists(rationals, min_size=3, max_size=3))
    def test_invariant_to_state_shift(self, seed, shift):
        rng = np.random.default_rng(seed)
        t = random_task(rng, 4, 3)
        shifted = Task(t.states, t.actions, t.u + vec(shift)[None, :])
        w = la.random_rational(rng, 3, 1, 9, 1)
        p = Belief(w / sum(w))
        assert task_optimal_actions(t, p) == task_optimal_actions(shifted, p)


class TestQuestionProfile:
    def test_missing_action(self, mcq3):
        with pytest.raises(ValueError, match="no question"):
            QuestionProfile.from_mapping(mcq3, {"0": [[1, 2, 3]]})

    def test_shape(self, mcq3):
        with pytest.raises(ValueError, match="shape"):
            QuestionProfile.from_mapping(mcq3, {a: [[1, 2]] for a in mcq3.actions})

    def test_from_functions(self, mcq3):
        X = x1_profile(mcq3)
        assert X.m == 1
        assert list(X.of("1")[0]) == [1, mpq(1, 4), 0]


class TestEvaluatePayment:
    def test_zero_scheme(self, mcq3):
        z = la.zeros((3, 3, 1), True)
        V = PaymentScheme(mcq3.actions, z, z, la.zeros((3, 3), True))
        assert evaluate_payment(V, vec([5]), "0", 1) == 0

    def test_csr_closed_form(self, rng):
        t = random_task(rng, 3, 3)
        Y = la.random_rational(rng, (3, 3), -3, 3, 2)
        V = build_csr(t, Y)
        r = la.random_rational(rng, 3, -3, 3, 2)
        for a in t.actions:
            for s in range(3):
                naive = -sum((Y[j, s] - r[j]) ** 2 for j in range(3)) + t.u[t.index(a), s]
                assert evaluate_payment(V, r, a, s) == naive

    def test_bdm_at_floor(self, mcq3):
        V = build_bdm(mcq3)
        L = mpq(-1)  # min payoff 0, minus 1
        for a in mcq3.actions:
            for s in mcq3.states:
                assert evaluate_payment(V, vec([L]), a, s, mcq3) == -L * L / 2

    def test_bdm_formula(self, mcq3):
        V = build_bdm(mcq3)
        r = mpq(2, 7)
        for i, a in enumerate(mcq3.actions):
            for s in range(3):
                q = mcq3.u[i, s]
                assert evaluate_payment(V, vec([r]), a, s) == q * (r + 1) - r * r / 2

    def test_report_shape(self, mcq3):
        with pytest.raises(ValueError):
            evaluate_payment(build_bdm(mcq3), vec([1, 2]), "0", 0)

    def test_state_label(self, mcq3):
        V = build_bdm(mcq3)
        assert evaluate_payment(V, vec([0]), "1", "1", mcq3) == evaluate_payment(V, vec([0]), "1", 2)

    def test_rejects_convex(self, mcq3):
        q = la.zeros((3, 3, 1), True) + 1
        with pytest.raises(ValueError, match="<= 0"):
            PaymentScheme(mcq3.actions, q, q, la.zeros((3, 3), True))


def test_concave_maximizer_matches_grid(rng):
    t = random_task(rng, 2, 3, exact=False)
    V = build_csr(t, la.to_float(la.random_rational(rng, (2, 3), -2, 2, 2)))
    p = np.array([0.2, 0.5, 0.3])
    from elicit.mechanisms import optimal_report

    r = optimal_report(V, t, p, "a0")
    # coarse grid, then a fine grid around the coarse winner
    center, step = np.zeros(2), 1.0
    for _ in range(6):
        xs = center[0] + step * np.arange(-10, 11)
        ys = center[1] + step * np.arange(-10, 11)
        best = max((sum(p[s] * evaluate_payment(V, np.array([x, y]), "a0", s) for s in range(3)), x, y)
                   for x in xs for y in ys)
        center, step = np.array(best[1:]), step / 10
    assert np.max(np.abs(center - r)) <= 1e-5


def test_affine_rescale_keeps_argmax(mcq3):
    V = build_bdm(mcq3)
    W = affine_rescale(V, 0, 1, mcq3)
    for p in ([mpq(1, 5), mpq(1, 5), mpq(3, 5)], [mpq(1, 2), mpq(1, 4), mpq(1, 4)]):
        b = Belief.of(p)
        assert induced_actions(V, mcq3, b) == induced_actions(W, mcq3, b)
    vals = [evaluate_payment(W, vec([r]), a, s) for a in mcq3.actions for s in range(3)
            for r in (mpq(-1), mpq(0), mpq(1))]
    assert min(vals) >= 0 and max(vals) <= 1


class TestProduct:
    def test_single_factor_identity(self, mcq3):
        assert product_task([mcq3]) is mcq3

    def test_empty(self):
        with pytest.raises(ValueError):
            product_task([])

    def test_two_mcq(self):
        t = product_task([mcq(2), mcq(2)])
        assert t.n_actions == 4 and t.n_states == 4
        assert t.factors is not None and len(t.factors) == 2
        i, j = t.index("0,1"), t.state_index("0,1")
        assert t.u[i, j] == 2
