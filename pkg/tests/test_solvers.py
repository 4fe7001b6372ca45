import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sciss.exceptions import ConvergenceError, SingularMatrixError
from sciss.solvers import SolverConfig, finite_diff_grad, newton_root, solve_linear


def random_spd(rng, n, lo=0.5, hi=2.0):
    basis, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return basis @ np.diag(rng.uniform(lo, hi, n)) @ basis.T


class TestSolveLinear:
    def test_identity(self):
        x = solve_linear(np.eye(3), np.array([1.0, 2.0, 3.0]))
        np.testing.assert_array_equal(x, [1.0, 2.0, 3.0])

    def test_diagonal(self):
        x = solve_linear(np.diag([2.0, 4.0]), np.array([2.0, 8.0]))
        np.testing.assert_allclose(x, [1.0, 2.0])

    def test_random_spd_residual(self, rng):
        a = random_spd(rng, 5)
        b = rng.standard_normal(5)
        x = solve_linear(a, b)
        assert np.max(np.abs(a @ x - b)) <= 1e-8 * (1 + np.max(np.abs(b)))

    def test_matrix_rhs(self, rng):
        a = random_spd(rng, 4)
        inv = solve_linear(a, np.eye(4))
        np.testing.assert_allclose(a @ inv, np.eye(4), atol=1e-9)

    def test_singular_raises(self):
        a = np.array([[1.0, 2.0], [2.0, 4.0]])
        with pytest.raises(SingularMatrixError):
            solve_linear(a, np.ones(2))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(min_value=1, max_value=64), st.integers(min_value=0, max_value=2 ** 31))
    def test_spd_up_to_dim_64(self, n, seed):
        rng = np.random.default_rng(seed)
        a = random_spd(rng, n)
        b = rng.standard_normal(n)
        x = solve_linear(a, b)
        assert np.max(np.abs(a @ x - b)) <= 1e-8 * (1 + np.max(np.abs(b)))


class TestNewtonRoot:
    def test_scalar_shift(self):
        root = newton_root(lambda x: x - 3.0, lambda x: np.eye(1), np.zeros(1))
        np.testing.assert_allclose(root, [3.0])

    def test_quadratic_matches_linear_solve(self, rng):
        a = random_spd(rng, 4)
        b = rng.standard_normal(4)
        direct = solve_linear(a, b)
        root = newton_root(lambda x: a @ x - b, lambda x: a, np.zeros(4))
        np.testing.assert_allclose(root, direct, atol=1e-8)

    def test_quadratic_one_iteration(self, rng):
        a = random_spd(rng, 3)
        b = rng.standard_normal(3)
        calls = []

        def f(x):
            calls.append(x.copy())
            return a @ x - b

        newton_root(f, lambda x: a, np.zeros(3))
        # initial eval + the single accepted step's eval
        assert len(calls) == 2

    def test_separable_logistic_flagged(self):
        # two-point perfectly separated sample: the score never has an
        # interior root, so the solver must not return quietly with a
        # moderate estimate
        x = np.array([[1.0, -1.0], [1.0, 1.0]])
        y = np.array([0.0, 1.0])

        def score(beta):
            p = 1.0 / (1.0 + np.exp(-(x @ beta)))
            return x.T @ (y - p)

        def jac(beta):
            p = 1.0 / (1.0 + np.exp(-(x @ beta)))
            return -x.T @ ((p * (1 - p))[:, None] * x)

        try:
            root = newton_root(score, jac, np.zeros(2), SolverConfig(max_iters=200))
        except (ConvergenceError, SingularMatrixError):
            return
        assert np.max(np.abs(root)) > 10.0  # diverging norm is the flag

    def test_max_iters_raises(self):
        cfg = SolverConfig(max_iters=3, grad_tol=1e-14)
        with pytest.raises(ConvergenceError):
            newton_root(lambda x: np.tanh(x) + 1.5, lambda x: np.eye(1) / np.cosh(x) ** 2,
                        np.zeros(1), cfg)


class TestFiniteDiffGrad:
    def test_square(self):
        grad = finite_diff_grad(lambda v: v[0] ** 2, np.array([3.0]))
        np.testing.assert_allclose(grad, [6.0], atol=1e-4)

    def test_sum_of_entries(self):
        grad = finite_diff_grad(lambda v: v.sum(), np.arange(4.0))
        np.testing.assert_allclose(grad, np.ones(4), atol=1e-9)

    def test_linear_function_exact(self, rng):
        coef = rng.standard_normal(5)
        x = rng.standard_normal(5)
        grad = finite_diff_grad(lambda v: coef @ v, x)
        np.testing.assert_allclose(grad, coef, atol=1e-9)
