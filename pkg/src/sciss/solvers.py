"""Small dense linear algebra and safeguarded root finding.

Everything here is sized for node-wise regression problems (a few dozen
coefficients at most), so plain partial-pivot elimination and full Newton
steps are both adequate and easy to reason about.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConvergenceError, DimensionError, SingularMatrixError

PIVOT_TOL = 1e-12


@dataclass(frozen=True)
class SolverConfig:
    """Settings for :func:`newton_root`."""

    max_iters: int = 100
    grad_tol: float = 1e-8
    step_halvings: int = 30

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")


def solve_linear(a, b):
    """Solve ``a @ x = b`` by Gaussian elimination with partial pivoting.

    ``b`` may be a vector or a matrix of stacked right-hand sides.  Raises
    :class:`SingularMatrixError` when a pivot magnitude drops below
    ``PIVOT_TOL``, which in this package signals a hessian that is not
    positive definite.
    """
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"matrix must be square, got {a.shape}")
    n = a.shape[0]
    vector_rhs = b.ndim == 1
    rhs = b[:, None] if vector_rhs else b
    if rhs.shape[0] != n:
        raise DimensionError(f"rhs length {rhs.shape[0]} != matrix size {n}")

    x = _eliminate(a.copy(), rhs.copy())
    # One refinement pass keeps the residual at the advertised tolerance
    # even for moderately ill-conditioned systems.
    resid = rhs - a @ x
    scale = 1.0 + np.max(np.abs(rhs))
    if np.max(np.abs(resid)) > 1e-10 * scale:
        x = x + _eliminate(a.copy(), resid)
    return x[:, 0] if vector_rhs else x


def _eliminate(a, rhs):
    n = a.shape[0]
    for k in range(n):
        pivot_row = k + int(np.argmax(np.abs(a[k:, k])))
        if abs(a[pivot_row, k]) < PIVOT_TOL:
            raise SingularMatrixError(f"pivot {a[pivot_row, k]:.3e} below threshold at column {k}")
        if pivot_row != k:
            a[[k, pivot_row]] = a[[pivot_row, k]]
            rhs[[k, pivot_row]] = rhs[[pivot_row, k]]
        factors = a[k + 1:, k] / a[k, k]
        a[k + 1:, k:] -= factors[:, None] * a[k, k:]
        rhs[k + 1:] -= factors[:, None] * rhs[k]
    x = np.empty_like(rhs)
    for k in range(n - 1, -1, -1):
        x[k] = (rhs[k] - a[k, k + 1:] @ x[k + 1:]) / a[k, k]
    return x


def inverse(a):
    """Matrix inverse routed through :func:`solve_linear`."""
    a = np.asarray(a, dtype=float)
    return solve_linear(a, np.eye(a.shape[0]))


def newton_root(f, jacobian, x0, cfg: SolverConfig | None = None):
    """Find ``x`` with ``f(x) = 0`` by Newton iteration with step halving.

    A full Newton step is halved until the sup-norm of ``f`` decreases;
    failure to decrease within ``cfg.step_halvings`` halvings, or to reach
    ``cfg.grad_tol`` within ``cfg.max_iters`` iterations, raises
    :class:`ConvergenceError`.
    """
    cfg = cfg or SolverConfig()
    x = np.atleast_1d(np.array(x0, dtype=float))
    fx = np.atleast_1d(np.asarray(f(x), dtype=float))
    if fx.shape != x.shape:
        raise DimensionError(f"f returns shape {fx.shape} for input shape {x.shape}")
    norm = np.max(np.abs(fx))
    for _ in range(cfg.max_iters):
        if norm <= cfg.grad_tol:
            return x
        jac = np.atleast_2d(np.asarray(jacobian(x), dtype=float))
        step = solve_linear(jac, -fx)
        scale = 1.0
        for _ in range(cfg.step_halvings):
            cand = x + scale * step
            f_cand = np.atleast_1d(np.asarray(f(cand), dtype=float))
            cand_norm = np.max(np.abs(f_cand))
            if cand_norm < norm:
                break
            scale *= 0.5
        else:
            raise ConvergenceError(
                f"no decrease of ||f|| along Newton direction (||f||={norm:.3e})"
            )
        x, fx, norm = cand, f_cand, cand_norm
    if norm <= cfg.grad_tol:
        return x
    raise ConvergenceError(f"max_iters reached with ||f||={norm:.3e}")


def finite_diff_grad(f, x, h=1e-6):
    """Central-difference gradient of a scalar function."""
    x = np.atleast_1d(np.array(x, dtype=float))
    grad = np.empty_like(x)
    for i in range(x.size):
        bump = np.zeros_like(x)
        bump[i] = h
        grad[i] = (f(x + bump) - f(x - bump)) / (2.0 * h)
    return grad
