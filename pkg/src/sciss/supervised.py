"""Node-wise logistic pseudo-likelihood fitting with pairwise symmetrization.

Each node ``j`` is regressed on the stacked vector
``(y_1, ..., y_{j-1}, w', y_{j+1}, ..., y_q)``; the pairwise coefficients are
then averaged across the two node regressions that estimate them.  The
per-subject score rows and their empirical second moments drive every
variance estimate in the package, so the (j, k) -> stacked-position mapping
lives here and nowhere else.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .exceptions import ConvergenceError, DimensionError
from .ising import IsingParams
from .solvers import SolverConfig, inverse, newton_root

# Fitted logistic coefficients beyond this magnitude indicate separation;
# downstream variance formulas are invalid there, so the fit is rejected.
SEPARATION_BOUND = 30.0

# Tight tolerance keeps score-row sample means below 1e-8 after the
# hessian-inverse rescaling.
NODE_SOLVER = SolverConfig(max_iters=100, grad_tol=1e-10, step_halvings=30)


def stacked_position(j: int, k: int, q: int, d: int):
    """Position of theta_jk inside node ``j``'s stacked coefficient vector.

    For ``k == j`` this is the slice of the ``w`` block (the theta_jj
    coefficients); otherwise the scalar index of the ``y_k`` coefficient.
    """
    if not (0 <= j < q and 0 <= k < q):
        raise DimensionError(f"node indices ({j}, {k}) out of range for q={q}")
    if k == j:
        return slice(j, j + d + 1)
    return k if k < j else k + d


def stacked_design(Y, W, j: int) -> np.ndarray:
    """Design matrix of stacked vectors ``y_{\\j,w}`` for node ``j``."""
    Y = np.asarray(Y, dtype=float)
    W = np.asarray(W, dtype=float)
    return np.hstack([Y[:, :j], W, Y[:, j + 1:]])


@dataclass(frozen=True)
class NodewiseFit:
    """Raw estimate for one node plus its empirical hessian at the solution."""

    theta: np.ndarray        # (q - 1 + d + 1,)
    hessian: np.ndarray      # symmetric positive definite
    hessian_inv: np.ndarray
    n: int


def fit_node_logistic(Y, W, j: int, ridge: float = 0.0, weights=None,
                      cfg: SolverConfig | None = None) -> NodewiseFit:
    """Solve the node-``j`` estimating equation by Newton iteration.

    The equation is ``mean_i v_i (y_ij - g(theta' v_i)) - ridge * theta = 0``
    with ``v`` the stacked design row.  ``weights`` multiplies per-subject
    contributions (used by the density-ratio baseline).  A constant response
    or a solution beyond :data:`SEPARATION_BOUND` raises
    :class:`ConvergenceError`.
    """
    Y = np.asarray(Y, dtype=float)
    y = Y[:, j]
    if np.all(y == y[0]):
        raise ConvergenceError(f"node {j}: response is constant")
    V = stacked_design(Y, W, j)
    n = V.shape[0]
    wts = np.ones(n) if weights is None else np.asarray(weights, dtype=float)

    def score(theta):
        resid = y - expit(V @ theta)
        u = V.T @ (wts * resid) / n
        if ridge:
            u = u - ridge * theta
        return u

    def jac(theta):
        p = expit(V @ theta)
        h = -V.T @ (wts[:, None] * (p * (1 - p))[:, None] * V) / n
        if ridge:
            h = h - ridge * np.eye(V.shape[1])
        return h

    try:
        theta = newton_root(score, jac, np.zeros(V.shape[1]), cfg or NODE_SOLVER)
    except ConvergenceError as err:
        raise ConvergenceError(f"node {j}: {err}") from err
    if np.max(np.abs(theta)) > SEPARATION_BOUND:
        raise ConvergenceError(f"node {j}: estimate diverged (separation suspected)")

    p = expit(V @ theta)
    hessian = V.T @ ((wts * p * (1 - p))[:, None] * V) / n
    return NodewiseFit(theta=theta, hessian=hessian, hessian_inv=inverse(hessian), n=n)


def fit_sl(Y, W, ridge: float = 0.0, weights=None):
    """Fit all node regressions and symmetrize into an :class:`IsingParams`.

    Returns the symmetrized parameters together with the raw per-node fits,
    which downstream estimators reuse for score rows and projections.
    """
    Y = np.asarray(Y, dtype=float)
    W = np.asarray(W, dtype=float)
    q = Y.shape[1]
    d = W.shape[1] - 1
    fits = [fit_node_logistic(Y, W, j, ridge=ridge, weights=weights) for j in range(q)]
    node_coefs = np.vstack([fits[j].theta[stacked_position(j, j, q, d)] for j in range(q)])
    pair = np.zeros((q, q))
    for j in range(q):
        for k in range(j + 1, q):
            avg = 0.5 * (fits[j].theta[stacked_position(j, k, q, d)]
                         + fits[k].theta[stacked_position(k, j, q, d)])
            pair[j, k] = avg
            pair[k, j] = avg
    return IsingParams(node_coefs, pair), fits


def score_rows(Y, W, fit: NodewiseFit, j: int, weights=None) -> np.ndarray:
    """Per-subject score rows ``Sigma^{-1} v (y_j - g(theta' v))`` for node ``j``."""
    Y = np.asarray(Y, dtype=float)
    V = stacked_design(Y, W, j)
    resid = Y[:, j] - expit(V @ fit.theta)
    if weights is not None:
        resid = resid * np.asarray(weights, dtype=float)
    return (resid[:, None] * V) @ fit.hessian_inv


def var_sl(Y, W, fits, weights=None):
    """Empirical asymptotic variances of the symmetrized estimator.

    Returns ``(omega_pairs, omega_nodes)``: a symmetric q x q matrix with the
    pairwise variances ``(1/4) mean (s_jk + s_kj)^2`` off the diagonal, and a
    (q, d + 1) array of per-coordinate variances ``mean s_jj^2`` for the node
    coefficient blocks.  The diagonal of ``omega_pairs`` mirrors the first
    (intercept) column of ``omega_nodes``.  Standard errors follow as
    ``sqrt(omega / n)``.
    """
    Y = np.asarray(Y, dtype=float)
    q = Y.shape[1]
    d = np.asarray(W).shape[1] - 1
    scores = [score_rows(Y, W, fits[j], j, weights=weights) for j in range(q)]
    omega_pairs = np.zeros((q, q))
    omega_nodes = np.zeros((q, d + 1))
    for j in range(q):
        block = scores[j][:, stacked_position(j, j, q, d)]
        omega_nodes[j] = np.mean(block ** 2, axis=0)
        omega_pairs[j, j] = omega_nodes[j, 0]
        for k in range(j + 1, q):
            s_jk = scores[j][:, stacked_position(j, k, q, d)]
            s_kj = scores[k][:, stacked_position(k, j, q, d)]
            om = 0.25 * np.mean((s_jk + s_kj) ** 2)
            omega_pairs[j, k] = om
            omega_pairs[k, j] = om
    return omega_pairs, omega_nodes
