"""Density-ratio baseline: importance-weighted node-wise regression.

A logistic membership model (labeled = 0, unlabeled = 1) on the pooled
auxiliary features yields per-subject weights ``exp(eta' x)`` for the
labeled rows, normalized to mean one.  The node-wise estimating equations
are then solved with those weights and symmetrized as usual.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from .exceptions import ConvergenceError
from .solvers import SolverConfig, newton_root
from .supervised import fit_sl, var_sl

_MEMBERSHIP_SOLVER = SolverConfig(max_iters=100, grad_tol=1e-8, step_halvings=30)


def density_ratio_weights(XL, XU):
    """Normalized importance weights for the labeled rows.

    The membership regression includes an intercept so the slope does not
    absorb the labeled/unlabeled class imbalance; the intercept's constant
    factor is immaterial after normalizing the weights to mean one.
    """
    XL = np.asarray(XL, dtype=float)
    XU = np.asarray(XU, dtype=float)
    pooled = np.vstack([XL, XU])
    design = np.hstack([np.ones((pooled.shape[0], 1)), pooled])
    member = np.concatenate([np.zeros(XL.shape[0]), np.ones(XU.shape[0])])
    total = design.shape[0]

    def score(eta):
        return design.T @ (member - expit(design @ eta)) / total

    def jac(eta):
        p = expit(design @ eta)
        return -design.T @ ((p * (1 - p))[:, None] * design) / total

    try:
        eta = newton_root(score, jac, np.zeros(design.shape[1]), _MEMBERSHIP_SOLVER)
    except ConvergenceError as err:
        raise ConvergenceError(f"membership regression: {err}") from err
    raw = np.exp(np.hstack([np.ones((XL.shape[0], 1)), XL]) @ eta)
    weights = raw / raw.mean()
    return weights, eta


def fit_dr(YL, XL, WL, XU):
    """Weighted supervised fit with density-ratio weights.

    Returns ``(theta, fits, omega_pairs, omega_nodes, weights)``; the
    variances come from the weighted score rows via the sandwich argument.
    """
    weights, eta = density_ratio_weights(XL, XU)
    theta, fits = fit_sl(YL, WL, weights=weights)
    omega_pairs, omega_nodes = var_sl(YL, WL, fits, weights=weights)
    return theta, fits, omega_pairs, omega_nodes, weights
