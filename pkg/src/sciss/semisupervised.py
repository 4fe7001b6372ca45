"""Semi-supervised correction of the node-wise estimator via score projection.

The supervised estimate is shifted by the difference between the unlabeled
and labeled sample means of the projected score, which removes the variance
explained by the auxiliary features without introducing bias.  Also here:
the empirical variance of the corrected estimator, the intrinsic-efficiency
refinement that tunes the conditional model to minimize that variance, the
variance-optimal convex ensemble, and the two-sample edge contrast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .conditional import project_jacobian, project_score
from .exceptions import (
    EmptyUnlabeledError,
    ScissError,
    SingularCovarianceError,
    SingularMatrixError,
)
from .ising import IsingParams
from .solvers import solve_linear
from .supervised import score_rows, stacked_position

INTRINSIC_MAX_STEPS = 4  # accepted update bound for the safe refinement


def anchored_mean(a):
    """Column means computed as ``a[0] + mean(a - a[0])``.

    Exact for constant columns, which makes the semi-supervised correction
    cancel bitwise when the projection does not depend on the features.
    """
    a = np.asarray(a, dtype=float)
    return a[0] + (a - a[0]).mean(axis=0)


@dataclass(frozen=True)
class InfluenceTable:
    """Per-subject score rows and projections, one array per node.

    Labeled and unlabeled projections are computed from the same fitted
    conditional model and the same supervised node fits, which the corrected
    estimator requires.
    """

    scores: list          # node j -> (n, q - 1 + d + 1)
    proj_labeled: list    # node j -> (n, q - 1 + d + 1)
    proj_unlabeled: list  # node j -> (N, q - 1 + d + 1)
    q: int
    d: int

    @property
    def n(self):
        return self.scores[0].shape[0]


def build_influence(YL, WL, XL, XU, WU, fits, model) -> InfluenceTable:
    """Score rows on labeled data plus projections on both samples."""
    YL = np.asarray(YL, dtype=float)
    q = YL.shape[1]
    d = np.asarray(WL).shape[1] - 1
    if np.asarray(XU).shape[0] == 0:
        raise EmptyUnlabeledError("semi-supervised correction needs unlabeled rows")
    dist_l = model.predict(XL, WL)
    dist_u = model.predict(XU, WU)
    scores, proj_l, proj_u = [], [], []
    for j in range(q):
        scores.append(score_rows(YL, WL, fits[j], j))
        proj_l.append(project_score(dist_l, fits[j], j, WL))
        proj_u.append(project_score(dist_u, fits[j], j, WU))
    return InfluenceTable(scores, proj_l, proj_u, q, d)


def sciss_theta(fits, table: InfluenceTable) -> IsingParams:
    """Corrected and symmetrized parameters.

    Each raw node vector is shifted by ``mean_U(m_j) - mean_L(m_j)`` before
    the usual pairwise averaging.
    """
    q, d = table.q, table.d
    corrected = [
        fits[j].theta + (anchored_mean(table.proj_unlabeled[j]) - anchored_mean(table.proj_labeled[j]))
        for j in range(q)
    ]
    node_coefs = np.vstack([corrected[j][stacked_position(j, j, q, d)] for j in range(q)])
    pair = np.zeros((q, q))
    for j in range(q):
        for k in range(j + 1, q):
            avg = 0.5 * (corrected[j][stacked_position(j, k, q, d)]
                         + corrected[k][stacked_position(k, j, q, d)])
            pair[j, k] = avg
            pair[k, j] = avg
    return IsingParams(node_coefs, pair)


def pair_residuals(table: InfluenceTable, j: int, k: int) -> np.ndarray:
    """Labeled-sample values of ``s_jk + s_kj - m_jk - m_kj`` for one pair."""
    q, d = table.q, table.d
    pos_jk = stacked_position(j, k, q, d)
    pos_kj = stacked_position(k, j, q, d)
    return (table.scores[j][:, pos_jk] + table.scores[k][:, pos_kj]
            - table.proj_labeled[j][:, pos_jk] - table.proj_labeled[k][:, pos_kj])


def sciss_omega(table: InfluenceTable):
    """Asymptotic variances of the corrected estimator.

    Pairs use the centered sample variance of ``s_jk + s_kj - m_jk - m_kj``
    scaled by 1/4; node coordinates drop the pairing and the scale.
    """
    q, d = table.q, table.d
    omega_pairs = np.zeros((q, q))
    omega_nodes = np.zeros((q, d + 1))
    for j in range(q):
        own = stacked_position(j, j, q, d)
        resid = table.scores[j][:, own] - table.proj_labeled[j][:, own]
        omega_nodes[j] = np.var(resid, axis=0)
        omega_pairs[j, j] = omega_nodes[j, 0]
        for k in range(j + 1, q):
            om = 0.25 * np.var(pair_residuals(table, j, k))
            omega_pairs[j, k] = om
            omega_pairs[k, j] = om
    return omega_pairs, omega_nodes


# ---------------------------------------------------------------------------
# Intrinsic-efficiency refinement
# ---------------------------------------------------------------------------

def _pair_columns(model, XL, WL, fits, j, k, q, d):
    pos_jk = stacked_position(j, k, q, d)
    pos_kj = stacked_position(k, j, q, d)
    dist = model.predict(XL, WL)
    m_j = project_score(dist, fits[j], j, WL)[:, pos_jk]
    m_k = project_score(dist, fits[k], k, WL)[:, pos_kj]
    return m_j, m_k


def intrinsic_objective(flat_eta, base_model, YL, XL, WL, fits, j: int, k: int) -> float:
    """Empirical asymptotic variance of the corrected (j, k) estimate as a
    function of the conditional-model parameters."""
    q = np.asarray(YL).shape[1]
    d = np.asarray(WL).shape[1] - 1
    model = base_model.with_flat(flat_eta)
    pos_jk = stacked_position(j, k, q, d)
    pos_kj = stacked_position(k, j, q, d)
    s = (score_rows(YL, WL, fits[j], j)[:, pos_jk]
         + score_rows(YL, WL, fits[k], k)[:, pos_kj])
    m_j, m_k = _pair_columns(model, XL, WL, fits, j, k, q, d)
    return 0.25 * float(np.var(s - m_j - m_k))


def intrinsic_objective_grad(flat_eta, base_model, YL, XL, WL, fits, j: int, k: int) -> np.ndarray:
    """Analytic gradient of :func:`intrinsic_objective`."""
    q = np.asarray(YL).shape[1]
    d = np.asarray(WL).shape[1] - 1
    model = base_model.with_flat(flat_eta)
    pos_jk = stacked_position(j, k, q, d)
    pos_kj = stacked_position(k, j, q, d)
    s = (score_rows(YL, WL, fits[j], j)[:, pos_jk]
         + score_rows(YL, WL, fits[k], k)[:, pos_kj])
    m_j, m_k = _pair_columns(model, XL, WL, fits, j, k, q, d)
    jac = (project_jacobian(model, XL, WL, fits[j], j, coord=pos_jk)
           + project_jacobian(model, XL, WL, fits[k], k, coord=pos_kj))
    resid = s - m_j - m_k
    resid_c = resid - resid.mean()
    jac_c = jac - jac.mean(axis=0)
    return -0.5 * resid_c @ jac_c / resid.shape[0]


def refine_intrinsic_pair(model0, YL, XL, WL, fits, j: int, k: int,
                          max_steps: int = INTRINSIC_MAX_STEPS):
    """Minimize the (j, k) variance over the conditional-model parameters.

    Starts from the fitted model, takes Newton steps on the objective with
    the projection linearized about the current iterate, and accepts a step
    only when the exact objective strictly decreases.  Returns the refined
    model and the accepted objective path; the path never increases, so the
    refined variance cannot exceed the starting one.
    """
    q = np.asarray(YL).shape[1]
    d = np.asarray(WL).shape[1] - 1
    pos_jk = stacked_position(j, k, q, d)
    pos_kj = stacked_position(k, j, q, d)
    s = (score_rows(YL, WL, fits[j], j)[:, pos_jk]
         + score_rows(YL, WL, fits[k], k)[:, pos_kj])

    model = model0
    eta = model0.to_flat()
    m_j, m_k = _pair_columns(model, XL, WL, fits, j, k, q, d)
    obj = 0.25 * float(np.var(s - m_j - m_k))
    path = [obj]
    for _ in range(max_steps):
        jac = (project_jacobian(model, XL, WL, fits[j], j, coord=pos_jk)
               + project_jacobian(model, XL, WL, fits[k], k, coord=pos_kj))
        resid = s - m_j - m_k
        resid_c = resid - resid.mean()
        jac_c = jac - jac.mean(axis=0)
        gram = jac_c.T @ jac_c
        # relative jitter keeps flat parameter directions (e.g. a log-variance
        # nobody's score depends on) from launching the step to overflow
        gram[np.diag_indices_from(gram)] += 1e-8 * (1.0 + np.max(np.diag(gram)))
        try:
            delta = solve_linear(gram, jac_c.T @ resid_c)
        except SingularMatrixError:
            break
        cand_eta = eta + delta
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                cand_model = model0.with_flat(cand_eta)
                cand_mj, cand_mk = _pair_columns(cand_model, XL, WL, fits, j, k, q, d)
            cand_obj = 0.25 * float(np.var(s - cand_mj - cand_mk))
        except ScissError:
            break
        if not np.isfinite(cand_obj) or not cand_obj < obj:
            break
        model, eta, m_j, m_k, obj = cand_model, cand_eta, cand_mj, cand_mk, cand_obj
        path.append(obj)
    return model, path


def intrinsic_pair_estimate(model, YL, XL, WL, XU, WU, fits, j: int, k: int):
    """Corrected (j, k) estimate and variance under a given conditional model."""
    q = np.asarray(YL).shape[1]
    d = np.asarray(WL).shape[1] - 1
    pos_jk = stacked_position(j, k, q, d)
    pos_kj = stacked_position(k, j, q, d)
    dist_l = model.predict(XL, WL)
    dist_u = model.predict(XU, WU)
    theta_parts = []
    for node, pos in ((j, pos_jk), (k, pos_kj)):
        ml = project_score(dist_l, fits[node], node, WL)[:, pos]
        mu = project_score(dist_u, fits[node], node, WU)[:, pos]
        theta_parts.append(fits[node].theta[pos] + (anchored_mean(mu) - anchored_mean(ml)))
    s = (score_rows(YL, WL, fits[j], j)[:, pos_jk]
         + score_rows(YL, WL, fits[k], k)[:, pos_kj])
    m_j, m_k = _pair_columns(model, XL, WL, fits, j, k, q, d)
    omega = 0.25 * float(np.var(s - m_j - m_k))
    return 0.5 * (theta_parts[0] + theta_parts[1]), omega


# ---------------------------------------------------------------------------
# Ensemble allocation
# ---------------------------------------------------------------------------

def simplex_project(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    cumulative = np.cumsum(u)
    ranks = np.arange(1, v.size + 1)
    rho = np.nonzero(u * ranks > cumulative - 1.0)[0][-1]
    tau = (cumulative[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - tau, 0.0)


def _allocation(cols):
    n = cols.shape[0]
    centered = cols - cols.mean(axis=0)
    lam = centered.T @ centered / n
    try:
        raw = solve_linear(lam, np.ones(cols.shape[1]))
    except SingularMatrixError as err:
        raise SingularCovarianceError(str(err)) from err
    return simplex_project(raw / raw.sum()), lam


def ensemble_allocate(columns):
    """Variance-minimizing simplex weights for per-subject influence columns.

    ``columns`` is (n, m), one column per candidate estimator.  When the
    influence covariance is singular the most collinear member is dropped
    (the higher-variance one of the most correlated pair) and allocation is
    retried; dropped indices are reported for diagnostics.
    """
    columns = np.asarray(columns, dtype=float)
    active = list(range(columns.shape[1]))
    dropped = []
    while True:
        cols = columns[:, active]
        if len(active) == 1:
            lam = np.atleast_2d(np.var(cols[:, 0]))
            alpha_active = np.array([1.0])
            break
        try:
            alpha_active, lam = _allocation(cols)
            break
        except SingularCovarianceError:
            centered = cols - cols.mean(axis=0)
            cov = centered.T @ centered / cols.shape[0]
            sd = np.sqrt(np.maximum(np.diag(cov), 1e-300))
            corr = np.abs(cov / np.outer(sd, sd))
            np.fill_diagonal(corr, 0.0)
            a, b = np.unravel_index(np.argmax(corr), corr.shape)
            worse = a if cov[a, a] > cov[b, b] else b
            dropped.append(active.pop(worse))
    alpha = np.zeros(columns.shape[1])
    alpha[active] = alpha_active
    variance = float(alpha_active @ lam @ alpha_active)
    return alpha, variance, dropped


# ---------------------------------------------------------------------------
# Two-sample edge contrast
# ---------------------------------------------------------------------------

def two_sample_contrast(est_a: float, se_a: float, est_b: float, se_b: float) -> float:
    """Two-sided normal p-value for the difference of two independent estimates."""
    denom = math.sqrt(se_a ** 2 + se_b ** 2)
    if denom == 0.0:
        return 1.0 if est_a == est_b else 0.0
    z = (est_a - est_b) / denom
    return math.erfc(abs(z) / math.sqrt(2.0))
