"""Conditional models for the outcome vector given auxiliary features.

Two backends produce a probability distribution over all 2**q outcome
configurations given ``z = (x, w)``:

* ``AugParams``: an Ising model whose coefficients vary linearly in the
  auxiliary features (pairwise blocks in ``x``, node blocks in ``(x, w)``).
* ``PosParams``: a Bayes-rule model combining the supervised Ising fit as a
  prior with per-node surrogate densities ``f(x_j | y_j, w)`` assumed
  conditionally independent across nodes.

Both expose ``predict`` (the enumerated conditional distribution), a flat
parameter vector, and analytic derivatives of the projected score, which the
intrinsic-efficiency refinement differentiates through.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit, gammaln

from .exceptions import (
    ConvergenceError,
    DegenerateSurrogateError,
    DimensionError,
    NumericalUnderflowError,
    SingularMatrixError,
)
from .ising import IsingParams, config_logweights, enumerate_configs
from .solvers import SolverConfig, newton_root, solve_linear
from .supervised import NodewiseFit, stacked_position

FAMILIES = ("gaussian", "logistic", "poisson")

# Box for logistic / poisson surrogate coefficients on the link scale.  It
# keeps Bayes posteriors finite when a surrogate is an anchor (e.g. zero
# whenever its node is zero) while leaving non-degenerate fits untouched.
COEF_BOX = 15.0


def _softmax_rows(logits):
    top = np.max(logits, axis=1, keepdims=True)
    if not np.all(np.isfinite(top)):
        bad = int(np.flatnonzero(~np.isfinite(top[:, 0]))[0])
        raise NumericalUnderflowError(f"all configuration weights underflowed for subject {bad}")
    p = np.exp(logits - top)
    return p / p.sum(axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# Augmented Ising model
# ---------------------------------------------------------------------------

def aug_block(j: int, k: int, q: int, p: int, d: int) -> slice:
    """Slice of node ``j``'s design vector holding the (j, k) coefficient block."""
    if k == j:
        return slice(j * p, j * p + p + d + 1)
    if k < j:
        return slice(k * p, (k + 1) * p)
    return slice(k * p + d + 1, k * p + d + 1 + p)


def aug_design(Y, X, W, j: int) -> np.ndarray:
    """Stacked feature rows ``(x y_1, ..., (x, w), ..., x y_q)`` for node ``j``."""
    Y = np.asarray(Y, dtype=float)
    blocks = [X * Y[:, [k]] for k in range(j)]
    blocks.append(np.hstack([X, W]))
    blocks.extend(X * Y[:, [k]] for k in range(j + 1, Y.shape[1]))
    return np.hstack(blocks)


@dataclass(frozen=True)
class AugParams:
    """Coefficients of the feature-augmented Ising model."""

    node_coefs: np.ndarray   # (q, p + d + 1) over (x, w)
    pair_coefs: np.ndarray   # (q, q, p), symmetric in the first two axes

    @property
    def q(self):
        return self.node_coefs.shape[0]

    @property
    def p(self):
        return self.pair_coefs.shape[2]

    @property
    def d(self):
        return self.node_coefs.shape[1] - self.p - 1

    @property
    def n_flat(self):
        q, p = self.q, self.p
        return self.node_coefs.size + q * (q - 1) // 2 * p

    def to_flat(self) -> np.ndarray:
        parts = [self.node_coefs.ravel()]
        q = self.q
        parts.extend(self.pair_coefs[j, k] for j in range(q) for k in range(j + 1, q))
        return np.concatenate(parts)

    def with_flat(self, flat) -> "AugParams":
        flat = np.asarray(flat, dtype=float)
        q, p = self.q, self.p
        node = flat[: self.node_coefs.size].reshape(self.node_coefs.shape).copy()
        pair = np.zeros_like(self.pair_coefs)
        pos = self.node_coefs.size
        for j in range(q):
            for k in range(j + 1, q):
                pair[j, k] = flat[pos: pos + p]
                pair[k, j] = pair[j, k]
                pos += p
        return AugParams(node, pair)

    def predict(self, X, W) -> np.ndarray:
        """Conditional distribution over all configurations, one row per subject."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        W = np.atleast_2d(np.asarray(W, dtype=float))
        q = self.q
        configs = enumerate_configs(q)
        logits = np.hstack([X, W]) @ self.node_coefs.T @ configs.T.astype(float)
        for j in range(q):
            for k in range(j + 1, q):
                prod = (configs[:, j] * configs[:, k]).astype(float)
                logits += np.outer(X @ self.pair_coefs[j, k], prod)
        return _softmax_rows(logits)


def fit_aug(Y, X, W, lam: float | None = None, cfg: SolverConfig | None = None) -> AugParams:
    """Fit the augmented Ising model by node-wise ridge logistic regression.

    ``lam`` defaults to ``n ** -0.75``, small enough to vanish asymptotically
    but stabilizing at the sample sizes used here.  Pairwise blocks estimated
    twice (once per incident node) are averaged.
    """
    Y = np.asarray(Y, dtype=float)
    X = np.asarray(X, dtype=float)
    W = np.asarray(W, dtype=float)
    n, q = Y.shape
    p = X.shape[1]
    d = W.shape[1] - 1
    if lam is None:
        lam = float(n) ** -0.75
    n_params = q * (p + d + 1) + q * (q - 1) // 2 * p
    if n_params > n / 5:
        warnings.warn(
            f"augmented model has {n_params} parameters for n={n} labeled subjects",
            stacklevel=2,
        )

    etas = []
    for j in range(q):
        psi = aug_design(Y, X, W, j)
        y = Y[:, j]

        def score(eta, psi=psi, y=y):
            return psi.T @ (y - expit(psi @ eta)) / n - lam * eta

        def jac(eta, psi=psi):
            pr = expit(psi @ eta)
            return -psi.T @ ((pr * (1 - pr))[:, None] * psi) / n - lam * np.eye(psi.shape[1])

        try:
            etas.append(newton_root(score, jac, np.zeros(psi.shape[1]), cfg))
        except ConvergenceError as err:
            raise ConvergenceError(f"augmented node {j}: {err}") from err

    node = np.vstack([etas[j][aug_block(j, j, q, p, d)] for j in range(q)])
    pair = np.zeros((q, q, p))
    for j in range(q):
        for k in range(j + 1, q):
            avg = 0.5 * (etas[j][aug_block(j, k, q, p, d)] + etas[k][aug_block(k, j, q, p, d)])
            pair[j, k] = avg
            pair[k, j] = avg
    return AugParams(node, pair)


# ---------------------------------------------------------------------------
# Post-hoc surrogate model
# ---------------------------------------------------------------------------

def _family_loglik(family, x, lp, sigma2):
    if family == "gaussian":
        return -0.5 * np.log(2.0 * np.pi * sigma2) - (x - lp) ** 2 / (2.0 * sigma2)
    if family == "logistic":
        return x * lp - np.logaddexp(0.0, lp)
    if family == "poisson":
        return x * lp - np.exp(lp) - gammaln(x + 1.0)
    raise ValueError(f"unknown surrogate family {family!r}")


def _family_mean(family, lp):
    if family == "gaussian":
        return lp
    if family == "logistic":
        return expit(lp)
    return np.exp(lp)


def _family_variance(family, lp, sigma2):
    if family == "gaussian":
        return np.full_like(lp, sigma2 if sigma2 is not None else 1.0)
    if family == "logistic":
        pr = expit(lp)
        return pr * (1 - pr)
    return np.exp(lp)


@dataclass(frozen=True)
class PosParams:
    """Bayes-rule conditional model built on the supervised Ising fit."""

    theta: IsingParams
    families: tuple
    xi: np.ndarray        # (q, d + 2) coefficients over (w, y_j)
    sigma2: np.ndarray    # (q,) residual variances; nan for non-gaussian nodes
    clamped: np.ndarray   # (q,) bool, True when the coefficient box was active

    def __post_init__(self):
        for j, fam in enumerate(self.families):
            if fam == "gaussian" and not self.sigma2[j] > 0:
                raise DegenerateSurrogateError(f"node {j}: sigma2 must be positive")

    @property
    def q(self):
        return self.theta.q

    @property
    def d(self):
        return self.theta.d

    @property
    def n_flat(self):
        per_node = self.xi.shape[1]
        return sum(per_node + (1 if fam == "gaussian" else 0) for fam in self.families)

    def to_flat(self) -> np.ndarray:
        """Surrogate parameters as one vector: per node, xi then log sigma2."""
        parts = []
        for j, fam in enumerate(self.families):
            parts.append(self.xi[j])
            if fam == "gaussian":
                parts.append([np.log(self.sigma2[j])])
        return np.concatenate(parts)

    def with_flat(self, flat) -> "PosParams":
        flat = np.asarray(flat, dtype=float)
        xi = np.empty_like(self.xi)
        sigma2 = self.sigma2.copy()
        pos = 0
        width = self.xi.shape[1]
        for j, fam in enumerate(self.families):
            xi[j] = flat[pos: pos + width]
            pos += width
            if fam == "gaussian":
                sigma2[j] = np.exp(flat[pos])
                pos += 1
        return replace(self, xi=xi, sigma2=sigma2)

    def _node_logliks(self, X, W, j):
        """Surrogate log-densities at y_j = 0 and y_j = 1 for every subject."""
        lp0 = W @ self.xi[j, :-1]
        lp1 = lp0 + self.xi[j, -1]
        fam = self.families[j]
        s2 = self.sigma2[j]
        return (_family_loglik(fam, X[:, j], lp0, s2),
                _family_loglik(fam, X[:, j], lp1, s2))

    def predict(self, X, W) -> np.ndarray:
        """Posterior over configurations: prior Ising pmf times surrogate likelihoods."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        W = np.atleast_2d(np.asarray(W, dtype=float))
        configs = enumerate_configs(self.q)
        logits = config_logweights(self.theta, W)
        for j in range(self.q):
            ll0, ll1 = self._node_logliks(X, W, j)
            logits = logits + ll0[:, None] + np.outer(ll1 - ll0, configs[:, j])
        return _softmax_rows(logits)


def _bounded_glm(D, x, family, start, bound=COEF_BOX):
    """Maximize a logistic or poisson log-likelihood over a coefficient box.

    Projected Newton with backtracking; the problems are tiny and concave so
    this converges in a handful of iterations.  Returns the estimate and
    whether any bound is active.
    """
    n = D.shape[0]

    def loglik(beta):
        return float(np.sum(_family_loglik(family, x, D @ beta, None)))

    beta = np.clip(np.asarray(start, dtype=float), -bound, bound)
    ll = loglik(beta)
    for _ in range(200):
        lp = D @ beta
        grad = D.T @ (x - _family_mean(family, lp)) / n
        blocked = ((beta <= -bound + 1e-12) & (grad < 0)) | ((beta >= bound - 1e-12) & (grad > 0))
        free = ~blocked
        if not free.any() or np.max(np.abs(grad[free])) < 1e-10:
            break
        var = _family_variance(family, lp, None)
        h = D[:, free].T @ (var[:, None] * D[:, free]) / n
        h[np.diag_indices_from(h)] += 1e-10
        try:
            step_free = solve_linear(h, grad[free])
        except SingularMatrixError:
            break
        step = np.zeros_like(beta)
        step[free] = step_free
        scale, improved = 1.0, False
        for _ in range(60):
            cand = np.clip(beta + scale * step, -bound, bound)
            cand_ll = loglik(cand)
            if cand_ll > ll + 1e-14:
                beta, ll, improved = cand, cand_ll, True
                break
            scale *= 0.5
        if not improved:
            break
    at_bound = bool(np.any(np.abs(beta) >= bound - 1e-9))
    return beta, at_bound


def _stratum_degenerate(family, x, y):
    """True when an unbounded MLE would diverge (anchor-style surrogates)."""
    for level in (0.0, 1.0):
        xs = x[y == level]
        if xs.size == 0:
            continue
        if family == "poisson" and np.all(xs == 0):
            return True
        if family == "logistic" and (np.all(xs == 0) or np.all(xs == 1)):
            return True
    return False


def fit_pos(Y, X, W, theta_sl: IsingParams, families) -> PosParams:
    """Fit per-node surrogate densities ``f(x_j | y_j, w)`` on labeled data.

    Gaussian nodes use least squares with ``sigma2 = RSS / n``; logistic and
    poisson nodes use maximum likelihood, falling back to the box-constrained
    fit when a stratum degeneracy makes the unconstrained optimum infinite.
    """
    Y = np.asarray(Y, dtype=float)
    X = np.asarray(X, dtype=float)
    W = np.asarray(W, dtype=float)
    n, q = Y.shape
    if X.shape[1] != q:
        raise DimensionError("post-hoc surrogate model requires one x column per node")
    families = tuple(families)
    if len(families) != q:
        raise DimensionError(f"need {q} family tags, got {len(families)}")
    for fam in families:
        if fam not in FAMILIES:
            raise ValueError(f"unknown surrogate family {fam!r}")

    xi = np.zeros((q, W.shape[1] + 1))
    sigma2 = np.full(q, np.nan)
    clamped = np.zeros(q, dtype=bool)
    for j, fam in enumerate(families):
        x, y = X[:, j], Y[:, j]
        if np.all(y == y[0]):
            raise DegenerateSurrogateError(f"node {j}: outcome is constant, xi not identified")
        D = np.hstack([W, y[:, None]])
        if fam == "gaussian":
            coef, *_ = np.linalg.lstsq(D, x, rcond=None)
            resid = x - D @ coef
            s2 = float(resid @ resid) / n
            if s2 < 1e-12:
                raise DegenerateSurrogateError(f"node {j}: surrogate has no residual variation")
            xi[j], sigma2[j] = coef, s2
            continue
        if fam == "logistic" and not np.all(np.isin(x, (0.0, 1.0))):
            raise ValueError(f"node {j}: logistic family requires binary x")
        if fam == "poisson" and (np.any(x < 0) or np.any(x != np.round(x))):
            raise ValueError(f"node {j}: poisson family requires nonnegative integer x")
        if _stratum_degenerate(fam, x, y):
            xi[j], clamped[j] = _bounded_glm(D, x, fam, np.zeros(D.shape[1]))
            continue

        def score(beta, D=D, x=x, fam=fam):
            return D.T @ (x - _family_mean(fam, D @ beta)) / n

        def jac(beta, D=D, fam=fam):
            var = _family_variance(fam, D @ beta, None)
            return -D.T @ (var[:, None] * D) / n

        try:
            beta = newton_root(score, jac, np.zeros(D.shape[1]))
            if np.max(np.abs(beta)) > COEF_BOX:
                raise ConvergenceError("estimate left the coefficient box")
        except (ConvergenceError, SingularMatrixError):
            beta, hit = _bounded_glm(D, x, fam, np.zeros(D.shape[1]))
            clamped[j] = hit
        xi[j] = beta
    return PosParams(theta=theta_sl, families=families, xi=xi,
                     sigma2=sigma2, clamped=clamped)


# ---------------------------------------------------------------------------
# Score projection and its parameter derivatives
# ---------------------------------------------------------------------------

def _config_residuals(fit: NodewiseFit, j, W, q, d):
    """Residual y_j - g(theta_j' y_w) for every (subject, configuration)."""
    configs = enumerate_configs(q)
    others = np.delete(np.arange(q), j)
    y_positions = np.array([stacked_position(j, k, q, d) for k in others])
    lp = (W @ fit.theta[stacked_position(j, j, q, d)])[:, None] \
        + (configs[:, others].astype(float) @ fit.theta[y_positions])[None, :]
    return configs[:, [j]].T.astype(float) - expit(lp)


def project_score(dist, fit: NodewiseFit, j: int, W) -> np.ndarray:
    """Projected score: the per-subject expectation of the node-``j`` score rows
    under a conditional distribution over all configurations.

    ``dist`` has one row per subject aligned with :func:`enumerate_configs`.
    Returns an (m, q - 1 + d + 1) array in stacked coordinate order.
    """
    dist = np.atleast_2d(np.asarray(dist, dtype=float))
    W = np.atleast_2d(np.asarray(W, dtype=float))
    q = int(np.log2(dist.shape[1]) + 0.5)
    d = W.shape[1] - 1
    configs = enumerate_configs(q)
    weighted = dist * _config_residuals(fit, j, W, q, d)  # (m, 2**q)
    y_means = weighted @ configs.astype(float)            # (m, q), column j unused
    w_part = weighted.sum(axis=1, keepdims=True) * W
    raw = np.hstack([y_means[:, :j], w_part, y_means[:, j + 1:]])
    return raw @ fit.hessian_inv


def _score_coordinate(fit, j, coord, W, q, d, resid):
    """Score coordinate values per (subject, configuration) before averaging."""
    h = fit.hessian_inv[:, coord]
    configs = enumerate_configs(q)
    others = np.delete(np.arange(q), j)
    y_positions = np.array([stacked_position(j, k, q, d) for k in others])
    t = (W @ h[stacked_position(j, j, q, d)])[:, None] \
        + (configs[:, others].astype(float) @ h[y_positions])[None, :]
    return resid * t


def _pos_grad_diffs(params: PosParams, X, W):
    """Per-node difference of surrogate log-density gradients at y=1 vs y=0.

    Returns a list of (m, width_j) arrays matching the flat layout blocks.
    """
    diffs = []
    for j, fam in enumerate(params.families):
        x = X[:, j]
        lp0 = W @ params.xi[j, :-1]
        lp1 = lp0 + params.xi[j, -1]
        s2 = params.sigma2[j]
        dlp0 = _family_dloglik_dlp(fam, x, lp0, s2)
        dlp1 = _family_dloglik_dlp(fam, x, lp1, s2)
        block = np.hstack([(dlp1 - dlp0)[:, None] * W, dlp1[:, None]])
        if fam == "gaussian":
            dls2 = ((x - lp1) ** 2 - (x - lp0) ** 2) / (2.0 * s2)
            block = np.hstack([block, dls2[:, None]])
        diffs.append(block)
    return diffs


def _family_dloglik_dlp(family, x, lp, sigma2):
    if family == "gaussian":
        return (x - lp) / sigma2
    if family == "logistic":
        return x - expit(lp)
    return x - np.exp(lp)


def project_jacobian(params, X, W, fit: NodewiseFit, j: int, coord=None):
    """Analytic derivative of the projected score with respect to the flat
    parameter vector of ``params`` (either backend).

    With ``coord`` given, returns an (m, n_flat) array for that stacked
    coordinate of node ``j``'s projection; otherwise an (m, q - 1 + d + 1,
    n_flat) array covering every coordinate.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    W = np.atleast_2d(np.asarray(W, dtype=float))
    if coord is None:
        width = fit.theta.shape[0]
        return np.stack(
            [project_jacobian(params, X, W, fit, j, coord=c) for c in range(width)], axis=1
        )

    q = params.q
    d = W.shape[1] - 1
    configs = enumerate_configs(q).astype(float)
    dist = params.predict(X, W)
    resid = _config_residuals(fit, j, W, q, d)
    s = _score_coordinate(fit, j, coord, W, q, d, resid)

    # Covariance under dist between the score coordinate and each node
    # indicator (and, for the augmented model, each pairwise product).
    weighted = dist * s
    mean_s = weighted.sum(axis=1)
    cov_y = weighted @ configs - mean_s[:, None] * (dist @ configs)

    if isinstance(params, AugParams):
        jac = np.zeros((X.shape[0], params.n_flat))
        z = np.hstack([X, W])
        width = params.node_coefs.shape[1]
        for a in range(q):
            jac[:, a * width: (a + 1) * width] = cov_y[:, [a]] * z
        pos = params.node_coefs.size
        p = params.p
        for a in range(q):
            for b in range(a + 1, q):
                prod = configs[:, a] * configs[:, b]
                cov_ab = weighted @ prod - mean_s * (dist @ prod)
                jac[:, pos: pos + p] = cov_ab[:, None] * X
                pos += p
        return jac

    if isinstance(params, PosParams):
        diffs = _pos_grad_diffs(params, X, W)
        jac = np.zeros((X.shape[0], params.n_flat))
        pos = 0
        for a in range(q):
            block = diffs[a]
            jac[:, pos: pos + block.shape[1]] = cov_y[:, [a]] * block
            pos += block.shape[1]
        return jac

    raise TypeError(f"unsupported conditional model {type(params).__name__}")
