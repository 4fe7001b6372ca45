"""Ising model parameters, exact enumeration of the joint pmf, and sampling.

Outcome configurations are enumerated in binary-counting order with the
first node least significant, so config ``c`` has ``y_j = (c >> j) & 1``.
All enumeration-dependent outputs inherit this fixed order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionError, EnumerationLimitError

ENUMERATION_CAP = 15  # 2**15 configurations; the studies here use q = 3 or 4
SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class IsingParams:
    """Symmetric Ising parameters.

    ``node_coefs`` holds one coefficient vector per node over the adjustment
    covariates ``w`` (length ``d + 1`` including the intercept slot), and
    ``pair_coefs`` is the symmetric matrix of pairwise interactions with a
    zero diagonal.
    """

    node_coefs: np.ndarray
    pair_coefs: np.ndarray
    q: int = field(init=False)
    d: int = field(init=False)

    def __post_init__(self):
        node = np.array(self.node_coefs, dtype=float)
        pair = np.array(self.pair_coefs, dtype=float)
        if node.ndim != 2:
            raise DimensionError("node_coefs must be (q, d+1)")
        q = node.shape[0]
        if pair.shape != (q, q):
            raise DimensionError(f"pair_coefs must be ({q}, {q}), got {pair.shape}")
        if np.max(np.abs(pair - pair.T), initial=0.0) > SYMMETRY_TOL:
            raise DimensionError("pair_coefs must be symmetric")
        if np.any(np.diag(pair) != 0.0):
            raise DimensionError("pair_coefs diagonal must be zero")
        node.flags.writeable = False
        pair.flags.writeable = False
        object.__setattr__(self, "node_coefs", node)
        object.__setattr__(self, "pair_coefs", pair)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "d", node.shape[1] - 1)

    @classmethod
    def from_matrix(cls, theta):
        """Build from a dense q x q matrix whose diagonal holds intercepts (d = 0)."""
        theta = np.asarray(theta, dtype=float)
        node = np.diag(theta).reshape(-1, 1).copy()
        pair = theta - np.diag(np.diag(theta))
        return cls(node, pair)


def enumerate_configs(q: int) -> np.ndarray:
    """All 2**q binary outcome configurations as a (2**q, q) int array."""
    if q > ENUMERATION_CAP:
        raise EnumerationLimitError(f"q={q} exceeds enumeration cap {ENUMERATION_CAP}")
    idx = np.arange(2 ** q)
    return ((idx[:, None] >> np.arange(q)[None, :]) & 1).astype(np.int64)


def _check_w(w, d):
    w = np.asarray(w, dtype=float)
    if w.ndim == 1:
        if w.shape[0] != d + 1:
            raise DimensionError(f"w must have length {d + 1}, got {w.shape[0]}")
        if w[0] != 1.0:
            raise DimensionError("w must carry a leading intercept entry equal to 1")
    else:
        if w.shape[1] != d + 1:
            raise DimensionError(f"w must have {d + 1} columns, got {w.shape[1]}")
        if np.any(w[:, 0] != 1.0):
            raise DimensionError("every w row must carry a leading intercept entry equal to 1")
    return w


def log_unnormalized(theta: IsingParams, y, w) -> float:
    """Log of the unnormalized pmf: sum_j (theta_jj' w) y_j + sum_{k>j} theta_jk y_j y_k."""
    y = np.asarray(y)
    if y.shape[0] != theta.q:
        raise DimensionError(f"y must have length {theta.q}")
    w = _check_w(w, theta.d)
    node_part = float((theta.node_coefs @ w) @ y)
    pair_part = 0.5 * float(y @ theta.pair_coefs @ y)
    return node_part + pair_part


def config_logweights(theta: IsingParams, W) -> np.ndarray:
    """Unnormalized log pmf for every configuration and every row of ``W``.

    Returns an (m, 2**q) array aligned with :func:`enumerate_configs`.
    """
    W = np.atleast_2d(_check_w(W, theta.d))
    configs = enumerate_configs(theta.q)
    node_lin = W @ theta.node_coefs.T  # (m, q)
    pair_term = 0.5 * np.einsum("cj,jk,ck->c", configs, theta.pair_coefs, configs)
    return node_lin @ configs.T + pair_term[None, :]


def joint_pmf(theta: IsingParams, w) -> np.ndarray:
    """Exact joint pmf over all 2**q configurations for one covariate vector."""
    logw = config_logweights(theta, np.asarray(w, dtype=float)[None, :])[0]
    logw -= np.max(logw)
    p = np.exp(logw)
    return p / p.sum()


def conditional_logodds(theta: IsingParams, j: int, y_rest, w) -> float:
    """Log-odds of node ``j`` given the remaining nodes and ``w``.

    ``y_rest`` lists the other nodes in index order (node ``j`` removed).
    """
    if not 0 <= j < theta.q:
        raise DimensionError(f"node index {j} out of range for q={theta.q}")
    y_rest = np.asarray(y_rest, dtype=float)
    if y_rest.shape[0] != theta.q - 1:
        raise DimensionError(f"y_rest must have length {theta.q - 1}")
    w = _check_w(np.asarray(w, dtype=float), theta.d)
    others = np.delete(np.arange(theta.q), j)
    return float(theta.node_coefs[j] @ w + theta.pair_coefs[j, others] @ y_rest)


def sample(theta: IsingParams, w, rng: np.random.Generator, count: int) -> np.ndarray:
    """Draw ``count`` i.i.d. configurations by inverse CDF over the exact pmf."""
    pmf = joint_pmf(theta, w)
    cdf = np.cumsum(pmf)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, rng.random(count), side="right")
    return enumerate_configs(theta.q)[idx]
