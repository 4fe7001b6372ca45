"""Scikit-learn style estimators wrapping the functional core.

All estimators share the same ``fit(X, Y, adjust=None)`` signature: ``X``
holds the auxiliary features for every subject, ``Y`` the binary outcome
matrix with ``NaN`` rows marking unlabeled subjects, and ``adjust`` any
adjustment covariates (an intercept is always added).  Fitted attributes
follow the trailing-underscore convention and every estimator exposes the
full :class:`~sciss.report.EstimateReport` as ``report_``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .ising import joint_pmf, sample
from .pipeline import fit_methods


def check_semisupervised(X, Y, adjust=None):
    """Validate and split semi-supervised arrays.

    Returns ``(YL, XL, WL, XU, WU)`` with the intercept column prepended to
    the adjustment covariates.  ``Y`` rows must be fully observed (binary) or
    fully missing.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim != 2 or Y.ndim != 2:
        raise ValueError("X and Y must be 2-dimensional arrays")
    if X.shape[0] != Y.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
    if not np.all(np.isfinite(X)):
        raise ValueError("X must be finite")
    missing = np.isnan(Y)
    partial = missing.any(axis=1) & ~missing.all(axis=1)
    if partial.any():
        raise ValueError(f"row {int(np.flatnonzero(partial)[0])} has a partially observed outcome")
    labeled = ~missing.any(axis=1)
    YL = Y[labeled]
    if YL.size == 0:
        raise ValueError("no fully labeled rows")
    if not np.all(np.isin(YL, (0.0, 1.0))):
        raise ValueError("observed outcomes must be 0 or 1")
    if adjust is None:
        W = np.ones((X.shape[0], 1))
    else:
        adjust = np.asarray(adjust, dtype=float)
        if adjust.ndim == 1:
            adjust = adjust[:, None]
        if adjust.shape[0] != X.shape[0]:
            raise ValueError("adjust must align with X rows")
        if not np.all(np.isfinite(adjust)):
            raise ValueError("adjust must be finite")
        W = np.hstack([np.ones((X.shape[0], 1)), adjust])
    return YL, X[labeled], W[labeled], X[~labeled], W[~labeled]


class _IsingEstimatorBase(BaseEstimator):
    """Shared fit plumbing; subclasses declare the method tag to extract."""

    _tag = None

    def _methods(self):
        return (self._tag,)

    def _families(self):
        return getattr(self, "families", "gaussian")

    def _lam(self):
        return getattr(self, "penalty", None)

    def fit(self, X, Y, adjust=None):
        YL, XL, WL, XU, WU = check_semisupervised(X, Y, adjust)
        reports = fit_methods(YL, XL, WL, XU, WU, methods=self._methods(),
                              families=self._families(), lam=self._lam(),
                              intr_base=getattr(self, "conditional", "aug"))
        report = reports[self._tag]
        self.report_ = report
        self.theta_ = report.theta
        self.theta_pairs_ = report.theta.pair_coefs
        self.theta_nodes_ = report.theta.node_coefs
        self.se_pairs_ = report.se_pairs
        self.se_nodes_ = report.se_nodes
        self.ci_pairs_ = report.ci_pairs
        self.ci_nodes_ = report.ci_nodes
        self.diagnostics_ = report.diagnostics
        self.n_labeled_ = report.n_labeled
        self.n_unlabeled_ = report.n_unlabeled
        return self

    def predict_joint_proba(self, adjust=None):
        """Fitted joint pmf over all 2**q outcome configurations.

        With intercept-only adjustment this is a single distribution;
        otherwise one row per ``adjust`` row.
        """
        if not hasattr(self, "theta_"):
            raise ValueError("estimator is not fitted")
        if adjust is None:
            if self.theta_.d:
                raise ValueError("model has adjustment covariates; pass adjust")
            return joint_pmf(self.theta_, np.ones(1))
        adjust = np.atleast_2d(np.asarray(adjust, dtype=float))
        W = np.hstack([np.ones((adjust.shape[0], 1)), adjust])
        return np.vstack([joint_pmf(self.theta_, w) for w in W])

    def sample(self, count, rng, adjust=None):
        """Exact draws from the fitted model at one adjustment setting."""
        if not hasattr(self, "theta_"):
            raise ValueError("estimator is not fitted")
        w = np.ones(1) if adjust is None else np.concatenate([[1.0], np.atleast_1d(adjust)])
        return sample(self.theta_, w, rng, count)


class SupervisedIsing(_IsingEstimatorBase):
    """Node-wise logistic estimator using labeled rows only."""

    _tag = "SL"


class ScissIsing(_IsingEstimatorBase):
    """Semi-supervised estimator with a projected-score correction.

    Parameters
    ----------
    conditional : {"pos", "aug"}
        Conditional model backend: post-hoc surrogate densities or the
        feature-augmented Ising model.
    families : str or sequence of str
        Surrogate family per node (gaussian, logistic, poisson); count
        (poisson) columns are log(x + 1)-transformed for the augmented
        backend and for nothing else.
    penalty : float, optional
        Ridge level for the augmented fit; defaults to ``n ** -0.75``.
    intrinsic : bool
        Refine the conditional model per pair by directly minimizing the
        estimator's empirical variance.
    """

    def __init__(self, conditional="pos", families="gaussian", penalty=None,
                 intrinsic=False):
        self.conditional = conditional
        self.families = families
        self.penalty = penalty
        self.intrinsic = intrinsic

    @property
    def _tag(self):
        if self.intrinsic:
            return "INTR"
        return "SCISS-Aug" if self.conditional == "aug" else "SCISS-PoS"


class EnsembleIsing(_IsingEstimatorBase):
    """Variance-optimal convex combination of SL and both SCISS variants."""

    _tag = "ES"

    def __init__(self, families="gaussian", penalty=None):
        self.families = families
        self.penalty = penalty


class DensityRatioIsing(_IsingEstimatorBase):
    """Importance-weighted baseline using a labeled-vs-unlabeled classifier."""

    _tag = "DR"

    def __init__(self, families="gaussian"):
        self.families = families
