import numpy as np
import pytest
from sklearn.base import clone

from sciss.estimators import (
    DensityRatioIsing,
    EnsembleIsing,
    ScissIsing,
    SupervisedIsing,
    check_semisupervised,
)
from sciss.ising import IsingParams, sample
from sciss.simulate import THETA_MAIN

W1 = np.ones(1)


def semisup_arrays(n=250, N=1500, seed=0):
    rng = np.random.default_rng(seed)
    Yfull = sample(THETA_MAIN, W1, rng, n + N).astype(float)
    X = 3.0 * Yfull + rng.standard_normal((n + N, 3))
    Y = Yfull.copy()
    Y[n:] = np.nan
    return X, Y


class TestValidation:
    def test_split_and_intercept(self):
        X, Y = semisup_arrays()
        YL, XL, WL, XU, WU = check_semisupervised(X, Y)
        assert YL.shape == (250, 3) and XU.shape == (1500, 3)
        np.testing.assert_array_equal(WL, np.ones((250, 1)))

    def test_partial_row_rejected(self):
        X, Y = semisup_arrays()
        Y[0, 1] = np.nan
        with pytest.raises(ValueError, match="partially observed"):
            check_semisupervised(X, Y)

    def test_nonbinary_rejected(self):
        X, Y = semisup_arrays()
        Y[0, 0] = 2.0
        with pytest.raises(ValueError, match="0 or 1"):
            check_semisupervised(X, Y)

    def test_adjust_alignment(self):
        X, Y = semisup_arrays()
        with pytest.raises(ValueError, match="align"):
            check_semisupervised(X, Y, adjust=np.ones(5))

    def test_adjust_gains_intercept(self):
        X, Y = semisup_arrays()
        adjust = np.arange(X.shape[0], dtype=float)
        _, _, WL, _, WU = check_semisupervised(X, Y, adjust=adjust)
        assert WL.shape[1] == 2
        np.testing.assert_array_equal(WL[:, 0], 1.0)


class TestEstimatorAPI:
    def test_supervised_fit_attributes(self):
        X, Y = semisup_arrays()
        est = SupervisedIsing().fit(X, Y)
        assert est.report_.method == "SL"
        assert est.theta_pairs_.shape == (3, 3)
        assert np.array_equal(est.theta_pairs_, est.theta_pairs_.T)
        assert np.all(est.se_pairs_ >= 0)
        lo, hi = est.ci_pairs_
        assert np.all(lo <= est.theta_pairs_) and np.all(est.theta_pairs_ <= hi)

    @pytest.mark.parametrize("conditional,tag", [("pos", "SCISS-PoS"), ("aug", "SCISS-Aug")])
    def test_sciss_variants(self, conditional, tag):
        X, Y = semisup_arrays(seed=1)
        est = ScissIsing(conditional=conditional).fit(X, Y)
        assert est.report_.method == tag
        # the projection correction should not inflate the reported variance
        sl = SupervisedIsing().fit(X, Y)
        off = ~np.eye(3, dtype=bool)
        assert np.mean(est.se_pairs_[off]) < np.mean(sl.se_pairs_[off])

    def test_intrinsic_variant(self):
        X, Y = semisup_arrays(seed=2)
        est = ScissIsing(conditional="aug", intrinsic=True).fit(X, Y)
        assert est.report_.method == "INTR"
        assert "objective_paths" in est.diagnostics_

    def test_ensemble(self):
        X, Y = semisup_arrays(seed=3)
        est = EnsembleIsing().fit(X, Y)
        assert est.report_.method == "ES"
        for alpha in est.diagnostics_["alpha"].values():
            assert sum(alpha) == pytest.approx(1.0, abs=1e-9)

    def test_density_ratio(self):
        X, Y = semisup_arrays(seed=4)
        est = DensityRatioIsing().fit(X, Y)
        assert est.report_.method == "DR"

    def test_get_params_and_clone(self):
        est = ScissIsing(conditional="aug", families="poisson", penalty=0.01)
        params = est.get_params()
        assert params == {"conditional": "aug", "families": "poisson",
                          "penalty": 0.01, "intrinsic": False}
        cloned = clone(est)
        assert cloned.get_params() == params

    def test_predict_joint_proba(self):
        X, Y = semisup_arrays(seed=5)
        est = SupervisedIsing().fit(X, Y)
        pmf = est.predict_joint_proba()
        assert pmf.shape == (8,)
        assert pmf.sum() == pytest.approx(1.0, abs=1e-12)

    def test_sample_from_fit(self):
        X, Y = semisup_arrays(seed=6)
        est = SupervisedIsing().fit(X, Y)
        draws = est.sample(100, np.random.default_rng(0))
        assert draws.shape == (100, 3)
        assert set(np.unique(draws)) <= {0, 1}

    def test_unfitted_predict_raises(self):
        with pytest.raises(ValueError, match="not fitted"):
            SupervisedIsing().predict_joint_proba()


class TestAdjustmentCovariates:
    """End-to-end fits with a real adjustment covariate (d = 1)."""

    def _data(self, seed=7, n=300, N=1200):
        rng = np.random.default_rng(seed)
        total = n + N
        w = rng.uniform(-1.0, 1.0, total)
        theta = IsingParams(np.array([[0.2, 0.8], [-0.1, -0.5], [0.0, 0.3]]),
                            THETA_MAIN.pair_coefs)
        Y = np.empty((total, 3))
        for i in range(total):
            wi = np.array([1.0, w[i]])
            Y[i] = sample(theta, wi, rng, 1)[0]
        X = 2.5 * Y + rng.standard_normal((total, 3))
        Ymask = Y.copy()
        Ymask[n:] = np.nan
        return X, Ymask, w, theta

    @pytest.mark.parametrize("estimator", [
        SupervisedIsing(),
        ScissIsing(conditional="pos"),
        ScissIsing(conditional="aug"),
        DensityRatioIsing(),
    ])
    def test_fit_shapes_and_recovery(self, estimator):
        X, Y, w, theta = self._data()
        est = estimator.fit(X, Y, adjust=w)
        assert est.theta_nodes_.shape == (3, 2)
        assert est.se_nodes_.shape == (3, 2)
        assert np.all(np.isfinite(est.se_pairs_))
        # loose sanity on recovery: within four standard errors everywhere
        err_pairs = np.abs(est.theta_pairs_ - theta.pair_coefs)
        off = ~np.eye(3, dtype=bool)
        assert np.all(err_pairs[off] <= 4.0 * est.se_pairs_[off] + 1e-9)
        err_nodes = np.abs(est.theta_nodes_ - theta.node_coefs)
        assert np.all(err_nodes <= 4.0 * est.se_nodes_ + 1e-9)
