import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sciss.exceptions import DimensionError, EnumerationLimitError
from sciss.ising import (
    IsingParams,
    conditional_logodds,
    enumerate_configs,
    joint_pmf,
    log_unnormalized,
    sample,
)

from conftest import random_ising

W1 = np.ones(1)


class TestParams:
    def test_asymmetric_rejected(self):
        pair = np.array([[0.0, 0.3], [0.2, 0.0]])
        with pytest.raises(DimensionError):
            IsingParams(np.zeros((2, 1)), pair)

    def test_nonzero_diagonal_rejected(self):
        pair = np.array([[0.1, 0.0], [0.0, 0.0]])
        with pytest.raises(DimensionError):
            IsingParams(np.zeros((2, 1)), pair)

    def test_from_matrix_roundtrip(self, theta_main):
        assert theta_main.q == 3 and theta_main.d == 0
        np.testing.assert_array_equal(np.diag(theta_main.pair_coefs), np.zeros(3))
        np.testing.assert_array_equal(theta_main.node_coefs[:, 0], [0.1, -0.3, 0.2])


class TestLogUnnormalized:
    def test_zero_params(self):
        theta = IsingParams(np.zeros((3, 1)), np.zeros((3, 3)))
        assert log_unnormalized(theta, [1, 0, 1], W1) == 0.0

    def test_two_node_sum(self):
        theta = IsingParams(np.array([[0.7], [-0.2]]),
                            np.array([[0.0, 1.1], [1.1, 0.0]]))
        assert log_unnormalized(theta, [1, 1], W1) == pytest.approx(0.7 - 0.2 + 1.1)

    def test_main_setting_value(self, theta_main):
        # theta_11 + theta_33 + theta_13 = 0.1 + 0.2 - 0.6
        assert log_unnormalized(theta_main, [1, 0, 1], W1) == pytest.approx(-0.3)

    def test_intercept_validated(self, theta_main):
        with pytest.raises(DimensionError):
            log_unnormalized(theta_main, [1, 0, 1], np.array([2.0]))


class TestJointPmf:
    def test_zero_params_uniform(self):
        theta = IsingParams(np.zeros((3, 1)), np.zeros((3, 3)))
        np.testing.assert_allclose(joint_pmf(theta, W1), np.full(8, 1 / 8))

    def test_single_node_null(self):
        theta = IsingParams(np.zeros((1, 1)), np.zeros((1, 1)))
        np.testing.assert_allclose(joint_pmf(theta, W1), [0.5, 0.5])

    def test_proportional_to_exp_logweight(self, theta_main):
        pmf = joint_pmf(theta_main, W1)
        assert pmf.sum() == pytest.approx(1.0, abs=1e-12)
        raw = np.array([
            np.exp(log_unnormalized(theta_main, y, W1)) for y in enumerate_configs(3)
        ])
        np.testing.assert_allclose(pmf, raw / raw.sum(), atol=1e-12)

    def test_cap(self):
        with pytest.raises(EnumerationLimitError):
            enumerate_configs(16)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(min_value=1, max_value=8), st.integers(min_value=0, max_value=2 ** 31))
    def test_normalizes_for_random_params(self, q, seed):
        theta = random_ising(np.random.default_rng(seed), q, scale=3.0)
        assert abs(joint_pmf(theta, W1).sum() - 1.0) < 1e-12

    def test_node_permutation_permutes_pmf(self, rng, theta_main):
        perm = np.array([2, 0, 1])
        theta_p = IsingParams(theta_main.node_coefs[perm],
                              theta_main.pair_coefs[np.ix_(perm, perm)])
        pmf = joint_pmf(theta_main, W1)
        pmf_p = joint_pmf(theta_p, W1)
        configs = enumerate_configs(3)
        # config index under the relabeling y'_new = y_old[perm[new]]
        for c, y in enumerate(configs):
            c_new = int(np.sum(y[perm] * 2 ** np.arange(3)))
            assert pmf_p[c_new] == pytest.approx(pmf[c], abs=1e-14)


class TestConditionalLogodds:
    def test_zero_params(self):
        theta = IsingParams(np.zeros((3, 1)), np.zeros((3, 3)))
        assert conditional_logodds(theta, 0, [0, 1], W1) == 0.0

    def test_flip_changes_by_pair_coef(self, theta_main):
        base = conditional_logodds(theta_main, 0, [0, 0], W1)
        flipped = conditional_logodds(theta_main, 0, [1, 0], W1)
        assert flipped - base == pytest.approx(theta_main.pair_coefs[0, 1])

    def test_main_setting_value(self, theta_main):
        # theta_11 + theta_12 * 1 + theta_13 * 0 = 0.1 + 0.3
        assert conditional_logodds(theta_main, 0, [1, 0], W1) == pytest.approx(0.4)

    @pytest.mark.parametrize("q", [2, 3, 4, 5, 6])
    def test_matches_pmf_ratio_exhaustively(self, q):
        theta = random_ising(np.random.default_rng(q), q, scale=1.5)
        pmf = joint_pmf(theta, W1)
        configs = enumerate_configs(q)
        weights = {tuple(y): p for y, p in zip(configs, pmf)}
        for j in range(q):
            for rest in enumerate_configs(q - 1):
                y1 = np.insert(rest, j, 1)
                y0 = np.insert(rest, j, 0)
                direct = np.log(weights[tuple(y1)] / weights[tuple(y0)])
                assert conditional_logodds(theta, j, rest, W1) == pytest.approx(
                    direct, abs=1e-10
                )


class TestSample:
    def test_uniform_frequencies(self, rng):
        theta = IsingParams(np.zeros((3, 1)), np.zeros((3, 3)))
        draws = sample(theta, W1, rng, 100_000)
        codes = draws @ (2 ** np.arange(3))
        freq = np.bincount(codes, minlength=8) / 100_000
        np.testing.assert_allclose(freq, 1 / 8, atol=0.01)

    def test_saturated_node(self, rng):
        theta = IsingParams(np.array([[20.0], [0.0]]), np.zeros((2, 2)))
        draws = sample(theta, W1, rng, 2000)
        assert np.all(draws[:, 0] == 1)

    def test_main_setting_against_exact_pmf(self, rng, theta_main):
        count = 1_000_000
        draws = sample(theta_main, W1, rng, count)
        codes = draws @ (2 ** np.arange(3))
        freq = np.bincount(codes, minlength=8) / count
        pmf = joint_pmf(theta_main, W1)
        band = 3.0 * np.sqrt(pmf * (1 - pmf) / count)
        assert np.all(np.abs(freq - pmf) <= band + 1e-12)
