import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.linear_model import LogisticRegression

from bwvi.estimator import BayesianLogisticRegressionVI, GaussianVI
from bwvi.gaussian import GaussianState
from bwvi.targets import GaussianTarget, synth_logistic


class TestGaussianVI:
    def test_fits_gaussian(self):
        target = GaussianTarget([1.0, -0.5], [[1.0, 0.4], [0.4, 0.8]])
        est = GaussianVI(K=1, M=64, eta=0.1, max_iters=500, stop_tol=0).fit(target)
        np.testing.assert_allclose(est.mean_, target.state.mean, atol=1e-8)
        np.testing.assert_allclose(est.covariance_, target.state.covariance, atol=1e-8)
        assert est.n_iter_ == 500 and len(est.trace_) == 500
        assert est.n_features_in_ == 2

    def test_matches_functional_api(self):
        from bwvi.optimizers import OptimizerConfig, run_bw

        target = GaussianTarget([0.0, 0.0], np.eye(2))
        est = GaussianVI(K=4, M=16, eta=0.5, max_iters=20, stop_tol=0, init_mean=[1.0, 1.0], random_state=3)
        est.fit(target)
        q, _ = run_bw(
            target,
            GaussianState([1.0, 1.0], np.eye(2)),
            OptimizerConfig(K=4, M=16, eta=0.5, max_iters=20, stop_tol=0, seed=3),
        )
        np.testing.assert_array_equal(est.mean_, q.mean)
        np.testing.assert_array_equal(est.covariance_, q.covariance)

    def test_sample_and_score_samples(self):
        est = GaussianVI(max_iters=0).fit(GaussianTarget([0.0, 0.0], np.eye(2)))
        draws = est.sample(5, random_state=1)
        assert draws.shape == (5, 2)
        np.testing.assert_array_equal(draws, est.sample(5, random_state=1))
        np.testing.assert_allclose(est.score_samples(np.zeros((1, 2))), [-np.log(2 * np.pi)], rtol=1e-14)
        with pytest.raises(ValueError):
            est.score_samples(np.zeros((1, 3)))

    def test_score_at_optimum(self):
        target = GaussianTarget([0.0, 0.0], np.eye(2), log_scale=1.5)
        est = GaussianVI(max_iters=0).fit(target)
        assert est.score(target) == pytest.approx(1.5, abs=1e-12)

    @pytest.mark.parametrize("method", ["adam_full", "adam_meanfield"])
    def test_adam_methods(self, method):
        target = GaussianTarget([0.5, 0.5], np.eye(2))
        est = GaussianVI(method=method, M=16, lr=0.05, max_iters=300, stop_tol=0).fit(target)
        np.testing.assert_allclose(est.mean_, [0.5, 0.5], atol=0.2)

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            GaussianVI().sample(3)

    def test_rejects_non_target(self):
        with pytest.raises(TypeError):
            GaussianVI().fit(np.zeros((3, 2)))

    def test_params(self):
        est = GaussianVI(K=7, alpha=0.3)
        params = est.get_params()
        assert params["K"] == 7 and params["alpha"] == 0.3
        twin = clone(est)
        assert twin.get_params() == params and twin is not est


@pytest.fixture(scope="module")
def logistic_data():
    rng = np.random.default_rng(0)
    theta = np.array([2.0, -1.0, 0.5])
    target = synth_logistic(500, 3, rng, theta)
    return target.features, target.labels


class TestBayesianLogisticRegressionVI:
    def test_fit_predict(self, logistic_data):
        X, y = logistic_data
        clf = BayesianLogisticRegressionVI(max_iters=200, n_predict_samples=200).fit(X, y)
        assert clf.coef_.shape == (3,)
        assert clf.score(X, y) > 0.75
        # agrees with a weakly regularized MAP fit
        ref = LogisticRegression(C=10.0, fit_intercept=False).fit(X, y).coef_[0]
        np.testing.assert_allclose(clf.coef_, ref, atol=0.3)

    def test_proba(self, logistic_data):
        X, y = logistic_data
        clf = BayesianLogisticRegressionVI(max_iters=50, n_predict_samples=100).fit(X, y)
        p = clf.predict_proba(X[:10])
        assert p.shape == (10, 2)
        np.testing.assert_allclose(p.sum(axis=1), 1.0, rtol=1e-14)
        assert np.all((p >= 0) & (p <= 1))

    def test_string_labels(self, logistic_data):
        X, y = logistic_data
        labels = np.where(y == 1, "yes", "no")
        clf = BayesianLogisticRegressionVI(max_iters=50, n_predict_samples=100).fit(X, labels)
        assert set(clf.predict(X)) <= {"yes", "no"}
        np.testing.assert_array_equal(clf.classes_, ["no", "yes"])

    def test_requires_two_classes(self):
        X = np.zeros((4, 2))
        with pytest.raises(ValueError, match="two classes"):
            BayesianLogisticRegressionVI().fit(X, [0, 1, 2, 1])

    def test_feature_count(self, logistic_data):
        X, y = logistic_data
        clf = BayesianLogisticRegressionVI(max_iters=5).fit(X, y)
        with pytest.raises(ValueError):
            clf.predict(X[:, :2])

    def test_clone(self):
        clf = BayesianLogisticRegressionVI(K=4, prior_var=3.0)
        assert clone(clf).get_params() == clf.get_params()
