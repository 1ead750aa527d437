"""scikit-learn style wrappers around the functional optimizers.

``GaussianVI`` fits a full-covariance Gaussian to an unnormalized target;
``BayesianLogisticRegressionVI`` fits the posterior of a logistic
regression and predicts by averaging over posterior draws.
"""

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import gaussian as gs
from ._random import as_generator
from .objectives import EstimatorConfig, estimate_vr_iwae
from .optimizers import OptimizerConfig, run
from .targets import DEFAULT_PRIOR_VAR, LogisticPosterior, TargetModel


class GaussianVI(BaseEstimator):
    """Gaussian variational approximation of an unnormalized target.

    Parameters
    ----------
    method : {"bw", "adam_full", "adam_meanfield"}
        ``"bw"`` runs Bures-Wasserstein descent on the IW-ELBO (or the
        VR-IWAE bound when ``alpha > 0``); the ADAM options are Euclidean
        baselines.
    K, M : int
        Importance samples per replicate and replicates per iteration.
    alpha : float
        VR-IWAE power in ``[0, 1)``.
    eta : float
        BW step size.
    lr : float
        ADAM learning rate.
    max_iters : int
    grad_method : {"hessian", "stein"}
    stop_tol : float
        Relative plateau tolerance; ``<= 0`` disables early stopping.
    init_mean, init_cov : array-like, optional
        Initial state; defaults to ``N(0, I)``.
    random_state : int

    Attributes
    ----------
    state_ : GaussianState
    mean_, covariance_ : ndarray
    trace_ : list of RunRecord
    n_iter_ : int
    """

    def __init__(
        self,
        method="bw",
        K=1,
        M=64,
        alpha=0.0,
        eta=0.1,
        lr=1e-2,
        max_iters=500,
        grad_method="hessian",
        stop_tol=1e-4,
        init_mean=None,
        init_cov=None,
        random_state=0,
    ):
        self.method = method
        self.K = K
        self.M = M
        self.alpha = alpha
        self.eta = eta
        self.lr = lr
        self.max_iters = max_iters
        self.grad_method = grad_method
        self.stop_tol = stop_tol
        self.init_mean = init_mean
        self.init_cov = init_cov
        self.random_state = random_state

    def _config(self):
        return OptimizerConfig(
            eta=self.eta,
            max_iters=self.max_iters,
            K=self.K,
            M=self.M,
            alpha=self.alpha,
            stop_tol=self.stop_tol,
            seed=self.random_state,
            method=self.method,
            grad_method=self.grad_method,
            lr=self.lr,
        )

    def _init_state(self, dim):
        mean = np.zeros(dim) if self.init_mean is None else np.asarray(self.init_mean, float)
        cov = np.eye(dim) if self.init_cov is None else np.asarray(self.init_cov, float)
        return gs.GaussianState(mean, cov)

    def fit(self, target, y=None):
        """Optimize the approximation for ``target`` (a :class:`TargetModel`)."""
        if not isinstance(target, TargetModel):
            raise TypeError("fit expects a TargetModel")
        cfg = self._config()
        state, trace = run(target, self._init_state(target.dim), cfg)
        self.state_ = state
        self.mean_ = state.mean
        self.covariance_ = state.covariance
        self.trace_ = trace
        self.n_iter_ = len(trace)
        self.n_features_in_ = target.dim
        return self

    def sample(self, n_samples=1, random_state=None):
        check_is_fitted(self, "state_")
        return gs.sample(self.state_, as_generator(random_state), n_samples)

    def score_samples(self, X):
        """Log-density of the fitted Gaussian at each row of ``X``."""
        check_is_fitted(self, "state_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return gs.log_density(self.state_, X)

    def score(self, target, y=None, K=None, M=1000):
        """IW-ELBO (VR-IWAE when ``alpha > 0``) of the fit on ``target``."""
        check_is_fitted(self, "state_")
        cfg = EstimatorConfig(K=self.K if K is None else K, M=M, alpha=self.alpha, seed=self.random_state)
        return estimate_vr_iwae(target, self.state_, cfg).value


class BayesianLogisticRegressionVI(ClassifierMixin, BaseEstimator):
    """Binary logistic regression with a Gaussian variational posterior.

    The posterior over coefficients (prior ``N(0, prior_var I)``) is
    approximated by :class:`GaussianVI`. Predicted probabilities average the
    sigmoid over ``n_predict_samples`` posterior draws.
    """

    def __init__(
        self,
        prior_var=DEFAULT_PRIOR_VAR,
        method="bw",
        K=8,
        M=64,
        eta=0.1,
        lr=1e-2,
        max_iters=500,
        init_scale=0.1,
        n_predict_samples=1000,
        random_state=0,
    ):
        self.prior_var = prior_var
        self.method = method
        self.K = K
        self.M = M
        self.eta = eta
        self.lr = lr
        self.max_iters = max_iters
        self.init_scale = init_scale
        self.n_predict_samples = n_predict_samples
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        check_classification_targets(y)
        self.classes_ = np.unique(y)
        if self.classes_.size != 2:
            raise ValueError(f"need exactly two classes, got {self.classes_.size}")
        labels = (y == self.classes_[1]).astype(float)
        self.posterior_ = LogisticPosterior(X, labels, self.prior_var)
        d = X.shape[1]
        self.vi_ = GaussianVI(
            method=self.method,
            K=self.K,
            M=self.M,
            eta=self.eta,
            lr=self.lr,
            max_iters=self.max_iters,
            init_cov=self.init_scale * np.eye(d),
            random_state=self.random_state,
        ).fit(self.posterior_)
        self.coef_ = self.vi_.mean_
        self.n_features_in_ = d
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "vi_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        theta = self.vi_.sample(self.n_predict_samples, self.random_state)
        p1 = expit(X @ theta.T).mean(axis=1)
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X):
        return self.classes_[(self.predict_proba(X)[:, 1] > 0.5).astype(int)]
