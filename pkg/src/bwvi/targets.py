"""Unnormalized target log-densities with analytic derivatives.

All evaluations are vectorized: a point array of shape ``(..., d)`` yields
log-densities ``(...)``, gradients ``(..., d)`` and Hessians ``(..., d, d)``.
"""

import numpy as np
from scipy.special import expit, logsumexp

from . import gaussian as gs
from .exceptions import DimensionMismatch

DEFAULT_PRIOR_VAR = 10.0


class TargetModel:
    """Interface for an unnormalized log-density ``log p(x, z)``.

    Subclasses set ``dim`` and implement :meth:`log_unnorm` and
    :meth:`grad_log_unnorm`. ``has_hessian`` and ``has_log_normalizer``
    advertise the optional methods. The normalizer exists for test oracles;
    none of the estimators consume it.
    """

    dim = None
    has_hessian = False
    has_log_normalizer = False

    def log_unnorm(self, z):
        raise NotImplementedError

    def grad_log_unnorm(self, z):
        raise NotImplementedError

    def hess_log_unnorm(self, z):
        raise NotImplementedError(f"{type(self).__name__} has no Hessian")

    def log_normalizer(self):
        raise NotImplementedError(f"{type(self).__name__} has no known normalizer")

    def _check(self, z):
        z = np.asarray(z, dtype=float)
        if z.shape[-1] != self.dim:
            raise DimensionMismatch(
                f"points have trailing dimension {z.shape[-1]}, expected {self.dim}"
            )
        return z


class GaussianTarget(TargetModel):
    """``exp(log_scale) * N(z; mean, cov)``.

    With ``log_scale = log c`` and the parameters of a variational state this
    is the constant-weight target ``c * q``.
    """

    has_hessian = True
    has_log_normalizer = True

    def __init__(self, mean, cov, log_scale=0.0):
        self.state = gs.GaussianState(mean, cov)
        self.dim = self.state.dim
        self.log_scale = float(log_scale)

    @classmethod
    def like(cls, state, log_scale=0.0):
        return cls(state.mean, state.covariance, log_scale)

    def log_unnorm(self, z):
        return gs.log_density(self.state, self._check(z)) + self.log_scale

    def grad_log_unnorm(self, z):
        return gs.grad_log_density(self.state, self._check(z))

    def hess_log_unnorm(self, z):
        z = self._check(z)
        return np.broadcast_to(gs.hess_log_density(self.state), z.shape + (self.dim,))

    def log_normalizer(self):
        return self.log_scale


class EggboxGmm(TargetModel):
    """Gaussian mixture ``sum_k w_k N(mu_k, Sigma_k)``."""

    has_hessian = True
    has_log_normalizer = True

    def __init__(self, weights, means, covs):
        weights = np.asarray(weights, dtype=float)
        means = np.atleast_2d(np.asarray(means, dtype=float))
        covs = np.asarray(covs, dtype=float)
        n_comp, d = means.shape
        if weights.shape != (n_comp,) or covs.shape != (n_comp, d, d):
            raise DimensionMismatch("weights, means and covs disagree on shapes")
        if np.any(weights <= 0) or np.any(weights > 1):
            raise ValueError("weights must lie in (0, 1]")
        if not np.isclose(weights.sum(), 1.0, rtol=0, atol=1e-12):
            raise ValueError("weights must sum to 1")
        self.weights = weights
        self.means = means
        self.covs = covs
        self.dim = d
        self.components = [gs.GaussianState(m, c) for m, c in zip(means, covs)]
        self._precisions = np.stack([c.precision() for c in self.components])
        self._log_weights = np.log(weights)

    @classmethod
    def symmetric(cls, spacing=4.0):
        """Four equally weighted unit-covariance components at ``(+-s, +-s)``."""
        s = float(spacing)
        means = np.array([[s, s], [s, -s], [-s, s], [-s, -s]])
        return cls(np.full(4, 0.25), means, np.broadcast_to(np.eye(2), (4, 2, 2)).copy())

    def _component_terms(self, z):
        # per-component log w_k + log N_k(z), shape (..., n_comp)
        logs = [lw + gs.log_density(c, z) for lw, c in zip(self._log_weights, self.components)]
        return np.stack(logs, axis=-1)

    def _responsibilities(self, z):
        terms = self._component_terms(z)
        return np.exp(terms - logsumexp(terms, axis=-1, keepdims=True))

    def log_unnorm(self, z):
        return logsumexp(self._component_terms(self._check(z)), axis=-1)

    def _component_grads(self, z):
        # -P_k (z - mu_k), shape (..., n_comp, d)
        diff = z[..., None, :] - self.means
        return -np.einsum("kij,...kj->...ki", self._precisions, diff)

    def grad_log_unnorm(self, z):
        z = self._check(z)
        r = self._responsibilities(z)
        return np.einsum("...k,...ki->...i", r, self._component_grads(z))

    def hess_log_unnorm(self, z):
        z = self._check(z)
        r = self._responsibilities(z)
        g = self._component_grads(z)
        gbar = np.einsum("...k,...ki->...i", r, g)
        second = np.einsum("...k,...ki,...kj->...ij", r, g, g)
        curv = -np.einsum("...k,kij->...ij", r, self._precisions)
        return curv + second - gbar[..., :, None] * gbar[..., None, :]

    def log_normalizer(self):
        return 0.0


def mixture_moments(mixture):
    """Mean and covariance of a Gaussian mixture."""
    w = mixture.weights
    mean = w @ mixture.means
    centered = mixture.means - mean
    cov = np.einsum("k,kij->ij", w, mixture.covs) + (centered.T * w) @ centered
    return mean, 0.5 * (cov + cov.T)


class BananaTarget(TargetModel):
    """Gaussian ``N(0, diag(base_var, 1, ..., 1))`` composed with the warp
    ``phi(z) = (z1, z2 + b z1^2 - base_var b, z3, ...)``.

    ``phi`` has unit Jacobian determinant, so the composed density is
    normalized and no volume correction appears.
    """

    has_hessian = True
    has_log_normalizer = True

    def __init__(self, dim=2, b=0.03, base_var=100.0):
        if dim < 2:
            raise ValueError("banana target needs dim >= 2")
        self.dim = int(dim)
        self.b = float(b)
        self.base_var = float(base_var)
        variances = np.ones(self.dim)
        variances[0] = self.base_var
        self.base = gs.GaussianState(np.zeros(self.dim), np.diag(variances))
        self._inv_var = 1.0 / variances

    def warp(self, z):
        z = self._check(z)
        y = np.array(z, dtype=float, copy=True)
        y[..., 1] = z[..., 1] + self.b * z[..., 0] ** 2 - self.base_var * self.b
        return y

    def log_unnorm(self, z):
        y = self.warp(z)
        return -0.5 * np.sum(y * y * self._inv_var, axis=-1) - 0.5 * self.base.logdet - 0.5 * self.dim * gs.LOG_2PI

    def grad_log_unnorm(self, z):
        z = self._check(z)
        gy = -self.warp(z) * self._inv_var
        # J^T gy; the only off-diagonal Jacobian entry is d phi_2 / d z1 = 2 b z1
        grad = gy.copy()
        grad[..., 0] += 2.0 * self.b * z[..., 0] * gy[..., 1]
        return grad

    def hess_log_unnorm(self, z):
        z = self._check(z)
        gy = -self.warp(z) * self._inv_var
        J = np.broadcast_to(np.eye(self.dim), z.shape + (self.dim,)).copy()
        J[..., 1, 0] = 2.0 * self.b * z[..., 0]
        H = -np.einsum("...ki,k,...kj->...ij", J, self._inv_var, J)
        H[..., 0, 0] += 2.0 * self.b * gy[..., 1]
        return H

    def log_normalizer(self):
        return 0.0


def _softplus(u):
    # log(1 + e^u) = max(u, 0) + log(1 + e^{-|u|}); equals -log sigma(-u)
    return np.maximum(u, 0.0) + np.log1p(np.exp(-np.abs(u)))


class LogisticPosterior(TargetModel):
    """Bayesian logistic regression with a ``N(0, prior_var I)`` prior.

    ``log_unnorm`` is the log-likelihood minus ``|theta|^2 / (2 prior_var)``;
    the prior's normalizing constant is dropped.
    """

    has_hessian = True

    def __init__(self, features, labels, prior_var=DEFAULT_PRIOR_VAR):
        X = np.asarray(features, dtype=float)
        y = np.asarray(labels, dtype=float)
        if X.ndim != 2:
            raise ValueError("features must be a 2-D array")
        if y.shape != (X.shape[0],):
            raise DimensionMismatch("labels must have one entry per feature row")
        if not np.all((y == 0) | (y == 1)):
            raise ValueError("labels must be 0 or 1")
        if prior_var <= 0:
            raise ValueError("prior_var must be positive")
        self.features = X
        self.labels = y
        self.prior_var = float(prior_var)
        self.dim = X.shape[1]
        self._xty = y @ X

    def _logits(self, theta):
        return self._check(theta) @ self.features.T

    def log_unnorm(self, theta):
        theta = self._check(theta)
        # y log sigma(u) + (1 - y) log sigma(-u) = y u - log(1 + e^u)
        ll = theta @ self._xty - np.sum(_softplus(self._logits(theta)), axis=-1)
        return ll - 0.5 * np.sum(theta * theta, axis=-1) / self.prior_var

    def grad_log_unnorm(self, theta):
        theta = self._check(theta)
        resid = self.labels - expit(self._logits(theta))
        return resid @ self.features - theta / self.prior_var

    def hess_log_unnorm(self, theta):
        theta = self._check(theta)
        s = expit(self._logits(theta))
        curv = s * (1.0 - s)
        H = -np.swapaxes(curv[..., :, None] * self.features, -1, -2) @ self.features
        return H - np.eye(self.dim) / self.prior_var

    def mode(self, theta0=None, tol=1e-10, max_iter=100):
        """Posterior mode by Newton's method (the objective is strictly concave)."""
        theta = np.zeros(self.dim) if theta0 is None else np.asarray(theta0, dtype=float)
        for _ in range(max_iter):
            step = np.linalg.solve(self.hess_log_unnorm(theta), self.grad_log_unnorm(theta))
            theta = theta - step
            if np.max(np.abs(step)) < tol:
                break
        return theta


def synth_logistic(n, d, rng, true_theta=None, prior_var=DEFAULT_PRIOR_VAR):
    """Synthetic logistic-regression posterior with standard-normal features."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    theta = np.zeros(d) if true_theta is None else np.asarray(true_theta, dtype=float)
    if theta.shape != (d,):
        raise DimensionMismatch("true_theta must have length d")
    X = rng.standard_normal((n, d))
    y = (rng.random(n) < expit(X @ theta)).astype(float)
    return LogisticPosterior(X, y, prior_var)
