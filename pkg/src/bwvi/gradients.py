"""Wasserstein and Bures-Wasserstein gradient estimators.

Conventions
-----------
For a batch ``z_1, ..., z_K`` drawn from ``q`` the evaluation point is the
last sample ``z_K`` and

    g = w(z_K)^(1-alpha) / sum_i w(z_i)^(1-alpha),
    G = (alpha g + (1 - alpha) g^2) * grad log w(z_K).

``G`` is the Wasserstein gradient integrand of the bound (an ascent
direction). The BW gradient of the *negative* bound is ``(a, S)`` with
``a = -E[G]`` and ``S = -E[grad G]``, so descent along it raises the bound.

Normalizing sums are taken over log-weights sorted in ascending order, so
estimates do not depend on the order of the non-evaluation samples, bit for
bit.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve
from scipy.special import logsumexp

from . import gaussian as gs
from ._random import as_generator
from .exceptions import DegenerateVariance, HessianUnavailable, InvalidPoint, NonFiniteWeight
from .objectives import log_weights, replicate_bounds, summarize

METHODS = ("hessian", "stein")


def _sorted_logsumexp(x):
    return logsumexp(np.sort(x, axis=-1), axis=-1)


def weight_coefficient(log_g, alpha):
    """``alpha g + (1 - alpha) g^2`` from ``log g``; the square is formed in log space."""
    return alpha * np.exp(log_g) + (1.0 - alpha) * np.exp(2.0 * log_g)


def grad_log_weight(target, q, z):
    return target.grad_log_unnorm(z) - gs.grad_log_density(q, z)


def hess_log_weight(target, q, z):
    return target.hess_log_unnorm(z) - gs.hess_log_density(q)


@dataclass
class WeightBatch:
    """Samples with their log importance weights and normalized tempered weights."""

    samples: np.ndarray
    log_w: np.ndarray
    normalized: np.ndarray
    alpha: float = 0.0

    @classmethod
    def from_samples(cls, target, q, samples, alpha=0.0):
        samples = np.asarray(samples, dtype=float)
        lw = log_weights(target, q, samples)
        s = (1.0 - alpha) * lw
        normalized = np.exp(s - _sorted_logsumexp(s)[..., None])
        return cls(samples, lw, normalized, alpha)


@dataclass
class BwGradient:
    """Monte Carlo BW gradient ``(a, S)`` of the negative bound.

    ``mc_std_a`` and ``mc_std_S`` are standard errors of the entries of
    ``a`` and ``S``. ``objective`` is the bound estimated from the same
    batches.
    """

    a: np.ndarray
    S: np.ndarray
    mc_std_a: np.ndarray
    mc_std_S: np.ndarray
    method: str
    objective: object = None

    def tangent(self):
        return gs.TangentVector(self.a, self.S)


@dataclass
class SnrSample:
    """Independent realizations of the ``M``-replicate gradient estimator at ``z``."""

    z: np.ndarray
    K: int
    M: int
    values: np.ndarray  # (reps, d)

    @property
    def reps(self):
        return self.values.shape[0]


def _point_log_weight(target, q, z):
    z = np.asarray(z, dtype=float)
    lw_z = target.log_unnorm(z) - gs.log_density(q, z)
    if np.isnan(lw_z) or lw_z == np.inf:
        raise InvalidPoint(f"log-weight at evaluation point is {lw_z}")
    if lw_z == -np.inf:
        raise InvalidPoint("importance weight at evaluation point is zero")
    return float(lw_z)


def _wgrad_draws(target, q, z, K, n, rng, alpha):
    """``n`` single-replicate draws of the pointwise Wasserstein gradient, ``(n, d)``."""
    if K < 1:
        raise ValueError("K must be at least 1")
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must lie in [0, 1)")
    z = np.asarray(z, dtype=float)
    lw_z = _point_log_weight(target, q, z)
    u = grad_log_weight(target, q, z)
    scale = 1.0 - alpha
    if K == 1:
        log_g = np.zeros(n)
    else:
        eps = rng.standard_normal((n, K - 1, q.dim))
        lw = log_weights(target, q, gs.transform_noise(q, eps))
        s = np.concatenate([scale * lw, np.full((n, 1), scale * lw_z)], axis=1)
        log_g = scale * lw_z - _sorted_logsumexp(s)
    return weight_coefficient(log_g, alpha)[:, None] * u


def _mean_se(values):
    M = values.shape[0]
    se = np.std(values, axis=0, ddof=1) / np.sqrt(M) if M > 1 else np.zeros(values.shape[1:])
    return values.mean(axis=0), se


def wgrad_vriwae_at(target, q, z, K, M, alpha, rng=None):
    """Pointwise Wasserstein gradient of the VR-IWAE bound at ``z``.

    Averages ``M`` replicates, each with ``K - 1`` fresh samples from ``q``
    plus ``z`` itself in the normalizing sum. Returns ``(mean, std_error)``.
    """
    if K == 1:
        # the weight ratio is identically 1; skip the roundoff of averaging
        _point_log_weight(target, q, z)
        return grad_log_weight(target, q, np.asarray(z, dtype=float)), np.zeros(q.dim)
    values = _wgrad_draws(target, q, z, K, M, as_generator(rng), alpha)
    return _mean_se(values)


def wgrad_iwelbo_at(target, q, z, K, M, rng=None):
    """Pointwise Wasserstein gradient of the IW-ELBO at ``z``.

    ``E[(w(z) / (sum_{i<K} w(z_i) + w(z)))^2] * grad log w(z)``;
    returns ``(mean, std_error)`` over ``M`` replicates.
    """
    return wgrad_vriwae_at(target, q, z, K, M, 0.0, rng)


def wgrad_replicates(target, q, z, K, M, reps, rng=None, alpha=0.0):
    """``reps`` independent realizations of the ``M``-replicate estimator."""
    draws = _wgrad_draws(target, q, z, K, reps * M, as_generator(rng), alpha)
    values = draws.reshape(reps, M, q.dim).mean(axis=1)
    return SnrSample(np.asarray(z, dtype=float), K, M, values)


def snr(values):
    """Per-coordinate ``|mean| / sd`` of replicate values ``(reps, d)``.

    Returns ``(snr, mean, sd)``; raises :class:`DegenerateVariance` when a
    coordinate has zero sample standard deviation.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    if values.shape[0] < 2:
        raise ValueError("need at least two replicates")
    mean = values.mean(axis=0)
    sd = values.std(axis=0, ddof=1)
    if np.any(sd == 0):
        raise DegenerateVariance(
            f"zero replicate variance in coordinates {np.flatnonzero(sd == 0).tolist()}"
        )
    return np.abs(mean) / sd, mean, sd


def snr_estimate(target, q, z, K, M, reps, rng=None, alpha=0.0):
    """SNR of the Wasserstein gradient estimator at ``z``, per coordinate."""
    if reps < 30:
        raise ValueError("reps must be at least 30")
    sample = wgrad_replicates(target, q, z, K, M, reps, rng, alpha)
    return snr(sample.values)[0]


def reparam_iwelbo_grad(target, mean, chol, eps, diagonal=False):
    """Reparameterized IW-ELBO gradient in ``(mean, chol)`` coordinates.

    Parameters
    ----------
    mean : (d,)
    chol : (d, d) lower-triangular factor ``L``, or (d,) standard deviations
        when ``diagonal``.
    eps : (M, K, d) standard-normal noise; ``z = mean + L eps``.

    Returns
    -------
    grad_mean : (M, d) per-replicate gradient w.r.t. the mean
    grad_chol : (M, d, d) per-replicate gradient w.r.t. ``L`` (lower
        triangle), or (M, d) w.r.t. the standard deviations when ``diagonal``
    bounds : (M,) per-replicate IW-ELBO values
    """
    mean = np.asarray(mean, dtype=float)
    if diagonal:
        sd = np.asarray(chol, dtype=float)
        z = mean + eps * sd
        log_q = (
            -0.5 * np.sum(eps * eps, axis=-1) - np.sum(np.log(sd)) - 0.5 * mean.shape[0] * gs.LOG_2PI
        )
    else:
        L = np.asarray(chol, dtype=float)
        z = mean + eps @ L.T
        log_q = (
            -0.5 * np.sum(eps * eps, axis=-1)
            - np.sum(np.log(np.diag(L)))
            - 0.5 * mean.shape[0] * gs.LOG_2PI
        )
    lw = target.log_unnorm(z) - log_q
    if np.any(np.isnan(lw) | (lw == np.inf)):
        raise NonFiniteWeight("non-finite log-weight in reparameterized gradient")
    wbar = np.exp(lw - _sorted_logsumexp(lw)[..., None])
    score = target.grad_log_unnorm(z)
    grad_mean = np.einsum("mk,mki->mi", wbar, score)
    if diagonal:
        grad_chol = np.einsum("mk,mki->mi", wbar, score * eps) + 1.0 / sd
    else:
        outer = np.einsum("mk,mki,mkj->mij", wbar, score, eps)
        grad_chol = np.tril(outer) + np.diag(1.0 / np.diag(L))
    return grad_mean, grad_chol, replicate_bounds(lw)


def euclidean_grad_replicates(target, q, K, M, reps, rng=None):
    """Realizations of the ``M``-replicate Euclidean mean gradient, ``(reps, d)``."""
    rng = as_generator(rng)
    eps = rng.standard_normal((reps * M, K, q.dim))
    grad_mean, _, _ = reparam_iwelbo_grad(target, q.mean, q.chol, eps)
    return grad_mean.reshape(reps, M, q.dim).mean(axis=1)


def bw_grad(target, q, cfg, method="hessian", rng=None):
    """Monte Carlo BW gradient of the negative VR-IWAE bound (IW-ELBO at alpha 0).

    Draws ``cfg.M`` batches of ``cfg.K`` samples and evaluates the integrand
    at the last sample of each batch. ``method="hessian"`` differentiates the
    integrand with the target Hessian; ``method="stein"`` uses the Gaussian
    integration-by-parts identity ``E[grad G] = Sigma^{-1} E[(z - m) G^T]``
    and needs no Hessian.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    if method == "hessian" and not target.has_hessian:
        raise HessianUnavailable(f"{type(target).__name__} does not provide a Hessian")
    if cfg.M < 2:
        raise ValueError("bw_grad needs M >= 2 for standard errors")
    rng = as_generator(cfg.seed if rng is None else rng)
    alpha = cfg.alpha
    eps = rng.standard_normal((cfg.M, cfg.K, q.dim))
    z = gs.transform_noise(q, eps)
    lw = log_weights(target, q, z)
    s = (1.0 - alpha) * lw
    log_g = s[:, -1] - _sorted_logsumexp(s)
    coef = weight_coefficient(log_g, alpha)
    z_eval = z[:, -1]
    u = grad_log_weight(target, q, z_eval)
    G = coef[:, None] * u

    if method == "hessian":
        g = np.exp(log_g)
        dcoef = (1.0 - alpha) * (g - g * g) * (alpha + 2.0 * (1.0 - alpha) * g)
        H = hess_log_weight(target, q, z_eval)
        S_batches = -(dcoef[:, None, None] * u[:, :, None] * u[:, None, :] + coef[:, None, None] * H)
    else:
        B = cho_solve((q.chol, True), (z_eval - q.mean).T, check_finite=False).T
        outer = B[:, :, None] * G[:, None, :]
        S_batches = -0.5 * (outer + np.swapaxes(outer, 1, 2))

    a, se_a = _mean_se(-G)
    S, se_S = _mean_se(S_batches)
    S = 0.5 * (S + S.T)
    objective = summarize(replicate_bounds(lw, alpha), cfg.K, alpha)
    return BwGradient(a, S, se_a, se_S, method, objective)
