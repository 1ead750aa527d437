"""Evaluation of fitted approximations: SNR sweeps, importance-sampling
diagnostics, moment errors and a random-walk Metropolis reference sampler."""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import gaussian as gs
from ._random import as_generator
from .exceptions import DimensionMismatch
from .gradients import euclidean_grad_replicates, snr, wgrad_replicates
from .objectives import log_weights

ESTIMATORS = ("wasserstein", "euclidean")


@dataclass
class SnrReport:
    """SNR per K and coordinate with fitted log-log slopes.

    ``undetected[i, j]`` marks points whose replicate mean was within 3
    standard errors of zero. A coordinate undetected at every K carries no
    gradient signal; it is excluded from fitting and its slope is NaN.
    ``excluded`` marks the points left out of the fits.
    """

    Ks: list
    snr: np.ndarray  # (n_K, d)
    slopes: np.ndarray  # (d,)
    slope_se: np.ndarray  # (d,)
    excluded: np.ndarray = None  # (n_K, d) bool
    estimator: str = "wasserstein"
    alpha: float = 0.0
    undetected: np.ndarray = None  # (n_K, d) bool

    def to_dict(self):
        return {
            "Ks": [int(k) for k in self.Ks],
            "snr": self.snr.tolist(),
            "slopes": [None if not np.isfinite(s) else float(s) for s in self.slopes],
            "slope_se": [None if not np.isfinite(s) else float(s) for s in self.slope_se],
            "excluded": self.excluded.tolist(),
            "undetected": self.undetected.tolist(),
            "estimator": self.estimator,
            "alpha": self.alpha,
        }


def fit_loglog(Ks, snr_values, excluded=None):
    """Least-squares slope of ``log snr`` on ``log K`` per coordinate.

    Returns ``(slopes, slope_se)``; the standard error is NaN with fewer
    than three points.
    """
    x_all = np.log(np.asarray(Ks, dtype=float))
    y_all = np.log(np.atleast_2d(np.asarray(snr_values, dtype=float).T).T)
    d = y_all.shape[1]
    if excluded is None:
        excluded = np.zeros(y_all.shape, dtype=bool)
    slopes = np.full(d, np.nan)
    ses = np.full(d, np.nan)
    for j in range(d):
        keep = ~excluded[:, j]
        x, y = x_all[keep], y_all[keep, j]
        if x.size < 2:
            continue
        xc = x - x.mean()
        sxx = xc @ xc
        slopes[j] = xc @ (y - y.mean()) / sxx
        if x.size > 2:
            resid = y - y.mean() - slopes[j] * xc
            ses[j] = np.sqrt(resid @ resid / (x.size - 2) / sxx)
    return slopes, ses


def snr_sweep(target, q, z, Ks, reps, rng=None, M=1, alpha=0.0, estimator="wasserstein"):
    """SNR of a gradient estimator across ``Ks`` with a log-log fit.

    ``estimator="wasserstein"`` uses the pointwise Wasserstein gradient at
    ``z``; ``"euclidean"`` uses the reparameterized IW-ELBO gradient with
    respect to the mean of ``q`` (``z`` is ignored).
    """
    if estimator not in ESTIMATORS:
        raise ValueError(f"estimator must be one of {ESTIMATORS}")
    Ks = [int(k) for k in Ks]
    if any(k < 2 for k in Ks):
        raise ValueError("every K must be at least 2")
    if any(b <= a for a, b in zip(Ks, Ks[1:])):
        raise ValueError("Ks must be strictly increasing")
    if reps < 200:
        raise ValueError("reps must be at least 200")
    rng = as_generator(rng)
    rows, undetected = [], []
    for K in Ks:
        if estimator == "wasserstein":
            values = wgrad_replicates(target, q, z, K, M, reps, rng, alpha).values
        else:
            values = euclidean_grad_replicates(target, q, K, M, reps, rng)
        ratio, mean, sd = snr(values)
        rows.append(ratio)
        undetected.append(np.abs(mean) < 3.0 * sd / np.sqrt(reps))
    snr_values = np.array(rows)
    undetected = np.array(undetected)
    # dropping single undetected points would discard exactly the large-K
    # points where a vanishing SNR shows, so only signal-free coordinates go
    excluded = np.broadcast_to(undetected.all(axis=0), undetected.shape).copy()
    slopes, ses = fit_loglog(Ks, snr_values, excluded)
    return SnrReport(Ks, snr_values, slopes, ses, excluded, estimator, alpha, undetected)


def ess(log_weights):
    """Effective sample size ``(sum w)^2 / sum w^2`` from log-weights."""
    lw = np.asarray(log_weights, dtype=float).ravel()
    if lw.size == 0 or not np.all(np.isfinite(lw)):
        raise ValueError("log-weights must be finite and nonempty")
    w = np.exp(lw - lw.max())
    return float(w.sum() ** 2 / (w @ w))


def elbo_hat(target, q, M, rng=None):
    """Monte Carlo ELBO ``mean(log p(theta_i) - log q(theta_i))``."""
    if M < 2:
        raise ValueError("M must be at least 2")
    rng = as_generator(rng)
    return float(np.mean(log_weights(target, q, gs.sample(q, rng, M))))


def _weighted_moments(theta, lw):
    wn = np.exp(lw - logsumexp(lw))
    mean = wn @ theta
    centered = theta - mean
    cov = (centered.T * wn) @ centered
    return mean, 0.5 * (cov + cov.T)


def is_moments(target, q, M, rng=None):
    """Self-normalized importance-sampling mean and covariance of the target."""
    if M < 2:
        raise ValueError("M must be at least 2")
    rng = as_generator(rng)
    theta = gs.sample(q, rng, M)
    return _weighted_moments(theta, log_weights(target, q, theta))


@dataclass
class IsDiagnostics:
    ess: float
    elbo_hat: float
    elbo_se: float
    is_mean: np.ndarray
    is_cov: np.ndarray
    M: int = field(default=None)

    def to_dict(self):
        return {
            "ess": self.ess,
            "elbo_hat": self.elbo_hat,
            "elbo_se": self.elbo_se,
            "is_mean": self.is_mean.tolist(),
            "is_cov": self.is_cov.tolist(),
            "M": self.M,
        }


def is_diagnostics(target, q, M, rng=None):
    """ESS, ELBO and IS moments from a single set of ``M`` draws."""
    if M < 2:
        raise ValueError("M must be at least 2")
    rng = as_generator(rng)
    theta = gs.sample(q, rng, M)
    lw = log_weights(target, q, theta)
    mean, cov = _weighted_moments(theta, lw)
    return IsDiagnostics(
        ess=ess(lw),
        elbo_hat=float(lw.mean()),
        elbo_se=float(lw.std(ddof=1) / np.sqrt(M)),
        is_mean=mean,
        is_cov=cov,
        M=M,
    )


def moment_mse(est_mean, est_cov, ref_mean, ref_cov):
    """Mean squared entrywise errors of a mean vector and a covariance matrix."""
    est_mean, ref_mean = np.asarray(est_mean, float), np.asarray(ref_mean, float)
    est_cov, ref_cov = np.asarray(est_cov, float), np.asarray(ref_cov, float)
    if est_mean.shape != ref_mean.shape or est_cov.shape != ref_cov.shape:
        raise DimensionMismatch("estimate and reference shapes differ")
    return float(np.mean((est_mean - ref_mean) ** 2)), float(np.mean((est_cov - ref_cov) ** 2))


@dataclass
class RwmResult:
    chain: np.ndarray  # (steps + 1, d), starting point included
    acceptance_rate: float
    proposal_sd: float


def rwm_chain(target, init, steps, proposal_sd, rng=None):
    """Random-walk Metropolis with isotropic Gaussian proposals."""
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if proposal_sd <= 0:
        raise ValueError("proposal_sd must be positive")
    rng = as_generator(rng)
    x = np.atleast_1d(np.asarray(init, dtype=float)).copy()
    d = x.shape[0]
    noise = proposal_sd * rng.standard_normal((steps, d))
    log_u = np.log(rng.random(steps))
    chain = np.empty((steps + 1, d))
    chain[0] = x
    lp = float(target.log_unnorm(x))
    accepted = 0
    for t in range(steps):
        prop = x + noise[t]
        lp_prop = float(target.log_unnorm(prop))
        if log_u[t] < lp_prop - lp:
            x, lp = prop, lp_prop
            accepted += 1
        chain[t + 1] = x
    return RwmResult(chain, accepted / steps, float(proposal_sd))


def tune_proposal_sd(target, init, rng=None, pilot_steps=500, low=0.25, high=0.40, max_rounds=30):
    """Rescale the proposal until a pilot run accepts within ``[low, high]``."""
    rng = as_generator(rng)
    sd = 2.38 / np.sqrt(target.dim)
    x = init
    for _ in range(max_rounds):
        res = rwm_chain(target, x, pilot_steps, sd, rng)
        x = res.chain[-1]
        if low <= res.acceptance_rate <= high:
            break
        sd = sd * 1.5 if res.acceptance_rate > high else sd / 1.5
    return sd
