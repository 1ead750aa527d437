"""Monte Carlo estimates of the ELBO, IW-ELBO and VR-IWAE bound."""

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import gaussian as gs
from ._random import as_generator
from .exceptions import DimensionMismatch, NonFiniteWeight


@dataclass(frozen=True)
class EstimatorConfig:
    """Sample sizes for one estimate.

    ``K`` importance samples per replicate, ``M`` independent replicates,
    ``alpha`` the VR-IWAE power (0 gives the IW-ELBO), ``seed`` for the
    stream used when no generator is passed explicitly.
    """

    K: int = 1
    M: int = 1
    alpha: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ValueError("K must be a positive integer")
        if int(self.M) != self.M or self.M < 1:
            raise ValueError("M must be a positive integer")
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError("alpha must lie in [0, 1)")


@dataclass(frozen=True)
class ObjectiveEstimate:
    value: float
    std_error: float
    K: int
    M: int
    alpha: float


def log_weights(target, q, z):
    """``log p(x, z) - log q(z)``, checked for NaN and +inf."""
    if target.dim != q.dim:
        raise DimensionMismatch(f"target dim {target.dim} != variational dim {q.dim}")
    lw = target.log_unnorm(z) - gs.log_density(q, z)
    bad = np.isnan(lw) | (lw == np.inf)
    if np.any(bad):
        raise NonFiniteWeight(f"{int(bad.sum())} log-weights are NaN or +inf")
    return lw


def replicate_bounds(lw, alpha=0.0):
    """Per-replicate VR-IWAE values from log-weights of shape ``(M, K)``."""
    K = lw.shape[-1]
    scale = 1.0 - alpha
    return (logsumexp(scale * lw, axis=-1) - np.log(K)) / scale


def summarize(values, K, alpha):
    values = np.asarray(values, dtype=float)
    M = values.shape[0]
    # no dispersion is available from a single replicate
    se = float(np.std(values, ddof=1) / np.sqrt(M)) if M > 1 else 0.0
    return ObjectiveEstimate(float(np.mean(values)), se, int(K), int(M), float(alpha))


def estimate_vr_iwae(target, q, cfg, rng=None):
    """VR-IWAE bound estimate from ``cfg.M`` replicates of ``cfg.K`` samples.

    Noise is drawn as a single ``(M, K, d)`` block from ``rng`` (or from
    ``cfg.seed`` when ``rng`` is None), so the result is reproducible.
    """
    rng = as_generator(cfg.seed if rng is None else rng)
    eps = rng.standard_normal((cfg.M, cfg.K, q.dim))
    z = gs.transform_noise(q, eps)
    lw = log_weights(target, q, z)
    return summarize(replicate_bounds(lw, cfg.alpha), cfg.K, cfg.alpha)


def estimate_iw_elbo(target, q, cfg, rng=None):
    """IW-ELBO estimate; ``cfg.alpha`` must be 0."""
    if cfg.alpha != 0:
        raise ValueError("estimate_iw_elbo requires alpha == 0; use estimate_vr_iwae")
    return estimate_vr_iwae(target, q, cfg, rng)


def estimate_elbo(target, q, M, rng=None, seed=0):
    """Plain ELBO: the IW-ELBO with ``K = 1``."""
    return estimate_iw_elbo(target, q, EstimatorConfig(K=1, M=M, seed=seed), rng)
