"""Full-covariance Gaussians and the Bures-Wasserstein update.

A :class:`GaussianState` caches the lower Cholesky factor of its covariance;
every density evaluation goes through that factor, never an explicit inverse.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .exceptions import DimensionMismatch, StepTooLarge

LOG_2PI = np.log(2.0 * np.pi)

# symmetry check used at construction; retract symmetrizes, so this only
# catches genuinely asymmetric user input
_SYM_RTOL = 1e-10


def _readonly(x):
    x = np.array(x, dtype=float)
    x.setflags(write=False)
    return x


@dataclass(frozen=True, eq=False)
class GaussianState:
    """Gaussian ``N(mean, covariance)`` with a cached Cholesky factor.

    Parameters
    ----------
    mean : array-like (d,)
    covariance : array-like (d, d)
        Symmetric positive definite.
    chol : array-like (d, d), optional
        Lower Cholesky factor of ``covariance``. Computed when omitted.

    Instances are immutable; arrays are stored read-only.
    """

    mean: np.ndarray
    covariance: np.ndarray
    chol: np.ndarray = None

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if mean.ndim != 1:
            raise ValueError("mean must be a vector")
        d = mean.shape[0]
        if cov.shape != (d, d):
            raise DimensionMismatch(
                f"covariance shape {cov.shape} does not match mean length {d}"
            )
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValueError("mean and covariance must be finite")
        scale = max(np.max(np.abs(cov)), np.finfo(float).tiny)
        if np.max(np.abs(cov - cov.T)) > _SYM_RTOL * scale:
            raise ValueError("covariance is not symmetric")
        if self.chol is None:
            try:
                chol = np.linalg.cholesky(cov)
            except np.linalg.LinAlgError as exc:
                raise ValueError("covariance is not positive definite") from exc
        else:
            chol = np.tril(np.asarray(self.chol, dtype=float))
            if chol.shape != (d, d):
                raise DimensionMismatch("chol shape does not match covariance")
        if not np.all(np.diag(chol) > 0):
            raise ValueError("covariance is not positive definite")
        object.__setattr__(self, "mean", _readonly(mean))
        object.__setattr__(self, "covariance", _readonly(cov))
        object.__setattr__(self, "chol", _readonly(chol))

    @classmethod
    def from_chol(cls, mean, chol):
        chol = np.tril(np.asarray(chol, dtype=float))
        return cls(mean, chol @ chol.T, chol)

    @classmethod
    def standard(cls, dim):
        return cls(np.zeros(dim), np.eye(dim))

    @property
    def dim(self):
        return self.mean.shape[0]

    @property
    def logdet(self):
        return 2.0 * np.sum(np.log(np.diag(self.chol)))

    def precision(self):
        return cho_solve((self.chol, True), np.eye(self.dim))

    def __repr__(self):
        return f"GaussianState(dim={self.dim}, mean={self.mean!r})"


@dataclass(frozen=True, eq=False)
class TangentVector:
    """Affine tangent direction ``x -> a + S (x - m)``."""

    a: np.ndarray
    S: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        S = np.atleast_2d(np.asarray(self.S, dtype=float))
        if S.shape != (a.shape[0], a.shape[0]):
            raise DimensionMismatch("S must be a square matrix matching a")
        scale = max(np.max(np.abs(S)), np.finfo(float).tiny)
        if np.max(np.abs(S - S.T)) > 1e-12 * scale:
            raise ValueError("S is not symmetric")
        object.__setattr__(self, "a", _readonly(a))
        object.__setattr__(self, "S", _readonly(S))


def _check_points(state, z):
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != state.dim:
        raise DimensionMismatch(
            f"points have trailing dimension {z.shape[-1]}, expected {state.dim}"
        )
    return z


def transform_noise(state, eps):
    """Map standard-normal noise ``eps`` (..., d) to ``mean + chol @ eps``."""
    eps = _check_points(state, eps)
    return state.mean + eps @ state.chol.T


def sample(state, rng, n):
    """Draw ``n`` rows from ``state`` using ``rng`` (a numpy Generator)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    eps = rng.standard_normal((n, state.dim))
    return transform_noise(state, eps)


def _whiten(state, z):
    # solves chol @ y = (z - m) for every point; returns (..., d)
    diff = z - state.mean
    flat = diff.reshape(-1, state.dim).T
    y = solve_triangular(state.chol, flat, lower=True, check_finite=False)
    return y.T.reshape(diff.shape)


def log_density(state, z):
    """Log density at ``z``; vectorized over leading axes."""
    z = _check_points(state, z)
    y = _whiten(state, z)
    return -0.5 * np.sum(y * y, axis=-1) - 0.5 * state.logdet - 0.5 * state.dim * LOG_2PI


def grad_log_density(state, z):
    """``-Sigma^{-1} (z - m)``; vectorized over leading axes."""
    z = _check_points(state, z)
    diff = z - state.mean
    flat = diff.reshape(-1, state.dim).T
    return -cho_solve((state.chol, True), flat, check_finite=False).T.reshape(diff.shape)


def hess_log_density(state):
    """``-Sigma^{-1}``; constant in the evaluation point."""
    return -state.precision()


def clip_step(eta, S, margin=0.9):
    """Largest step not exceeding ``eta`` that keeps ``eta * ||S||_2 < 1``.

    Returns ``(eta_effective, clipped)``.
    """
    norm = np.linalg.norm(S, 2)
    if eta * norm >= 1.0:
        return margin / norm, True
    return eta, False


def retract(state, grad, eta):
    """Push ``state`` forward through ``x -> x - eta * (a + S (x - m))``.

    ``mean' = mean - eta a`` and ``cov' = (I - eta S) cov (I - eta S)``.
    Callers are expected to keep ``eta * ||S||_2 < 1`` (see :func:`clip_step`).
    """
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    if eta == 0:
        return state
    d = state.dim
    A = np.eye(d) - eta * grad.S
    # 1/cond(A) near machine epsilon means A is numerically singular
    if np.linalg.cond(A) > 1e12:
        raise StepTooLarge(f"I - eta*S is numerically singular at eta={eta:g}")
    mean = state.mean - eta * grad.a
    # (I - eta S) L is a square root of the new covariance
    root = A @ state.chol
    cov = root @ root.T
    cov = 0.5 * (cov + cov.T)
    try:
        return GaussianState(mean, cov)
    except ValueError as exc:
        raise StepTooLarge(f"update lost positive definiteness at eta={eta:g}") from exc


def _sqrtm_psd(A):
    vals, vecs = np.linalg.eigh(0.5 * (A + A.T))
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def bw_distance(q1, q2):
    """2-Wasserstein distance between two Gaussians."""
    if q1.dim != q2.dim:
        raise DimensionMismatch("states have different dimensions")
    if np.array_equal(q1.mean, q2.mean) and np.array_equal(q1.covariance, q2.covariance):
        # the square-root route leaves O(sqrt(eps)) residue for equal inputs
        return 0.0
    root2 = _sqrtm_psd(q2.covariance)
    cross = _sqrtm_psd(root2 @ q1.covariance @ root2)
    mean_term = np.sum((q1.mean - q2.mean) ** 2)
    cov_term = np.trace(q1.covariance) + np.trace(q2.covariance) - 2.0 * np.trace(cross)
    return float(np.sqrt(max(mean_term + cov_term, 0.0)))
