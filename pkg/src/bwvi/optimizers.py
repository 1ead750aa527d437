"""Bures-Wasserstein descent on the IW-ELBO / VR-IWAE bound and Euclidean baselines.

Every iteration draws its noise from ``substream(seed, *stream_key, it)``,
so runs are reproducible and no samples are reused across iterations.
"""

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import gaussian as gs
from ._random import substream
from .exceptions import NonFiniteWeight
from .gradients import METHODS, bw_grad, reparam_iwelbo_grad
from .objectives import EstimatorConfig, summarize

OPTIMIZERS = ("bw", "adam_full", "adam_meanfield")


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings shared by all optimizers.

    ``eta`` is the BW step size, ``lr``/``beta1``/``beta2``/``adam_eps``
    configure ADAM. ``stop_tol <= 0`` disables early stopping.
    ``stream_key`` is appended to ``seed`` when deriving per-iteration
    random streams. Wall-clock timing is off by default so that traces are
    bit-reproducible.
    """

    eta: float = 0.1
    max_iters: int = 500
    K: int = 1
    M: int = 64
    alpha: float = 0.0
    stop_tol: float = 1e-4
    stop_window: int = 20
    seed: int = 0
    method: str = "bw"
    grad_method: str = "hessian"
    lr: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    check_pd: bool = False
    keep_covariance: bool = False
    record_wallclock: bool = False
    stream_key: tuple = ()

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.stop_window < 2:
            raise ValueError("stop_window must be at least 2")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if self.method not in OPTIMIZERS:
            raise ValueError(f"method must be one of {OPTIMIZERS}")
        if self.grad_method not in METHODS:
            raise ValueError(f"grad_method must be one of {METHODS}")
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        # validates K, M, alpha
        self.estimator()

    def estimator(self, K=None):
        return EstimatorConfig(K=self.K if K is None else K, M=self.M, alpha=self.alpha, seed=self.seed)


@dataclass
class RunRecord:
    """One optimizer iteration: the state entering the iteration and the step taken."""

    iter: int
    objective: float
    objective_se: float
    mean: list
    cov_diag: list
    logdet_cov: float
    grad_a_norm: float
    grad_S_fro: float
    eta_effective: float
    wallclock_ms: float = None
    clipped: bool = False
    covariance: list = field(default=None)

    TRACE_KEYS = (
        "iter",
        "objective",
        "objective_se",
        "mean",
        "cov_diag",
        "logdet_cov",
        "grad_a_norm",
        "grad_S_fro",
        "eta_effective",
        "wallclock_ms",
    )

    def to_trace(self):
        """The trace-line dictionary (schema keys only)."""
        d = asdict(self)
        return {k: d[k] for k in self.TRACE_KEYS}


def _record(it, state, objective, grad_a, grad_S, eta_eff, clipped, t0, cfg):
    return RunRecord(
        iter=it,
        objective=float(objective.value),
        objective_se=float(objective.std_error),
        mean=state.mean.tolist(),
        cov_diag=np.diag(state.covariance).tolist(),
        logdet_cov=float(state.logdet),
        grad_a_norm=float(np.linalg.norm(grad_a)),
        grad_S_fro=float(np.linalg.norm(grad_S)),
        eta_effective=float(eta_eff),
        wallclock_ms=(time.perf_counter() - t0) * 1e3 if cfg.record_wallclock else None,
        clipped=bool(clipped),
        covariance=state.covariance.tolist() if cfg.keep_covariance else None,
    )


class _StopRule:
    """Moving-average plateau test on the objective trace.

    Stops once ``|avg_now - avg_prev| / max(|avg_prev|, 1) < tol`` on three
    consecutive iterations, where the averages cover the last two
    non-overlapping windows of ``window`` iterations.
    """

    def __init__(self, tol, window, patience=3):
        self.tol = tol
        self.window = window
        self.patience = patience
        self.values = []
        self.hits = 0

    def update(self, value):
        self.values.append(value)
        w = self.window
        if self.tol <= 0 or len(self.values) < 2 * w:
            return False
        cur = np.mean(self.values[-w:])
        prev = np.mean(self.values[-2 * w : -w])
        rel = abs(cur - prev) / max(abs(prev), 1.0)
        self.hits = self.hits + 1 if rel < self.tol else 0
        return self.hits >= self.patience


def _check_dims(target, init):
    if target.dim != init.dim:
        raise ValueError(f"target dim {target.dim} != init dim {init.dim}")


def run_bw(target, init, cfg):
    """Bures-Wasserstein descent on the negative bound.

    Each iteration estimates ``(a, S)`` with :func:`bw_grad`, clips the step
    to ``min(eta, 0.9 / ||S||_2)`` and applies :func:`gaussian.retract`.

    Returns
    -------
    state : GaussianState
    trace : list of RunRecord
    """
    _check_dims(target, init)
    est = cfg.estimator()
    q = init
    trace = []
    stop = _StopRule(cfg.stop_tol, cfg.stop_window)
    t0 = time.perf_counter()
    for it in range(cfg.max_iters):
        rng = substream(cfg.seed, *cfg.stream_key, it)
        try:
            grad = bw_grad(target, q, est, cfg.grad_method, rng)
        except NonFiniteWeight as exc:
            raise NonFiniteWeight(f"iteration {it}: {exc}", trace, q) from exc
        eta, clipped = gs.clip_step(cfg.eta, grad.S)
        trace.append(_record(it, q, grad.objective, grad.a, grad.S, eta, clipped, t0, cfg))
        q = gs.retract(q, grad.tangent(), eta)
        if cfg.check_pd:
            assert np.all(np.linalg.eigvalsh(q.covariance) > 0), f"iterate {it} lost PD"
        if stop.update(grad.objective.value):
            break
    return q, trace


def _softplus(x):
    return np.logaddexp(0.0, x)


def _softplus_inv(y):
    return y + np.log(-np.expm1(-y))


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


class Adam:
    """ADAM ascent on a list of parameter arrays (updated in place)."""

    def __init__(self, lr=1e-2, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = None
        self._v = None

    def step(self, params, grads):
        if self._m is None:
            self._m = [np.zeros_like(p) for p in params]
            self._v = [np.zeros_like(p) for p in params]
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self._m, self._v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p += self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def _run_adam(target, init, cfg, diagonal, K):
    _check_dims(target, init)
    d = init.dim
    mean = np.array(init.mean, dtype=float)
    if diagonal:
        rho = _softplus_inv(np.sqrt(np.diag(init.covariance)))
        params = [mean, rho]
    else:
        L = np.array(init.chol, dtype=float)
        off = np.tril(L, -1)
        rho = _softplus_inv(np.diag(L).copy())
        params = [mean, off, rho]
    opt = Adam(cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps)
    tril_mask = np.tril(np.ones((d, d)), -1)

    def current_state():
        if diagonal:
            return gs.GaussianState(mean, np.diag(_softplus(rho) ** 2))
        return gs.GaussianState.from_chol(mean, params[1] * tril_mask + np.diag(_softplus(rho)))

    q = current_state()
    trace = []
    stop = _StopRule(cfg.stop_tol, cfg.stop_window)
    t0 = time.perf_counter()
    for it in range(cfg.max_iters):
        rng = substream(cfg.seed, *cfg.stream_key, it)
        eps = rng.standard_normal((cfg.M, K, d))
        scale = _softplus(rho)
        try:
            if diagonal:
                gm, gsd, bounds = reparam_iwelbo_grad(target, mean, scale, eps, diagonal=True)
                grads = [gm.mean(axis=0), gsd.mean(axis=0) * _sigmoid(rho)]
                chol_grad = grads[1]
            else:
                chol = params[1] * tril_mask + np.diag(scale)
                gm, gL, bounds = reparam_iwelbo_grad(target, mean, chol, eps)
                gL = gL.mean(axis=0)
                grads = [gm.mean(axis=0), gL * tril_mask, np.diag(gL) * _sigmoid(rho)]
                chol_grad = gL
        except NonFiniteWeight as exc:
            raise NonFiniteWeight(f"iteration {it}: {exc}", trace, q) from exc
        objective = summarize(bounds, K, 0.0)
        trace.append(_record(it, q, objective, grads[0], chol_grad, cfg.lr, False, t0, cfg))
        opt.step(params, grads)
        q = current_state()
        if stop.update(objective.value):
            break
    return q, trace


def run_adam_full(target, init, cfg):
    """ADAM on the reparameterized IW-ELBO in ``(mean, Cholesky factor)`` coordinates.

    The Cholesky diagonal is kept positive through a softplus. In the trace,
    ``grad_a_norm``/``grad_S_fro`` hold the norms of the mean and Cholesky
    gradients, and ``eta_effective`` holds the learning rate.
    """
    return _run_adam(target, init, cfg, diagonal=False, K=cfg.K)


def run_mfvb(target, init, cfg):
    """Mean-field baseline: diagonal Gaussian, reparameterized ELBO (K = 1), ADAM.

    ``cfg.K`` is ignored. The initial covariance is reduced to its diagonal.
    """
    return _run_adam(target, init, cfg, diagonal=True, K=1)


def run(target, init, cfg):
    """Dispatch on ``cfg.method``."""
    runner = {"bw": run_bw, "adam_full": run_adam_full, "adam_meanfield": run_mfvb}[cfg.method]
    return runner(target, init, cfg)
