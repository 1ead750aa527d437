"""Gaussian variational inference on the Bures-Wasserstein manifold with
importance-weighted objectives."""

from .exceptions import (
    BwviError,
    ConfigError,
    DegenerateVariance,
    DimensionMismatch,
    HessianUnavailable,
    InvalidPoint,
    MissingColumn,
    NonFiniteWeight,
    NonNumeric,
    ParseError,
    StepTooLarge,
    ZeroVariance,
)
from .estimator import BayesianLogisticRegressionVI, GaussianVI
from .gaussian import GaussianState, TangentVector, bw_distance, retract
from .objectives import EstimatorConfig, ObjectiveEstimate, estimate_iw_elbo, estimate_vr_iwae
from .optimizers import OptimizerConfig, RunRecord, run_adam_full, run_bw, run_mfvb
from .targets import BananaTarget, EggboxGmm, GaussianTarget, LogisticPosterior, TargetModel

__version__ = "0.1.0"
