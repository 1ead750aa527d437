"""Config-driven experiments with deterministic seeding and JSON/CSV output.

A config is an INI file::

    [experiment]
    kind = eggbox            ; eggbox | banana | logistic | snr_sweep | trace_compare
    seeds = 0, 1, 2
    output_dir = results
    emit = json, csv         ; csv adds plot tables
    diagnostics_M = 10000    ; IS draws for the final diagnostics (0 skips them)

    [target]
    kind = eggbox            ; gaussian | eggbox | banana | logistic
    spacing = 4

    [init]
    cov_scale = 1
    mean_sd = 1              ; per-seed random jitter of the initial mean

    [method.bw_iwelbo]
    optimizer = bw
    K = 32

    [method.mfvb]
    optimizer = adam_meanfield

Every run (method x seed) writes ``<output_dir>/<method>/seed_<seed>/``
with ``trace.jsonl`` and ``summary.json`` (plus CSV tables when requested);
the coordinator writes ``<output_dir>/index.json`` last. Every file embeds
the config hash, which ignores ``output_dir``.
"""

import configparser
import csv
import hashlib
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import gaussian as gs
from ._random import substream
from .diagnostics import ESTIMATORS, is_diagnostics, moment_mse, snr_sweep
from .exceptions import BwviError, ConfigError
from .optimizers import OPTIMIZERS, OptimizerConfig, run
from .preprocessing import load_dataset
from .targets import (
    BananaTarget,
    EggboxGmm,
    GaussianTarget,
    LogisticPosterior,
    TargetModel,
    mixture_moments,
    synth_logistic,
)

EXPERIMENTS = ("eggbox", "banana", "logistic", "snr_sweep", "trace_compare")
TARGETS = ("gaussian", "eggbox", "banana", "logistic")
EMIT = ("json", "csv")

_INT_KEYS = {"max_iters", "K", "M", "stop_window"}
_FLOAT_KEYS = {"eta", "alpha", "stop_tol", "lr", "beta1", "beta2", "adam_eps"}
_SNR_METHOD_KEYS = {"estimator", "alpha", "M"}
_DEFAULT_BOUNDS = {"eggbox": (-8.0, 8.0, -8.0, 8.0), "banana": (-25.0, 25.0, -20.0, 8.0)}


# -- parsing helpers -------------------------------------------------------


def _vector(text, key):
    try:
        return np.array([float(v) for v in text.split(",") if v.strip()])
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated numbers, got {text!r}") from None


def _matrix(text, key):
    rows = [_vector(r, key) for r in text.split(";") if r.strip()]
    if not rows or len({r.size for r in rows}) != 1:
        raise ConfigError(f"{key}: rows must be nonempty and of equal length")
    return np.array(rows)


def _number(text, key, kind=float):
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None
    if kind is int:
        if value != int(value):
            raise ConfigError(f"{key}: expected an integer, got {text!r}")
        return int(value)
    return value


def _json_safe(x):
    """Replace non-finite floats by None so output is strict JSON."""
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    if isinstance(x, np.ndarray):
        return _json_safe(x.tolist())
    if isinstance(x, (np.floating, float)):
        return float(x) if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _dumps(obj, **kw):
    return json.dumps(_json_safe(obj), allow_nan=False, **kw)


# -- config ----------------------------------------------------------------


@dataclass
class MethodSpec:
    name: str
    index: int
    options: dict  # raw strings from the config section


@dataclass
class ExperimentConfig:
    """Parsed experiment description.

    ``raw`` keeps the section/key/value strings; it is what gets hashed and
    echoed into summaries.
    """

    kind: str
    seeds: list
    output_dir: str
    emit: tuple
    methods: list
    target: dict
    init: dict
    snr: dict = field(default_factory=dict)
    contour: dict = field(default_factory=dict)
    diagnostics_M: int = 10000
    raw: dict = field(default_factory=dict)
    base_dir: str = "."

    @property
    def config_hash(self):
        return config_hash(self.raw)


def config_echo(raw):
    """Config contents without ``experiment.output_dir``, which only places files."""
    return {s: {k: v for k, v in sec.items() if (s, k) != ("experiment", "output_dir")} for s, sec in raw.items()}


def config_hash(raw):
    """Hash of the config contents, excluding ``experiment.output_dir``."""
    return hashlib.sha256(json.dumps(config_echo(raw), sort_keys=True).encode("utf-8")).hexdigest()[:16]


def _raw_sections(text):
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    parser.optionxform = str  # keep K and M case-sensitive
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config does not parse: {exc}") from exc
    return {s: {k: v.strip() for k, v in parser[s].items()} for s in parser.sections()}


def parse_config(text, base_dir=".", seed=None, output_dir=None):
    """Parse and validate config text; ``seed``/``output_dir`` override the file."""
    raw = _raw_sections(text)
    if seed is not None:
        raw.setdefault("experiment", {})["seeds"] = str(int(seed))
    if output_dir is not None:
        raw.setdefault("experiment", {})["output_dir"] = str(output_dir)

    exp = raw.get("experiment")
    if exp is None:
        raise ConfigError("experiment: section missing")
    kind = exp.get("kind")
    if kind not in EXPERIMENTS:
        raise ConfigError(f"experiment.kind: must be one of {EXPERIMENTS}, got {kind!r}")
    seeds_text = exp.get("seeds", "")
    seeds = [_number(s, "experiment.seeds", int) for s in seeds_text.split(",") if s.strip()]
    if not seeds:
        raise ConfigError("experiment.seeds: at least one seed is required")
    if len(set(seeds)) != len(seeds):
        raise ConfigError("experiment.seeds: seeds must be distinct")
    if not exp.get("output_dir"):
        raise ConfigError("experiment.output_dir: missing")
    emit = tuple(e.strip() for e in exp.get("emit", "json").split(",") if e.strip())
    if "json" not in emit or any(e not in EMIT for e in emit):
        raise ConfigError(f"experiment.emit: must include json and only use {EMIT}")
    diag_M = _number(exp.get("diagnostics_M", "10000"), "experiment.diagnostics_M", int)
    if diag_M != 0 and diag_M < 2:
        raise ConfigError("experiment.diagnostics_M: must be 0 or at least 2")
    unknown = set(exp) - {"kind", "seeds", "output_dir", "emit", "diagnostics_M"}
    if unknown:
        raise ConfigError(f"experiment.{sorted(unknown)[0]}: unknown key")

    target = raw.get("target")
    if target is None:
        raise ConfigError("target: section missing")
    if target.get("kind") not in TARGETS:
        raise ConfigError(f"target.kind: must be one of {TARGETS}, got {target.get('kind')!r}")
    if target.get("dataset"):
        path = os.path.join(base_dir, target["dataset"])
        if not os.path.isfile(path):
            raise ConfigError(f"target.dataset: file {target['dataset']!r} does not exist")

    methods = []
    for s in raw:
        if s.startswith("method."):
            name = s[len("method.") :]
            if not name or "/" in name or name.startswith("."):
                raise ConfigError(f"{s}: invalid method name")
            methods.append(MethodSpec(name, len(methods), raw[s]))
    if not methods:
        raise ConfigError("method: at least one [method.<name>] section is required")
    known = {"experiment", "target", "init", "snr", "contour"}
    for s in raw:
        if s not in known and not s.startswith("method."):
            raise ConfigError(f"{s}: unknown section")

    cfg = ExperimentConfig(
        kind=kind,
        seeds=seeds,
        output_dir=exp["output_dir"],
        emit=emit,
        methods=methods,
        target=target,
        init=raw.get("init", {}),
        snr=raw.get("snr", {}),
        contour=raw.get("contour", {}),
        diagnostics_M=diag_M,
        raw=raw,
        base_dir=base_dir,
    )
    # fail on bad method options before any run starts
    for m in methods:
        if kind == "snr_sweep":
            _snr_options(m)
        else:
            optimizer_config(m, seeds[0], kind)
    if kind == "snr_sweep":
        _snr_protocol(cfg)
    return cfg


def load_config(path, seed=None, output_dir=None):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, os.path.dirname(os.path.abspath(path)), seed, output_dir)


def optimizer_config(method, seed, experiment):
    """:class:`OptimizerConfig` for one method section and seed."""
    opts = dict(method.options)
    prefix = f"method.{method.name}"
    optimizer = opts.pop("optimizer", None)
    if optimizer not in OPTIMIZERS:
        raise ConfigError(f"{prefix}.optimizer: must be one of {OPTIMIZERS}, got {optimizer!r}")
    kwargs = {}
    for key, text in opts.items():
        if key in _INT_KEYS:
            kwargs[key] = _number(text, f"{prefix}.{key}", int)
        elif key in _FLOAT_KEYS:
            kwargs[key] = _number(text, f"{prefix}.{key}")
        elif key == "grad_method":
            kwargs[key] = text
        else:
            raise ConfigError(f"{prefix}.{key}: unknown key")
    try:
        return OptimizerConfig(
            method=optimizer, seed=seed, stream_key=(experiment, method.index), **kwargs
        )
    except ValueError as exc:
        raise ConfigError(f"{prefix}: {exc}") from exc


def _snr_options(method):
    prefix = f"method.{method.name}"
    opts = method.options
    unknown = set(opts) - _SNR_METHOD_KEYS
    if unknown:
        raise ConfigError(f"{prefix}.{sorted(unknown)[0]}: unknown key for an snr_sweep method")
    estimator = opts.get("estimator", "wasserstein")
    if estimator not in ESTIMATORS:
        raise ConfigError(f"{prefix}.estimator: must be one of {ESTIMATORS}")
    alpha = _number(opts.get("alpha", "0"), f"{prefix}.alpha")
    if not 0.0 <= alpha < 1.0:
        raise ConfigError(f"{prefix}.alpha: must lie in [0, 1)")
    M = _number(opts.get("M", "1"), f"{prefix}.M", int)
    if M < 1:
        raise ConfigError(f"{prefix}.M: must be positive")
    return estimator, alpha, M


def _snr_protocol(cfg):
    snr = cfg.snr
    Ks = [_number(k, "snr.Ks", int) for k in snr.get("Ks", "10, 31, 100, 316, 1000").split(",") if k.strip()]
    reps = _number(snr.get("reps", "2000"), "snr.reps", int)
    if len(Ks) < 2 or any(k < 2 for k in Ks) or any(b <= a for a, b in zip(Ks, Ks[1:])):
        raise ConfigError("snr.Ks: need at least two strictly increasing values >= 2")
    if reps < 200:
        raise ConfigError("snr.reps: must be at least 200")
    point = _vector(snr["point"], "snr.point") if "point" in snr else None
    return Ks, reps, point


# -- construction ----------------------------------------------------------


def build_target(cfg, seed):
    """Target for one seed; synthetic logistic data depend on the seed."""
    t = cfg.target
    kind = t["kind"]
    try:
        if kind == "gaussian":
            if "mean" in t:
                mean = _vector(t["mean"], "target.mean")
            else:
                mean = np.zeros(_number(t.get("dim", "2"), "target.dim", int))
            cov = _matrix(t["cov"], "target.cov") if "cov" in t else np.eye(mean.size)
            return GaussianTarget(mean, cov, _number(t.get("log_scale", "0"), "target.log_scale"))
        if kind == "eggbox":
            return EggboxGmm.symmetric(_number(t.get("spacing", "4"), "target.spacing"))
        if kind == "banana":
            return BananaTarget(
                _number(t.get("dim", "2"), "target.dim", int),
                _number(t.get("b", "0.03"), "target.b"),
                _number(t.get("base_var", "100"), "target.base_var"),
            )
        prior_var = _number(t.get("prior_var", "10"), "target.prior_var")
        if t.get("dataset"):
            features, labels = load_dataset(os.path.join(cfg.base_dir, t["dataset"]), t)
            return LogisticPosterior(features, labels, prior_var)
        n = _number(t.get("n", "2000"), "target.n", int)
        d = _number(t.get("d", "8"), "target.d", int)
        norm = _number(t.get("theta_norm", "2"), "target.theta_norm")
        rng = substream(seed, cfg.kind, "data")
        direction = rng.standard_normal(d)
        theta = norm * direction / np.linalg.norm(direction)
        return synth_logistic(n, d, rng, theta, prior_var)
    except ConfigError:
        raise
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"target: {exc}") from exc


def build_init(cfg, dim, seed):
    """Initial Gaussian; ``mean_sd > 0`` jitters the mean per seed (shared by all methods)."""
    init = cfg.init
    mean = _vector(init["mean"], "init.mean") if "mean" in init else np.zeros(dim)
    if mean.size != dim:
        raise ConfigError(f"init.mean: length {mean.size} != target dim {dim}")
    if "cov" in init:
        cov = _matrix(init["cov"], "init.cov")
    else:
        cov = _number(init.get("cov_scale", "1"), "init.cov_scale") * np.eye(dim)
    sd = _number(init.get("mean_sd", "0"), "init.mean_sd")
    if sd > 0:
        mean = mean + sd * substream(seed, cfg.kind, "init").standard_normal(dim)
    try:
        return gs.GaussianState(mean, cov)
    except ValueError as exc:
        raise ConfigError(f"init: {exc}") from exc


# -- contour grids ---------------------------------------------------------


def _marginal(state):
    idx = [0, 1]
    return gs.GaussianState(state.mean[idx], state.covariance[np.ix_(idx, idx)])


def emit_contour_grid(obj, bounds, resolution):
    """Log-density on a regular 2-D grid as CSV text.

    The header row is ``y\\x`` followed by the x coordinates; each further
    row starts with its y coordinate. For ``dim > 2`` a Gaussian is
    marginalized to its first two coordinates and a target is evaluated
    with the remaining coordinates at zero; the header's first cell says so.

    Parameters
    ----------
    obj : GaussianState or TargetModel
    bounds : (xmin, xmax, ymin, ymax)
    resolution : int or (nx, ny), each at least 2
    """
    nx, ny = (resolution, resolution) if np.isscalar(resolution) else resolution
    if nx < 2 or ny < 2:
        raise ValueError("resolution must be at least 2 per axis")
    xmin, xmax, ymin, ymax = (float(b) for b in bounds)
    xs = np.linspace(xmin, xmax, int(nx))
    ys = np.linspace(ymin, ymax, int(ny))
    X, Y = np.meshgrid(xs, ys)
    label = "y\\x"
    if isinstance(obj, gs.GaussianState):
        d = obj.dim
        if d > 2:
            obj = _marginal(obj)
            label += f" (coords 1-2 of {d}; others marginalized)"
        values = gs.log_density(obj, np.stack([X, Y], axis=-1))
    elif isinstance(obj, TargetModel):
        d = obj.dim
        pts = np.zeros(X.shape + (d,))
        pts[..., 0], pts[..., 1] = X, Y
        if d > 2:
            label += f" (coords 1-2 of {d}; others at 0)"
        values = obj.log_unnorm(pts)
    else:
        raise TypeError("obj must be a GaussianState or TargetModel")
    if d < 2:
        raise ValueError("contour grids need dim >= 2")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([label] + [repr(float(x)) for x in xs])
    for y, row in zip(ys, values):
        writer.writerow([repr(float(y))] + [repr(float(v)) for v in row])
    return buf.getvalue()


def parse_contour_grid(text):
    """Inverse of :func:`emit_contour_grid`: ``(xs, ys, values)``."""
    rows = list(csv.reader(io.StringIO(text)))
    xs = np.array([float(v) for v in rows[0][1:]])
    ys = np.array([float(r[0]) for r in rows[1:]])
    values = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    return xs, ys, values


def _contour_settings(cfg):
    c = cfg.contour
    default = _DEFAULT_BOUNDS.get(cfg.target["kind"], (-5.0, 5.0, -5.0, 5.0))
    bounds = tuple(_vector(c["bounds"], "contour.bounds")) if "bounds" in c else default
    if len(bounds) != 4:
        raise ConfigError("contour.bounds: expected xmin, xmax, ymin, ymax")
    res = _number(c.get("resolution", "101"), "contour.resolution", int)
    if res < 2:
        raise ConfigError("contour.resolution: must be at least 2")
    return bounds, res


# -- runs ------------------------------------------------------------------


def run_dir(cfg, method, seed):
    return os.path.join(cfg.output_dir, method.name, f"seed_{seed}")


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _write_trace(path, trace, chash):
    lines = [_dumps({"config_hash": chash, **rec.to_trace()}) for rec in trace]
    _write(path, "".join(line + "\n" for line in lines))


def _objective_csv(trace):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["iter", "objective", "objective_se"])
    for rec in trace:
        writer.writerow([rec.iter, repr(rec.objective), repr(rec.objective_se)])
    return buf.getvalue()


def _snr_csv(report):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    d = report.snr.shape[1]
    writer.writerow(["K"] + [f"snr_{j + 1}" for j in range(d)])
    for K, row in zip(report.Ks, report.snr):
        writer.writerow([K] + [repr(float(v)) for v in row])
    return buf.getvalue()


def _state_dict(state):
    return {"mean": state.mean.tolist(), "covariance": state.covariance.tolist()}


def _summary_base(cfg, method, seed):
    return {
        "config_hash": cfg.config_hash,
        "version": __version__,
        "experiment": cfg.kind,
        "method": method.name,
        "seed": seed,
        "config": config_echo(cfg.raw),
    }


def _optimize(cfg, method, seed, out):
    """One optimizer run; returns (files written, status, error message)."""
    chash = cfg.config_hash
    target = build_target(cfg, seed)
    init = build_init(cfg, target.dim, seed)
    ocfg = optimizer_config(method, seed, cfg.kind)
    summary = _summary_base(cfg, method, seed)
    summary["optimizer"] = ocfg.method
    files = []
    try:
        state, trace = run(target, init, ocfg)
    except BwviError as exc:
        # keep what was computed before the failure
        trace = getattr(exc, "trace", None) or []
        _write_trace(os.path.join(out, "trace.jsonl"), trace, chash)
        summary.update(status="failed", error=f"{type(exc).__name__}: {exc}", n_iters=len(trace))
        _write(os.path.join(out, "summary.json"), _dumps(summary, indent=2) + "\n")
        return ["trace.jsonl", "summary.json"], "failed", summary["error"]

    _write_trace(os.path.join(out, "trace.jsonl"), trace, chash)
    files.append("trace.jsonl")
    last = trace[-1] if trace else None
    summary.update(
        status="ok",
        n_iters=len(trace),
        final_state=_state_dict(state),
        final_objective=last.objective if last else None,
        final_objective_se=last.objective_se if last else None,
    )
    if cfg.diagnostics_M:
        diag = is_diagnostics(target, state, cfg.diagnostics_M, substream(seed, cfg.kind, method.index, "diagnostics"))
        summary["diagnostics"] = diag.to_dict()
        if isinstance(target, EggboxGmm):
            ref_mean, ref_cov = mixture_moments(target)
            mse_mean, mse_cov = moment_mse(diag.is_mean, diag.is_cov, ref_mean, ref_cov)
            summary["moment_mse"] = {"mean": mse_mean, "cov": mse_cov}
    if "csv" in cfg.emit:
        _write(os.path.join(out, "objective.csv"), _objective_csv(trace))
        files.append("objective.csv")
        if cfg.target["kind"] in ("eggbox", "banana") and state.dim >= 2:
            bounds, res = _contour_settings(cfg)
            _write(os.path.join(out, "contour.csv"), emit_contour_grid(state, bounds, res))
            files.append("contour.csv")
    _write(os.path.join(out, "summary.json"), _dumps(summary, indent=2) + "\n")
    files.append("summary.json")
    return files, "ok", None


def _sweep(cfg, method, seed, out):
    target = build_target(cfg, seed)
    q = build_init(cfg, target.dim, seed)
    Ks, reps, point = _snr_protocol(cfg)
    z = q.mean if point is None else point
    if np.shape(z) != (target.dim,):
        raise ConfigError(f"snr.point: length {np.size(z)} != target dim {target.dim}")
    estimator, alpha, M = _snr_options(method)
    summary = _summary_base(cfg, method, seed)
    rng = substream(seed, cfg.kind, method.index, "snr")
    try:
        report = snr_sweep(target, q, z, Ks, reps, rng, M=M, alpha=alpha, estimator=estimator)
    except BwviError as exc:
        summary.update(status="failed", error=f"{type(exc).__name__}: {exc}")
        _write(os.path.join(out, "summary.json"), _dumps(summary, indent=2) + "\n")
        return ["summary.json"], "failed", summary["error"]
    summary.update(status="ok", point=np.asarray(z).tolist(), M=M, reps=reps, snr=report.to_dict())
    files = []
    if "csv" in cfg.emit:
        _write(os.path.join(out, "snr.csv"), _snr_csv(report))
        files.append("snr.csv")
    _write(os.path.join(out, "summary.json"), _dumps(summary, indent=2) + "\n")
    files.append("summary.json")
    return files, "ok", None


def _execute(cfg, method_index, seed):
    method = cfg.methods[method_index]
    out = run_dir(cfg, method, seed)
    os.makedirs(out, exist_ok=True)
    runner = _sweep if cfg.kind == "snr_sweep" else _optimize
    try:
        files, status, error = runner(cfg, method, seed, out)
    except ConfigError:
        raise
    except (BwviError, ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
        files, status, error = [], "failed", f"{type(exc).__name__}: {exc}"
    return {
        "method": method.name,
        "seed": seed,
        "dir": os.path.relpath(out, cfg.output_dir),
        "files": files,
        "status": status,
        "error": error,
    }


def _existing_hash(out):
    for name in ("summary.json", "trace.jsonl"):
        path = os.path.join(out, name)
        if os.path.isfile(path):
            with open(path, encoding="utf-8") as fh:
                first = fh.readline() if name == "trace.jsonl" else fh.read()
            try:
                return json.loads(first).get("config_hash")
            except (json.JSONDecodeError, AttributeError):
                return None
    return None


def check_outputs(cfg, force=False):
    """Refuse to overwrite outputs written under a different config hash."""
    if force:
        return
    chash = cfg.config_hash
    paths = [run_dir(cfg, m, s) for m in cfg.methods for s in cfg.seeds]
    index = os.path.join(cfg.output_dir, "index.json")
    for out in paths:
        found = _existing_hash(out)
        if found is not None and found != chash:
            raise ConfigError(
                f"experiment.output_dir: {out} holds results of config {found}, not {chash}; use --force"
            )
    if os.path.isfile(index):
        try:
            with open(index, encoding="utf-8") as fh:
                found = json.load(fh).get("config_hash")
        except (json.JSONDecodeError, AttributeError):
            found = None
        if found is not None and found != chash:
            raise ConfigError(
                f"experiment.output_dir: index.json belongs to config {found}, not {chash}; use --force"
            )


def run_experiment(cfg, force=False, threads=1):
    """Run every method x seed and write the index; returns the index dict."""
    check_outputs(cfg, force)
    os.makedirs(cfg.output_dir, exist_ok=True)
    jobs = [(m.index, s) for m in cfg.methods for s in cfg.seeds]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_execute, cfg, i, s) for i, s in jobs]
            runs = [f.result() for f in futures]
    else:
        runs = [_execute(cfg, i, s) for i, s in jobs]
    index = {
        "config_hash": cfg.config_hash,
        "version": __version__,
        "experiment": cfg.kind,
        "runs": runs,
    }
    _write(os.path.join(cfg.output_dir, "index.json"), _dumps(index, indent=2) + "\n")
    return index


def write_contours(cfg, force=False):
    """Contour CSVs for the target and for every fitted state already on disk."""
    check_outputs(cfg, force)
    os.makedirs(cfg.output_dir, exist_ok=True)
    bounds, res = _contour_settings(cfg)
    seed = cfg.seeds[0]
    target = build_target(cfg, seed)
    if target.dim < 2:
        raise ConfigError("target: contour grids need dim >= 2")
    written = [os.path.join(cfg.output_dir, "target_contour.csv")]
    _write(written[0], emit_contour_grid(target, bounds, res))
    for m in cfg.methods:
        for s in cfg.seeds:
            path = os.path.join(run_dir(cfg, m, s), "summary.json")
            if not os.path.isfile(path):
                continue
            with open(path, encoding="utf-8") as fh:
                summary = json.load(fh)
            if summary.get("config_hash") != cfg.config_hash or "final_state" not in summary:
                continue
            fs = summary["final_state"]
            state = gs.GaussianState(fs["mean"], fs["covariance"])
            out = os.path.join(run_dir(cfg, m, s), "contour.csv")
            _write(out, emit_contour_grid(state, bounds, res))
            written.append(out)
    return written
