"""Experiment drivers behind the CLI.

Dataset generation, gradient-check reports, baseline-variance estimation,
single online runs and multi-target / multi-init sweeps, all driven by one
JSON-serializable configuration with deterministic seeding and CSV output.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from .arm import InterceptionPolicy, interception_event
from .ballistics import BallState
from .blackbox import BlackboxPredictor, Dataset, MlpModel, TrainConfig, mlp_forward, mlp_jacobian, train
from .env import EnvConfig, estimate_variance, intercept, launch
from .errors import ConfigError, InfeasibleRegion, MissedBall
from .greybox import (
    GreyboxParams,
    GreyboxPredictor,
    frozen_landing_record,
    predict_landing,
    predict_landing_with_gradient,
)
from .optimizer import FeasibleSet, RunLog, StepSchedule, run_online

# Nominal scenario: the policy box inside which the arm reliably intercepts
# the launched ball, and the fixtures used by the shipped experiments.
SCENARIO_BOX = FeasibleSet(theta1_bounds=(0.26, 0.72), theta4_bounds=(-0.05, 0.45))
SAMPLING_MARGIN = 0.05  # [rad] kept clear of the box faces when sampling policies

RUN_TARGET = (-1.30, 1.35)
RUN_START = (0.66, 0.44)
SWEEP_START = (0.63, 0.15)
SWEEP_TARGETS = (
    (-0.90, 0.30),
    (-1.15, 0.35),
    (-1.35, 0.40),
    (-1.00, 0.60),
    (-1.20, 0.65),
    (-1.35, 0.75),
)
INITIAL_POLICIES = (
    (0.36, 0.16),
    (0.50, 0.20),
    (0.44, 0.32),
    (0.54, 0.30),
    (0.36, 0.28),
    (0.48, 0.24),
)
VARIANCE_POLICIES = ((0.35, 0.10), (0.45, 0.25), (0.60, 0.40))

MODES = ("grad-check", "baseline-variance", "gen-data", "train-blackbox", "run", "sweep")

SUMMARY_HEADER = (
    "run,label,seed,theta1_1,theta4_1,target_x,target_y,"
    "final_eps,final_sigma,iters_to_025,n_failures"
)


@dataclass
class ExperimentConfig:
    """One experiment invocation; echoed (hashed) into every artifact."""

    mode: str = "run"
    seed: int = 0
    out_dir: str = "out"

    # online-run settings
    predictor: str = "greybox"
    alpha1: float = 0.05
    n_iters: int = 200
    target: tuple[float, float] = RUN_TARGET
    phi1: tuple[float, float] = RUN_START
    couple_geometry: bool = False

    # feasible box used for projection and policy sampling
    box_theta1: tuple[float, float] = SCENARIO_BOX.theta1_bounds
    box_theta4: tuple[float, float] = SCENARIO_BOX.theta4_bounds

    # dataset / gradient-check settings
    n_points: int = 3000
    sampling: str = "uniform"           # uniform | grid
    labels: str = "env"                 # env | greybox
    dataset_path: str = ""              # defaults to <out_dir>/dataset.csv
    model_path: str = ""                # defaults to <out_dir>/model.json
    epochs: int = 500

    # baseline-variance settings
    n_trials: int = 200
    variance_policies: tuple = VARIANCE_POLICIES

    # sweep settings
    sweep_kind: str = "targets"         # targets | inits
    sweep_targets: tuple = SWEEP_TARGETS
    initial_policies: tuple = INITIAL_POLICIES
    n_seeds: int = 20                   # runs per target (targets sweep)
    n_replicates: int = 5               # runs per initial policy (inits sweep)

    # environment overrides (empty = package defaults)
    landing_noise_std: tuple = ()
    jitter_std: tuple = ()
    nominal_state: tuple = ()

    def feasible_set(self) -> FeasibleSet:
        return FeasibleSet(tuple(self.box_theta1), tuple(self.box_theta4))

    def env_config(self) -> EnvConfig:
        cfg = EnvConfig()
        if self.landing_noise_std:
            cfg.landing_noise_std = np.asarray(self.landing_noise_std, dtype=float)
        if self.jitter_std:
            cfg.launcher.jitter_std = np.asarray(self.jitter_std, dtype=float)
        if self.nominal_state:
            vec = np.asarray(self.nominal_state, dtype=float)
            cfg.launcher.nominal_state = BallState.from_vector(vec)
        return cfg

    def resolved_dataset_path(self) -> str:
        return self.dataset_path or os.path.join(self.out_dir, "dataset.csv")

    def resolved_model_path(self) -> str:
        return self.model_path or os.path.join(self.out_dir, "model.json")

    def config_hash(self) -> str:
        # paths only say where artifacts live, not what the experiment is
        doc = {k: v for k, v in asdict(self).items()
               if k not in ("out_dir", "dataset_path", "model_path")}
        return hashlib.sha256(
            json.dumps(doc, sort_keys=True, default=list).encode()
        ).hexdigest()[:16]

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode: unknown mode {self.mode!r}, expected one of {MODES}")
        if self.seed < 0:
            raise ConfigError("seed: must be >= 0")
        if self.predictor not in ("greybox", "blackbox"):
            raise ConfigError(f"predictor: unknown predictor {self.predictor!r}")
        if self.alpha1 <= 0:
            raise ConfigError("alpha1: must be > 0")
        if self.n_iters < 1:
            raise ConfigError("n_iters: must be >= 1")
        if len(self.target) != 2:
            raise ConfigError("target: expected two coordinates")
        if len(self.phi1) != 2:
            raise ConfigError("phi1: expected two joint angles")
        for name, lohi in (("box_theta1", self.box_theta1), ("box_theta4", self.box_theta4)):
            if len(lohi) != 2 or not lohi[0] < lohi[1]:
                raise ConfigError(f"{name}: expected (lower, upper) with lower < upper")
        if not self.feasible_set().contains(InterceptionPolicy(*self.phi1)):
            raise ConfigError("phi1: outside the feasible box")
        if self.n_points < 1:
            raise ConfigError("n_points: must be >= 1")
        if self.sampling not in ("uniform", "grid"):
            raise ConfigError(f"sampling: unknown sampling {self.sampling!r}")
        if self.labels not in ("env", "greybox"):
            raise ConfigError(f"labels: unknown label source {self.labels!r}")
        if self.epochs < 1:
            raise ConfigError("epochs: must be >= 1")
        if self.n_trials < 2:
            raise ConfigError("n_trials: must be >= 2")
        if self.sweep_kind not in ("targets", "inits"):
            raise ConfigError(f"sweep_kind: unknown sweep kind {self.sweep_kind!r}")
        if self.n_seeds < 1 or self.n_replicates < 1:
            raise ConfigError("n_seeds/n_replicates: must be >= 1")
        if self.landing_noise_std and len(self.landing_noise_std) != 2:
            raise ConfigError("landing_noise_std: expected two components")
        if self.jitter_std and len(self.jitter_std) != 6:
            raise ConfigError("jitter_std: expected six components")
        if self.nominal_state and len(self.nominal_state) != 6:
            raise ConfigError("nominal_state: expected six components")

    @classmethod
    def from_json(cls, path: str) -> "ExperimentConfig":
        with open(path) as f:
            try:
                doc = json.load(f)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}")
        known = {f for f in cls.__dataclass_fields__}
        for key in doc:
            if key not in known:
                raise ConfigError(f"{path}: unknown field {key!r}")
        for key in ("target", "phi1", "box_theta1", "box_theta4", "landing_noise_std",
                    "jitter_std", "nominal_state", "variance_policies",
                    "sweep_targets", "initial_policies"):
            if key in doc:
                doc[key] = tuple(tuple(v) if isinstance(v, list) else v for v in doc[key])
        return cls(**doc)

    def to_json(self, path: str) -> None:
        with open(path, "w", newline="\n") as f:
            json.dump(asdict(self), f, indent=1, default=list)
            f.write("\n")


def sampling_bounds(k: FeasibleSet, margin: float = SAMPLING_MARGIN) -> tuple[np.ndarray, np.ndarray]:
    """Policy-box bounds pulled inward by the sampling margin."""
    lo = np.array([k.theta1_bounds[0] + margin, k.theta4_bounds[0] + margin])
    hi = np.array([k.theta1_bounds[1] - margin, k.theta4_bounds[1] - margin])
    if np.any(lo >= hi):
        raise ConfigError("box: too small for the sampling margin")
    return lo, hi


def nominal_trajectory(env_cfg: EnvConfig):
    """Jitter-free launch of the configured nominal ball."""
    cfg = EnvConfig(
        truth_flight=env_cfg.truth_flight,
        truth_impact=env_cfg.truth_impact,
        geom=env_cfg.geom,
        landing_noise_std=env_cfg.landing_noise_std,
        launcher=env_cfg.launcher,
    )
    rng = np.random.default_rng(0)
    jitter_free = type(cfg.launcher)(
        nominal_state=cfg.launcher.nominal_state,
        jitter_std=np.zeros(6),
        sample_dt=cfg.launcher.sample_dt,
    )
    return launch(jitter_free, cfg.truth_flight, rng)


def _policy_stream(n: int, sampling: str, lo: np.ndarray, hi: np.ndarray, rng: np.random.Generator):
    """Yields candidate policies: uniform draws forever, or one grid pass."""
    if sampling == "grid":
        side = math.isqrt(n)
        if side * side != n:
            raise ConfigError("n_points: grid sampling needs a square count")
        for t1 in np.linspace(lo[0], hi[0], side):
            for t4 in np.linspace(lo[1], hi[1], side):
                yield InterceptionPolicy(float(t1), float(t4))
    else:
        while True:
            t1, t4 = rng.uniform(lo, hi)
            yield InterceptionPolicy(t1, t4)


def gen_dataset(
    env_cfg: EnvConfig,
    n: int,
    sampling: str,
    rng: np.random.Generator,
    k: FeasibleSet | None = None,
    margin: float = SAMPLING_MARGIN,
) -> Dataset:
    """Sample policies over the box and label them with noisy env landings.

    Missed balls are discarded and the policy redrawn (uniform sampling) or
    skipped (grid sampling). Raises InfeasibleRegion when more than 90% of
    the attempts miss.
    """
    lo, hi = sampling_bounds(k or SCENARIO_BOX, margin)
    ds = Dataset()
    attempts = misses = 0
    for phi in _policy_stream(n, sampling, lo, hi, rng):
        attempts += 1
        try:
            r_landing, _ = intercept(phi, env_cfg, rng)
            ds.records.append((phi, r_landing))
        except MissedBall:
            misses += 1
        if attempts >= max(50, n) and misses > 0.9 * attempts:
            raise InfeasibleRegion(f"{misses} of {attempts} sampled policies missed the ball")
        if len(ds) >= n:
            break
    return ds


def gen_dataset_greybox(
    env_cfg: EnvConfig,
    n: int,
    sampling: str,
    rng: np.random.Generator,
    k: FeasibleSet | None = None,
    margin: float = SAMPLING_MARGIN,
    params: GreyboxParams | None = None,
) -> Dataset:
    """Like gen_dataset, but with noiseless first-principles labels."""
    lo, hi = sampling_bounds(k or SCENARIO_BOX, margin)
    params = params or GreyboxParams()
    traj = nominal_trajectory(env_cfg)
    ds = Dataset()
    attempts = misses = 0
    for phi in _policy_stream(n, sampling, lo, hi, rng):
        attempts += 1
        try:
            ds.records.append((phi, predict_landing(phi, traj, params)))
        except MissedBall:
            misses += 1
        if attempts >= max(50, n) and misses > 0.9 * attempts:
            raise InfeasibleRegion(f"{misses} of {attempts} sampled policies missed the ball")
        if len(ds) >= n:
            break
    return ds


@dataclass
class GradCheckEntry:
    phi: InterceptionPolicy
    rel_error: float
    flagged: bool


@dataclass
class GradCheckReport:
    """Analytic-vs-finite-difference comparison over random interior policies."""

    kind: str
    entries: list[GradCheckEntry] = field(default_factory=list)

    @property
    def clean_errors(self) -> np.ndarray:
        return np.array([e.rel_error for e in self.entries if not e.flagged])

    @property
    def n_flagged(self) -> int:
        return sum(e.flagged for e in self.entries)

    @property
    def median_rel_error(self) -> float:
        return float(np.median(self.clean_errors))

    @property
    def max_rel_error(self) -> float:
        return float(self.clean_errors.max())

    def write(self, path: str, comments: tuple[str, ...] = ()) -> None:
        with open(path, "w", newline="\n") as f:
            for line in comments:
                f.write(f"# {line}\n")
            f.write("index,theta1,theta4,rel_error,flagged\n")
            for i, e in enumerate(self.entries):
                f.write(
                    f"{i},{e.phi.theta1:.9g},{e.phi.theta4:.9g},{e.rel_error:.9g},{int(e.flagged)}\n"
                )
            f.write(f"# median_rel_error={self.median_rel_error:.9g}\n")
            f.write(f"# max_rel_error={self.max_rel_error:.9g}\n")
            f.write(f"# n_flagged={self.n_flagged}\n")


FD_STEP = 1e-5  # [rad] central-difference step of the gradient checks


def _random_mlp(rng: np.random.Generator, k: FeasibleSet) -> MlpModel:
    """A random surrogate model for derivative checking (no training)."""
    from .blackbox import HIDDEN_LAYERS

    sizes = [2, *HIDDEN_LAYERS, 2]
    layers = [
        (rng.uniform(-1.0, 1.0, size=(o, i)), rng.uniform(-1.0, 1.0, size=o))
        for i, o in zip(sizes[:-1], sizes[1:])
    ]
    lo = np.array([k.theta1_bounds[0], k.theta4_bounds[0]])
    hi = np.array([k.theta1_bounds[1], k.theta4_bounds[1]])
    return MlpModel(
        layers=layers,
        input_center=(lo + hi) / 2.0,
        input_half=(hi - lo) / 2.0,
        output_mean=rng.uniform(-1.0, 1.0, size=2),
        output_std=rng.uniform(0.5, 2.0, size=2),
    )


def grad_check_report(
    kind: str,
    n_points: int,
    seed: int,
    env_cfg: EnvConfig | None = None,
    k: FeasibleSet | None = None,
    params: GreyboxParams | None = None,
) -> GradCheckReport:
    """Compare analytic 2x2 gradients against central finite differences.

    Grey-box checks run under the frozen-event convention; policies where a
    finite-difference evaluation changes the flight step count k_max are
    flagged instead of failing the tolerance.
    """
    if kind not in ("greybox", "blackbox"):
        raise ConfigError(f"predictor: unknown predictor {kind!r}")
    k = k or SCENARIO_BOX
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    lo, hi = sampling_bounds(k)
    report = GradCheckReport(kind=kind)

    if kind == "greybox":
        env_cfg = env_cfg or EnvConfig()
        params = params or GreyboxParams()
        traj = nominal_trajectory(env_cfg)
        while len(report.entries) < n_points:
            t1, t4 = rng.uniform(lo, hi)
            phi = InterceptionPolicy(t1, t4)
            try:
                _, jac = predict_landing_with_gradient(phi, traj, params)
                event = interception_event(traj, params.geom, t1)
                base_k = frozen_landing_record(phi, event, params).k_max
                fd = np.zeros((2, 2))
                flagged = False
                for col, d in enumerate(((FD_STEP, 0.0), (0.0, FD_STEP))):
                    rec_hi = frozen_landing_record(
                        InterceptionPolicy(t1 + d[0], t4 + d[1]), event, params
                    )
                    rec_lo = frozen_landing_record(
                        InterceptionPolicy(t1 - d[0], t4 - d[1]), event, params
                    )
                    if rec_hi.k_max != base_k or rec_lo.k_max != base_k:
                        flagged = True
                    fd[:, col] = (rec_hi.landing_point - rec_lo.landing_point) / (2 * FD_STEP)
            except MissedBall:
                continue
            rel = float(np.linalg.norm(jac - fd) / max(np.linalg.norm(fd), 1e-12))
            report.entries.append(GradCheckEntry(phi, rel, flagged))
        return report

    for _ in range(n_points):
        model = _random_mlp(rng, k)
        t1, t4 = rng.uniform(lo, hi)
        phi = InterceptionPolicy(t1, t4)
        jac = mlp_jacobian(model, phi)
        fd = np.zeros((2, 2))
        for col, d in enumerate(((FD_STEP, 0.0), (0.0, FD_STEP))):
            out_hi = mlp_forward(model, InterceptionPolicy(t1 + d[0], t4 + d[1]))
            out_lo = mlp_forward(model, InterceptionPolicy(t1 - d[0], t4 - d[1]))
            fd[:, col] = (out_hi - out_lo) / (2 * FD_STEP)
        rel = float(np.linalg.norm(jac - fd) / max(np.linalg.norm(fd), 1e-12))
        report.entries.append(GradCheckEntry(phi, rel, False))
    return report


def make_predictor(cfg: ExperimentConfig):
    if cfg.predictor == "greybox":
        return GreyboxPredictor(GreyboxParams(couple_geometry=cfg.couple_geometry))
    path = cfg.resolved_model_path()
    if not os.path.exists(path):
        raise ConfigError(f"model_path: no trained model at {path}")
    return BlackboxPredictor(MlpModel.load(path))


def derived_seeds(base_seed: int, n: int) -> list[int]:
    """Deterministic per-run seeds spawned from one base seed."""
    return [int(s) for s in np.random.SeedSequence(base_seed).generate_state(n)]


def iters_to_threshold(log: RunLog, target: np.ndarray, threshold: float = 0.25) -> int:
    """First iteration whose instantaneous landing error drops below the
    threshold, or -1 if it never does."""
    for rec in log.records:
        if float(np.linalg.norm(rec.r_landing - target)) < threshold:
            return rec.i
    return -1


def _run_one(
    cfg: ExperimentConfig,
    predictor,
    env_cfg: EnvConfig,
    target: np.ndarray,
    phi1: InterceptionPolicy,
    seed: int,
    n_iters: int,
    alpha1: float,
) -> RunLog:
    env = lambda phi, rng: intercept(phi, env_cfg, rng)
    return run_online(
        env,
        predictor,
        target,
        phi1,
        n_iters,
        StepSchedule(alpha1),
        cfg.feasible_set(),
        seed=seed,
        config_echo=cfg.config_hash(),
    )


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Drive one experiment mode; writes artifacts, returns a summary dict."""
    cfg.validate()
    os.makedirs(cfg.out_dir, exist_ok=True)
    env_cfg = cfg.env_config()
    comments = (f"seed={cfg.seed}", f"config={cfg.config_hash()}")

    if cfg.mode == "grad-check":
        report = grad_check_report(cfg.predictor, cfg.n_points, cfg.seed, env_cfg, cfg.feasible_set())
        path = os.path.join(cfg.out_dir, f"grad_check_{cfg.predictor}.csv")
        report.write(path, comments)
        return {
            "median_rel_error": report.median_rel_error,
            "max_rel_error": report.max_rel_error,
            "n_flagged": report.n_flagged,
            "artifacts": [path],
        }

    if cfg.mode == "baseline-variance":
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
        path = os.path.join(cfg.out_dir, "baseline_variance.csv")
        sigmas = []
        with open(path, "w", newline="\n") as f:
            for line in comments:
                f.write(f"# {line}\n")
            f.write("theta1,theta4,n_trials,mean_x,mean_y,sigma\n")
            for t1, t4 in cfg.variance_policies:
                mean, sigma = estimate_variance(
                    InterceptionPolicy(t1, t4), cfg.n_trials, env_cfg, rng
                )
                sigmas.append(sigma)
                f.write(
                    f"{t1:.9g},{t4:.9g},{cfg.n_trials},"
                    f"{mean[0]:.9g},{mean[1]:.9g},{sigma:.9g}\n"
                )
        return {"sigmas": sigmas, "artifacts": [path]}

    if cfg.mode == "gen-data":
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
        gen = gen_dataset_greybox if cfg.labels == "greybox" else gen_dataset
        ds = gen(env_cfg, cfg.n_points, cfg.sampling, rng, cfg.feasible_set())
        path = cfg.resolved_dataset_path()
        ds.save_csv(path, comments)
        return {"n_records": len(ds), "artifacts": [path]}

    if cfg.mode == "train-blackbox":
        ds_path = cfg.resolved_dataset_path()
        if not os.path.exists(ds_path):
            raise ConfigError(f"dataset_path: no dataset at {ds_path}")
        ds = Dataset.load_csv(ds_path)
        model, history = train(ds, TrainConfig(epochs=cfg.epochs, seed=cfg.seed), cfg.feasible_set())
        model_path = cfg.resolved_model_path()
        model.save(model_path, meta={"seed": cfg.seed, "config": cfg.config_hash()})
        hist_path = os.path.join(cfg.out_dir, "train_history.csv")
        with open(hist_path, "w", newline="\n") as f:
            for line in comments:
                f.write(f"# {line}\n")
            f.write("epoch,train_mse,val_mse\n")
            for ep, (tr, va) in enumerate(zip(history["train_mse"], history["val_mse"]), start=1):
                f.write(f"{ep},{tr:.9g},{va:.9g}\n")
        return {
            "final_train_mse": history["train_mse"][-1],
            "final_val_mse": history["val_mse"][-1],
            "artifacts": [model_path, hist_path],
        }

    if cfg.mode == "run":
        predictor = make_predictor(cfg)
        target = np.asarray(cfg.target, dtype=float)
        log = _run_one(
            cfg, predictor, env_cfg, target, InterceptionPolicy(*cfg.phi1),
            cfg.seed, cfg.n_iters, cfg.alpha1,
        )
        path = os.path.join(cfg.out_dir, f"run_{cfg.predictor}_seed{cfg.seed}.csv")
        log.to_csv(path)
        rec = log.records[-1]
        return {
            "final_eps": rec.eps,
            "final_sigma": rec.sigma,
            "iters_to_025": iters_to_threshold(log, target),
            "artifacts": [path],
        }

    # sweep
    predictor = make_predictor(cfg)
    if cfg.sweep_kind == "targets":
        labels = [f"target{i}" for i in range(len(cfg.sweep_targets))]
        targets = [np.asarray(t, dtype=float) for t in cfg.sweep_targets]
        phis = [InterceptionPolicy(*cfg.phi1)] * len(targets)
        runs_per = cfg.n_seeds
    else:
        labels = [f"init{i}" for i in range(len(cfg.initial_policies))]
        targets = [np.asarray(cfg.target, dtype=float)] * len(cfg.initial_policies)
        phis = [InterceptionPolicy(t1, t4) for t1, t4 in cfg.initial_policies]
        runs_per = cfg.n_replicates

    seeds = derived_seeds(cfg.seed, len(labels) * runs_per)
    summary_path = os.path.join(cfg.out_dir, f"sweep_{cfg.sweep_kind}_summary.csv")
    artifacts = [summary_path]
    rows = []
    idx = 0
    for label, target, phi1 in zip(labels, targets, phis):
        for rep in range(runs_per):
            seed = seeds[idx]
            idx += 1
            log = _run_one(cfg, predictor, env_cfg, target, phi1, seed, cfg.n_iters, cfg.alpha1)
            run_path = os.path.join(cfg.out_dir, f"sweep_{label}_rep{rep}.csv")
            log.to_csv(run_path)
            artifacts.append(run_path)
            rec = log.records[-1]
            rows.append(
                (f"{label}_rep{rep}", label, seed, phi1.theta1, phi1.theta4,
                 target[0], target[1], rec.eps, rec.sigma,
                 iters_to_threshold(log, target), log.n_failures)
            )
    with open(summary_path, "w", newline="\n") as f:
        for line in comments:
            f.write(f"# {line}\n")
        f.write(SUMMARY_HEADER + "\n")
        for row in rows:
            f.write(
                f"{row[0]},{row[1]},{row[2]},"
                + ",".join(f"{v:.9g}" for v in row[3:9])
                + f",{row[9]},{row[10]}\n"
            )
    return {"n_runs": len(rows), "artifacts": artifacts}
