"""Approximate online projected gradient descent over interception policies."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .arm import InterceptionPolicy
from .errors import AbortedRun, MissedBall
from .metrics import MetricsState

CSV_HEADER = "iter,theta1,theta4,land_x,land_y,alpha,loss,eps,sigma,rbar_x,rbar_y"


@dataclass
class FeasibleSet:
    """Box of joint-angle limits for the policy."""

    theta1_bounds: tuple[float, float] = (-math.pi / 2, math.pi / 2)
    theta4_bounds: tuple[float, float] = (-math.pi / 4, math.pi / 4)

    def __post_init__(self) -> None:
        for lo, hi in (self.theta1_bounds, self.theta4_bounds):
            if not lo < hi:
                raise ValueError("bounds must satisfy lower < upper")

    def contains(self, phi: InterceptionPolicy) -> bool:
        return (
            self.theta1_bounds[0] <= phi.theta1 <= self.theta1_bounds[1]
            and self.theta4_bounds[0] <= phi.theta4 <= self.theta4_bounds[1]
        )


@dataclass
class StepSchedule:
    """Diminishing step lengths alpha^i = alpha1 / sqrt(i)."""

    alpha1: float = 0.05

    def __post_init__(self) -> None:
        if self.alpha1 <= 0:
            raise ValueError("alpha1 must be > 0")


def project(phi: InterceptionPolicy, k: FeasibleSet) -> InterceptionPolicy:
    """Closed-form metric projection onto the feasible box."""
    t1 = min(max(phi.theta1, k.theta1_bounds[0]), k.theta1_bounds[1])
    t4 = min(max(phi.theta4, k.theta4_bounds[0]), k.theta4_bounds[1])
    return InterceptionPolicy(theta1=t1, theta4=t4)


def step_length(schedule: StepSchedule, i: int) -> float:
    if i < 1:
        raise ValueError("iteration index must be >= 1")
    return schedule.alpha1 / math.sqrt(i)


def gd_update(
    phi: InterceptionPolicy,
    r_landing: np.ndarray,
    r_target: np.ndarray,
    jac: np.ndarray,
    alpha: float,
    k: FeasibleSet,
) -> InterceptionPolicy:
    """One projected gradient step using the predictor Jacobian as Part 1
    and the observed landing error as Part 2."""
    error = np.asarray(r_landing, dtype=float) - np.asarray(r_target, dtype=float)
    step = alpha * (np.asarray(jac, dtype=float).T @ error)
    return project(
        InterceptionPolicy(theta1=phi.theta1 - step[0], theta4=phi.theta4 - step[1]), k
    )


@dataclass
class IterationRecord:
    i: int
    phi: InterceptionPolicy
    r_landing: np.ndarray
    alpha: float
    loss: float
    eps: float
    sigma: float
    r_bar: np.ndarray


@dataclass
class RunLog:
    """Per-iteration log of one online run plus provenance."""

    records: list[IterationRecord] = field(default_factory=list)
    seed: int = 0
    config_echo: str = ""
    n_failures: int = 0

    def landing_points(self) -> np.ndarray:
        return np.array([rec.r_landing for rec in self.records])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="\n") as f:
            f.write(f"# seed={self.seed}\n")
            f.write(f"# config={self.config_echo}\n")
            f.write(f"# failures={self.n_failures}\n")
            f.write(CSV_HEADER + "\n")
            for rec in self.records:
                vals = [
                    rec.phi.theta1,
                    rec.phi.theta4,
                    rec.r_landing[0],
                    rec.r_landing[1],
                    rec.alpha,
                    rec.loss,
                    rec.eps,
                    rec.sigma,
                    rec.r_bar[0],
                    rec.r_bar[1],
                ]
                f.write(f"{rec.i}," + ",".join(f"{v:.9g}" for v in vals) + "\n")

    @classmethod
    def from_csv(cls, path) -> "RunLog":
        log = cls()
        with open(path) as f:
            for line in f:
                line = line.strip()
                if line.startswith("# seed="):
                    log.seed = int(line.split("=", 1)[1])
                elif line.startswith("# config="):
                    log.config_echo = line.split("=", 1)[1]
                elif line.startswith("# failures="):
                    log.n_failures = int(line.split("=", 1)[1])
                elif not line or line.startswith("#") or line.startswith("iter,"):
                    continue
                else:
                    parts = line.split(",")
                    log.records.append(
                        IterationRecord(
                            i=int(parts[0]),
                            phi=InterceptionPolicy(float(parts[1]), float(parts[2])),
                            r_landing=np.array([float(parts[3]), float(parts[4])]),
                            alpha=float(parts[5]),
                            loss=float(parts[6]),
                            eps=float(parts[7]),
                            sigma=float(parts[8]),
                            r_bar=np.array([float(parts[9]), float(parts[10])]),
                        )
                    )
        return log


def run_online(
    env,
    predictor,
    r_target,
    phi1: InterceptionPolicy,
    n_iters: int,
    schedule: StepSchedule,
    k: FeasibleSet,
    seed: int = 0,
    failure_cap: int = 20,
    config_echo: str = "",
) -> RunLog:
    """Run the online loop: intercept, observe, projected gradient step.

    `env` is a callable (phi, rng) -> (r_landing, diagnostics) that may raise
    a MissedBall error; a miss is retried with a fresh launch and no policy
    update. `predictor` supplies .gradient(phi, incoming).
    """
    if n_iters < 1:
        raise ValueError("n_iters must be >= 1")
    if not k.contains(phi1):
        raise ValueError("initial policy outside the feasible set")

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    r_target = np.asarray(r_target, dtype=float)
    metrics = MetricsState(r_target)
    log = RunLog(seed=seed, config_echo=config_echo)

    phi = phi1
    for i in range(1, n_iters + 1):
        consecutive = 0
        while True:
            try:
                r_landing, diag = env(phi, rng)
                break
            except MissedBall:
                consecutive += 1
                log.n_failures += 1
                if consecutive > failure_cap:
                    raise AbortedRun(
                        f"{consecutive} consecutive missed balls at iteration {i}"
                    )

        r_bar, eps, sigma = metrics.update(r_landing)
        alpha = step_length(schedule, i)
        loss = 0.5 * float(np.sum((r_landing - r_target) ** 2))
        log.records.append(
            IterationRecord(
                i=i,
                phi=phi,
                r_landing=np.asarray(r_landing, dtype=float),
                alpha=alpha,
                loss=loss,
                eps=eps,
                sigma=sigma,
                r_bar=r_bar,
            )
        )
        jac = predictor.gradient(phi, diag.incoming)
        phi = gd_update(phi, r_landing, r_target, jac, alpha, k)
    return log
