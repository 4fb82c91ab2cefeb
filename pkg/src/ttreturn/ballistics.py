"""Discrete free flight of the ball with quadratic drag.

Explicit Euler steps of fixed length, terminated by a drag-free prediction of
the time left until the ball reaches the table plane; the final step is
shortened accordingly. Analytic Jacobians of the whole flight are assembled
from the per-step Jacobians plus a correction for the shortened last step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import sqrt

import numpy as np

from .errors import MaxStepsExceeded, NegativeDiscriminant, SingularGradient

# Vertical acceleration magnitude used by the drag-free drop prediction.
G_VERTICAL = 9.8  # [m/s^2]

# Tolerances; overridable through FlightParams for special setups.
LANDING_RESIDUAL_TOL = 1e-9   # [m] allowed |p_z - z_table| of the landing state
DISCRIMINANT_FLOOR = 1e-12    # below this the remaining-time gradient is singular


@dataclass
class BallState:
    """Position and velocity of the ball in the world frame."""

    p: np.ndarray  # [m]
    v: np.ndarray  # [m/s]

    def __post_init__(self) -> None:
        self.p = np.asarray(self.p, dtype=float)
        self.v = np.asarray(self.v, dtype=float)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.p, self.v])

    @classmethod
    def from_vector(cls, xi: np.ndarray) -> "BallState":
        xi = np.asarray(xi, dtype=float)
        return cls(p=xi[:3].copy(), v=xi[3:].copy())


@dataclass
class FlightParams:
    """Parameters of the discrete free-flight model."""

    k_drag: float = 0.106             # [1/m]
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.8]))
    dt: float = 1e-3                  # [s]
    z_table: float = 0.76             # [m]
    max_steps: int = 4000

    def __post_init__(self) -> None:
        self.gravity = np.asarray(self.gravity, dtype=float)
        if self.k_drag < 0:
            raise ValueError("k_drag must be >= 0")
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.gravity[2] >= 0:
            raise ValueError("gravity_z must be < 0")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass
class LandingRecord:
    """All stored flight states plus the interpolated landing state."""

    states: np.ndarray        # (k_max + 1, 6), states[k] = xi[k]
    k_max: int
    t_last: float             # [s] shortened final step length
    landing_state: BallState
    landing_point: np.ndarray  # (2,) [m]

    def total_time(self, dt: float) -> float:
        return self.k_max * dt + self.t_last


def free_flight_step(xi: BallState, params: FlightParams, dt_override: float | None = None) -> BallState:
    """One explicit Euler step of the drag-affected free flight."""
    dt = params.dt if dt_override is None else dt_override
    speed = float(np.linalg.norm(xi.v))
    acc = -params.k_drag * speed * xi.v + params.gravity
    return BallState(p=xi.p + dt * xi.v, v=xi.v + dt * acc)


def free_flight_step_jacobians(
    xi: BallState, params: FlightParams, dt_override: float | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Jacobians of one Euler step: (d(next)/d(state), d(next)/d(step length))."""
    dt = params.dt if dt_override is None else dt_override
    v = xi.v
    speed = float(np.linalg.norm(v))
    J = np.eye(6)
    J[0:3, 3:6] = dt * np.eye(3)
    if speed > 0.0:
        drag_jac = speed * np.eye(3) + np.outer(v, v) / speed
    else:
        # quadratic drag is differentiable at v = 0 with derivative 0
        drag_jac = np.zeros((3, 3))
    J[3:6, 3:6] = np.eye(3) - dt * params.k_drag * drag_jac
    acc = -params.k_drag * speed * v + params.gravity
    J_dt = np.concatenate([v, acc])
    return J, J_dt


def remaining_time(xi: BallState, z_table: float) -> float:
    """Drag-free prediction of the time until the ball reaches the table plane."""
    vz = float(xi.v[2])
    pz = float(xi.p[2])
    disc = (vz / G_VERTICAL) ** 2 + 2.0 * (pz - z_table) / G_VERTICAL
    if disc < 0.0:
        raise NegativeDiscriminant(
            f"ball cannot reach the table plane: discriminant = {disc:.3e}"
        )
    return max(vz / G_VERTICAL + sqrt(disc), 0.0)


def remaining_time_gradient(xi: BallState, z_table: float) -> np.ndarray:
    """Gradient of the remaining-time prediction with respect to the 6-state."""
    vz = float(xi.v[2])
    pz = float(xi.p[2])
    disc = (vz / G_VERTICAL) ** 2 + 2.0 * (pz - z_table) / G_VERTICAL
    if disc <= DISCRIMINANT_FLOOR:
        raise SingularGradient(f"discriminant {disc:.3e} at or below floor")
    s = sqrt(disc)
    grad = np.zeros(6)
    grad[2] = 1.0 / (G_VERTICAL * s)
    grad[5] = 1.0 / G_VERTICAL + vz / (G_VERTICAL**2 * s)
    return grad


def propagate_to_landing(xi_plus: BallState, params: FlightParams) -> LandingRecord:
    """Propagate a post-impact state until the ball reaches the table plane.

    Full steps of params.dt are taken while the predicted remaining time
    exceeds dt; the last step uses the (shortened) remaining time. Because the
    remaining-time prediction neglects drag, the final state misses the plane
    by a sub-millimeter residual; the returned landing state is linearly
    interpolated onto the plane along the last step.
    """
    kd = params.k_drag
    gx, gy, gz = (float(c) for c in params.gravity)
    dt = params.dt
    z_table = params.z_table
    gh = G_VERTICAL

    px, py, pz = (float(c) for c in xi_plus.p)
    vx, vy, vz = (float(c) for c in xi_plus.v)

    rows = [(px, py, pz, vx, vy, vz)]
    k = 0
    while True:
        disc = (vz / gh) ** 2 + 2.0 * (pz - z_table) / gh
        if disc < 0.0:
            raise NegativeDiscriminant(
                f"ball cannot reach the table plane: discriminant = {disc:.3e}"
            )
        t_rem = max(vz / gh + sqrt(disc), 0.0)
        if t_rem <= dt:
            break
        if k >= params.max_steps:
            raise MaxStepsExceeded(f"no landing within {params.max_steps} steps")
        speed = sqrt(vx * vx + vy * vy + vz * vz)
        ax = -kd * speed * vx + gx
        ay = -kd * speed * vy + gy
        az = -kd * speed * vz + gz
        px += dt * vx
        py += dt * vy
        pz += dt * vz
        vx += dt * ax
        vy += dt * ay
        vz += dt * az
        k += 1
        rows.append((px, py, pz, vx, vy, vz))

    states = np.array(rows)
    t_last = t_rem

    # shortened final step (drag-affected, so it lands near but not on the plane)
    speed = sqrt(vx * vx + vy * vy + vz * vz)
    raw = np.array(
        [
            px + t_last * vx,
            py + t_last * vy,
            pz + t_last * vz,
            vx + t_last * (-kd * speed * vx + gx),
            vy + t_last * (-kd * speed * vy + gy),
            vz + t_last * (-kd * speed * vz + gz),
        ]
    )

    start = states[-1]
    dz = raw[2] - start[2]
    frac = (z_table - start[2]) / dz if dz != 0.0 else 1.0
    landing = start + frac * (raw - start)
    landing[2] = z_table
    landing_state = BallState.from_vector(landing)

    return LandingRecord(
        states=states,
        k_max=k,
        t_last=t_last,
        landing_state=landing_state,
        landing_point=landing[:2].copy(),
    )


def landing_state_jacobian(record: LandingRecord, params: FlightParams) -> np.ndarray:
    """Sensitivity of the landing state to the post-impact state (6x6).

    Chains the per-step Jacobians over all full steps, corrects the last,
    shortened step for the state dependence of its step length, and
    differentiates the interpolation onto the plane (its z row is pinned, so
    the exact row is zero and the x/y rows pick up an O(k_drag dt) term that
    finite differences of the landing state do see).
    """
    product = np.eye(6)
    for k in range(1, record.k_max + 1):
        J, _ = free_flight_step_jacobians(BallState.from_vector(record.states[k - 1]), params)
        product = J @ product

    last = BallState.from_vector(record.states[record.k_max])
    A, b = free_flight_step_jacobians(last, params, dt_override=record.t_last)
    c = remaining_time_gradient(last, params.z_table)
    j_q = A + np.outer(b, c)

    raw = free_flight_step(last, params, dt_override=record.t_last).as_vector()
    start = record.states[record.k_max]
    delta = raw - start
    w = raw[2] - start[2]
    if w == 0.0:
        return j_q @ product
    u = params.z_table - start[2]
    s = u / w
    e_z = np.zeros(6)
    e_z[2] = 1.0
    ds_dxi = ((u - w) * e_z - u * j_q[2, :]) / w**2
    j_land = s * j_q + (1.0 - s) * np.eye(6) + np.outer(delta, ds_dxi)
    return j_land @ product
