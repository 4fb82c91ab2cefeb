"""Linear racket-ball impact model and its policy Jacobian."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .arm import (
    ArmGeometry,
    InterceptionEvent,
    InterceptionPolicy,
    racket_rotation,
    racket_rotation_jacobian,
    racket_velocity,
    racket_velocity_jacobian,
)
from .ballistics import BallState


@dataclass
class ImpactParams:
    """Diagonal restitution map applied in the racket rest frame.

    The negative entry acts along the racket normal in its rest position.
    """

    restitution: np.ndarray = field(default_factory=lambda: np.array([0.75, -0.75, 0.75]))

    def __post_init__(self) -> None:
        self.restitution = np.asarray(self.restitution, dtype=float)

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.restitution)


def racket_impact(
    xi_minus: BallState,
    gamma: np.ndarray,
    v_racket: np.ndarray,
    params: ImpactParams,
) -> BallState:
    """Instantaneous impact: position unchanged, relative velocity reflected."""
    m = params.matrix
    v_plus = gamma @ m @ gamma.T @ (xi_minus.v - v_racket) + v_racket
    return BallState(p=xi_minus.p.copy(), v=v_plus)


def impact_state_jacobian(
    xi_minus: BallState,
    phi: InterceptionPolicy,
    event: InterceptionEvent,
    geom: ArmGeometry,
    params: ImpactParams,
) -> np.ndarray:
    """Derivative of the post-impact 6-state w.r.t. the policy (6x2).

    Frozen-event convention: the interception point and pre-impact velocity
    are treated as policy-independent, so the position rows are zero and the
    racket velocity contributes no derivative.
    """
    m = params.matrix
    gamma = racket_rotation(phi)
    d_g1, d_g4 = racket_rotation_jacobian(phi)
    v_r = racket_velocity(event, geom)
    d_vr = racket_velocity_jacobian(event, geom)  # zero under the frozen-event convention
    rel = xi_minus.v - v_r
    reflect = gamma @ m @ gamma.T

    jac = np.zeros((6, 2))
    for col, d_g in enumerate((d_g1, d_g4)):
        jac[3:, col] = (d_g @ m @ gamma.T + gamma @ m @ d_g.T) @ rel + (
            np.eye(3) - reflect
        ) @ d_vr[:, col]
    return jac
