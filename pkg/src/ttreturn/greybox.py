"""First-principles landing-point predictor with analytic policy gradients.

Composes the interception geometry, the racket impact and the drag flight
into a map from the two-dimensional policy to the landing point, plus its
2x2 Jacobian assembled by the chain rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .arm import (
    ArmGeometry,
    InterceptionEvent,
    InterceptionPolicy,
    interception_event,
    racket_rotation,
    racket_velocity,
)
from .ballistics import FlightParams, LandingRecord, landing_state_jacobian, propagate_to_landing
from .impact import ImpactParams, impact_state_jacobian, racket_impact

COUPLED_FD_STEP = 1e-6  # [rad] central-difference step of the geometry-coupled mode


@dataclass
class GreyboxParams:
    """Everything the predictor needs: flight, impact and arm models."""

    flight: FlightParams = field(default_factory=FlightParams)
    impact: ImpactParams = field(default_factory=ImpactParams)
    geom: ArmGeometry = field(default_factory=ArmGeometry)
    couple_geometry: bool = False


def _run_pipeline(
    phi: InterceptionPolicy, incoming, params: GreyboxParams
) -> tuple[InterceptionEvent, LandingRecord]:
    event = interception_event(incoming, params.geom, phi.theta1)
    gamma = racket_rotation(phi)
    v_r = racket_velocity(event, params.geom)
    xi_plus = racket_impact(event.xi_minus, gamma, v_r, params.impact)
    record = propagate_to_landing(xi_plus, params.flight)
    return event, record


def predict_landing(phi: InterceptionPolicy, incoming, params: GreyboxParams) -> np.ndarray:
    """Landing point of the return for the given policy and incoming ball."""
    _, record = _run_pipeline(phi, incoming, params)
    return record.landing_point


def frozen_landing_record(
    phi: InterceptionPolicy, event: InterceptionEvent, params: GreyboxParams
) -> LandingRecord:
    """Full flight record with the interception event frozen at a base policy.

    Only the racket orientation varies with the policy; the pre-impact state,
    racket position and racket velocity are taken from the given event. This
    is the mathematical object the analytic gradient differentiates.
    """
    gamma = racket_rotation(phi)
    v_r = racket_velocity(event, params.geom)
    xi_plus = racket_impact(event.xi_minus, gamma, v_r, params.impact)
    return propagate_to_landing(xi_plus, params.flight)


def predict_landing_frozen(
    phi: InterceptionPolicy, event: InterceptionEvent, params: GreyboxParams
) -> np.ndarray:
    """Landing point under the frozen-event convention."""
    return frozen_landing_record(phi, event, params).landing_point


def predict_landing_with_gradient(
    phi: InterceptionPolicy, incoming, params: GreyboxParams
) -> tuple[np.ndarray, np.ndarray]:
    """Landing point and its 2x2 policy Jacobian.

    Default mode assembles the analytic chain (impact Jacobian, per-step
    flight Jacobians, shortened-last-step correction) under the frozen-event
    convention. The geometry-coupled mode instead differentiates the full
    pipeline, interception event included, by central differences.
    """
    event, record = _run_pipeline(phi, incoming, params)

    if params.couple_geometry:
        jac = np.zeros((2, 2))
        for col, delta in enumerate(((COUPLED_FD_STEP, 0.0), (0.0, COUPLED_FD_STEP))):
            hi = InterceptionPolicy(phi.theta1 + delta[0], phi.theta4 + delta[1])
            lo = InterceptionPolicy(phi.theta1 - delta[0], phi.theta4 - delta[1])
            jac[:, col] = (
                predict_landing(hi, incoming, params) - predict_landing(lo, incoming, params)
            ) / (2.0 * COUPLED_FD_STEP)
        return record.landing_point, jac

    j_flight = landing_state_jacobian(record, params.flight)
    j_impact = impact_state_jacobian(event.xi_minus, phi, event, params.geom, params.impact)
    jac = (j_flight @ j_impact)[:2, :]
    return record.landing_point, jac


class GreyboxPredictor:
    """Predictor handle for the online optimizer."""

    def __init__(self, params: GreyboxParams):
        self.params = params

    def predict(self, phi: InterceptionPolicy, incoming) -> np.ndarray:
        return predict_landing(phi, incoming, self.params)

    def gradient(self, phi: InterceptionPolicy, incoming) -> np.ndarray:
        _, jac = predict_landing_with_gradient(phi, incoming, self.params)
        return jac
