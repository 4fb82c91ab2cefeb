"""Projection, step schedule, update rule and the online loop."""

from math import pi

import numpy as np
import pytest

try:
    from hypothesis import given, settings
    from hypothesis import strategies as st

    HAVE_HYPOTHESIS = True
except ImportError:
    HAVE_HYPOTHESIS = False

from ttreturn.arm import InterceptionPolicy
from ttreturn.env import EnvConfig, intercept
from ttreturn.errors import AbortedRun
from ttreturn.greybox import GreyboxParams, GreyboxPredictor
from ttreturn.optimizer import (
    FeasibleSet,
    RunLog,
    StepSchedule,
    gd_update,
    project,
    run_online,
    step_length,
)


class TestFeasibleSet:
    def test_contains(self):
        box = FeasibleSet()
        assert box.contains(InterceptionPolicy(0.3, 0.1))
        assert not box.contains(InterceptionPolicy(2.0, 0.1))
        assert not box.contains(InterceptionPolicy(0.3, 1.0))

    def test_rejects_inverted_bounds(self):
        with pytest.raises(ValueError):
            FeasibleSet(theta1_bounds=(0.5, 0.2))


class TestProject:
    def test_interior_point_unchanged(self):
        phi = project(InterceptionPolicy(0.3, 0.1), FeasibleSet())
        assert (phi.theta1, phi.theta4) == (0.3, 0.1)

    def test_clips_first_angle(self):
        phi = project(InterceptionPolicy(2.0, 0.1), FeasibleSet())
        assert phi.theta1 == pytest.approx(pi / 2)
        assert phi.theta4 == 0.1

    def test_clips_both(self):
        phi = project(InterceptionPolicy(-3.0, 1.0), FeasibleSet())
        assert phi.theta1 == pytest.approx(-pi / 2)
        assert phi.theta4 == pytest.approx(pi / 4)

    @pytest.mark.skipif(not HAVE_HYPOTHESIS, reason="hypothesis not installed")
    @settings(max_examples=200, deadline=None)
    @given(
        st.floats(-10, 10, allow_nan=False),
        st.floats(-10, 10, allow_nan=False),
        st.floats(-pi / 2, pi / 2),
        st.floats(-pi / 4, pi / 4),
    )
    def test_is_metric_projection(self, x, y, kx, ky):
        # the projection onto a box is at least as close to every member of
        # the box as the original point is
        box = FeasibleSet()
        proj = project(InterceptionPolicy(x, y), box)
        assert box.contains(proj)
        d_proj = np.hypot(x - proj.theta1, y - proj.theta4)
        d_member = np.hypot(x - kx, y - ky)
        assert d_proj <= d_member + 1e-12


class TestStepLength:
    def test_inverse_sqrt_decay(self):
        sched = StepSchedule(alpha1=0.05)
        assert step_length(sched, 1) == pytest.approx(0.05)
        assert step_length(sched, 4) == pytest.approx(0.025)
        assert step_length(sched, 9) == pytest.approx(0.05 / 3)

    def test_other_base(self):
        assert step_length(StepSchedule(alpha1=0.15), 4) == pytest.approx(0.075)

    def test_rejects_bad_index(self):
        with pytest.raises(ValueError):
            step_length(StepSchedule(), 0)


class TestGdUpdate:
    def test_identity_jacobian(self):
        phi = gd_update(
            InterceptionPolicy(0.2, 0.1),
            r_landing=np.array([0.1, -0.1]),
            r_target=np.zeros(2),
            jac=np.eye(2),
            alpha=0.5,
            k=FeasibleSet(),
        )
        assert phi.theta1 == pytest.approx(0.15)
        assert phi.theta4 == pytest.approx(0.15)

    def test_transposes_jacobian(self):
        jac = np.array([[0.0, 2.0], [1.0, 0.0]])
        phi = gd_update(
            InterceptionPolicy(0.0, 0.0),
            r_landing=np.array([1.0, 0.0]),
            r_target=np.zeros(2),
            jac=jac,
            alpha=0.1,
            k=FeasibleSet(),
        )
        # step is -alpha * J^T (r - target)
        assert phi.theta1 == pytest.approx(0.0)
        assert phi.theta4 == pytest.approx(-0.2)

    def test_projects_result(self):
        box = FeasibleSet(theta1_bounds=(-0.1, 0.1), theta4_bounds=(-0.1, 0.1))
        phi = gd_update(
            InterceptionPolicy(0.0, 0.0),
            r_landing=np.array([-5.0, 0.0]),
            r_target=np.zeros(2),
            jac=np.eye(2),
            alpha=1.0,
            k=box,
        )
        assert phi.theta1 == pytest.approx(0.1)
        assert phi.theta4 == pytest.approx(0.0)


def make_noiseless_cfg():
    cfg = EnvConfig()
    cfg.landing_noise_std = np.zeros(2)
    cfg.launcher.jitter_std = np.zeros(6)
    return cfg


def make_env(cfg):
    return lambda phi, rng: intercept(phi, cfg, rng)


class TestRunOnline:
    def test_noiseless_convergence(self):
        # target chosen as the reachable landing of a nearby policy, so the
        # noiseless loop must drive the error below 5 cm within a few rounds
        cfg = make_noiseless_cfg()
        rng = np.random.default_rng(0)
        _, diag = intercept(InterceptionPolicy(0.45, 0.20), cfg, rng)
        target = diag.noiseless_landing
        log = run_online(
            env=make_env(cfg),
            predictor=GreyboxPredictor(GreyboxParams()),
            r_target=target,
            phi1=InterceptionPolicy(0.50, 0.25),
            n_iters=5,
            schedule=StepSchedule(alpha1=0.15),
            k=FeasibleSet(),
            seed=0,
        )
        assert log.records[-1].eps < 0.05

    def test_fixed_point_at_target(self):
        # starting at the policy whose landing defines the target, a
        # noiseless run stays essentially put
        cfg = make_noiseless_cfg()
        rng = np.random.default_rng(0)
        _, diag = intercept(InterceptionPolicy(0.45, 0.20), cfg, rng)
        log = run_online(
            env=make_env(cfg),
            predictor=GreyboxPredictor(GreyboxParams()),
            r_target=diag.noiseless_landing,
            phi1=InterceptionPolicy(0.45, 0.20),
            n_iters=5,
            schedule=StepSchedule(alpha1=0.1),
            k=FeasibleSet(),
            seed=1,
        )
        for rec in log.records:
            assert abs(rec.phi.theta1 - 0.45) < 1e-9
            assert abs(rec.phi.theta4 - 0.20) < 1e-9

    def test_iterates_stay_feasible(self):
        cfg = EnvConfig()
        box = FeasibleSet(theta1_bounds=(0.30, 0.60), theta4_bounds=(0.0, 0.35))
        log = run_online(
            env=make_env(cfg),
            predictor=GreyboxPredictor(GreyboxParams()),
            r_target=np.array([-1.2, 0.6]),
            phi1=InterceptionPolicy(0.45, 0.20),
            n_iters=15,
            schedule=StepSchedule(alpha1=0.3),
            k=box,
            seed=5,
        )
        for rec in log.records:
            assert box.contains(rec.phi)

    def test_rejects_infeasible_start(self):
        cfg = EnvConfig()
        with pytest.raises(ValueError):
            run_online(
                env=make_env(cfg),
                predictor=GreyboxPredictor(GreyboxParams()),
                r_target=np.array([-1.2, 0.6]),
                phi1=InterceptionPolicy(2.0, 0.0),
                n_iters=1,
                schedule=StepSchedule(),
                k=FeasibleSet(),
            )

    def test_aborts_after_repeated_misses(self):
        # a box pinned at a policy with no azimuth crossing can never intercept
        cfg = make_noiseless_cfg()
        box = FeasibleSet(theta1_bounds=(-0.5001, -0.4999), theta4_bounds=(-0.0001, 0.0001))
        with pytest.raises(AbortedRun):
            run_online(
                env=make_env(cfg),
                predictor=GreyboxPredictor(GreyboxParams()),
                r_target=np.array([-1.2, 0.6]),
                phi1=InterceptionPolicy(-0.5, 0.0),
                n_iters=50,
                schedule=StepSchedule(alpha1=0.1),
                k=box,
                seed=2,
            )

    def test_replay_determinism(self):
        cfg = EnvConfig()
        kwargs = dict(
            env=make_env(cfg),
            predictor=GreyboxPredictor(GreyboxParams()),
            r_target=np.array([-1.2, 0.6]),
            phi1=InterceptionPolicy(0.45, 0.20),
            n_iters=10,
            schedule=StepSchedule(alpha1=0.1),
            k=FeasibleSet(),
            seed=77,
        )
        a = run_online(**kwargs)
        b = run_online(**kwargs)
        for ra, rb in zip(a.records, b.records):
            assert ra.phi == rb.phi
            assert np.array_equal(ra.r_landing, rb.r_landing)
            assert (ra.loss, ra.eps, ra.sigma) == (rb.loss, rb.eps, rb.sigma)


class TestRunLog:
    def _small_log(self):
        cfg = EnvConfig()
        return run_online(
            env=make_env(cfg),
            predictor=GreyboxPredictor(GreyboxParams()),
            r_target=np.array([-1.2, 0.6]),
            phi1=InterceptionPolicy(0.45, 0.20),
            n_iters=8,
            schedule=StepSchedule(alpha1=0.1),
            k=FeasibleSet(),
            seed=3,
            config_echo="abc123",
        )

    def test_csv_round_trip(self, tmp_path):
        log = self._small_log()
        path = tmp_path / "run.csv"
        log.to_csv(path)
        back = RunLog.from_csv(path)
        assert back.seed == 3
        assert back.config_echo == "abc123"
        assert back.n_failures == log.n_failures
        assert len(back.records) == len(log.records)
        for ra, rb in zip(log.records, back.records):
            assert rb.i == ra.i
            assert rb.phi.theta1 == pytest.approx(ra.phi.theta1, rel=1e-8)
            assert rb.phi.theta4 == pytest.approx(ra.phi.theta4, rel=1e-8)
            np.testing.assert_allclose(rb.r_landing, ra.r_landing, rtol=1e-8)
            assert rb.eps == pytest.approx(ra.eps, rel=1e-8)
            assert rb.sigma == pytest.approx(ra.sigma, rel=1e-8, abs=1e-12)

    def test_metrics_consistency(self):
        # eps and sigma logged per iteration must match a direct recomputation
        # from the landing points seen so far
        target = np.array([-1.2, 0.6])
        log = self._small_log()
        pts = log.landing_points()
        for i, rec in enumerate(log.records):
            head = pts[: i + 1]
            rbar = head.mean(axis=0)
            eps = np.linalg.norm(target - rbar)
            sigma = np.sqrt(np.mean(np.sum((head - rbar) ** 2, axis=1)))
            assert rec.eps == pytest.approx(eps, abs=1e-9)
            assert rec.sigma == pytest.approx(sigma, abs=1e-9)
            np.testing.assert_allclose(rec.r_bar, rbar, atol=1e-9)
            assert rec.loss == pytest.approx(
                0.5 * np.sum((pts[i] - target) ** 2), abs=1e-9
            )
