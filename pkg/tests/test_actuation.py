import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pr2sim.actuation import (ActionCommand, ActionError, GainSchedule,
                              GroupCommand, default_gains, resolve_action,
                              validate_action, zero_action)
from pr2sim.model import load_kuavo

MODEL = load_kuavo()
GAINS = default_gains(MODEL)
N_ARM = 8
N_LEG = 10


def leg_effort(vals):
    return ActionCommand(arms=GroupCommand("effort", np.zeros(N_ARM)),
                         legs=GroupCommand("effort", np.asarray(vals, dtype=float)))


class TestResolve:
    def test_spring_damper_hand_value(self):
        # kp=100, kd=10, error 0.1 rad, zero velocity -> 10 N*m
        cmd = ActionCommand(
            arms=GroupCommand("effort", np.zeros(N_ARM)),
            legs=GroupCommand("position", np.full(N_LEG, 0.1),
                              stiffness=np.full(N_LEG, 100.0),
                              dampings=np.full(N_LEG, 10.0)))
        tau = resolve_action(cmd, np.zeros(18), np.zeros(18), MODEL, GAINS)
        leg = tau[MODEL.leg_joint_indices]
        np.testing.assert_allclose(leg, 10.0, atol=1e-12)

    def test_damping_term(self):
        cmd = ActionCommand(
            arms=GroupCommand("effort", np.zeros(N_ARM)),
            legs=GroupCommand("position", np.zeros(N_LEG),
                              stiffness=np.full(N_LEG, 100.0),
                              dampings=np.full(N_LEG, 10.0)))
        qd = np.zeros(18)
        qd[MODEL.leg_joint_indices] = 0.5
        tau = resolve_action(cmd, np.zeros(18), qd, MODEL, GAINS)
        np.testing.assert_allclose(tau[MODEL.leg_joint_indices], -5.0, atol=1e-12)

    def test_velocity_mode(self):
        cmd = ActionCommand(
            arms=GroupCommand("velocity", np.full(N_ARM, 1.0),
                              dampings=np.full(N_ARM, 4.0)),
            legs=GroupCommand("effort", np.zeros(N_LEG)))
        tau = resolve_action(cmd, np.zeros(18), np.zeros(18), MODEL, GAINS)
        np.testing.assert_allclose(tau[MODEL.arm_joint_indices], 4.0, atol=1e-12)

    def test_knee_effort_clamped_at_110(self):
        vals = np.zeros(N_LEG)
        vals[3] = 200.0      # left knee slot in the leg group
        tau = resolve_action(leg_effort(vals), np.zeros(18), np.zeros(18), MODEL, GAINS)
        knee = MODEL.leg_joint_indices[3]
        assert tau[knee] == 110.0

    def test_ankle_and_hip_yaw_clamp_at_48(self):
        vals = np.full(N_LEG, -500.0)
        tau = resolve_action(leg_effort(vals), np.zeros(18), np.zeros(18), MODEL, GAINS)
        legs = tau[MODEL.leg_joint_indices]
        assert legs[0] == -48.0 and legs[4] == -48.0     # hip yaw, ankle pitch
        assert legs[5] == -48.0 and legs[9] == -48.0
        assert legs[1] == -110.0 and legs[2] == -110.0 and legs[3] == -110.0

    def test_zero_effort_is_zero(self):
        tau = resolve_action(zero_action(MODEL), np.zeros(18), np.zeros(18), MODEL, GAINS)
        np.testing.assert_array_equal(tau, np.zeros(18))

    def test_position_fixed_point_is_zero(self):
        q = np.zeros(18)
        q[MODEL.leg_joint_indices] = 0.3
        cmd = ActionCommand(
            arms=GroupCommand("effort", np.zeros(N_ARM)),
            legs=GroupCommand("position", np.full(N_LEG, 0.3)))
        tau = resolve_action(cmd, q, np.zeros(18), MODEL, GAINS)
        np.testing.assert_array_equal(tau[MODEL.leg_joint_indices], np.zeros(N_LEG))

    def test_override_equals_baked_schedule(self):
        rng = np.random.default_rng(8)
        q = rng.uniform(-0.5, 0.5, 18)
        qd = rng.uniform(-1, 1, 18)
        target = rng.uniform(-0.5, 0.5, N_LEG)
        kp = rng.uniform(10, 300, N_LEG)
        kd = rng.uniform(1, 20, N_LEG)
        cmd = ActionCommand(arms=GroupCommand("effort", np.zeros(N_ARM)),
                            legs=GroupCommand("position", target, kp, kd))
        baked = GainSchedule(GAINS.stiffness.copy(), GAINS.damping.copy())
        baked.stiffness[MODEL.leg_joint_indices] = kp
        baked.damping[MODEL.leg_joint_indices] = kd
        plain = ActionCommand(arms=GroupCommand("effort", np.zeros(N_ARM)),
                              legs=GroupCommand("position", target))
        np.testing.assert_array_equal(
            resolve_action(cmd, q, qd, MODEL, GAINS),
            resolve_action(plain, q, qd, MODEL, baked))

    @settings(max_examples=200, deadline=None)
    @given(mode=st.sampled_from(["position", "velocity", "effort"]),
           seed=st.integers(0, 2**32 - 1))
    def test_clamp_property(self, mode, seed):
        rng = np.random.default_rng(seed)
        vals = rng.uniform(-400, 400, N_LEG)
        legs = GroupCommand(mode, vals,
                            stiffness=rng.uniform(0, 5000, N_LEG),
                            dampings=rng.uniform(0, 500, N_LEG))
        cmd = ActionCommand(arms=GroupCommand("effort", np.zeros(N_ARM)), legs=legs)
        q = rng.uniform(-1, 1, 18)
        qd = rng.uniform(-5, 5, 18)
        tau = resolve_action(cmd, q, qd, MODEL, GAINS)
        limits = MODEL.effort_limits()
        assert np.all(np.abs(tau) <= limits + 1e-12)


class TestValidate:
    def test_wellformed_effort_command(self):
        assert validate_action(zero_action(MODEL), MODEL) == []

    def test_position_without_values(self):
        cmd = ActionCommand(arms=GroupCommand("position", None),
                            legs=GroupCommand("effort", np.zeros(N_LEG)))
        issues = validate_action(cmd, MODEL)
        assert any("arms.joint_values required" in s for s in issues)

    def test_wrong_leg_vector_length(self):
        cmd = ActionCommand(arms=GroupCommand("effort", np.zeros(N_ARM)),
                            legs=GroupCommand("effort", np.zeros(9)))
        issues = validate_action(cmd, MODEL)
        assert any("legs.joint_values" in s and "(10,)" in s for s in issues)

    def test_multiple_violations_collected(self):
        cmd = ActionCommand(arms=GroupCommand("position", None),
                            legs=GroupCommand("effort", np.zeros(9)),
                            pick="torso")
        assert len(validate_action(cmd, MODEL)) == 3

    def test_negative_gains_rejected(self):
        cmd = ActionCommand(arms=GroupCommand("effort", np.zeros(N_ARM)),
                            legs=GroupCommand("position", np.zeros(N_LEG),
                                              stiffness=np.full(N_LEG, -1.0)))
        with pytest.raises(ActionError, match="elementwise"):
            resolve_action(cmd, np.zeros(18), np.zeros(18), MODEL, GAINS)
