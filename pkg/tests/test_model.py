import numpy as np
import pytest

from pr2sim.model import ModelError, load_kuavo, load_model

MINIMAL_PENDULUM = """
model pendulum
link arm
  parent world
  joint revolute
  axis 0 1 0
  origin 0 0 0
  limits_deg -180 180
  vel_limit 10
  effort_limit 5
  mass 1.0
  com 0 0 -1
  inertia 1.01 1.01 0.001 0 0 0
end
"""


class TestKuavo:
    def test_joint_counts(self):
        m = load_kuavo()
        assert m.dof_count == 18
        assert len(m.arm_joint_indices) == 8
        assert len(m.leg_joint_indices) == 10
        assert m.floating_base
        assert m.nq == 25 and m.nv == 24

    def test_total_mass(self):
        assert load_kuavo().total_mass == pytest.approx(34.5, abs=1e-9)

    def test_knee_effort_limit(self):
        m = load_kuavo()
        knee = m.link_index("l_calf")
        assert m.links[knee].joint.effort_limit == 110.0
        lo, hi = m.links[knee].joint.position_limits
        assert lo == pytest.approx(np.deg2rad(-120))
        assert hi == pytest.approx(np.deg2rad(10))

    def test_hip_yaken_and_ankle_torques(self):
        m = load_kuavo()
        assert m.links[m.link_index("l_hip_yaw")].joint.effort_limit == 48.0
        assert m.links[m.link_index("r_foot")].joint.effort_limit == 48.0
        assert m.links[m.link_index("l_hip_roll")].joint.effort_limit == 110.0

    def test_frames_and_feet(self):
        m = load_kuavo()
        for f in ("left_hand", "right_hand", "left_foot", "right_foot", "camera"):
            assert f in m.frames
        assert len(m.foot_contact_points["left_foot"]) == 4


class TestParser:
    def test_minimal_pendulum(self):
        m = load_model(MINIMAL_PENDULUM)
        assert m.dof_count == 1
        assert not m.floating_base

    def test_forward_parent_reference_rejected(self):
        bad = MINIMAL_PENDULUM.replace("parent world", "parent ghost")
        with pytest.raises(ModelError, match="not defined before use"):
            load_model(bad)

    def test_unknown_field_rejected(self):
        bad = MINIMAL_PENDULUM.replace("vel_limit 10", "wobble 10")
        with pytest.raises(ModelError, match="unknown link field 'wobble'"):
            load_model(bad)

    def test_bad_limits_rejected(self):
        bad = MINIMAL_PENDULUM.replace("limits_deg -180 180", "limits_deg 180 -180")
        with pytest.raises(ModelError, match="lo > hi"):
            load_model(bad)

    def test_non_unit_axis_rejected(self):
        bad = MINIMAL_PENDULUM.replace("axis 0 1 0", "axis 0 2 0")
        with pytest.raises(ModelError, match="unit-norm"):
            load_model(bad)

    def test_negative_mass_rejected(self):
        bad = MINIMAL_PENDULUM.replace("mass 1.0", "mass -1.0")
        with pytest.raises(ModelError, match="mass must be positive"):
            load_model(bad)

    def test_non_pd_inertia_rejected(self):
        bad = MINIMAL_PENDULUM.replace("inertia 1.01 1.01 0.001 0 0 0",
                                       "inertia 1.01 1.01 -0.5 0 0 0")
        with pytest.raises(ModelError, match="positive-definite"):
            load_model(bad)

    def test_parse_error_carries_line(self):
        bad = MINIMAL_PENDULUM + "\nwhatnot 3\n"
        with pytest.raises(ModelError, match=r"line \d+"):
            load_model(bad)
