"""Oracle tests for kinematics and dynamics.

Expected values come from closed-form mechanics (pendulum torques and
accelerations, two-link planar FK) or from algorithmic identities
(forward/inverse dynamics round trip, mass-matrix symmetry, Jacobian
versus finite differences).
"""

import numpy as np
import pytest

from pr2sim import dynamics
from pr2sim.dynamics import (GRAVITY, KinCache, com_acceleration, com_state,
                             fk_frames, forward_dynamics, inverse_dynamics,
                             mass_matrix, point_jacobian)
from pr2sim.model import JointSpec, Link, RobotModel, SpatialInertia, load_kuavo
from pr2sim.spatial import SpatialTransform, quat_integrate, rot_z

from chains import random_chain, random_state


def point_mass_pendulum(length=1.0, mass=1.0, axis=(0, 1, 0)):
    """Revolute joint at origin, point mass at (0, 0, -length): q=0 hangs down."""
    com = np.array([0.0, 0.0, -length])
    links = [Link("bob", -1,
                  SpatialInertia(mass=mass, com=com, rot_inertia=_point_inertia(mass, com)),
                  SpatialTransform.identity(),
                  JointSpec("revolute", np.array(axis, dtype=float), (-10, 10), 100.0, 1e6))]
    return RobotModel(name="pendulum", links=links, frames={}, foot_contact_points={},
                      foot_links={}, collisions=[], leg_joint_names=[], arm_joint_names=[])


def _point_inertia(mass, com):
    c = np.array([[0, -com[2], com[1]], [com[2], 0, -com[0]], [-com[1], com[0], 0.0]])
    return -mass * (c @ c)   # point mass: inertia about origin only


class TestPendulum:
    def test_equilibrium_torque_zero(self):
        m = point_mass_pendulum()
        tau = inverse_dynamics(m, np.array([0.0]), np.array([0.0]), np.array([0.0]))
        assert abs(tau[0]) < 1e-12

    def test_horizontal_holding_torque(self):
        # m*g*l*sin(q) with m=1, l=1, q=90deg from vertical
        m = point_mass_pendulum()
        tau = inverse_dynamics(m, np.array([np.pi / 2]), np.array([0.0]), np.array([0.0]))
        assert tau[0] == pytest.approx(GRAVITY, abs=1e-9)

    def test_forward_dynamics_hanging(self):
        m = point_mass_pendulum()
        acc = forward_dynamics(m, np.array([0.0]), np.array([0.0]), np.array([0.0]))
        assert abs(acc[0]) < 1e-12

    def test_forward_dynamics_horizontal(self):
        # qdd = -(g/l) sin(q)
        m = point_mass_pendulum()
        acc = forward_dynamics(m, np.array([np.pi / 2]), np.array([0.0]), np.array([0.0]))
        assert acc[0] == pytest.approx(-GRAVITY, abs=1e-9)

    @pytest.mark.parametrize("q", [-2.0, -0.3, 0.7, 2.5])
    def test_forward_dynamics_analytic_sweep(self, q):
        m = point_mass_pendulum(length=0.7, mass=2.3)
        acc = forward_dynamics(m, np.array([q]), np.array([0.0]), np.array([0.0]))
        assert acc[0] == pytest.approx(-(GRAVITY / 0.7) * np.sin(q), abs=1e-9)


class TestTwoLinkFK:
    def test_planar_elbow_pose(self):
        # l1=0.23, l2=0.26, q=(0, -90deg): tip at (x, z) = (0.26, -0.23)
        links = [
            Link("l1", -1, SpatialInertia(1.0, np.array([0, 0, -0.115]), np.eye(3) * 1e-3),
                 SpatialTransform.identity(),
                 JointSpec("revolute", np.array([0.0, 1, 0]), (-np.pi, np.pi), 10, 10)),
            Link("l2", 0, SpatialInertia(1.0, np.array([0, 0, -0.13]), np.eye(3) * 1e-3),
                 SpatialTransform(np.eye(3), np.array([0, 0, -0.23])),
                 JointSpec("revolute", np.array([0.0, 1, 0]), (-np.pi, np.pi), 10, 10)),
        ]
        m = RobotModel("arm2", links, {}, {}, {}, [], [], [])
        cache = KinCache(m, np.array([0.0, -np.pi / 2]))
        tip = cache.point_world(1, np.array([0, 0, -0.26]))
        assert tip[0] == pytest.approx(0.26, abs=1e-12)
        assert tip[1] == pytest.approx(0.0, abs=1e-12)
        assert tip[2] == pytest.approx(-0.23, abs=1e-12)

    def test_base_yaw_rotates_everything(self):
        model = load_kuavo()
        q0, _ = model.neutral_state()
        poses0 = fk_frames(model, q0)
        q1 = q0.copy()
        q1[3:7] = np.array([np.cos(np.pi / 4), 0, 0, np.sin(np.pi / 4)])  # 90 deg yaw
        poses1 = fk_frames(model, q1)
        rz = rot_z(np.pi / 2)
        for name, p0 in poses0.items():
            np.testing.assert_allclose(poses1[name].translation, rz @ p0.translation,
                                       atol=1e-12)

    def test_home_pose_is_model_home(self):
        model = load_kuavo()
        q0, _ = model.neutral_state()
        poses = fk_frames(model, q0)
        # hands hang at shoulder y, feet under hips
        assert poses["left_hand"].translation[1] == pytest.approx(0.18)
        assert poses["left_foot"].translation[2] == pytest.approx(-0.56)
        assert poses["right_foot"].translation[1] == pytest.approx(-0.11)


class TestRoundTrip:
    def test_fd_id_identity_many_chains(self):
        rng = np.random.default_rng(1234)
        for _ in range(100):
            model = random_chain(rng)
            q, v = random_state(rng, model)
            a_target = rng.uniform(-3, 3, model.nv)
            tau = inverse_dynamics(model, q, v, a_target)
            a = forward_dynamics(model, q, v, tau)
            np.testing.assert_allclose(a, a_target, atol=1e-8)

    def test_roundtrip_with_external_forces(self):
        rng = np.random.default_rng(77)
        for _ in range(20):
            model = random_chain(rng)
            q, v = random_state(rng, model)
            a_target = rng.uniform(-3, 3, model.nv)
            f_ext = [rng.uniform(-10, 10, 6) for _ in model.links]
            tau = inverse_dynamics(model, q, v, a_target, f_ext=f_ext)
            a = forward_dynamics(model, q, v, tau, f_ext=f_ext)
            np.testing.assert_allclose(a, a_target, atol=1e-8)

    def test_kuavo_roundtrip(self):
        model = load_kuavo()
        rng = np.random.default_rng(5)
        q, _ = model.neutral_state()
        q[7:] = rng.uniform(-0.4, 0.4, model.dof_count)
        v = rng.uniform(-1, 1, model.nv)
        a_target = rng.uniform(-5, 5, model.nv)
        tau = inverse_dynamics(model, q, v, a_target)
        np.testing.assert_allclose(forward_dynamics(model, q, v, tau), a_target, atol=1e-8)


class TestMassMatrix:
    def test_symmetric_positive_definite(self):
        rng = np.random.default_rng(99)
        for _ in range(10):
            model = random_chain(rng)
            q, _ = random_state(rng, model)
            m = mass_matrix(model, q)
            assert np.max(np.abs(m - m.T)) < 1e-9
            assert np.linalg.eigvalsh(0.5 * (m + m.T))[0] > 0

    def test_kuavo_mass_matrix(self):
        model = load_kuavo()
        q, _ = model.neutral_state()
        m = mass_matrix(model, q)
        assert np.max(np.abs(m - m.T)) < 1e-9
        # the 3x3 linear block equals total mass times identity
        np.testing.assert_allclose(m[3:6, 3:6], np.eye(3) * model.total_mass, atol=1e-9)


class TestJacobian:
    def test_point_jacobian_matches_finite_difference(self):
        rng = np.random.default_rng(3)
        model = random_chain(rng, n_links=4, floating=True)
        q, v = random_state(rng, model)
        link = len(model.links) - 1
        point = np.array([0.1, -0.05, 0.2])
        jac = point_jacobian(model, q, link, point)
        vel = jac @ v

        dt = 1e-6
        qn = _integrate_q(model, q, v, dt)
        c0 = KinCache(model, q)
        c1 = KinCache(model, qn)
        fd = (c1.point_world(link, point) - c0.point_world(link, point)) / dt
        np.testing.assert_allclose(vel, fd, atol=1e-5)

    def test_cache_point_velocity_matches_jacobian(self):
        rng = np.random.default_rng(4)
        model = random_chain(rng, n_links=5, floating=True)
        q, v = random_state(rng, model)
        cache = KinCache(model, q, v)
        link = len(model.links) - 1
        point = np.array([0.0, 0.1, -0.1])
        jac = point_jacobian(model, q, link, point)
        np.testing.assert_allclose(cache.point_velocity(link, point), jac @ v, atol=1e-10)


def _integrate_q(model, q, v, dt):
    qn = np.array(q, dtype=float)
    if model.floating_base:
        qn[0:3] += v[3:6] * dt
        qn[3:7] = quat_integrate(q[3:7], v[0:3], dt)
        qn[7:] += v[6:] * dt
    else:
        qn += v * dt
    return qn


class TestComState:
    def test_kuavo_total_mass(self):
        model = load_kuavo()
        q, v = model.neutral_state()
        com, com_vel, mass = com_state(model, q, v)
        assert mass == pytest.approx(34.5, abs=1e-9)
        assert abs(com[1]) < 1e-12

    def test_standing_com_height_near_declared(self):
        model = load_kuavo()
        q, v = model.neutral_state()
        q[2] = 0.56  # soles on the ground with straight legs
        com, _, _ = com_state(model, q, v)
        assert com[2] == pytest.approx(model.standing_com_height, abs=0.01)

    def test_two_point_masses_symmetric(self):
        links = [
            Link("a", -1, SpatialInertia(1.0, np.zeros(3), np.eye(3) * 1e-4),
                 SpatialTransform.identity(),
                 JointSpec("floating", np.array([0.0, 0, 1]), (-1, 1), 1, 1)),
            Link("b", 0, SpatialInertia(1.0, np.zeros(3), np.eye(3) * 1e-4),
                 SpatialTransform(np.eye(3), np.array([0, 0, 1.0])),
                 JointSpec("fixed", np.array([0.0, 0, 1]), (0, 0), 1, 1)),
        ]
        m = RobotModel("pair", links, {}, {}, {}, [], [], [])
        q, v = m.neutral_state()
        com, _, mass = com_state(m, q, v)
        assert mass == pytest.approx(2.0)
        assert com[2] == pytest.approx(0.5, abs=1e-12)


class TestFreeFall:
    def test_com_acceleration_is_gravity(self):
        model = load_kuavo()
        rng = np.random.default_rng(11)
        q, _ = model.neutral_state()
        q[2] = 2.0
        q[7:] = rng.uniform(-0.3, 0.3, model.dof_count)
        v = rng.uniform(-1, 1, model.nv)
        cache = KinCache(model, q, v)
        a = dynamics.aba(model, cache, np.zeros(model.nv))
        acc = com_acceleration(model, cache, a)
        np.testing.assert_allclose(acc, [0, 0, -GRAVITY], atol=1e-8)

    def test_spinning_free_body_momentum_rate(self):
        rng = np.random.default_rng(13)
        model = random_chain(rng, n_links=3, floating=True)
        q, v = random_state(rng, model)
        cache = KinCache(model, q, v)
        a = dynamics.aba(model, cache, np.zeros(model.nv))
        acc = com_acceleration(model, cache, a)
        np.testing.assert_allclose(acc, [0, 0, -GRAVITY], atol=1e-8)
