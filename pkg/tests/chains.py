"""Random kinematic-chain generator used by dynamics oracle tests."""

from __future__ import annotations

import numpy as np

from pr2sim.model import JointSpec, Link, RobotModel, SpatialInertia
from pr2sim.spatial import SpatialTransform, axis_angle


def random_inertia(rng) -> SpatialInertia:
    mass = rng.uniform(0.2, 5.0)
    com = rng.uniform(-0.2, 0.2, 3)
    a = rng.normal(size=(3, 3))
    about_com = a @ a.T + np.eye(3) * 0.05
    about_com *= 0.02
    c = np.array([[0, -com[2], com[1]], [com[2], 0, -com[0]], [-com[1], com[0], 0]])
    about_origin = about_com - mass * (c @ c)
    return SpatialInertia(mass=mass, com=com, rot_inertia=about_origin)


def random_chain(rng, n_links=None, floating=None) -> RobotModel:
    """Serial chain with random revolute/prismatic joints and inertias."""
    if n_links is None:
        n_links = int(rng.integers(1, 9))
    if floating is None:
        floating = bool(rng.integers(0, 2))
    links = []
    start = 0
    if floating:
        links.append(Link("base", -1, random_inertia(rng),
                          SpatialTransform.identity(),
                          JointSpec("floating", np.array([0.0, 0, 1]), (-np.inf, np.inf),
                                    np.inf, np.inf)))
        start = 1
    for i in range(start, n_links + start):
        kind = "revolute" if rng.random() < 0.7 else "prismatic"
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        offset = rng.uniform(-0.4, 0.4, 3)
        mount_axis = rng.normal(size=3)
        mount_axis /= np.linalg.norm(mount_axis)
        rot = axis_angle(mount_axis, rng.uniform(-np.pi, np.pi))
        tf = SpatialTransform(rot, offset)
        parent = i - 1 if i > 0 else -1
        links.append(Link(f"link{i}", parent, random_inertia(rng), tf,
                          JointSpec(kind, axis, (-2 * np.pi, 2 * np.pi), 50.0, 500.0)))
    return RobotModel(name="chain", links=links, frames={}, foot_contact_points={},
                      foot_links={}, collisions=[], leg_joint_names=[], arm_joint_names=[])


def random_state(rng, model: RobotModel):
    q = np.zeros(model.nq)
    v = rng.uniform(-1.5, 1.5, model.nv)
    if model.floating_base:
        q[0:3] = rng.uniform(-1, 1, 3)
        quat = rng.normal(size=4)
        q[3:7] = quat / np.linalg.norm(quat)
        q[7:] = rng.uniform(-1.5, 1.5, model.dof_count)
    else:
        q[:] = rng.uniform(-1.5, 1.5, model.nq)
    return q, v
