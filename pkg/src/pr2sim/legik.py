"""Closed-form leg inverse kinematics for the 5-DoF yaw/roll/pitch-knee-ankle leg.

The leg has no ankle roll, so a foot target is (position, yaw, pitch); foot
roll follows from the hip-roll solution.  Angle conventions match the model
file: pitch joints positive-forward, knee flexion negative.
"""

from __future__ import annotations

import numpy as np

from .model import RobotModel
from .spatial import SpatialTransform, rot_y, rot_z

THIGH = 0.23
CALF = 0.26
ANKLE_HEIGHT = 0.07
HIP_HALF_WIDTH = 0.11
SOLE_OFFSET = np.array([0.025, 0.0, -ANKLE_HEIGHT])   # sole-center frame in ankle frame

LEG_SLOTS = {"left": slice(0, 5), "right": slice(5, 10)}   # into the leg group vector


def yaw_pitch_of(rotation: np.ndarray) -> tuple[float, float]:
    """ZYX yaw and pitch of a rotation matrix."""
    yaw = float(np.arctan2(rotation[1, 0], rotation[0, 0]))
    pitch = float(np.arcsin(np.clip(-rotation[2, 0], -1.0, 1.0)))
    return yaw, pitch


def sole_target_pose(position, yaw: float, pitch: float) -> SpatialTransform:
    return SpatialTransform(rot_z(yaw) @ rot_y(pitch), np.asarray(position, dtype=float))


def leg_ik(pelvis: SpatialTransform, sole: SpatialTransform, side: str) -> np.ndarray:
    """Joint angles [hip_yaw, hip_roll, hip_pitch, knee, ankle_pitch] for one leg.

    The missing ankle-roll DoF means the requested sole roll is generally
    unreachable; a refinement pass re-aims the ankle using the orientation
    the leg can actually produce.  Unreachable positions resolve to the
    closest stretched pose rather than raising, so the walking loop can
    keep commanding through transients.
    """
    s = 1.0 if side == "left" else -1.0
    hip_w = pelvis.apply(np.array([0.0, s * HIP_HALF_WIDTH, 0.0]))
    pel_yaw, pel_pitch = yaw_pitch_of(pelvis.rotation)
    sole_yaw, sole_pitch = yaw_pitch_of(sole.rotation)
    yaw_rel = _wrap(sole_yaw - pel_yaw)

    foot_rot = sole.rotation
    angles = None
    for _ in range(3):
        ankle_w = sole.translation - foot_rot @ SOLE_OFFSET
        r = pelvis.rotation.T @ (ankle_w - hip_w)
        r1 = rot_z(yaw_rel).T @ r
        beta = np.arctan2(r1[1], -r1[2])
        r2 = np.array([[1, 0, 0],
                       [0, np.cos(beta), np.sin(beta)],
                       [0, -np.sin(beta), np.cos(beta)]]) @ r1

        x, zbar = r2[0], -r2[2]
        d2 = min(x * x + zbar * zbar, (THIGH + CALF - 1e-6) ** 2)
        cos_knee = (d2 - THIGH**2 - CALF**2) / (2 * THIGH * CALF)
        knee = -float(np.arccos(np.clip(cos_knee, -1.0, 1.0)))
        gamma = np.arctan2(x, zbar)
        offset = np.arctan2(CALF * np.sin(-knee), THIGH + CALF * np.cos(knee))
        hip_pitch = float(gamma + offset)
        pitch_sum = _pitch_for_sole(beta, yaw_rel, sole_pitch - pel_pitch)
        ankle_pitch = float(pitch_sum - hip_pitch - knee)
        angles = np.array([s * yaw_rel, s * beta, hip_pitch, knee, ankle_pitch])
        foot_rot = pelvis.rotation @ rot_z(yaw_rel) @ _rot_x(beta) @ rot_y(-pitch_sum)
    return angles


def _rot_x(t: float) -> np.ndarray:
    c, s = np.cos(t), np.sin(t)
    return np.array([[1.0, 0, 0], [0, c, -s], [0, s, c]])


def _pitch_for_sole(beta: float, yaw_rel: float, pitch_rel: float) -> float:
    """Pitch-axis total (q3+q4+q5) for the requested sole pitch given the roll.

    With roll beta the pitch axis tilts; sin(pitch_achieved) = cos(beta)*sin(theta).
    """
    cb = max(np.cos(beta), 1e-6)
    return float(np.arcsin(np.clip(np.sin(pitch_rel) / cb, -1.0, 1.0)))


def _wrap(a: float) -> float:
    return float((a + np.pi) % (2 * np.pi) - np.pi)


def both_legs_ik(pelvis: SpatialTransform, left_sole: SpatialTransform,
                 right_sole: SpatialTransform) -> np.ndarray:
    """Leg-group joint vector (length 10, model leg order)."""
    out = np.zeros(10)
    out[LEG_SLOTS["left"]] = leg_ik(pelvis, left_sole, "left")
    out[LEG_SLOTS["right"]] = leg_ik(pelvis, right_sole, "right")
    return out


def clamp_to_limits(model: RobotModel, group_indices, values: np.ndarray) -> np.ndarray:
    lims = model.position_limits()[np.asarray(group_indices, dtype=int)]
    return np.clip(values, lims[:, 0], lims[:, 1])


def standing_legs(pelvis_height: float, terrain_height: float = 0.0) -> np.ndarray:
    """Leg joints for standing with soles flat under the hips."""
    pelvis = SpatialTransform(np.eye(3), np.array([0.0, 0.0, terrain_height + pelvis_height]))
    left = sole_target_pose([0.0, HIP_HALF_WIDTH, terrain_height], 0.0, 0.0)
    right = sole_target_pose([0.0, -HIP_HALF_WIDTH, terrain_height], 0.0, 0.0)
    return both_legs_ik(pelvis, left, right)


def standing_state(model: RobotModel, xy, yaw: float, terrain_height: float,
                   pelvis_height: float):
    """Full (q, v) standing at xy with the given heading, soles on the ground."""
    q = np.zeros(model.nq)
    q[0:2] = xy
    q[2] = terrain_height + pelvis_height
    q[3] = np.cos(yaw / 2)
    q[6] = np.sin(yaw / 2)
    pelvis = SpatialTransform(rot_z(yaw), q[0:3])
    lw = pelvis.apply([0.0, HIP_HALF_WIDTH, 0.0])
    rw = pelvis.apply([0.0, -HIP_HALF_WIDTH, 0.0])
    left = sole_target_pose([lw[0], lw[1], terrain_height], yaw, 0.0)
    right = sole_target_pose([rw[0], rw[1], terrain_height], yaw, 0.0)
    legs = both_legs_ik(pelvis, left, right)
    joints = np.zeros(model.dof_count)
    joints[np.asarray(model.leg_joint_indices, dtype=int)] = legs
    q[7:] = joints
    return q, np.zeros(model.nv)
