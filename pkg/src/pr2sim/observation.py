"""The per-control-tick observation structure and its canonical serialization."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .model import RobotModel
from .wire import fnv1a64, floats, pack_f64, pack_u8, unpack_f64, unpack_u8


@dataclass
class JointState:
    arms_positions: np.ndarray
    arms_velocities: np.ndarray
    arms_applied_effort: np.ndarray
    legs_positions: np.ndarray
    legs_velocities: np.ndarray
    legs_applied_effort: np.ndarray


@dataclass
class BodyState:
    world_pos: np.ndarray
    world_orient: np.ndarray          # quaternion wxyz
    linear_velocities: np.ndarray
    angular_velocities: np.ndarray


@dataclass
class CameraFrame:
    rgb: np.ndarray                   # HxWx3 uint8
    dist_to_image_plane: np.ndarray   # HxW float64, +inf on miss
    tick: int = 0

    @staticmethod
    def empty() -> "CameraFrame":
        return CameraFrame(np.zeros((0, 0, 3), dtype=np.uint8), np.zeros((0, 0)))


@dataclass
class Observation:
    joint_state: JointState
    body_state: BodyState
    cam: CameraFrame
    language_instruction: str = ""
    pick: bool = False
    tick: int = 0
    extras: dict = field(default_factory=dict)   # task feedback (start pose, bar state)


def build_observation(world, model: RobotModel, cam: CameraFrame | None = None,
                      instruction: str = "", extras: dict | None = None,
                      tick: int = 0) -> Observation:
    """Assemble the observation from the live world (post-step state)."""
    q, v = world.q, world.v
    nj = model.dof_count
    qj = q[7:] if model.floating_base else q
    qdj = v[6:] if model.floating_base else v
    arms = np.asarray(model.arm_joint_indices, dtype=int)
    legs = np.asarray(model.leg_joint_indices, dtype=int)
    eff = world.applied_torques
    js = JointState(
        arms_positions=qj[arms].copy(), arms_velocities=qdj[arms].copy(),
        arms_applied_effort=eff[arms].copy(),
        legs_positions=qj[legs].copy(), legs_velocities=qdj[legs].copy(),
        legs_applied_effort=eff[legs].copy())
    bs = BodyState(world_pos=q[0:3].copy(), world_orient=q[3:7].copy(),
                   linear_velocities=v[3:6].copy(), angular_velocities=v[0:3].copy())
    return Observation(joint_state=js, body_state=bs,
                       cam=cam if cam is not None else CameraFrame.empty(),
                       language_instruction=instruction,
                       pick=world.attachment.active,
                       tick=tick, extras=dict(extras or {}))


def full_state_from(obs: Observation, model: RobotModel):
    """(q, v) in model layout reconstructed from an observation."""
    q = np.zeros(model.nq)
    v = np.zeros(model.nv)
    q[0:3] = obs.body_state.world_pos
    q[3:7] = obs.body_state.world_orient
    v[0:3] = obs.body_state.angular_velocities
    v[3:6] = obs.body_state.linear_velocities
    arms = np.asarray(model.arm_joint_indices, dtype=int)
    legs = np.asarray(model.leg_joint_indices, dtype=int)
    qj = np.zeros(model.dof_count)
    qdj = np.zeros(model.dof_count)
    qj[arms] = obs.joint_state.arms_positions
    qj[legs] = obs.joint_state.legs_positions
    qdj[arms] = obs.joint_state.arms_velocities
    qdj[legs] = obs.joint_state.legs_velocities
    q[7:] = qj
    v[6:] = qdj
    return q, v


# ---------------------------------------------------------------------------
# canonical bytes + digest (layout documented in docs/protocol.md)

def canonical_observation_bytes(obs: Observation) -> bytes:
    out = [struct.pack("<Q", obs.tick)]

    def arr(a):
        out.append(np.ascontiguousarray(a, dtype="<f8").tobytes())

    js, bs = obs.joint_state, obs.body_state
    for a in (js.arms_positions, js.arms_velocities, js.arms_applied_effort,
              js.legs_positions, js.legs_velocities, js.legs_applied_effort,
              bs.world_pos, bs.world_orient, bs.linear_velocities,
              bs.angular_velocities):
        arr(a)
    out.append(struct.pack("<B", 1 if obs.pick else 0))
    instr = obs.language_instruction.encode("utf-8")
    out.append(struct.pack("<I", len(instr)))
    out.append(instr)
    h, w = obs.cam.dist_to_image_plane.shape if obs.cam.dist_to_image_plane.ndim == 2 else (0, 0)
    out.append(struct.pack("<II", w, h))
    if h and w:
        out.append(np.ascontiguousarray(obs.cam.rgb, dtype=np.uint8).tobytes())
        out.append(np.ascontiguousarray(obs.cam.dist_to_image_plane, dtype="<f8").tobytes())
    for key in sorted(obs.extras):
        kb = key.encode("utf-8")
        out.append(struct.pack("<I", len(kb)))
        out.append(kb)
        arr(np.atleast_1d(np.asarray(obs.extras[key], dtype=float)))
    return b"".join(out)


def observation_digest(obs: Observation) -> str:
    return f"{fnv1a64(canonical_observation_bytes(obs)):016x}"


# ---------------------------------------------------------------------------
# JSON (wire) form

def observation_to_json(obs: Observation, binary: bool = False) -> dict:
    h, w = obs.cam.dist_to_image_plane.shape if obs.cam.dist_to_image_plane.ndim == 2 else (0, 0)
    cam = {"width": w, "height": h}
    if h and w and not binary:
        cam["rgb"] = pack_u8(obs.cam.rgb)
        cam["dist_to_image_plane"] = pack_f64(obs.cam.dist_to_image_plane)
    js, bs = obs.joint_state, obs.body_state
    return {
        "agent": {
            "joint_state": {
                "arms_positions": floats(js.arms_positions),
                "arms_velocities": floats(js.arms_velocities),
                "arms_applied_effort": floats(js.arms_applied_effort),
                "legs_positions": floats(js.legs_positions),
                "legs_velocities": floats(js.legs_velocities),
                "legs_applied_effort": floats(js.legs_applied_effort),
            },
            "body_state": {
                "world_pos": floats(bs.world_pos),
                "world_orient": floats(bs.world_orient),
                "linear_velocities": floats(bs.linear_velocities),
                "angular_velocities": floats(bs.angular_velocities),
            },
        },
        "cam": cam,
        "language_instruction": obs.language_instruction,
        "pick": obs.pick,
        "tick": obs.tick,
        "extras": {k: floats(np.atleast_1d(np.asarray(v, dtype=float)))
                   for k, v in sorted(obs.extras.items())},
    }


def observation_from_json(body: dict) -> Observation:
    js = body["agent"]["joint_state"]
    bs = body["agent"]["body_state"]
    cam = body.get("cam", {})
    w, h = int(cam.get("width", 0)), int(cam.get("height", 0))
    if h and w and "rgb" in cam:
        frame = CameraFrame(unpack_u8(cam["rgb"], (h, w, 3)),
                            unpack_f64(cam["dist_to_image_plane"], (h, w)),
                            tick=int(body.get("tick", 0)))
    else:
        frame = CameraFrame.empty()
    return Observation(
        joint_state=JointState(*[np.asarray(js[k], dtype=float) for k in (
            "arms_positions", "arms_velocities", "arms_applied_effort",
            "legs_positions", "legs_velocities", "legs_applied_effort")]),
        body_state=BodyState(*[np.asarray(bs[k], dtype=float) for k in (
            "world_pos", "world_orient", "linear_velocities", "angular_velocities")]),
        cam=frame,
        language_instruction=body.get("language_instruction", ""),
        pick=bool(body.get("pick", False)),
        tick=int(body.get("tick", 0)),
        extras={k: np.asarray(v, dtype=float) for k, v in body.get("extras", {}).items()})
