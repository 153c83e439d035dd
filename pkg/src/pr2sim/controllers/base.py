"""Shared controller plumbing: terrain adapter and observation helpers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..model import RobotModel
from ..observation import Observation, full_state_from
from ..scene import SceneDescription
from ..spatial import quat_to_rot


class TerrainInfo:
    """Ground model handed to built-in controllers (published task data)."""

    def __init__(self, height_fn, pitch_fn=None):
        self._height = height_fn
        self._pitch = pitch_fn

    def height(self, x: float, y: float) -> float:
        return float(self._height(x, y))

    def pitch(self, x: float, y: float) -> float:
        """Uphill pitch (rad) of the ground along +x at (x, y)."""
        if self._pitch is not None:
            return float(self._pitch(x, y))
        eps = 0.05
        return float(np.arctan2(self._height(x + eps, y) - self._height(x - eps, y), 2 * eps))

    @staticmethod
    def flat() -> "TerrainInfo":
        return TerrainInfo(lambda x, y: 0.0, lambda x, y: 0.0)

    @staticmethod
    def from_scene(scene: SceneDescription) -> "TerrainInfo":
        return TerrainInfo(scene.terrain.height)


@dataclass
class RobotView:
    """Per-tick kinematic digest of an observation."""
    q: np.ndarray
    v: np.ndarray
    base_pos: np.ndarray
    base_rot: np.ndarray
    yaw: float
    pitch: float
    roll: float

    @staticmethod
    def from_obs(obs: Observation, model: RobotModel) -> "RobotView":
        q, v = full_state_from(obs, model)
        rot = quat_to_rot(q[3:7])
        yaw = float(np.arctan2(rot[1, 0], rot[0, 0]))
        pitch = float(np.arcsin(np.clip(-rot[2, 0], -1, 1)))
        roll = float(np.arctan2(rot[2, 1], rot[2, 2]))
        return RobotView(q, v, q[0:3], rot, yaw, pitch, roll)

    def upright(self, limit_rad: float = np.deg2rad(30)) -> bool:
        return abs(self.pitch) < limit_rad and abs(self.roll) < limit_rad
