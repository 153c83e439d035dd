"""Simulation configuration: every tunable physical constant in one place.

Defaults below are the documented, bit-exact reference values; a JSON file
(--config flag or the PR2_CONFIG environment variable) may override any
subset using the same nested field names.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field


@dataclass
class ContactConfig:
    normal_stiffness: float = 5.0e4      # N/m per contact point
    normal_damping: float = 500.0        # N*s/m per contact point
    friction_mu: float = 0.8
    tangent_gain: float = 1.0e3          # N*s/m viscous regularization
    # stability guards: per-point stiffness/damping are capped against the
    # reference mass so one integration step cannot reverse an approach
    robot_point_mass: float = 0.4        # kg, effective mass behind a robot contact point
    damping_cap_factor: float = 0.5
    stiffness_cap_factor: float = 0.25
    max_penetration: float = 0.05        # m, force saturation depth


@dataclass
class ValveConfig:
    hinge_damping: float = 2.0           # N*m*s/rad
    hinge_inertia: float = 0.5           # kg*m^2
    grasp_cylinder_radius: float = 0.35  # m, valve radius + margin
    grasp_cylinder_halfwidth: float = 0.1
    attach_stiffness: float = 2000.0     # N/m hand-to-rim coupling spring
    attach_damping: float = 50.0


@dataclass
class GainConfig:
    leg_kp: float = 200.0
    leg_kd: float = 10.0
    arm_kp: float = 80.0
    arm_kd: float = 4.0


@dataclass
class WalkConfig:
    com_height: float = 0.58             # LIP height z_c
    pelvis_height: float = 0.52
    step_duration: float = 0.4           # s per single-support phase
    double_support_fraction: float = 0.1
    step_height: float = 0.06
    step_width: float = 0.22
    velocity_gain: float = 0.3           # k_v on the capture-point law
    max_step: float = 0.35               # m, reach clamp on foot placement
    max_vx: float = 0.6
    max_vy: float = 0.3
    max_yaw_rate: float = 0.8
    swing_kp: float = 350.0
    swing_kd: float = 12.0


@dataclass
class JumpConfig:
    crouch_depth: float = 0.12
    crouch_duration: float = 0.6
    landing_duration: float = 0.3
    thrust_accel_cap: float = 1.5        # g units, mean thrust acceleration cap
    stance_width: float = 0.22


@dataclass
class StepWalkConfig:
    com_height: float = 0.58
    step_duration: float = 0.8
    double_support_fraction: float = 0.25
    preview_horizon: float = 1.6         # s
    lqr_qe: float = 1.0
    lqr_r: float = 1.0e-6


@dataclass
class CameraConfig:
    width: int = 128
    height: int = 96
    hfov_deg: float = 90.0
    far: float = 20.0
    enabled: bool = False                # rendering on (Task 6 enables it)


@dataclass
class BridgeConfig:
    handshake_timeout: float = 60.0      # s wall clock for the first act
    binary_frames: bool = False


@dataclass
class SimConfig:
    dt: float = 0.002
    control_decimation: int = 5
    pick_distance: float = 0.2           # m, hand-to-object attach threshold
    contact: ContactConfig = field(default_factory=ContactConfig)
    valve: ValveConfig = field(default_factory=ValveConfig)
    gains: GainConfig = field(default_factory=GainConfig)
    walk: WalkConfig = field(default_factory=WalkConfig)
    jump: JumpConfig = field(default_factory=JumpConfig)
    stepwalk: StepWalkConfig = field(default_factory=StepWalkConfig)
    camera: CameraConfig = field(default_factory=CameraConfig)
    bridge: BridgeConfig = field(default_factory=BridgeConfig)
    time_limits: dict = field(default_factory=lambda: {
        "1": 120.0, "2": 120.0, "3": 120.0, "4": 120.0, "5": 120.0, "6": 300.0})

    @property
    def control_dt(self) -> float:
        return self.dt * self.control_decimation

    def time_limit(self, task_id: int) -> float:
        return float(self.time_limits[str(task_id)])

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        from .wire import fnv1a64
        return f"{fnv1a64(self.canonical_json().encode()):016x}"


def _apply_overrides(obj, overrides: dict, path=""):
    for key, val in overrides.items():
        if not hasattr(obj, key):
            raise KeyError(f"unknown config field {path + key!r}")
        cur = getattr(obj, key)
        if dataclasses.is_dataclass(cur) and isinstance(val, dict):
            _apply_overrides(cur, val, path + key + ".")
        elif isinstance(cur, dict) and isinstance(val, dict):
            cur.update({str(k): v for k, v in val.items()})
        else:
            setattr(obj, key, type(cur)(val) if cur is not None else val)


def load_config(path: str | None = None) -> SimConfig:
    """Defaults, optionally overlaid with a JSON file (or $PR2_CONFIG)."""
    cfg = SimConfig()
    if path is None:
        path = os.environ.get("PR2_CONFIG")
    if path:
        with open(path, "r", encoding="utf-8") as f:
            _apply_overrides(cfg, json.load(f))
    return cfg
