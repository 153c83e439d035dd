"""Action commands and their translation to joint torques.

Commands address the arm and leg joint groups separately; each group runs in
one of three control modes:

    position: tau = kp * (q_target - q) - kd * qd
    velocity: tau = kd * (qd_target - qd)
    effort:   tau = joint_values

Per-command stiffness/dampings override the schedule defaults, and every
resulting torque is clamped to the joint's effort limit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import RobotModel

CTRL_MODES = ("position", "velocity", "effort")
HANDS = ("left_hand", "right_hand")


@dataclass
class GroupCommand:
    ctrl_mode: str = "effort"
    joint_values: np.ndarray | None = None
    stiffness: np.ndarray | None = None
    dampings: np.ndarray | None = None

    def copy(self) -> "GroupCommand":
        cp = lambda a: None if a is None else np.array(a, dtype=float)
        return GroupCommand(self.ctrl_mode, cp(self.joint_values),
                            cp(self.stiffness), cp(self.dampings))


@dataclass
class ActionCommand:
    arms: GroupCommand = field(default_factory=GroupCommand)
    legs: GroupCommand = field(default_factory=GroupCommand)
    pick: str | None = None         # "left_hand" | "right_hand"
    release: bool = False

    def copy(self) -> "ActionCommand":
        return ActionCommand(self.arms.copy(), self.legs.copy(), self.pick, self.release)


def zero_action(model: RobotModel) -> ActionCommand:
    """All-zero effort command (free-fall torques)."""
    return ActionCommand(
        arms=GroupCommand("effort", np.zeros(len(model.arm_joint_indices))),
        legs=GroupCommand("effort", np.zeros(len(model.leg_joint_indices))),
    )


@dataclass
class GainSchedule:
    """Default spring-damper gains per actuated joint (model joint order)."""
    stiffness: np.ndarray
    damping: np.ndarray

    def validate(self):
        if np.any(self.stiffness <= 0) or np.any(self.damping <= 0):
            raise ValueError("gain schedule entries must be positive")


def default_gains(model: RobotModel, leg_kp=200.0, leg_kd=10.0,
                  arm_kp=80.0, arm_kd=4.0) -> GainSchedule:
    """Baseline gains; deliberately conservative rather than tuned per task."""
    n = model.dof_count
    kp = np.zeros(n)
    kd = np.zeros(n)
    for k in model.leg_joint_indices:
        kp[k], kd[k] = leg_kp, leg_kd
    for k in model.arm_joint_indices:
        kp[k], kd[k] = arm_kp, arm_kd
    return GainSchedule(kp, kd)


def validate_action(cmd: ActionCommand, model: RobotModel) -> list[str]:
    """Full list of violations; empty list means the command is well-formed."""
    issues: list[str] = []
    groups = (("arms", cmd.arms, len(model.arm_joint_indices)),
              ("legs", cmd.legs, len(model.leg_joint_indices)))
    for name, g, n in groups:
        if g.ctrl_mode not in CTRL_MODES:
            issues.append(f"{name}.ctrl_mode must be one of {CTRL_MODES}, got {g.ctrl_mode!r}")
            continue
        if g.ctrl_mode != "effort" and g.joint_values is None:
            issues.append(f"{name}.joint_values required in {g.ctrl_mode} mode")
        for fld in ("joint_values", "stiffness", "dampings"):
            arr = getattr(g, fld)
            if arr is None:
                continue
            arr = np.asarray(arr)
            if arr.shape != (n,):
                issues.append(f"{name}.{fld} has shape {arr.shape}, expected ({n},)")
            elif not np.all(np.isfinite(arr)):
                issues.append(f"{name}.{fld} contains non-finite values")
            elif fld in ("stiffness", "dampings") and np.any(arr < 0):
                issues.append(f"{name}.{fld} must be elementwise >= 0")
    if cmd.pick is not None and cmd.pick not in HANDS:
        issues.append(f"pick must be one of {HANDS} or None, got {cmd.pick!r}")
    return issues


class ActionError(ValueError):
    pass


def effective_damping(cmd: ActionCommand, model: RobotModel, gains: GainSchedule) -> np.ndarray:
    """Per-joint viscous coefficient of the active spring-damper law.

    The integrator treats this damping implicitly for stability; effort-mode
    groups contribute none (their torque stream is applied verbatim).
    """
    kd = np.zeros(model.dof_count)
    for g, idx in ((cmd.arms, model.arm_joint_indices), (cmd.legs, model.leg_joint_indices)):
        if g.ctrl_mode == "effort":
            continue
        sel = np.asarray(idx, dtype=int)
        kd[sel] = gains.damping[sel] if g.dampings is None else np.asarray(g.dampings, dtype=float)
    return kd


def resolve_action(cmd: ActionCommand, joint_q: np.ndarray, joint_qd: np.ndarray,
                   model: RobotModel, gains: GainSchedule) -> np.ndarray:
    """Per-joint torques for a command at the measured joint state.

    joint_q/joint_qd cover all actuated joints in model joint order; the
    command's group vectors are scattered through the model's group index
    lists.  Output is clamped elementwise to the effort limits.
    """
    issues = validate_action(cmd, model)
    if issues:
        raise ActionError("; ".join(issues))
    n = model.dof_count
    if len(joint_q) != n or len(joint_qd) != n:
        raise ActionError(f"joint state length mismatch (expected {n})")
    tau = np.zeros(n)
    for g, idx in ((cmd.arms, model.arm_joint_indices), (cmd.legs, model.leg_joint_indices)):
        sel = np.asarray(idx, dtype=int)
        kp = gains.stiffness[sel] if g.stiffness is None else np.asarray(g.stiffness, dtype=float)
        kd = gains.damping[sel] if g.dampings is None else np.asarray(g.dampings, dtype=float)
        if g.ctrl_mode == "position":
            tau[sel] = kp * (np.asarray(g.joint_values, dtype=float) - joint_q[sel]) - kd * joint_qd[sel]
        elif g.ctrl_mode == "velocity":
            tau[sel] = kd * (np.asarray(g.joint_values, dtype=float) - joint_qd[sel])
        else:
            vals = np.zeros(len(sel)) if g.joint_values is None else np.asarray(g.joint_values, dtype=float)
            tau[sel] = vals
    limits = model.effort_limits()
    return np.clip(tau, -limits, limits)
