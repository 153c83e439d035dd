"""Robot model: kinematic tree description and the text model-file loader."""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field

import numpy as np

from .spatial import SpatialTransform, rot_x, rot_y, rot_z, skew, spatial_inertia_matrix

JOINT_KINDS = ("revolute", "prismatic", "floating", "fixed")


class ModelError(ValueError):
    """Raised for malformed or physically invalid model files."""


@dataclass(frozen=True)
class SpatialInertia:
    mass: float
    com: np.ndarray                 # link frame, m
    rot_inertia: np.ndarray         # about link frame origin, kg*m^2

    def matrix(self) -> np.ndarray:
        m = getattr(self, "_matrix", None)
        if m is None:
            m = spatial_inertia_matrix(self.mass, self.com, self.rot_inertia)
            object.__setattr__(self, "_matrix", m)
        return m

    def validate(self, where: str = "") -> None:
        if not self.mass > 0:
            raise ModelError(f"{where}: mass must be positive, got {self.mass}")
        ic = np.asarray(self.rot_inertia)
        if np.max(np.abs(ic - ic.T)) > 1e-9:
            raise ModelError(f"{where}: rot_inertia not symmetric")
        # inertia about the CoM must be positive-definite
        c = skew(self.com)
        about_com = ic + self.mass * (c @ c)
        eig = np.linalg.eigvalsh(0.5 * (about_com + about_com.T))
        if eig[0] <= -1e-9 or eig[0] <= 0:
            raise ModelError(f"{where}: rot_inertia not positive-definite about CoM "
                             f"(min eigenvalue {eig[0]:.3g})")


@dataclass(frozen=True)
class JointSpec:
    kind: str
    axis: np.ndarray
    position_limits: tuple[float, float]    # rad or m
    velocity_limit: float
    effort_limit: float

    @property
    def actuated(self) -> bool:
        return self.kind in ("revolute", "prismatic")

    def validate(self, where: str = "") -> None:
        if self.kind not in JOINT_KINDS:
            raise ModelError(f"{where}: unknown joint kind {self.kind!r}")
        if self.actuated:
            if abs(np.linalg.norm(self.axis) - 1.0) > 1e-9:
                raise ModelError(f"{where}: joint axis not unit-norm")
            lo, hi = self.position_limits
            if lo > hi:
                raise ModelError(f"{where}: joint limits lo > hi ({lo} > {hi})")
            if not self.effort_limit > 0:
                raise ModelError(f"{where}: effort_limit must be positive")


@dataclass(frozen=True)
class Link:
    name: str
    parent: int                      # index into links, -1 for root
    inertia: SpatialInertia
    joint_transform: SpatialTransform   # joint frame in the parent frame
    joint: JointSpec


@dataclass(frozen=True)
class Frame:
    name: str
    link: int
    transform: SpatialTransform


@dataclass(frozen=True)
class CollisionShape:
    kind: str                        # "capsule" | "sphere"
    link: int
    p0: np.ndarray                   # link frame; capsule segment ends, sphere center
    p1: np.ndarray
    radius: float


@dataclass
class RobotModel:
    name: str
    links: list[Link]
    frames: dict[str, Frame]
    foot_contact_points: dict[str, list[np.ndarray]]   # frame name -> corner offsets (link frame)
    foot_links: dict[str, int]
    collisions: list[CollisionShape]
    leg_joint_names: list[str]
    arm_joint_names: list[str]
    standing_com_height: float = 0.0
    # derived
    joint_order: list[int] = field(default_factory=list)    # actuated link indices, file order
    q_index: dict[int, int] = field(default_factory=dict)   # link index -> slot in q joint section
    leg_joint_indices: list[int] = field(default_factory=list)  # slots into actuated vectors
    arm_joint_indices: list[int] = field(default_factory=list)

    def __post_init__(self):
        self.joint_order = [i for i, l in enumerate(self.links) if l.joint.actuated]
        self.q_index = {li: k for k, li in enumerate(self.joint_order)}
        by_name = {self.links[li].name: self.q_index[li] for li in self.joint_order}
        for n in self.leg_joint_names + self.arm_joint_names:
            if n not in by_name:
                raise ModelError(f"joint group references unknown actuated joint {n!r}")
        self.leg_joint_indices = [by_name[n] for n in self.leg_joint_names]
        self.arm_joint_indices = [by_name[n] for n in self.arm_joint_names]

    @property
    def dof_count(self) -> int:
        return len(self.joint_order)

    @property
    def floating_base(self) -> bool:
        return self.links[0].joint.kind == "floating"

    @property
    def nq(self) -> int:
        return self.dof_count + (7 if self.floating_base else 0)

    @property
    def nv(self) -> int:
        return self.dof_count + (6 if self.floating_base else 0)

    @property
    def total_mass(self) -> float:
        return float(sum(l.inertia.mass for l in self.links))

    def link_index(self, name: str) -> int:
        for i, l in enumerate(self.links):
            if l.name == name:
                return i
        raise KeyError(name)

    def effort_limits(self) -> np.ndarray:
        return np.array([self.links[li].joint.effort_limit for li in self.joint_order])

    def position_limits(self) -> np.ndarray:
        return np.array([self.links[li].joint.position_limits for li in self.joint_order])

    def neutral_state(self):
        """(q, v) at the origin with zero joint angles."""
        if self.floating_base:
            q = np.zeros(self.nq)
            q[3] = 1.0   # identity quaternion wxyz
        else:
            q = np.zeros(self.nq)
        return q, np.zeros(self.nv)


# ---------------------------------------------------------------------------
# model file parsing

_LINK_FIELDS = {"parent", "joint", "axis", "origin", "limits_deg", "limits",
                "vel_limit", "effort_limit", "mass", "com", "inertia"}


def _rpy_deg(r, p, y):
    rr, pp, yy = np.deg2rad([r, p, y])
    return rot_z(yy) @ rot_y(pp) @ rot_x(rr)


def _parse_origin(parts, lineno):
    if len(parts) == 3:
        return SpatialTransform(np.eye(3), np.array(parts, dtype=float))
    if len(parts) == 7 and parts[3] == "rpy_deg":
        t = np.array(parts[:3], dtype=float)
        return SpatialTransform(_rpy_deg(*[float(x) for x in parts[4:7]]), t)
    raise ModelError(f"line {lineno}: origin expects 'x y z' or 'x y z rpy_deg r p y'")


def load_model(source: str) -> RobotModel:
    """Parse a model description; raises ModelError with line diagnostics."""
    name = None
    standing_com = 0.0
    links: list[Link] = []
    link_names: dict[str, int] = {}
    frames: dict[str, Frame] = {}
    feet: dict[str, list[np.ndarray]] = {}
    foot_links: dict[str, int] = {}
    collisions: list[CollisionShape] = []
    leg_joints: list[str] = []
    arm_joints: list[str] = []

    cur: dict | None = None
    cur_line = 0

    def finish_link():
        nonlocal cur
        d = cur
        cur = None
        where = f"link {d['name']!r} (line {d['line']})"
        missing = {"parent", "joint", "mass", "com", "inertia"} - set(d)
        missing -= {"parent"} if d.get("joint") == "floating" else set()
        if d.get("joint") in ("revolute", "prismatic"):
            missing |= {"axis", "limits_deg", "effort_limit"} - set(d)
        if missing:
            raise ModelError(f"{where}: missing fields {sorted(missing)}")
        pname = d.get("parent", "world")
        if pname == "world":
            parent = -1
            if links:
                raise ModelError(f"{where}: only the first link may attach to world")
        else:
            if pname not in link_names:
                raise ModelError(f"{where}: parent {pname!r} not defined before use "
                                 "(tree links must appear parent-first)")
            parent = link_names[pname]
        kind = d["joint"]
        if kind not in JOINT_KINDS:
            raise ModelError(f"{where}: unknown joint kind {kind!r}")
        axis = np.array(d.get("axis", [0, 0, 1]), dtype=float)
        if "limits_deg" in d:
            limits = tuple(np.deg2rad(d["limits_deg"]))
        else:
            limits = tuple(d.get("limits", (-np.inf, np.inf)))
        joint = JointSpec(kind=kind, axis=axis, position_limits=limits,
                          velocity_limit=float(d.get("vel_limit", np.inf)),
                          effort_limit=float(d.get("effort_limit", np.inf)))
        joint.validate(where)
        inert = SpatialInertia(mass=float(d["mass"]),
                               com=np.array(d["com"], dtype=float),
                               rot_inertia=_inertia_matrix(d["inertia"], where))
        inert.validate(where)
        origin = d.get("origin_tf", SpatialTransform.identity())
        idx = len(links)
        if d["name"] in link_names:
            raise ModelError(f"{where}: duplicate link name")
        links.append(Link(d["name"], parent, inert, origin, joint))
        link_names[d["name"]] = idx

    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key, rest = parts[0], parts[1:]
        if cur is not None:
            if key == "end":
                finish_link()
                continue
            if key not in _LINK_FIELDS:
                raise ModelError(f"line {lineno}: unknown link field {key!r}")
            if key == "origin":
                cur["origin_tf"] = _parse_origin(rest, lineno)
            elif key in ("parent", "joint"):
                cur[key] = rest[0]
            elif key in ("mass", "vel_limit", "effort_limit"):
                cur[key] = float(rest[0])
            else:
                cur[key] = [float(x) for x in rest]
            continue
        if key == "model":
            name = rest[0]
        elif key == "standing_com_height":
            standing_com = float(rest[0])
        elif key == "link":
            cur = {"name": rest[0], "line": lineno}
            cur_line = lineno
        elif key == "frame":
            if len(rest) < 3 or rest[1] != "link":
                raise ModelError(f"line {lineno}: frame expects 'NAME link LINK origin ...'")
            fname, lname = rest[0], rest[2]
            if lname not in link_names:
                raise ModelError(f"line {lineno}: frame on unknown link {lname!r}")
            if rest[3] != "origin":
                raise ModelError(f"line {lineno}: frame expects origin")
            tf = _parse_origin(rest[4:], lineno)
            frames[fname] = Frame(fname, link_names[lname], tf)
        elif key == "foot":
            fname, lname = rest[0], rest[2]
            if rest[1] != "link" or rest[3] != "corners" or len(rest) != 16:
                raise ModelError(f"line {lineno}: foot expects 'NAME link LINK corners' + 12 numbers")
            if lname not in link_names:
                raise ModelError(f"line {lineno}: foot on unknown link {lname!r}")
            vals = [float(x) for x in rest[4:]]
            feet[fname] = [np.array(vals[i:i + 3]) for i in range(0, 12, 3)]
            foot_links[fname] = link_names[lname]
        elif key == "collision":
            kind, lname = rest[0], rest[1]
            if lname not in link_names:
                raise ModelError(f"line {lineno}: collision on unknown link {lname!r}")
            li = link_names[lname]
            if kind == "capsule":
                if len(rest) != 10 or rest[8] != "radius":
                    raise ModelError(f"line {lineno}: capsule expects 6 coords + radius r")
                p0 = np.array([float(x) for x in rest[2:5]])
                p1 = np.array([float(x) for x in rest[5:8]])
                collisions.append(CollisionShape("capsule", li, p0, p1, float(rest[9])))
            elif kind == "sphere":
                if len(rest) != 7 or rest[5] != "radius":
                    raise ModelError(f"line {lineno}: sphere expects 3 coords + radius r")
                p = np.array([float(x) for x in rest[2:5]])
                collisions.append(CollisionShape("sphere", li, p, p, float(rest[6])))
            else:
                raise ModelError(f"line {lineno}: unknown collision kind {kind!r}")
        elif key == "leg_joints":
            leg_joints = rest
        elif key == "arm_joints":
            arm_joints = rest
        else:
            raise ModelError(f"line {lineno}: unknown directive {key!r}")

    if cur is not None:
        raise ModelError(f"line {cur_line}: unterminated link block")
    if not links:
        raise ModelError("model defines no links")
    if name is None:
        raise ModelError("missing 'model NAME' line")
    for i, l in enumerate(links):
        if l.parent >= i:
            raise ModelError(f"link {l.name!r}: parent index {l.parent} >= own index {i}")
    return RobotModel(name=name, links=links, frames=frames,
                      foot_contact_points=feet, foot_links=foot_links,
                      collisions=collisions,
                      leg_joint_names=leg_joints, arm_joint_names=arm_joints,
                      standing_com_height=standing_com)


def _inertia_matrix(vals, where):
    if len(vals) != 6:
        raise ModelError(f"{where}: inertia expects ixx iyy izz ixy ixz iyz")
    ixx, iyy, izz, ixy, ixz, iyz = vals
    return np.array([[ixx, ixy, ixz], [ixy, iyy, iyz], [ixz, iyz, izz]])


def load_model_file(path: str) -> RobotModel:
    with open(path, "r", encoding="utf-8") as f:
        return load_model(f.read())


def load_kuavo() -> RobotModel:
    """The bundled KUAVO v1.0 model."""
    text = importlib.resources.files("pr2sim.data").joinpath("kuavo_v1.model").read_text()
    return load_model(text)
