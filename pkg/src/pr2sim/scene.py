"""Scene descriptions: terrain, primitives, fixtures, movers and regions.

Scenes are loaded from a small line-oriented text format (one directive per
line, '#' comments).  Heightfield noise values are NOT part of the scene
description: rocky patches declare amplitude/cell only, and the actual grid
is generated from the world seed at build time.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field

import numpy as np


class SceneError(ValueError):
    pass


@dataclass
class Aabb:
    lo: np.ndarray
    hi: np.ndarray

    def contains(self, p) -> bool:
        p = np.asarray(p)
        return bool(np.all(p >= self.lo) and np.all(p <= self.hi))

    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)


@dataclass
class RockyPatch:
    x0: float
    y0: float
    x1: float
    y1: float
    amplitude: float = 0.03
    cell: float = 0.1
    grid: np.ndarray | None = None    # filled from the world seed

    def seed_grid(self, rng: np.random.Generator):
        nx = int(np.ceil((self.x1 - self.x0) / self.cell)) + 1
        ny = int(np.ceil((self.y1 - self.y0) / self.cell)) + 1
        self.grid = rng.uniform(-self.amplitude, self.amplitude, (nx, ny))

    def height(self, x: float, y: float) -> float:
        if self.grid is None:
            return 0.0
        gx = (x - self.x0) / self.cell
        gy = (y - self.y0) / self.cell
        i = int(np.clip(np.floor(gx), 0, self.grid.shape[0] - 2))
        j = int(np.clip(np.floor(gy), 0, self.grid.shape[1] - 2))
        fx = np.clip(gx - i, 0.0, 1.0)
        fy = np.clip(gy - j, 0.0, 1.0)
        g = self.grid
        return float((g[i, j] * (1 - fx) + g[i + 1, j] * fx) * (1 - fy)
                     + (g[i, j + 1] * (1 - fx) + g[i + 1, j + 1] * fx) * fy)


@dataclass
class Ramp:
    """Slope rising along +x from x0 at the given incline."""
    x0: float
    x1: float
    y0: float
    y1: float
    angle_deg: float

    @property
    def slope(self) -> float:
        return float(np.tan(np.deg2rad(self.angle_deg)))

    def height(self, x: float) -> float:
        if x <= self.x0:
            return 0.0
        return (min(x, self.x1) - self.x0) * self.slope


@dataclass
class Stairs:
    """Risers ascending along +x; tread 0 starts at x0."""
    x0: float
    y0: float
    y1: float
    rise: float
    tread: float
    count: int

    def height(self, x: float) -> float:
        if x < self.x0:
            return 0.0
        step = int(np.floor((x - self.x0) / self.tread)) + 1
        return self.rise * min(step, self.count)

    @property
    def top_x(self) -> float:
        return self.x0 + self.count * self.tread


class Terrain:
    """Composable ground height field: flat base plus declared features."""

    def __init__(self, rocky: list[RockyPatch] = (), ramps: list[Ramp] = (),
                 stairs: list[Stairs] = ()):
        self.rocky = list(rocky)
        self.ramps = list(ramps)
        self.stairs = list(stairs)

    def seed(self, rng: np.random.Generator):
        for patch in self.rocky:
            patch.seed_grid(rng)

    def height(self, x: float, y: float) -> float:
        h = 0.0
        for r in self.ramps:
            if r.y0 <= y <= r.y1:
                h += r.height(x)
        for s in self.stairs:
            if s.y0 <= y <= s.y1:
                h += s.height(x)
        for p in self.rocky:
            if p.x0 <= x <= p.x1 and p.y0 <= y <= p.y1:
                h += p.height(x, y)
        return h

    def normal(self, x: float, y: float, eps: float = 1e-4) -> np.ndarray:
        hx = (self.height(x + eps, y) - self.height(x - eps, y)) / (2 * eps)
        hy = (self.height(x, y + eps) - self.height(x, y - eps)) / (2 * eps)
        n = np.array([-hx, -hy, 1.0])
        return n / np.linalg.norm(n)


@dataclass
class Box:
    """Static axis-aligned box primitive (buttons, tables, walls...)."""
    name: str
    center: np.ndarray
    half: np.ndarray
    color_id: int = 0
    supports_objects: bool = False     # object support surface on the top face

    def aabb(self) -> Aabb:
        return Aabb(self.center - self.half, self.center + self.half)

    @property
    def top(self) -> float:
        return float(self.center[2] + self.half[2])


@dataclass
class Mover:
    """Kinematic body translating back and forth between two waypoints."""
    name: str
    axis: np.ndarray                   # capsule axis direction (unit)
    length: float
    radius: float
    p0: np.ndarray                     # waypoint A (capsule center)
    p1: np.ndarray                     # waypoint B
    speed: float
    color_id: int = 0

    def span(self) -> float:
        return float(np.linalg.norm(self.p1 - self.p0))

    def pose_at(self, phase: float):
        """phase in [0, 2): 0..1 forward leg, 1..2 return leg (triangle wave)."""
        s = phase if phase <= 1.0 else 2.0 - phase
        center = self.p0 + (self.p1 - self.p0) * s
        direction = (self.p1 - self.p0) / max(self.span(), 1e-12)
        vel = direction * self.speed * (1.0 if phase <= 1.0 else -1.0)
        return center, vel


@dataclass
class Fixture:
    """Single-hinge articulated fixture (the valve wheel)."""
    name: str
    anchor: np.ndarray                 # hinge point, world
    axis: np.ndarray                   # hinge axis, unit
    wheel_radius: float
    tube_radius: float
    color_id: int = 0


@dataclass
class Pickable:
    name: str
    shape: str                         # "sphere" | "box"
    size: np.ndarray                   # sphere: [r,0,0]; box: half extents
    mass: float
    position: np.ndarray
    anchor: str = ""                   # furniture it starts on
    room: str = ""
    color_id: int = 0


@dataclass
class SceneDescription:
    name: str = "scene"
    terrain: Terrain = field(default_factory=Terrain)
    boxes: list[Box] = field(default_factory=list)
    movers: list[Mover] = field(default_factory=list)
    fixtures: list[Fixture] = field(default_factory=list)
    pickables: list[Pickable] = field(default_factory=list)
    regions: dict[str, Aabb] = field(default_factory=dict)
    start_yaw_range: tuple[float, float] = (0.0, 0.0)
    rooms: dict[str, Aabb] = field(default_factory=dict)
    destination: str = ""              # Task-6 placement surface
    destination_room: str = ""

    def validate(self):
        names = [b.name for b in self.boxes] + [m.name for m in self.movers] + \
                [f.name for f in self.fixtures] + [p.name for p in self.pickables]
        if len(names) != len(set(names)):
            raise SceneError(f"duplicate entity names in scene {self.name!r}")
        for m in self.movers:
            if m.speed < 0:
                raise SceneError(f"mover {m.name!r} has negative speed")

    def entity_names(self) -> list[str]:
        return ([b.name for b in self.boxes] + [m.name for m in self.movers]
                + [f.name for f in self.fixtures] + [p.name for p in self.pickables]
                + ["terrain"])

    def assign_colors(self):
        """Distinct flat id-color per entity, assigned in declaration order."""
        entities = (self.boxes + self.movers + self.fixtures + self.pickables)
        for i, e in enumerate(entities):
            e.color_id = i + 1
        return entities


# collision-free id-color palette: index -> rgb bytes
def palette_color(color_id: int) -> tuple[int, int, int]:
    if color_id == 0:
        return (0, 0, 0)
    i = color_id
    r = (37 * i) % 256
    g = (97 * i + 61) % 256
    b = (151 * i + 17) % 256
    if (r, g, b) == (0, 0, 0):
        b = 1
    return (r, g, b)


# ---------------------------------------------------------------------------
# scene text format

def parse_scene(text: str) -> SceneDescription:
    sc = SceneDescription()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        p = line.split()
        key, rest = p[0], p[1:]
        try:
            _parse_directive(sc, key, rest)
        except SceneError:
            raise
        except Exception as exc:
            raise SceneError(f"line {lineno}: {exc}") from exc
    sc.validate()
    sc.assign_colors()
    return sc


def _parse_directive(sc: SceneDescription, key: str, rest: list[str]):
    f = [None]  # placeholder to satisfy closures

    def nums(seq):
        return [float(x) for x in seq]

    if key == "scene":
        sc.name = rest[0]
    elif key == "rocky":
        x0, y0, x1, y1 = nums(rest[0:4])
        kw = _kwargs(rest[4:])
        sc.terrain.rocky.append(RockyPatch(x0, y0, x1, y1,
                                           amplitude=kw.get("amplitude", 0.03),
                                           cell=kw.get("cell", 0.1)))
    elif key == "ramp":
        x0, x1, y0, y1 = nums(rest[0:4])
        kw = _kwargs(rest[4:])
        sc.terrain.ramps.append(Ramp(x0, x1, y0, y1, angle_deg=kw["angle"]))
    elif key == "stairs":
        x0, y0, y1 = nums(rest[0:3])
        kw = _kwargs(rest[3:])
        sc.terrain.stairs.append(Stairs(x0, y0, y1, rise=kw["rise"],
                                        tread=kw["tread"], count=int(kw["count"])))
    elif key == "box":
        name = rest[0]
        vals = nums(rest[1:7])
        kw = _kwargs(rest[7:])
        sc.boxes.append(Box(name, np.array(vals[0:3]), np.array(vals[3:6]),
                            supports_objects=bool(kw.get("support", 0))))
    elif key == "mover":
        name = rest[0]
        kw = _kwargs(rest[1:])
        axis = {"x": np.array([1.0, 0, 0]), "y": np.array([0, 1.0, 0])}[kw["axis"]]
        sc.movers.append(Mover(name, axis, length=kw["length"], radius=kw["radius"],
                               p0=np.array([kw["x0"], kw["y0"], kw["z"]]),
                               p1=np.array([kw["x1"], kw["y1"], kw["z"]]),
                               speed=kw["speed"]))
    elif key == "valve":
        name = rest[0]
        kw = _kwargs(rest[1:])
        axis = {"x": np.array([1.0, 0, 0]), "y": np.array([0, 1.0, 0]),
                "z": np.array([0, 0, 1.0])}[kw["axis"]]
        sc.fixtures.append(Fixture(name, np.array([kw["x"], kw["y"], kw["z"]]),
                                   axis, wheel_radius=kw["radius"],
                                   tube_radius=kw.get("tube", 0.02)))
    elif key == "object":
        name, shape = rest[0], rest[1]
        vals = nums(rest[2:8]) if shape == "box" else nums(rest[2:6])
        kw = _kwargs(rest[8:] if shape == "box" else rest[6:])
        if shape == "box":
            size = np.array(vals[0:3])
            pos = np.array(vals[3:6])
        elif shape == "sphere":
            size = np.array([vals[0], 0, 0])
            pos = np.array(vals[1:4])
        else:
            raise SceneError(f"unknown object shape {shape!r}")
        sc.pickables.append(Pickable(name, shape, size, mass=kw.get("mass", 0.5),
                                     position=pos, anchor=str(kw.get("anchor", "")),
                                     room=str(kw.get("room", ""))))
    elif key == "region":
        name = rest[0]
        vals = nums(rest[1:7])
        sc.regions[name] = Aabb(np.array(vals[0:3]), np.array(vals[3:6]))
    elif key == "room":
        name = rest[0].replace("_", " ")
        vals = nums(rest[1:7])
        sc.rooms[name] = Aabb(np.array(vals[0:3]), np.array(vals[3:6]))
    elif key == "start_yaw_deg":
        sc.start_yaw_range = (np.deg2rad(float(rest[0])), np.deg2rad(float(rest[1])))
    elif key == "destination":
        sc.destination = rest[0].replace("_", " ")
        if len(rest) > 1:
            sc.destination_room = " ".join(rest[1:]).replace("_", " ")
    else:
        raise SceneError(f"unknown scene directive {key!r}")


def _kwargs(parts: list[str]) -> dict:
    out = {}
    for i in range(0, len(parts) - 1, 2):
        k, v = parts[i], parts[i + 1]
        try:
            out[k] = float(v)
        except ValueError:
            out[k] = v
    return out


def load_scene(task_id: int) -> SceneDescription:
    """Bundled competition scene for a task id in 1..6."""
    res = importlib.resources.files("pr2sim.data.scenes").joinpath(f"task{task_id}.scene")
    return parse_scene(res.read_text())
