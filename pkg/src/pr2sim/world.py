"""Fixed-timestep physics world.

Each step: clamp torques, evaluate penalty contacts, articulated-body
forward dynamics, semi-implicit Euler integration, kinematic movers,
hinge fixtures, then pick/release resolution.  All randomness (heightfield
noise, mover phase) derives from the construction seed, and stepping is a
pure function of (state, inputs), so equal seeds and torque streams yield
bitwise-identical trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import dynamics
from .config import SimConfig
from .dynamics import GRAVITY, KinCache, aba, com_acceleration, com_state_cached
from .legik import standing_state
from .model import RobotModel, SpatialInertia
from .scene import SceneDescription
from .spatial import SpatialTransform, cross3, quat_integrate, quat_to_rot, skew


class WorldError(RuntimeError):
    pass


class ConstructionError(WorldError):
    pass


class UnknownBodyError(KeyError):
    pass


@dataclass(frozen=True)
class ContactPoint:
    body_a: str
    body_b: str
    position: np.ndarray
    normal: np.ndarray            # unit, from b towards a
    normal_force: float
    tangential_force: np.ndarray  # 2-vector in the tangent basis


@dataclass(frozen=True)
class AttachmentState:
    attached_object: str | None = None
    attach_hand: str | None = None
    attach_transform: SpatialTransform | None = None
    kind: str = ""                 # "object" | "fixture"
    grasp_phase: float = 0.0       # fixture rim angle offset at pick time
    grasp_radius: float = 0.0

    @property
    def active(self) -> bool:
        return self.attached_object is not None


@dataclass
class ObjectBody:
    name: str
    shape: str
    size: np.ndarray
    mass: float
    pos: np.ndarray
    quat: np.ndarray
    lin_vel: np.ndarray
    ang_vel: np.ndarray
    inertia_diag: np.ndarray
    points: list[np.ndarray]       # contact sample offsets, body frame

    @staticmethod
    def from_pickable(p):
        if p.shape == "sphere":
            r = p.size[0]
            inertia = np.full(3, 0.4 * p.mass * r * r)
            points = [np.zeros(3)]
        else:
            h = p.size
            inertia = p.mass / 3.0 * np.array([h[1]**2 + h[2]**2,
                                               h[0]**2 + h[2]**2,
                                               h[0]**2 + h[1]**2])
            points = [np.array([sx * h[0], sy * h[1], sz * h[2]])
                      for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)]
        return ObjectBody(p.name, p.shape, p.size.copy(), p.mass,
                          p.position.astype(float).copy(), np.array([1.0, 0, 0, 0]),
                          np.zeros(3), np.zeros(3), inertia, points)

    def rotation(self) -> np.ndarray:
        return quat_to_rot(self.quat)


@dataclass(frozen=True)
class WorldState:
    tick: int
    time: float
    q: np.ndarray
    v: np.ndarray
    applied_torques: np.ndarray
    objects: dict
    fixture_angles: dict
    fixture_rates: dict
    mover_phases: dict
    contacts: tuple
    attachment: AttachmentState
    com: np.ndarray
    com_vel: np.ndarray
    com_acc: np.ndarray            # realized during the step producing this state
    status: str = "ok"


def _tangent_basis(n: np.ndarray):
    ref = np.array([1.0, 0, 0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0])
    t1 = cross3(n, ref)
    t1 /= np.linalg.norm(t1)
    return t1, cross3(n, t1)


class World:
    def __init__(self, scene: SceneDescription, model: RobotModel, start_pose,
                 seed: int, config: SimConfig | None = None):
        self.scene = scene
        self.model = model
        self.config = config or SimConfig()
        self.seed = int(seed)
        rng = np.random.default_rng(np.uint64(self.seed))
        scene.terrain.seed(rng)

        self.mover_phase = {m.name: float(rng.uniform(0.0, 2.0)) for m in scene.movers}
        self.fixture_angle_state = {f.name: 0.0 for f in scene.fixtures}
        self.fixture_rate = {f.name: 0.0 for f in scene.fixtures}
        self._fixture_basis = {}
        for f in scene.fixtures:
            axis = f.axis / np.linalg.norm(f.axis)
            ref = np.array([0.0, 0, 1.0]) if abs(axis[2]) < 0.9 else np.array([0.0, 1.0, 0])
            e1 = cross3(axis, ref)
            e1 /= np.linalg.norm(e1)
            self._fixture_basis[f.name] = (axis, e1, cross3(axis, e1))

        self.objects = {p.name: ObjectBody.from_pickable(p) for p in scene.pickables}
        self.attachment = AttachmentState()

        self.q, self.v = self._initial_state(start_pose)
        self.tick = 0
        self.status = "ok"
        self.applied_torques = np.zeros(model.dof_count)
        self.contacts: tuple = ()
        self._collision_samples = self._build_samples()
        self._valid_names = set(l.name for l in model.links) | set(scene.entity_names())

        self._cache = KinCache(model, self.q, self.v)
        com, com_vel, _ = com_state_cached(model, self._cache)
        self.com, self.com_vel = com, com_vel
        self.com_acc = np.zeros(3)
        self._check_initial_penetration()

    # -- construction -----------------------------------------------------

    def _initial_state(self, start_pose):
        model, terr = self.model, self.scene.terrain
        if len(start_pose) == 3:
            x, y, yaw = start_pose
            h = terr.height(x, y)
            return standing_state(model, [x, y], yaw, h, self.config.walk.pelvis_height)
        x, y, yaw, z = start_pose
        q, v = standing_state(model, [x, y], yaw, 0.0, self.config.walk.pelvis_height)
        q[2] = z
        return q, v

    def _build_samples(self):
        """Per-link contact sample spheres: (link, local offset, radius, tag)."""
        model = self.model
        samples = []
        for foot_name, corners in model.foot_contact_points.items():
            li = model.foot_links[foot_name]
            for c in corners:
                samples.append((li, np.asarray(c, dtype=float), 0.0, "foot"))
        for shape in model.collisions:
            if shape.kind == "sphere":
                samples.append((shape.link, shape.p0, shape.radius, "hand"))
            else:
                n = 5 if "calf" in model.links[shape.link].name or \
                         "thigh" in model.links[shape.link].name else 3
                for t in np.linspace(0.0, 1.0, n):
                    p = shape.p0 + (shape.p1 - shape.p0) * t
                    samples.append((shape.link, p, shape.radius, "limb"))
        return samples

    def _check_initial_penetration(self):
        worst = 0.0
        for li, off, radius, _tag in self._collision_samples:
            p = self._cache.point_world(li, off)
            h = self.scene.terrain.height(p[0], p[1])
            worst = max(worst, h - (p[2] - radius))
        if worst > 0.05:
            raise ConstructionError(
                f"initial pose penetrates the ground by {worst:.3f} m (> 0.05)")

    # -- queries -----------------------------------------------------------

    def snapshot(self) -> WorldState:
        objs = {}
        for name, ob in self.objects.items():
            objs[name] = (ob.pos.copy(), ob.quat.copy(), ob.lin_vel.copy(), ob.ang_vel.copy())
        return WorldState(
            tick=self.tick, time=self.tick * self.config.dt,
            q=self.q.copy(), v=self.v.copy(),
            applied_torques=self.applied_torques.copy(),
            objects=objs,
            fixture_angles=dict(self.fixture_angle_state),
            fixture_rates=dict(self.fixture_rate),
            mover_phases=dict(self.mover_phase),
            contacts=self.contacts,
            attachment=self.attachment,
            com=self.com.copy(), com_vel=self.com_vel.copy(), com_acc=self.com_acc.copy(),
            status=self.status)

    def query_contacts(self, body_filter: str | None = None):
        if body_filter is not None:
            if body_filter not in self._valid_names:
                raise UnknownBodyError(body_filter)
            return [c for c in self.contacts
                    if c.body_a == body_filter or c.body_b == body_filter]
        return list(self.contacts)

    def fixture_angle(self, name: str) -> float:
        if name not in self.fixture_angle_state:
            raise UnknownBodyError(f"no articulated fixture named {name!r}")
        return self.fixture_angle_state[name]

    def mover_state(self, name: str):
        for m in self.scene.movers:
            if m.name == name:
                return m.pose_at(self.mover_phase[name])
        raise UnknownBodyError(name)

    def hand_pose(self, hand: str) -> SpatialTransform:
        return self._cache.frame_pose(hand)

    # -- contact machinery ---------------------------------------------------

    def _penalty(self, delta, v_rel, n, ref_mass):
        cc = self.config.contact
        dt = self.config.dt
        k = min(cc.normal_stiffness, cc.stiffness_cap_factor * ref_mass / dt**2)
        d = min(cc.normal_damping, cc.damping_cap_factor * ref_mass / dt)
        kt = min(cc.tangent_gain, cc.damping_cap_factor * ref_mass / dt)
        delta = min(delta, cc.max_penetration)
        v_n = float(v_rel @ n)
        fn = k * delta - d * v_n
        if fn <= 0.0:
            return None
        vt = v_rel - v_n * n
        vt_norm = float(np.linalg.norm(vt))
        if vt_norm > 1e-12:
            ft = -min(cc.friction_mu * fn, kt * vt_norm) * (vt / vt_norm)
        else:
            ft = np.zeros(3)
        return fn, ft

    def _sphere_vs_scene(self, name_a, p, radius, v_pt, ref_mass, out_forces, contacts):
        """Contacts of one sample sphere against terrain, boxes, movers, fixtures."""
        terr = self.scene.terrain
        h = terr.height(p[0], p[1])
        delta = h - (p[2] - radius)
        if delta > 0:
            n = terr.normal(p[0], p[1])
            res = self._penalty(delta, v_pt, n, ref_mass)
            if res:
                fn, ft = res
                f = fn * n + ft
                out_forces.append((f, p))
                contacts.append(self._record(name_a, "terrain", p, n, fn, ft))

        for box in self.scene.boxes:
            bb = box.aabb()
            closest = np.minimum(np.maximum(p, bb.lo), bb.hi)
            dvec = p - closest
            dist = float(np.linalg.norm(dvec))
            if dist > 1e-12:
                delta = radius - dist
                if delta <= 0:
                    continue
                n = dvec / dist
            else:  # center inside the box: push out along the shallowest face
                gaps_hi = bb.hi - p
                gaps_lo = p - bb.lo
                axes = np.concatenate([gaps_hi, gaps_lo])
                k = int(np.argmin(axes))
                n = np.zeros(3)
                n[k % 3] = 1.0 if k < 3 else -1.0
                delta = radius + float(axes[k])
            res = self._penalty(delta, v_pt, n, ref_mass)
            if res:
                fn, ft = res
                out_forces.append((fn * n + ft, p))
                contacts.append(self._record(name_a, box.name, p, n, fn, ft))

        for m in self.scene.movers:
            center, m_vel = m.pose_at(self.mover_phase[m.name])
            a0 = center - m.axis * (m.length / 2)
            seg = m.axis * m.length
            t = float(np.clip((p - a0) @ seg / (seg @ seg), 0.0, 1.0))
            cp = a0 + t * seg
            dvec = p - cp
            dist = float(np.linalg.norm(dvec))
            if dist < 1e-12:
                continue
            delta = (radius + m.radius) - dist
            if delta <= 0:
                continue
            n = dvec / dist
            res = self._penalty(delta, v_pt - m_vel, n, ref_mass)
            if res:
                fn, ft = res
                out_forces.append((fn * n + ft, p))
                contacts.append(self._record(name_a, m.name, p, n, fn, ft))

        for fx in self.scene.fixtures:
            axis, e1, e2 = self._fixture_basis[fx.name]
            d = p - fx.anchor
            ax = float(d @ axis)
            rad_vec = d - ax * axis
            rad = float(np.linalg.norm(rad_vec))
            if rad < 1e-9:
                continue
            ring_pt = fx.anchor + rad_vec / rad * fx.wheel_radius
            dvec = p - ring_pt
            dist = float(np.linalg.norm(dvec))
            if dist < 1e-12:
                continue
            delta = (radius + fx.tube_radius) - dist
            if delta <= 0:
                continue
            n = dvec / dist
            w_fx = axis * self.fixture_rate[fx.name]
            v_surf = cross3(w_fx, ring_pt - fx.anchor)
            res = self._penalty(delta, v_pt - v_surf, n, ref_mass)
            if res:
                fn, ft = res
                f = fn * n + ft
                out_forces.append((f, p))
                contacts.append(self._record(name_a, fx.name, p, n, fn, ft))
                torque = float(cross3(ring_pt - fx.anchor, -f) @ axis)
                self._fixture_torque[fx.name] += torque

    @staticmethod
    def _record(a, b, p, n, fn, ft):
        t1, t2 = _tangent_basis(n)
        return ContactPoint(a, b, p.copy(), n.copy(), float(fn),
                            np.array([float(ft @ t1), float(ft @ t2)]))

    def _robot_contacts(self, cache: KinCache):
        """Per-link external wrenches from scene contacts."""
        model = self.model
        cc = self.config.contact
        f_ext = [None] * len(model.links)
        contacts: list[ContactPoint] = []

        def add_wrench(li, force, point):
            w = f_ext[li]
            if w is None:
                w = np.zeros(6)
                f_ext[li] = w
            o = cache.pose[li].translation
            w[0:3] += cross3(point - o, force)
            w[3:6] += force

        for li, off, radius, _tag in self._collision_samples:
            p = cache.point_world(li, off)
            v_pt = cache.point_velocity(li, off)
            forces = []
            self._sphere_vs_scene(model.links[li].name, p, radius, v_pt,
                                  cc.robot_point_mass, forces, contacts)
            for f, pt in forces:
                add_wrench(li, f, pt)
        return f_ext, contacts

    def _object_contacts(self, ob: ObjectBody, contacts):
        """Net force/torque on a free object from terrain and box surfaces."""
        rot = ob.rotation()
        force = np.zeros(3)
        torque = np.zeros(3)
        ref = ob.mass / max(len(ob.points), 1)
        radius = ob.size[0] if ob.shape == "sphere" else 0.0
        for off in ob.points:
            p = ob.pos + rot @ off
            v_pt = ob.lin_vel + cross3(ob.ang_vel, rot @ off)
            local = []
            self._sphere_vs_scene(ob.name, p, radius, v_pt, ref, local, contacts)
            for f, pt in local:
                force += f
                torque += cross3(pt - ob.pos, f)
        return force, torque

    # -- stepping ------------------------------------------------------------

    def step(self, joint_torques, pick_request: str | None = None,
             release_request: bool = False, joint_damping=None) -> WorldState:
        """Advance one physics tick.

        joint_damping optionally carries the per-joint viscous coefficients of
        the active spring-damper command; the integrator folds them in
        implicitly, which is what keeps stiff drive damping stable at this
        timestep (the explicit part of the law is already inside
        joint_torques).
        """
        if self.status == "diverged":
            raise WorldError("world has diverged; reset required")
        model, cfg = self.model, self.config
        tau_j = np.asarray(joint_torques, dtype=float)
        if tau_j.shape != (model.dof_count,):
            raise WorldError(f"expected {model.dof_count} joint torques")
        if not np.all(np.isfinite(tau_j)):
            raise WorldError("non-finite joint torques")
        limits = model.effort_limits()
        tau_j = np.clip(tau_j, -limits, limits)

        cache = self._cache
        self._fixture_torque = {f.name: 0.0 for f in self.scene.fixtures}
        f_ext, contacts = self._robot_contacts(cache)

        obj_forces = {}
        for name, ob in self.objects.items():
            if self.attachment.active and self.attachment.attached_object == name:
                continue
            obj_forces[name] = self._object_contacts(ob, contacts)

        inertia_override = None
        att = self.attachment
        if att.active and att.kind == "object":
            ob = self.objects[att.attached_object]
            hand_link = model.frames[att.attach_hand].link
            inertia_override = {hand_link: self._composite_hand_inertia(hand_link, ob)}
            carried = []
            self._object_contacts_attached(ob, cache, hand_link, carried, contacts, f_ext)
        elif att.active and att.kind == "fixture":
            self._fixture_spring(cache, f_ext)

        tau_full = np.concatenate((np.zeros(6), tau_j)) if model.floating_base else tau_j
        damping_dt = None
        if joint_damping is not None:
            damping_dt = np.maximum(np.asarray(joint_damping, dtype=float), 0.0) * cfg.dt
        accel = aba(model, cache, tau_full, f_ext, inertia_override=inertia_override,
                    joint_damping_dt=damping_dt)
        com_acc = com_acceleration(model, cache, accel)

        dt = cfg.dt
        v_new = self.v + dt * accel
        q_new = self.q.copy()
        if model.floating_base:
            q_new[0:3] += dt * v_new[3:6]
            q_new[3:7] = quat_integrate(self.q[3:7], v_new[0:3], dt)
            q_new[7:] += dt * v_new[6:]
        else:
            q_new += dt * v_new

        for name, ob in self.objects.items():
            if att.active and att.attached_object == name:
                continue
            force, torque = obj_forces[name]
            ob.lin_vel = ob.lin_vel + dt * (force / ob.mass + np.array([0, 0, -GRAVITY]))
            rot = ob.rotation()
            iw = rot @ np.diag(ob.inertia_diag) @ rot.T
            wdot = np.linalg.solve(iw, torque - cross3(ob.ang_vel, iw @ ob.ang_vel))
            ob.ang_vel = ob.ang_vel + dt * wdot
            ob.pos = ob.pos + dt * ob.lin_vel
            ob.quat = quat_integrate(ob.quat, ob.ang_vel, dt)

        for f in self.scene.fixtures:
            vcfg = cfg.valve
            tq = self._fixture_torque[f.name]
            rate = self.fixture_rate[f.name]
            rate = rate + dt * (tq - vcfg.hinge_damping * rate) / vcfg.hinge_inertia
            self.fixture_rate[f.name] = rate
            self.fixture_angle_state[f.name] += dt * rate

        for m in self.scene.movers:
            if m.span() > 1e-9 and m.speed > 0:
                self.mover_phase[m.name] = (self.mover_phase[m.name]
                                            + dt * m.speed / m.span()) % 2.0

        self.q, self.v = q_new, v_new
        self.applied_torques = tau_j
        self.contacts = tuple(contacts)
        self.tick += 1

        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.v))):
            self.status = "diverged"
            self.com_acc = com_acc
            return self.snapshot()

        self._cache = KinCache(model, self.q, self.v)
        com, com_vel, _ = com_state_cached(model, self._cache)
        self.com, self.com_vel, self.com_acc = com, com_vel, com_acc

        if att.active and att.kind == "object":
            ob = self.objects[att.attached_object]
            hp = self._cache.frame_pose(att.attach_hand)
            pose = hp.compose(att.attach_transform)
            ob.pos = pose.translation.copy()
            from .spatial import rot_to_quat
            ob.quat = rot_to_quat(pose.rotation)
            hand_link = model.frames[att.attach_hand].link
            r = pose.translation - self._cache.pose[hand_link].translation
            ob.ang_vel = self._cache.omega[hand_link].copy()
            ob.lin_vel = self._cache.vel[hand_link] + cross3(ob.ang_vel, r)

        if release_request and self.attachment.active:
            self.attachment = AttachmentState()
        elif pick_request is not None and not self.attachment.active:
            self._try_pick(pick_request)

        return self.snapshot()

    # -- attachment ---------------------------------------------------------

    def _composite_hand_inertia(self, hand_link: int, ob: ObjectBody) -> SpatialInertia:
        """Hand-link inertia with the carried object welded in (rigid pick)."""
        model = self.model
        base = model.links[hand_link].inertia
        hp = self._cache.pose[hand_link]
        rot_l = hp.rotation.T @ ob.rotation()          # object axes in hand-link frame
        pos_l = hp.rotation.T @ (ob.pos - hp.translation)
        i_obj = rot_l @ np.diag(ob.inertia_diag) @ rot_l.T
        cx = skew(pos_l)
        i_about_origin = i_obj - ob.mass * (cx @ cx)
        mass = base.mass + ob.mass
        com = (base.mass * base.com + ob.mass * pos_l) / mass
        return SpatialInertia(mass=mass, com=com,
                              rot_inertia=base.rot_inertia + i_about_origin)

    def _object_contacts_attached(self, ob, cache, hand_link, carried, contacts, f_ext):
        """Scene contacts of a carried object act on the hand link."""
        rot = ob.rotation()
        radius = ob.size[0] if ob.shape == "sphere" else 0.0
        for off in ob.points:
            p = ob.pos + rot @ off
            v_pt = ob.lin_vel + cross3(ob.ang_vel, rot @ off)
            local = []
            self._sphere_vs_scene(ob.name, p, radius, v_pt,
                                  self.config.contact.robot_point_mass, local, contacts)
            for f, pt in local:
                w = f_ext[hand_link]
                if w is None:
                    w = np.zeros(6)
                    f_ext[hand_link] = w
                o = cache.pose[hand_link].translation
                w[0:3] += cross3(pt - o, f)
                w[3:6] += f

    def _fixture_spring(self, cache, f_ext):
        """Spring-damper tying the attached hand to its rim grasp point."""
        att = self.attachment
        fx = next(f for f in self.scene.fixtures if f.name == att.attached_object)
        axis, e1, e2 = self._fixture_basis[fx.name]
        vcfg = self.config.valve
        theta = self.fixture_angle_state[fx.name]
        phi = theta + att.grasp_phase
        g = fx.anchor + att.grasp_radius * (np.cos(phi) * e1 + np.sin(phi) * e2)
        v_g = cross3(axis * self.fixture_rate[fx.name], g - fx.anchor)
        hand_link = self.model.frames[att.attach_hand].link
        fr = self.model.frames[att.attach_hand]
        p_h = cache.point_world(hand_link, fr.transform.translation)
        v_h = cache.point_velocity(hand_link, fr.transform.translation)
        f_hand = -vcfg.attach_stiffness * (p_h - g) - vcfg.attach_damping * (v_h - v_g)
        w = f_ext[hand_link]
        if w is None:
            w = np.zeros(6)
            f_ext[hand_link] = w
        o = cache.pose[hand_link].translation
        w[0:3] += cross3(p_h - o, f_hand)
        w[3:6] += f_hand
        self._fixture_torque[fx.name] += float(cross3(g - fx.anchor, -f_hand) @ axis)

    def _try_pick(self, hand: str):
        if hand not in ("left_hand", "right_hand"):
            raise WorldError(f"pick hand must be left_hand or right_hand, got {hand!r}")
        hp = self._cache.frame_pose(hand)
        best = None
        for name, ob in self.objects.items():
            d = float(np.linalg.norm(ob.pos - hp.translation))
            if d < self.config.pick_distance and (best is None or d < best[0]):
                best = (d, name)
        if best is not None:
            ob = self.objects[best[1]]
            obj_pose = SpatialTransform(ob.rotation(), ob.pos)
            self.attachment = AttachmentState(
                attached_object=best[1], attach_hand=hand,
                attach_transform=hp.inverse().compose(obj_pose), kind="object")
            ob.lin_vel = np.zeros(3)
            ob.ang_vel = np.zeros(3)
            return
        vcfg = self.config.valve
        for fx in self.scene.fixtures:
            axis, e1, e2 = self._fixture_basis[fx.name]
            d = hp.translation - fx.anchor
            ax = float(d @ axis)
            rad_vec = d - ax * axis
            rad = float(np.linalg.norm(rad_vec))
            if abs(ax) <= vcfg.grasp_cylinder_halfwidth and rad <= vcfg.grasp_cylinder_radius:
                phi = float(np.arctan2(rad_vec @ e2, rad_vec @ e1))
                self.attachment = AttachmentState(
                    attached_object=fx.name, attach_hand=hand,
                    attach_transform=SpatialTransform.identity(), kind="fixture",
                    grasp_phase=phi - self.fixture_angle_state[fx.name],
                    grasp_radius=float(np.clip(rad, 0.05, fx.wheel_radius)))
                return


def build_world(scene: SceneDescription, model: RobotModel, start_pose,
                seed: int, config: SimConfig | None = None) -> World:
    return World(scene, model, start_pose, seed, config)
