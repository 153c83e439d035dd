"""Kinematics and dynamics of tree mechanisms.

Inverse dynamics is recursive Newton-Euler, forward dynamics the
articulated-body algorithm, both over body-coordinate spatial vectors.
Gravity enters as an explicit per-link external force (world z-up,
g = 9.81 m/s^2), so the world frame is inertial and all returned
accelerations are true accelerations.

Generalized coordinates for floating-base models:
    q = [base position (3), base quaternion wxyz (4), joint scalars (n)]
    v = [base angular velocity (3), base linear velocity (3), joint rates (n)]
with base velocities expressed in world-aligned axes at the base origin.
Fixed-base models drop the base segments.
"""

from __future__ import annotations

import numpy as np

from .model import RobotModel
from .spatial import (SpatialTransform, axis_angle, crf, crm, cross3,
                      motion_transform, quat_to_rot, skew)

GRAVITY = 9.81
G_VEC = np.array([0.0, 0.0, -GRAVITY])


class DimensionError(ValueError):
    pass


def _check_dims(model: RobotModel, q=None, v=None, a=None):
    for arr, n, what in ((q, model.nq, "q"), (v, model.nv, "v"), (a, model.nv, "a")):
        if arr is not None and len(arr) != n:
            raise DimensionError(f"{what} has length {len(arr)}, model expects {n}")


def split_q(model: RobotModel, q: np.ndarray):
    """(base_pos, base_quat, joint_q); base parts None for fixed-base models."""
    q = np.asarray(q, dtype=float)
    if model.floating_base:
        return q[0:3], q[3:7], q[7:]
    return None, None, q


def split_v(model: RobotModel, v: np.ndarray):
    v = np.asarray(v, dtype=float)
    if model.floating_base:
        return v[0:3], v[3:6], v[6:]
    return None, None, v


class KinCache:
    """One kinematics pass shared by dynamics, contacts and sensors."""

    def __init__(self, model: RobotModel, q: np.ndarray, v: np.ndarray | None = None):
        _check_dims(model, q=q, v=v)
        self.model = model
        self.q = np.asarray(q, dtype=float)
        nl = len(model.links)
        base_pos, base_quat, qj = split_q(model, self.q)

        self.pose: list[SpatialTransform] = [None] * nl          # world link poses
        self.xup: list[np.ndarray] = [None] * nl                 # motion, parent->link coords
        self.s: list[np.ndarray | None] = [None] * nl            # joint subspace, link coords
        self.omega = np.zeros((nl, 3))                           # world angular velocity
        self.vel = np.zeros((nl, 3))                             # world velocity of link origin
        self.v_body: list[np.ndarray] = [None] * nl              # spatial velocity, link coords

        if v is not None:
            w_b, v_b, qd = split_v(model, v)
        else:
            w_b = v_b = None
            qd = np.zeros(model.dof_count)

        for i, link in enumerate(model.links):
            jt = link.joint
            if jt.kind == "floating":
                rot = quat_to_rot(base_quat / np.linalg.norm(base_quat))
                pose_j = SpatialTransform(rot, base_pos)
                self.pose[i] = pose_j
                self.xup[i] = motion_transform(pose_j)
                self.s[i] = np.eye(6)
                if v is not None:
                    self.omega[i] = w_b
                    self.vel[i] = v_b
                    self.v_body[i] = np.concatenate((rot.T @ w_b, rot.T @ v_b))
                else:
                    self.v_body[i] = np.zeros(6)
                continue

            qi = qj[model.q_index[i]] if jt.actuated else 0.0
            qdi = qd[model.q_index[i]] if (jt.actuated and v is not None) else 0.0
            if jt.kind == "revolute":
                pose_joint = SpatialTransform(axis_angle(jt.axis, qi), np.zeros(3))
                s = np.concatenate((jt.axis, np.zeros(3)))
            elif jt.kind == "prismatic":
                pose_joint = SpatialTransform(np.eye(3), jt.axis * qi)
                s = np.concatenate((np.zeros(3), jt.axis))
            else:  # fixed
                pose_joint = SpatialTransform.identity()
                s = None
            local = link.joint_transform.compose(pose_joint)
            parent_pose = self.pose[link.parent] if link.parent >= 0 else SpatialTransform.identity()
            self.pose[i] = parent_pose.compose(local)
            self.xup[i] = motion_transform(local)
            self.s[i] = s

            if link.parent >= 0:
                po = self.pose[link.parent]
                w_p, v_p = self.omega[link.parent], self.vel[link.parent]
            else:
                w_p = v_p = np.zeros(3)
            r = self.pose[i].translation - (po.translation if link.parent >= 0 else np.zeros(3))
            w_i = w_p.copy()
            v_i = v_p + cross3(w_p, r)
            if jt.kind == "revolute":
                w_i = w_i + self.pose[i].rotation @ jt.axis * qdi
            elif jt.kind == "prismatic":
                v_i = v_i + self.pose[i].rotation @ jt.axis * qdi
            self.omega[i] = w_i
            self.vel[i] = v_i
            vb = np.concatenate((self.pose[i].rotation.T @ w_i, self.pose[i].rotation.T @ v_i))
            self.v_body[i] = vb

    def frame_pose(self, name: str) -> SpatialTransform:
        fr = self.model.frames[name]
        return self.pose[fr.link].compose(fr.transform)

    def point_world(self, link: int, point_local) -> np.ndarray:
        return self.pose[link].apply(point_local)

    def point_velocity(self, link: int, point_local) -> np.ndarray:
        r = self.pose[link].rotate(point_local)
        return self.vel[link] + cross3(self.omega[link], r)


def fk_frames(model: RobotModel, q: np.ndarray) -> dict[str, SpatialTransform]:
    """World pose of every link and every named frame."""
    cache = KinCache(model, q)
    out = {link.name: cache.pose[i] for i, link in enumerate(model.links)}
    for name in model.frames:
        out[name] = cache.frame_pose(name)
    return out


# ---------------------------------------------------------------------------
# dynamics

def _body_accel_from_world(model, cache, a):
    """World-aligned generalized acceleration -> per-joint/body quantities."""
    if model.floating_base:
        rot = cache.pose[0].rotation
        w_w = cache.omega[0]
        v_w = cache.vel[0]
        wd_b = rot.T @ a[0:3]
        vd_b = rot.T @ (a[3:6] - cross3(w_w, v_w))
        return np.concatenate((wd_b, vd_b)), a[6:]
    return None, np.asarray(a, dtype=float)


def _world_accel_from_body(model, cache, qdd_base, qdd_j):
    if model.floating_base:
        rot = cache.pose[0].rotation
        w_w = cache.omega[0]
        v_w = cache.vel[0]
        a_ang = rot @ qdd_base[0:3]
        a_lin = rot @ qdd_base[3:6] + cross3(w_w, v_w)
        return np.concatenate((a_ang, a_lin, qdd_j))
    return np.asarray(qdd_j, dtype=float)


def _external_body_forces(model, cache, f_ext, inertias=None):
    """Per-link spatial force (link coords, about link origin) incl. gravity.

    f_ext entries are (moment about link origin, force), world axes.
    """
    nl = len(model.links)
    out = [None] * nl
    for i, link in enumerate(model.links):
        inert = inertias[i] if inertias is not None else link.inertia
        rt = cache.pose[i].rotation.T
        fg = inert.mass * (rt @ G_VEC)
        ng = cross3(inert.com, fg)
        f = np.concatenate((ng, fg))
        if f_ext is not None and f_ext[i] is not None:
            fe = np.asarray(f_ext[i], dtype=float)
            f = f + np.concatenate((rt @ fe[0:3], rt @ fe[3:6]))
        out[i] = f
    return out


def inverse_dynamics(model: RobotModel, q, v, a, f_ext=None) -> np.ndarray:
    """Generalized forces realizing acceleration `a` at state (q, v).

    Returns [base wrench (moment, force at base origin, world axes), joint
    torques] for floating-base models, joint torques otherwise.
    """
    cache = KinCache(model, q, v)
    return rnea(model, cache, a, f_ext)


def rnea(model: RobotModel, cache: KinCache, a, f_ext=None) -> np.ndarray:
    _check_dims(model, a=a)
    a = np.asarray(a, dtype=float)
    qdd_base, qdd_j = _body_accel_from_world(model, cache, a)
    nl = len(model.links)
    abody: list[np.ndarray] = [None] * nl
    f: list[np.ndarray] = [None] * nl
    fx = _external_body_forces(model, cache, f_ext)

    for i, link in enumerate(model.links):
        jt = link.joint
        s = cache.s[i]
        vb = cache.v_body[i]
        if jt.kind == "floating":
            abody[i] = qdd_base
        else:
            if jt.actuated:
                qddi = qdd_j[model.q_index[i]]
                qdi = (vb - cache.xup[i] @ (cache.v_body[link.parent] if link.parent >= 0 else np.zeros(6)))
                vj = qdi        # joint part of velocity, link coords
                aj = s * qddi
            else:
                vj = np.zeros(6)
                aj = np.zeros(6)
            a_parent = abody[link.parent] if link.parent >= 0 else np.zeros(6)
            abody[i] = cache.xup[i] @ a_parent + aj + crm(vb) @ vj
        ib = link.inertia.matrix()
        f[i] = ib @ abody[i] + crf(cache.v_body[i]) @ (ib @ cache.v_body[i]) - fx[i]

    tau_j = np.zeros(model.dof_count)
    tau_base = np.zeros(6)
    for i in range(nl - 1, -1, -1):
        link = model.links[i]
        jt = link.joint
        if jt.kind == "floating":
            tau_base = f[i]
        elif jt.actuated:
            tau_j[model.q_index[i]] = cache.s[i] @ f[i]
        if link.parent >= 0:
            f[link.parent] = f[link.parent] + cache.xup[i].T @ f[i]

    if model.floating_base:
        rot = cache.pose[0].rotation
        return np.concatenate((rot @ tau_base[0:3], rot @ tau_base[3:6], tau_j))
    return tau_j


def forward_dynamics(model: RobotModel, q, v, tau, f_ext=None) -> np.ndarray:
    """Generalized accelerations under applied forces (articulated-body algorithm)."""
    cache = KinCache(model, q, v)
    return aba(model, cache, tau, f_ext)


def aba(model: RobotModel, cache: KinCache, tau, f_ext=None,
        inertia_override=None, joint_damping_dt=None) -> np.ndarray:
    """Forward dynamics.  joint_damping_dt, when given, holds per-joint
    viscous coefficients premultiplied by the timestep; they are folded into
    the joint-space diagonal, which evaluates that damping at the
    end-of-step velocity (implicit, unconditionally stable) while remaining
    an internal force between the joint's two links."""
    _check_dims(model, a=tau)
    tau = np.asarray(tau, dtype=float)
    if not np.all(np.isfinite(tau)):
        raise ValueError("non-finite generalized forces")
    if model.floating_base:
        rot = cache.pose[0].rotation
        tau_base = np.concatenate((rot.T @ tau[0:3], rot.T @ tau[3:6]))
        tau_j = tau[6:]
    else:
        tau_base = None
        tau_j = tau

    nl = len(model.links)
    inertias = [link.inertia for link in model.links]
    if inertia_override:
        for li, inert in inertia_override.items():
            inertias[li] = inert
    fx = _external_body_forces(model, cache, f_ext, inertias)
    c: list[np.ndarray] = [None] * nl
    ia: list[np.ndarray] = [None] * nl
    pa: list[np.ndarray] = [None] * nl
    vj: list[np.ndarray] = [None] * nl

    for i, link in enumerate(model.links):
        vb = cache.v_body[i]
        if link.parent >= 0:
            vj[i] = vb - cache.xup[i] @ cache.v_body[link.parent]
        else:
            vj[i] = vb
        c[i] = crm(vb) @ vj[i] if link.parent >= 0 else np.zeros(6)
        im = inertias[i].matrix()
        ia[i] = im.copy()
        pa[i] = crf(vb) @ (im @ vb) - fx[i]

    u_arr: list = [None] * nl
    dinv: list = [None] * nl
    uu: list = [None] * nl
    for i in range(nl - 1, -1, -1):
        link = model.links[i]
        jt = link.joint
        if jt.kind == "floating":
            u_arr[i] = ia[i]
            dinv[i] = np.linalg.inv(ia[i])
            uu[i] = tau_base - pa[i]
            continue
        if jt.actuated:
            s = cache.s[i]
            u_i = ia[i] @ s
            d = float(s @ u_i)
            if joint_damping_dt is not None:
                d += joint_damping_dt[model.q_index[i]]
            u_arr[i] = u_i
            dinv[i] = 1.0 / d
            uu[i] = tau_j[model.q_index[i]] - float(s @ pa[i])
            ia_a = ia[i] - np.outer(u_i, u_i) * dinv[i]
            pa_a = pa[i] + ia_a @ c[i] + u_i * (dinv[i] * uu[i])
        else:  # fixed
            ia_a = ia[i]
            pa_a = pa[i] + ia_a @ c[i]
        if link.parent >= 0:
            ia[link.parent] = ia[link.parent] + cache.xup[i].T @ ia_a @ cache.xup[i]
            pa[link.parent] = pa[link.parent] + cache.xup[i].T @ pa_a

    abody: list[np.ndarray] = [None] * nl
    qdd_j = np.zeros(model.dof_count)
    qdd_base = None
    for i, link in enumerate(model.links):
        jt = link.joint
        a_parent = abody[link.parent] if link.parent >= 0 else np.zeros(6)
        a_i = cache.xup[i] @ a_parent + c[i]
        if jt.kind == "floating":
            qdd_base = dinv[i] @ (uu[i] - u_arr[i] @ a_i)
            a_i = a_i + qdd_base
        elif jt.actuated:
            qdd = dinv[i] * (uu[i] - u_arr[i] @ a_i)
            qdd_j[model.q_index[i]] = qdd
            a_i = a_i + cache.s[i] * qdd
        abody[i] = a_i

    return _world_accel_from_body(model, cache, qdd_base, qdd_j)


def mass_matrix(model: RobotModel, q) -> np.ndarray:
    """Joint-space inertia via inverse-dynamics columns (world-aligned base rows)."""
    nv = model.nv
    v0 = np.zeros(nv)
    cache = KinCache(model, q, v0)
    bias = rnea(model, cache, np.zeros(nv))
    m = np.zeros((nv, nv))
    for j in range(nv):
        e = np.zeros(nv)
        e[j] = 1.0
        m[:, j] = rnea(model, cache, e) - bias
    return m


# ---------------------------------------------------------------------------
# aggregate quantities

def com_state(model: RobotModel, q, v):
    """(CoM position, CoM velocity, total mass), world frame."""
    cache = KinCache(model, q, v)
    return com_state_cached(model, cache)


def com_state_cached(model: RobotModel, cache: KinCache):
    total = 0.0
    wp = np.zeros(3)
    wv = np.zeros(3)
    for i, link in enumerate(model.links):
        m = link.inertia.mass
        r = cache.pose[i].rotate(link.inertia.com)
        wp += m * (cache.pose[i].translation + r)
        wv += m * (cache.vel[i] + cross3(cache.omega[i], r))
        total += m
    return wp / total, wv / total, total


def link_accelerations(model: RobotModel, cache: KinCache, a):
    """World angular/linear acceleration of each link origin for generalized accel a."""
    nl = len(model.links)
    alpha = np.zeros((nl, 3))
    acc = np.zeros((nl, 3))
    qdd_base, qdd_j = (a[0:3], a[6:]) if model.floating_base else (None, a)
    for i, link in enumerate(model.links):
        jt = link.joint
        if jt.kind == "floating":
            alpha[i] = a[0:3]
            acc[i] = a[3:6]
            continue
        p = link.parent
        if p >= 0:
            r = cache.pose[i].translation - cache.pose[p].translation
            al_p, ac_p = alpha[p], acc[p]
            w_p = cache.omega[p]
        else:
            r = cache.pose[i].translation
            al_p = ac_p = w_p = np.zeros(3)
        al = al_p.copy()
        ac = ac_p + cross3(al_p, r) + cross3(w_p, cross3(w_p, r))
        if jt.actuated:
            qdi_world_axis = cache.pose[i].rotation @ jt.axis
            qdd = qdd_j[model.q_index[i]]
            rate = _joint_rate(model, cache, i)
            if jt.kind == "revolute":
                al = al + qdi_world_axis * qdd + cross3(w_p, qdi_world_axis * rate)
            else:
                ac = ac + qdi_world_axis * qdd + 2.0 * cross3(w_p, qdi_world_axis * rate)
        alpha[i] = al
        acc[i] = ac
    return alpha, acc


def _joint_rate(model, cache, i):
    link = model.links[i]
    vj = cache.v_body[i] - cache.xup[i] @ (cache.v_body[link.parent] if link.parent >= 0 else np.zeros(6))
    s = cache.s[i]
    return float(s @ vj)


def com_acceleration(model: RobotModel, cache: KinCache, a) -> np.ndarray:
    """Mass-weighted CoM acceleration implied by generalized acceleration a."""
    alpha, acc = link_accelerations(model, cache, a)
    total = 0.0
    out = np.zeros(3)
    for i, link in enumerate(model.links):
        m = link.inertia.mass
        r = cache.pose[i].rotate(link.inertia.com)
        w = cache.omega[i]
        out += m * (acc[i] + cross3(alpha[i], r) + cross3(w, cross3(w, r)))
        total += m
    return out / total


# ---------------------------------------------------------------------------
# jacobians

def _ancestors(model: RobotModel, link: int):
    chain = []
    i = link
    while i >= 0:
        chain.append(i)
        i = model.links[i].parent
    return chain


def point_jacobian(model: RobotModel, q, link: int, point_local) -> np.ndarray:
    """3 x nv world-frame Jacobian of a point fixed on a link."""
    cache = KinCache(model, q)
    return point_jacobian_cached(model, cache, link, point_local)


def point_jacobian_cached(model, cache, link, point_local) -> np.ndarray:
    p = cache.point_world(link, point_local)
    jac = np.zeros((3, model.nv))
    off = 6 if model.floating_base else 0
    for i in _ancestors(model, link):
        jt = model.links[i].joint
        if jt.kind == "floating":
            jac[:, 0:3] = -skew(p - cache.pose[i].translation)
            jac[:, 3:6] = np.eye(3)
        elif jt.actuated:
            axis_w = cache.pose[i].rotation @ jt.axis
            col = off + model.q_index[i]
            if jt.kind == "revolute":
                jac[:, col] = cross3(axis_w, p - cache.pose[i].translation)
            else:
                jac[:, col] = axis_w
    return jac
