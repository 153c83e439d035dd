"""Spatial (6-D) vector algebra for tree-structured rigid-body mechanisms.

Conventions:
  * spatial motion vectors stack angular on top of linear: [wx wy wz vx vy vz]
  * spatial force vectors stack moment on top of force:    [nx ny nz fx fy fz]
  * a pose (R, p) maps local coordinates into the parent frame: x_p = R x + p
  * motion coordinate transforms are 6x6 Plucker matrices; force vectors
    transform with the transpose of the inverse motion transform, so for
    X mapping A-coordinates to B-coordinates, f_A = X.T @ f_B
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS_ORTHONORMAL = 1e-9


def skew(v: np.ndarray) -> np.ndarray:
    """3x3 cross-product operator: skew(v) @ u == v x u."""
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def cross3(a, b) -> np.ndarray:
    """Cross product of two 3-vectors (much faster than np.cross here)."""
    return np.array([a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]])


def rot_x(t: float) -> np.ndarray:
    c, s = np.cos(t), np.sin(t)
    return np.array([[1.0, 0, 0], [0, c, -s], [0, s, c]])


def rot_y(t: float) -> np.ndarray:
    c, s = np.cos(t), np.sin(t)
    return np.array([[c, 0, s], [0, 1.0, 0], [-s, 0, c]])


def rot_z(t: float) -> np.ndarray:
    c, s = np.cos(t), np.sin(t)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1.0]])


def axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rotation matrix about a unit axis (Rodrigues)."""
    a = np.asarray(axis, dtype=float)
    k = skew(a)
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


# ---------------------------------------------------------------------------
# quaternions, wxyz order, unit norm

def quat_to_rot(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def rot_to_quat(r: np.ndarray) -> np.ndarray:
    """Shepperd's method; returns wxyz with w >= 0."""
    tr = r[0, 0] + r[1, 1] + r[2, 2]
    if tr > 0:
        s = np.sqrt(tr + 1.0) * 2
        q = np.array([0.25 * s,
                      (r[2, 1] - r[1, 2]) / s,
                      (r[0, 2] - r[2, 0]) / s,
                      (r[1, 0] - r[0, 1]) / s])
    elif r[0, 0] > r[1, 1] and r[0, 0] > r[2, 2]:
        s = np.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2]) * 2
        q = np.array([(r[2, 1] - r[1, 2]) / s,
                      0.25 * s,
                      (r[0, 1] + r[1, 0]) / s,
                      (r[0, 2] + r[2, 0]) / s])
    elif r[1, 1] > r[2, 2]:
        s = np.sqrt(1.0 + r[1, 1] - r[0, 0] - r[2, 2]) * 2
        q = np.array([(r[0, 2] - r[2, 0]) / s,
                      (r[0, 1] + r[1, 0]) / s,
                      0.25 * s,
                      (r[1, 2] + r[2, 1]) / s])
    else:
        s = np.sqrt(1.0 + r[2, 2] - r[0, 0] - r[1, 1]) * 2
        q = np.array([(r[1, 0] - r[0, 1]) / s,
                      (r[0, 2] + r[2, 0]) / s,
                      (r[1, 2] + r[2, 1]) / s,
                      0.25 * s])
    if q[0] < 0:
        q = -q
    return q / np.linalg.norm(q)


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_exp(w_dt: np.ndarray) -> np.ndarray:
    """Unit quaternion for a rotation vector (axis * angle)."""
    angle = np.linalg.norm(w_dt)
    if angle < 1e-12:
        q = np.array([1.0, 0.5 * w_dt[0], 0.5 * w_dt[1], 0.5 * w_dt[2]])
        return q / np.linalg.norm(q)
    axis = w_dt / angle
    half = 0.5 * angle
    return np.concatenate(([np.cos(half)], np.sin(half) * axis))


def quat_integrate(q: np.ndarray, omega_world: np.ndarray, dt: float) -> np.ndarray:
    """Advance a unit quaternion by a world-frame angular velocity; renormalizes."""
    q_new = quat_mul(quat_exp(omega_world * dt), q)
    return q_new / np.linalg.norm(q_new)


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpatialTransform:
    """Rigid pose: x_parent = rotation @ x_local + translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        if not isinstance(self.rotation, np.ndarray):
            object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float))
        if not isinstance(self.translation, np.ndarray):
            object.__setattr__(self, "translation", np.asarray(self.translation, dtype=float))

    @staticmethod
    def identity() -> "SpatialTransform":
        return SpatialTransform(np.eye(3), np.zeros(3))

    def compose(self, other: "SpatialTransform") -> "SpatialTransform":
        return SpatialTransform(self.rotation @ other.rotation,
                                self.rotation @ other.translation + self.translation)

    def inverse(self) -> "SpatialTransform":
        rt = self.rotation.T
        return SpatialTransform(rt, -rt @ self.translation)

    def apply(self, point: np.ndarray) -> np.ndarray:
        return self.rotation @ np.asarray(point, dtype=float) + self.translation

    def rotate(self, vec: np.ndarray) -> np.ndarray:
        return self.rotation @ np.asarray(vec, dtype=float)

    def is_orthonormal(self, tol: float = EPS_ORTHONORMAL) -> bool:
        r = self.rotation
        return bool(np.max(np.abs(r.T @ r - np.eye(3))) <= tol)


def motion_transform(pose_child_in_parent: SpatialTransform) -> np.ndarray:
    """6x6 Plucker transform taking motion vectors from parent to child coords.

    With pose (R, p) of the child frame expressed in the parent frame:
        X = [[R.T, 0], [-R.T p~, R.T]]
    """
    rt = pose_child_in_parent.rotation.T
    p = pose_child_in_parent.translation
    x = np.zeros((6, 6))
    x[:3, :3] = rt
    x[3:, 3:] = rt
    x[3:, :3] = -rt @ skew(p)
    return x


def crm(v: np.ndarray) -> np.ndarray:
    """Spatial cross product operator for motion vectors (v x m)."""
    w, lin = v[:3], v[3:]
    out = np.zeros((6, 6))
    sw = skew(w)
    out[:3, :3] = sw
    out[3:, 3:] = sw
    out[3:, :3] = skew(lin)
    return out


def crf(v: np.ndarray) -> np.ndarray:
    """Spatial cross product operator for force vectors (v x* f)."""
    return -crm(v).T


def spatial_inertia_matrix(mass: float, com: np.ndarray, inertia_origin: np.ndarray) -> np.ndarray:
    """6x6 spatial inertia from mass, CoM offset and rotational inertia about the frame origin."""
    c = skew(np.asarray(com, dtype=float))
    out = np.zeros((6, 6))
    out[:3, :3] = inertia_origin
    out[:3, 3:] = mass * c
    out[3:, :3] = mass * c.T
    out[3:, 3:] = mass * np.eye(3)
    return out
