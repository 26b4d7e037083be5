"""Unit quaternion utilities.

Quaternions are stored as length-4 numpy arrays ``[eta, ex, ey, ez]``
(scalar part first).  All rotation conversions assume unit quaternions;
``normalize`` is cheap and applied at every construction point.
"""

import numpy as np

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def normalize(q):
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q)
    if n == 0.0:
        raise ValueError("cannot normalize zero quaternion")
    return q / n


def canonical(q):
    """Pick the representative with non-negative scalar part.

    q and -q encode the same rotation; canonicalization is only applied
    where determinism of traces requires it (FK output, pose errors).
    """
    q = np.asarray(q, dtype=float)
    if q[0] < 0.0:
        return -q
    return q


def conjugate(q):
    q = np.asarray(q, dtype=float)
    return np.array([q[0], -q[1], -q[2], -q[3]])


# inverse == conjugate for unit quaternions
inverse = conjugate


def product(a, b):
    """Hamilton product a ⊗ b."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def hat(v):
    """Skew-symmetric matrix such that hat(v) @ w == cross(v, w)."""
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def from_axis_angle(axis, angle):
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n == 0.0:
        raise ValueError("zero rotation axis")
    half = 0.5 * angle
    return np.concatenate(([np.cos(half)], np.sin(half) * axis / n))


def to_rotation_matrix(q):
    eta, ex, ey, ez = q
    return np.array([
        [1 - 2 * (ey * ey + ez * ez), 2 * (ex * ey - eta * ez), 2 * (ex * ez + eta * ey)],
        [2 * (ex * ey + eta * ez), 1 - 2 * (ex * ex + ez * ez), 2 * (ey * ez - eta * ex)],
        [2 * (ex * ez - eta * ey), 2 * (ey * ez + eta * ex), 1 - 2 * (ex * ex + ey * ey)],
    ])


def from_rotation_matrix(R):
    """Shepperd's method; returns the canonical (eta >= 0) quaternion."""
    R = np.asarray(R, dtype=float)
    tr = np.trace(R)
    if tr > 0.0:
        s = np.sqrt(tr + 1.0) * 2.0
        q = np.array([
            0.25 * s,
            (R[2, 1] - R[1, 2]) / s,
            (R[0, 2] - R[2, 0]) / s,
            (R[1, 0] - R[0, 1]) / s,
        ])
    else:
        i = int(np.argmax(np.diag(R)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = np.sqrt(max(R[i, i] - R[j, j] - R[k, k] + 1.0, 0.0)) * 2.0
        q = np.empty(4)
        q[0] = (R[k, j] - R[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (R[j, i] + R[i, j]) / s
        q[1 + k] = (R[k, i] + R[i, k]) / s
    return canonical(normalize(q))


def rotate(q, v):
    """Rotate vector v by quaternion q (R(q) @ v)."""
    w, x, y, z = q
    vx, vy, vz = v
    # t = 2 q_v x v;  v' = v + w t + q_v x t
    tx = 2.0 * (y * vz - z * vy)
    ty = 2.0 * (z * vx - x * vz)
    tz = 2.0 * (x * vy - y * vx)
    return np.array([
        vx + w * tx + y * tz - z * ty,
        vy + w * ty + z * tx - x * tz,
        vz + w * tz + x * ty - y * tx,
    ])


def representation_jacobian(q, representation="spatial"):
    """4x3 map B(q) from angular velocity to quaternion derivative.

    Spatial form: q_dot = 0.5 [-eps^T; eta*I - hat(eps)] w
    Body form:    q_dot = 0.5 [-eps^T; eta*I + hat(eps)] w_b
    """
    q = np.asarray(q, dtype=float)
    eta, eps = q[0], q[1:]
    if representation == "spatial":
        lower = eta * np.eye(3) - hat(eps)
    elif representation == "body":
        lower = eta * np.eye(3) + hat(eps)
    else:
        raise ValueError(f"unknown representation {representation!r}")
    return 0.5 * np.vstack((-eps.reshape(1, 3), lower))


def rotation_distance(a, b):
    """Angle (rad) of the relative rotation between two unit quaternions."""
    d = abs(float(np.dot(a, b)))
    return 2.0 * np.arccos(min(d, 1.0))
