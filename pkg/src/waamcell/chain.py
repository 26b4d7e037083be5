"""Kinematic model of the two-robot cell.

The chain runs from the deposition frame F_d (fixed to the workpiece on
the positioning table), back through the table to its base F_tb, across
the fixed cell transform to the arm base F_ab, and down the manipulator
to the torch tip F_t.  Lengths are in millimetres, angles in radians.

Twists are 6-vectors [v; w] of the torch tip relative to F_d.  The
default representation expresses them in F_d; `body_jacobian` converts
to the torch frame.
"""

from dataclasses import dataclass, field

import numpy as np
import yaml

from . import quaternion as quat

CHAIN_SCHEMA_VERSION = 1


class ConfigurationError(Exception):
    """Raised for malformed chain descriptions or mismatched dimensions."""


@dataclass(frozen=True)
class Pose:
    """Position + unit quaternion of one frame relative to another."""

    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))
        object.__setattr__(self, "q", quat.normalize(self.q))

    @staticmethod
    def identity():
        return Pose(np.zeros(3), quat.IDENTITY)

    def rotation(self):
        return quat.to_rotation_matrix(self.q)

    def compose(self, other):
        """self * other (apply other in self's frame)."""
        return Pose(self.p + quat.rotate(self.q, other.p),
                    quat.product(self.q, other.q))

    def inverse(self):
        qi = quat.conjugate(self.q)
        return Pose(-quat.rotate(qi, self.p), qi)

    def matrix(self):
        T = np.eye(4)
        T[:3, :3] = self.rotation()
        T[:3, 3] = self.p
        return T


def _axis_rotation(axis, angle):
    """Rodrigues rotation about a unit axis."""
    x, y, z = axis
    c, s = np.cos(angle), np.sin(angle)
    C = 1.0 - c
    return np.array([
        [c + x * x * C, x * y * C - z * s, x * z * C + y * s],
        [y * x * C + z * s, c + y * y * C, y * z * C - x * s],
        [z * x * C - y * s, z * y * C + x * s, c + z * z * C],
    ])


@dataclass(frozen=True)
class Joint:
    kind: str                 # "revolute" | "prismatic"
    axis: np.ndarray          # unit vector in the joint's local frame
    origin: Pose              # fixed transform preceding the joint

    def __post_init__(self):
        if self.kind not in ("revolute", "prismatic"):
            raise ConfigurationError(f"unknown joint kind {self.kind!r}")
        axis = np.asarray(self.axis, dtype=float)
        n = np.linalg.norm(axis)
        if n == 0.0:
            raise ConfigurationError("joint axis must be non-zero")
        object.__setattr__(self, "axis", axis / n)
        # cached matrix form of the fixed preceding transform
        object.__setattr__(self, "_R0", self.origin.rotation())
        object.__setattr__(self, "_t0", self.origin.p)

    def transform(self, theta):
        if self.kind == "revolute":
            moving = Pose(np.zeros(3), quat.from_axis_angle(self.axis, theta))
        else:
            moving = Pose(self.axis * theta, quat.IDENTITY)
        return self.origin.compose(moving)


@dataclass(frozen=True)
class ChainDescription:
    """Geometric model of the table -> arm kinematic chain."""

    table_joints: tuple
    arm_joints: tuple
    t_ab_tb: Pose             # table base in arm-base coordinates
    tool_offset: Pose         # arm flange -> torch tip
    workpiece_offset: Pose = field(default_factory=Pose.identity)
    home_config: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "table_joints", tuple(self.table_joints))
        object.__setattr__(self, "arm_joints", tuple(self.arm_joints))
        if self.home_config is not None:
            home = np.asarray(self.home_config, dtype=float)
            if home.shape != (self.dof,):
                raise ConfigurationError(
                    f"home_config has {home.shape[0]} entries, chain has {self.dof} joints")
            object.__setattr__(self, "home_config", home)
        # cached matrix forms of the fixed frames
        object.__setattr__(self, "_R_ab_tb", self.t_ab_tb.rotation())
        object.__setattr__(self, "_p_ab_tb", self.t_ab_tb.p)
        object.__setattr__(self, "_R_wp", self.workpiece_offset.rotation())
        object.__setattr__(self, "_p_wp", self.workpiece_offset.p)
        object.__setattr__(self, "_R_tool", self.tool_offset.rotation())
        object.__setattr__(self, "_p_tool", self.tool_offset.p)

    @property
    def n_table(self):
        return len(self.table_joints)

    @property
    def n_arm(self):
        return len(self.arm_joints)

    @property
    def dof(self):
        return self.n_table + self.n_arm

    def split(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dof,):
            raise ConfigurationError(
                f"joint vector has {theta.shape[0]} entries, chain has {self.dof} joints")
        return theta[:self.n_table], theta[self.n_table:]


def _advance(R, p, joint, theta):
    """Apply one joint's fixed transform + motion to a (R, p) frame."""
    p = p + R @ joint._t0
    R = R @ joint._R0
    if joint.kind == "revolute":
        R = R @ _axis_rotation(joint.axis, theta)
    else:
        p = p + R @ (joint.axis * theta)
    return R, p


def _subchain(joints, theta, R=None, p=None, tail=None):
    R = np.eye(3) if R is None else R
    p = np.zeros(3) if p is None else p
    for joint, th in zip(joints, theta):
        R, p = _advance(R, p, joint, th)
    if tail is not None:
        p = p + R @ tail.p
        R = R @ tail.rotation()
    return R, p


def _as_pose(R, p):
    return Pose(p, quat.canonical(quat.from_rotation_matrix(R)))


def table_forward_kinematics(chain, theta_t):
    """Pose of F_d relative to F_ab."""
    theta_t = np.asarray(theta_t, dtype=float)
    if theta_t.shape != (chain.n_table,):
        raise ConfigurationError(
            f"table joint vector has {theta_t.shape[0]} entries, expected {chain.n_table}")
    R, p = _subchain(chain.table_joints, theta_t,
                     R=chain._R_ab_tb, p=chain._p_ab_tb,
                     tail=chain.workpiece_offset)
    return _as_pose(R, p)


def arm_forward_kinematics(chain, theta_a):
    """Pose of the torch tip F_t relative to F_ab."""
    theta_a = np.asarray(theta_a, dtype=float)
    if theta_a.shape != (chain.n_arm,):
        raise ConfigurationError(
            f"arm joint vector has {theta_a.shape[0]} entries, expected {chain.n_arm}")
    R, p = _subchain(chain.arm_joints, theta_a, tail=chain.tool_offset)
    return _as_pose(R, p)


def forward_kinematics(chain, theta):
    """Pose of the torch tip F_t relative to the deposition frame F_d."""
    theta_t, theta_a = chain.split(theta)
    R_d, p_d = _subchain(chain.table_joints, theta_t,
                         R=chain._R_ab_tb, p=chain._p_ab_tb,
                         tail=chain.workpiece_offset)
    R_t, p_t = _subchain(chain.arm_joints, theta_a, tail=chain.tool_offset)
    return _as_pose(R_d.T @ R_t, R_d.T @ (p_t - p_d))


def _joint_frames(joints, theta, R, p):
    """World-frame (axis, origin) of each joint, plus the final frame."""
    frames = []
    for joint, th in zip(joints, theta):
        p = p + R @ joint._t0
        R = R @ joint._R0
        frames.append((R @ joint.axis, p))
        if joint.kind == "revolute":
            R = R @ _axis_rotation(joint.axis, th)
        else:
            p = p + R @ (joint.axis * th)
    return frames, R, p


def system_jacobian(chain, theta):
    """6 x m Jacobian of the torch twist relative to F_d, expressed in F_d.

    Geometric per-joint columns; table joints move F_d itself, so their
    apparent effect on the torch carries the opposite sign.
    """
    return full_kinematics(chain, theta)[2]


def full_kinematics(chain, theta):
    """One-pass FK + Jacobian for the simulation loop.

    Returns (pose of F_t in F_d, pose of F_t in F_ab, system Jacobian).
    """
    theta_t, theta_a = chain.split(theta)
    table_frames, R, p = _joint_frames(chain.table_joints, theta_t,
                                       chain._R_ab_tb, chain._p_ab_tb)
    p_d = p + R @ chain._p_wp
    R_d = R @ chain._R_wp
    arm_frames, R, p = _joint_frames(chain.arm_joints, theta_a,
                                     np.eye(3), np.zeros(3))
    p_t = p + R @ chain._p_tool
    R_t = R @ chain._R_tool

    # world-frame columns first, then one rotation into F_d coordinates
    J = np.zeros((6, chain.dof))
    for i, (joint, (axis, origin)) in enumerate(zip(chain.table_joints, table_frames)):
        if joint.kind == "revolute":
            r = p_t - origin
            J[0, i] = -(axis[1] * r[2] - axis[2] * r[1])
            J[1, i] = -(axis[2] * r[0] - axis[0] * r[2])
            J[2, i] = -(axis[0] * r[1] - axis[1] * r[0])
            J[3:, i] = -axis
        else:
            J[:3, i] = -axis
    for j, (joint, (axis, origin)) in enumerate(zip(chain.arm_joints, arm_frames)):
        col = chain.n_table + j
        if joint.kind == "revolute":
            r = p_t - origin
            J[0, col] = axis[1] * r[2] - axis[2] * r[1]
            J[1, col] = axis[2] * r[0] - axis[0] * r[2]
            J[2, col] = axis[0] * r[1] - axis[1] * r[0]
            J[3:, col] = axis
        else:
            J[:3, col] = axis
    RdT = R_d.T
    J[:3] = RdT @ J[:3]
    J[3:] = RdT @ J[3:]

    tcp_pose = _as_pose(RdT @ R_t, RdT @ (p_t - p_d))
    arm_pose = _as_pose(R_t, p_t)
    return tcp_pose, arm_pose, J


def body_jacobian(J, R):
    """Convert a deposition-frame Jacobian to torch-frame (body) coordinates.

    R is the rotation of F_t relative to F_d.  J_b = Omega^T J with
    Omega = blockdiag(R, R).
    """
    R = np.asarray(R, dtype=float)
    if not np.allclose(R @ R.T, np.eye(3), atol=1e-9) or not np.isclose(np.linalg.det(R), 1.0, atol=1e-9):
        raise ConfigurationError("rotation matrix is not orthonormal")
    Jb = np.empty_like(J)
    Jb[:3] = R.T @ J[:3]
    Jb[3:] = R.T @ J[3:]
    return Jb


def arm_body_jacobian(chain, theta):
    """Manipulator body Jacobian J_b2 = Omega^T J2 without extra FK calls."""
    J = system_jacobian(chain, theta)
    R = quat.to_rotation_matrix(forward_kinematics(chain, theta).q)
    return body_jacobian(J, R)[:, chain.n_table:]


# ---------------------------------------------------------------------------
# chain-description file (YAML, schema: 1)

def _parse_pose(node, where):
    try:
        p = np.asarray(node.get("translation", [0.0, 0.0, 0.0]), dtype=float)
        q = np.asarray(node.get("rotation", [1.0, 0.0, 0.0, 0.0]), dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{where}: bad transform: {exc}") from exc
    if p.shape != (3,) or q.shape != (4,):
        raise ConfigurationError(f"{where}: translation must be length 3, rotation length 4")
    n = np.linalg.norm(q)
    if abs(n - 1.0) > 1e-6:
        raise ConfigurationError(f"{where}: rotation quaternion norm {n:.6g} != 1")
    return Pose(p, q)


def _parse_joint(node, where):
    if not isinstance(node, dict):
        raise ConfigurationError(f"{where}: joint entry must be a mapping")
    missing = {"type", "axis"} - node.keys()
    if missing:
        raise ConfigurationError(f"{where}: missing fields {sorted(missing)}")
    try:
        return Joint(kind=node["type"],
                     axis=np.asarray(node["axis"], dtype=float),
                     origin=_parse_pose(node.get("origin", {}), where))
    except ConfigurationError as exc:
        if str(exc).startswith(where):
            raise
        raise ConfigurationError(f"{where}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{where}: {exc}") from exc


def chain_from_dict(data):
    if not isinstance(data, dict):
        raise ConfigurationError("chain description must be a mapping")
    schema = data.get("schema")
    if schema != CHAIN_SCHEMA_VERSION:
        raise ConfigurationError(
            f"unsupported chain schema {schema!r}, expected {CHAIN_SCHEMA_VERSION}")
    for key in ("table_joints", "arm_joints", "t_ab_tb", "tool_offset"):
        if key not in data:
            raise ConfigurationError(f"missing required field {key!r}")
    table = [_parse_joint(j, f"table_joints[{i}]") for i, j in enumerate(data["table_joints"])]
    arm = [_parse_joint(j, f"arm_joints[{i}]") for i, j in enumerate(data["arm_joints"])]
    home = data.get("home_config")
    return ChainDescription(
        table_joints=table,
        arm_joints=arm,
        t_ab_tb=_parse_pose(data["t_ab_tb"], "t_ab_tb"),
        tool_offset=_parse_pose(data["tool_offset"], "tool_offset"),
        workpiece_offset=_parse_pose(data.get("workpiece_offset", {}), "workpiece_offset"),
        home_config=None if home is None else np.asarray(home, dtype=float),
    )


def load_chain(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"{path}: {exc}") from exc
    try:
        return chain_from_dict(data)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
