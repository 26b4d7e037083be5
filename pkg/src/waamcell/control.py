"""Pose/alignment errors, the two control signals, and the commanded
joint velocities of the coordinated controller."""

from dataclasses import dataclass, field

import numpy as np

from . import quaternion as quat
from .dls import DlsConfig, filtered_dls_inverse


@dataclass(frozen=True)
class ControlGains:
    k_p: float = 2.0
    k_o: float = 2.0
    k_s: float = 2.0

    def __post_init__(self):
        if min(self.k_p, self.k_o, self.k_s) <= 0.0:
            raise ValueError("all controller gains must be strictly positive")


@dataclass(frozen=True)
class TaskReference:
    """Desired torch state: pose/twist in F_d plus the desired torch axis
    in the arm-base (inertial) frame."""

    p_d: np.ndarray
    q_d: np.ndarray
    pdot_d: np.ndarray = field(default_factory=lambda: np.zeros(3))
    omega_d: np.ndarray = field(default_factory=lambda: np.zeros(3))
    z_d_inertial: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    omega_sd: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        object.__setattr__(self, "p_d", np.asarray(self.p_d, dtype=float))
        object.__setattr__(self, "q_d", quat.normalize(self.q_d))
        object.__setattr__(self, "pdot_d", np.asarray(self.pdot_d, dtype=float))
        object.__setattr__(self, "omega_d", np.asarray(self.omega_d, dtype=float))
        z = np.asarray(self.z_d_inertial, dtype=float)
        n = np.linalg.norm(z)
        if n == 0.0:
            raise ValueError("z_d_inertial must be non-zero")
        object.__setattr__(self, "z_d_inertial", z / n)
        object.__setattr__(self, "omega_sd", np.asarray(self.omega_sd, dtype=float))


@dataclass(frozen=True)
class ErrorState:
    e_p: np.ndarray
    e_q: np.ndarray          # quaternion error, scalar part >= 0
    e_qs: np.ndarray         # alignment quaternion error, third vector comp == 0
    e_s: np.ndarray          # first two vector components of e_qs
    alpha: float             # misalignment angle in [0, pi]
    degenerate: bool = False


def pose_error(ref, pose):
    """e_p = p_d - p,  e_q = q_d (x) q^-1 canonicalized to e_eta >= 0."""
    e_p = ref.p_d - pose.p
    e_q = quat.canonical(quat.product(ref.q_d, quat.inverse(pose.q)))
    return e_p, e_q


def alignment_error(z_d_inertial, arm_pose):
    """Angle/axis error between the torch z-axis and a direction fixed in F_ab.

    Both vectors are expressed in the torch frame, so the error axis has
    no z component and the 2-vector e_s fully captures it.  The
    antiparallel case (alpha == pi) has an undefined axis; the x-axis is
    chosen deterministically and the result is flagged degenerate.
    """
    z_b = np.array([0.0, 0.0, 1.0])
    R = arm_pose.rotation()
    z_bd = R.T @ np.asarray(z_d_inertial, dtype=float)
    z_bd = z_bd / np.linalg.norm(z_bd)
    alpha = float(np.arccos(np.clip(z_bd @ z_b, -1.0, 1.0)))
    axis = np.cross(z_b, z_bd)
    norm = np.linalg.norm(axis)
    degenerate = False
    if norm < 1e-12:
        if alpha > np.pi / 2:
            axis = np.array([1.0, 0.0, 0.0])
            degenerate = True
        else:
            axis = np.zeros(3)
            alpha = 0.0
    else:
        axis = axis / norm
    e_qs = np.concatenate(([np.cos(alpha / 2.0)], axis * np.sin(alpha / 2.0)))
    return e_qs, e_qs[1:3].copy(), alpha, degenerate


def compute_errors(ref, pose, arm_pose):
    e_p, e_q = pose_error(ref, pose)
    e_qs, e_s, alpha, degenerate = alignment_error(ref.z_d_inertial, arm_pose)
    return ErrorState(e_p=e_p, e_q=e_q, e_qs=e_qs, e_s=e_s,
                      alpha=alpha, degenerate=degenerate)


def primary_control(ref, err, gains):
    """Feedforward twist plus proportional pose-error feedback (6-vector).

    The quaternion propagation carries a factor 1/2, so the rotational
    feedback doubles the gain; every error component then decays with
    the same rate constant k as the position loop.
    """
    return np.concatenate((
        ref.pdot_d + gains.k_p * err.e_p,
        ref.omega_d + 2.0 * gains.k_o * err.e_q[1:],
    ))


def secondary_control(omega_sd, e_s, gains):
    """Alignment-task rate command (2-vector); gain doubled as in
    primary_control so e_s decays with rate constant k_s."""
    return (np.asarray(omega_sd, dtype=float)
            + 2.0 * gains.k_s * np.asarray(e_s, dtype=float))


def joint_velocity_command(aug, u1_bar, u2_bar, dls_cfg=DlsConfig()):
    """Singularity-robust inversion of the augmented Jacobian."""
    if not np.any(aug.matrix):
        raise ValueError("augmented Jacobian is identically zero; invalid chain")
    rhs = np.concatenate((u1_bar, u2_bar))
    inv = filtered_dls_inverse(aug.matrix, dls_cfg, svd=(aug.U, aug.sigma, aug.Vt))
    return inv @ rhs


# The constrained system J_c mixes joint-rate columns (mm-per-rad scale)
# with task-velocity columns (unit scale); its smallest singular value
# runs about two orders of magnitude below the augmented system's, so
# the damping activation is rescaled accordingly.
_CONSTRAINED_SIGMA_SCALE = 0.01


def constrained_velocity_command(cmap, u1_bar, u2_bar, dls_cfg=DlsConfig()):
    """Joint rates via the constrained-Jacobian route.

    Solves J_c [theta_dot_t; vbar] = u1 - Lambda^T u2 and reconstructs
    the arm rates; equivalent to the augmented route away from
    singularities.
    """
    n = cmap.J1.shape[1]
    rhs = np.asarray(u1_bar, dtype=float) - cmap.lam.lam.T @ np.asarray(u2_bar, dtype=float)
    scaled = DlsConfig(kappa=dls_cfg.kappa * _CONSTRAINED_SIGMA_SCALE,
                       sigma_threshold=dls_cfg.sigma_threshold * _CONSTRAINED_SIGMA_SCALE,
                       mode=dls_cfg.mode)
    x = filtered_dls_inverse(cmap.J_c, scaled) @ rhs
    theta_dot_t, vbar = x[:n], x[n:]
    theta_dot_a = cmap.reconstruct_arm_rates(vbar, np.asarray(u2_bar, dtype=float))
    return np.concatenate((theta_dot_t, theta_dot_a))


def closed_loop_error_rates(err, gains, aug, eta):
    """Stacked error rates [e_p_dot; omega_tilde; omega_s_tilde]."""
    decay = np.concatenate((
        -gains.k_p * err.e_p,
        -gains.k_o * err.e_q[1:],
        -gains.k_s * err.e_s,
    ))
    return decay - aug.matrix @ np.asarray(eta, dtype=float)


def alignment_error_rates(e_qs, omega_tilde_s, omega_tilde_z=0.0):
    """Quaternion-error propagation of the alignment task.

    Returns the 4-vector [e_eta_s_dot, e_s_dot (2), e_eps3_dot]; with
    closed-loop rates omega_tilde_s ~ e_s and omega_tilde_z == 0 the
    third vector component stays identically zero.
    """
    e_eta = e_qs[0]
    e1, e2 = e_qs[1], e_qs[2]
    ws = np.asarray(omega_tilde_s, dtype=float)
    return 0.5 * np.array([
        -(e1 * ws[0] + e2 * ws[1]),
        e_eta * ws[0] + e2 * omega_tilde_z,
        e_eta * ws[1] - e1 * omega_tilde_z,
        -e2 * ws[0] + e1 * ws[1] + e_eta * omega_tilde_z,
    ])
