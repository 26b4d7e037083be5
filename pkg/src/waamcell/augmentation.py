"""Task augmentation: selection matrix, Lambda map, augmented Jacobian
and the equivalent constrained-Jacobian formulation.

The main task is the full 6-DOF torch twist relative to F_d.  The
constraint task selects r twist coordinates of the torch expressed in
its own frame but measured relative to the arm base, which the table
joints cannot affect; the stacked map is

    [[J1, J2], [0, Lambda @ J2]]      Lambda = H @ Omega^T
"""

from dataclasses import dataclass, field

import numpy as np

from .chain import ConfigurationError

AXIS_NAMES = ("vx", "vy", "vz", "wx", "wy", "wz")


@dataclass(frozen=True)
class SelectionMatrix:
    H: np.ndarray
    axes: tuple

    @property
    def r(self):
        return self.H.shape[0]


def build_selection_matrix(axes):
    """Row selector over the twist coordinates (vx, vy, vz, wx, wy, wz)."""
    axes = tuple(axes)
    if not axes:
        raise ValueError("at least one axis must be selected")
    if len(set(axes)) != len(axes):
        raise ValueError(f"duplicated axes in {axes}")
    rows = []
    for name in axes:
        if name not in AXIS_NAMES:
            raise ValueError(f"unknown twist axis {name!r}, expected one of {AXIS_NAMES}")
        rows.append(np.eye(6)[AXIS_NAMES.index(name)])
    return SelectionMatrix(H=np.array(rows), axes=axes)


DEFAULT_SELECTION = build_selection_matrix(("wx", "wy"))


def _omega(R):
    O = np.zeros((6, 6))
    O[:3, :3] = R
    O[3:, 3:] = R
    return O


@dataclass(frozen=True)
class LambdaMap:
    lam: np.ndarray        # r x 6,  H @ Omega^T
    lam_null: np.ndarray   # 6 x (6-r), orthonormal columns spanning null(lam)

    @property
    def r(self):
        return self.lam.shape[0]


def build_lambda(selection, R):
    """Lambda = H Omega^T plus an orthonormal null-space completion.

    The null space of Lambda is spanned by the columns of Omega whose
    indices are not selected by H, which gives an exact, deterministic
    orthonormal basis (ascending coordinate order).
    """
    R = np.asarray(R, dtype=float)
    if not np.allclose(R @ R.T, np.eye(3), atol=1e-9):
        raise ConfigurationError("rotation matrix is not orthonormal")
    omega = _omega(R)
    lam = selection.H @ omega.T
    selected = [AXIS_NAMES.index(a) for a in selection.axes]
    rest = [i for i in range(6) if i not in selected]
    lam_null = omega[:, rest]
    return LambdaMap(lam=lam, lam_null=lam_null)


@dataclass(frozen=True)
class AugmentedJacobian:
    matrix: np.ndarray     # (6+r) x m
    n_table: int
    lam: LambdaMap
    U: np.ndarray = field(repr=False)
    sigma: np.ndarray = field(repr=False)
    Vt: np.ndarray = field(repr=False)

    @property
    def r(self):
        return self.matrix.shape[0] - 6

    @property
    def J1(self):
        return self.matrix[:6, :self.n_table]

    @property
    def J2(self):
        return self.matrix[:6, self.n_table:]

    @property
    def sigma_min(self):
        return float(self.sigma[-1])


def augmented_jacobian(J, lam_map, n_table):
    """Assemble [[J1, J2], [0, Lambda @ J2]] and cache its SVD."""
    J = np.asarray(J, dtype=float)
    r = lam_map.r
    m = J.shape[1]
    JA = np.zeros((6 + r, m))
    JA[:6] = J
    JA[6:, n_table:] = lam_map.lam @ J[:, n_table:]
    U, sigma, Vt = np.linalg.svd(JA)
    return AugmentedJacobian(matrix=JA, n_table=n_table, lam=lam_map,
                             U=U, sigma=sigma, Vt=Vt)


@dataclass(frozen=True)
class ConstrainedTaskMap:
    """Constrained-Jacobian view J_c = [J1, Lambda_null] of the same problem."""

    J_c: np.ndarray        # 6 x (m-n + 6-r)
    J1: np.ndarray
    J2: np.ndarray
    lam: LambdaMap
    arm_singular: bool

    def task_velocities(self, theta_dot_t, theta_dot_a):
        """(v, omega_s) via the constrained route (split through Lambda)."""
        vbar = self.lam.lam_null.T @ (self.J2 @ theta_dot_a)
        omega_s = self.lam.lam @ (self.J2 @ theta_dot_a)
        v = self.J_c @ np.concatenate((theta_dot_t, vbar)) + self.lam.lam.T @ omega_s
        return v, omega_s

    def reconstruct_arm_rates(self, vbar, omega_s):
        """theta_dot_a = J2^+ (Lambda_null vbar + Lambda^T omega_s)."""
        return np.linalg.pinv(self.J2) @ (self.lam.lam_null @ vbar + self.lam.lam.T @ omega_s)


def constrained_task_map(J, lam_map, n_table, rank_tol=1e-8):
    J = np.asarray(J, dtype=float)
    J1 = J[:, :n_table]
    J2 = J[:, n_table:]
    sigma = np.linalg.svd(J2, compute_uv=False)
    arm_singular = bool(sigma[min(J2.shape) - 1] < rank_tol * sigma[0])
    return ConstrainedTaskMap(
        J_c=np.hstack((J1, lam_map.lam_null)),
        J1=J1, J2=J2, lam=lam_map, arm_singular=arm_singular)
