"""Closed-loop discrete-time simulation of the controlled cell.

The loop runs at the control rate (60 Hz default): build the layer
reference, measure errors from the simulated kinematics, assemble the
augmented Jacobian at the current joints, invert with filtered DLS,
saturate the command slew, and integrate theta_dot = u + eta.  The
injected eta models the robots' internal-controller mismatch and is
L2 and L-infinity by construction.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from . import quaternion as quat
from .augmentation import (DEFAULT_SELECTION, augmented_jacobian, build_lambda,
                           constrained_task_map)
from .chain import full_kinematics
from .control import (ControlGains, compute_errors, constrained_velocity_command,
                      joint_velocity_command, primary_control, secondary_control)
from .dls import DlsConfig
from .trajectory import layer_count, layer_duration, layer_reference

PHASE_SETTLE, PHASE_DEPOSIT, PHASE_DWELL = 0, 1, 2


class DivergenceError(RuntimeError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1.0 / 60.0
    integrator: str = "euler"        # "euler" | "rk4"
    seed: int = 0
    eta_model: str = "none"          # "none" | "decaying-sinusoid" | "first-order-lag"
    eta_amplitude: float = 0.05      # rad/s
    eta_decay: float = 0.5           # 1/s
    eta_frequency: float = 7.0       # rad/s
    eta_tau: float = 0.05            # s, first-order-lag time constant
    accel_limit: float = 2.0         # rad/s^2 slew cap on the command; <=0 disables
    settle_time: float = 12.0        # max settle duration before layer 0, s
    settle_tol_mm: float = 1e-3
    settle_tol_rad: float = 1e-5
    divergence_factor: float = 10.0

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.integrator not in ("euler", "rk4"):
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if self.eta_model not in ("none", "decaying-sinusoid", "first-order-lag"):
            raise ValueError(f"unknown eta model {self.eta_model!r}")
        if self.eta_model == "decaying-sinusoid" and self.eta_decay <= 0.0:
            raise ValueError("eta_decay must be positive (eta must be L2)")
        if self.eta_model == "first-order-lag" and self.eta_tau <= 0.0:
            raise ValueError("eta_tau must be positive")


class DecayingSinusoidEta:
    """Per-joint a * exp(-lambda t) * sin(w t + phi_i); L2 and bounded."""

    def __init__(self, dof, cfg):
        rng = np.random.default_rng(cfg.seed)
        self.phases = rng.uniform(0.0, 2.0 * np.pi, size=dof)
        self.a = cfg.eta_amplitude
        self.lam = cfg.eta_decay
        self.w = cfg.eta_frequency

    def __call__(self, t):
        return self.a * np.exp(-self.lam * t) * np.sin(self.w * t + self.phases)


def eta_signal(dof, cfg):
    if cfg.eta_model == "decaying-sinusoid":
        return DecayingSinusoidEta(dof, cfg)
    return lambda t: np.zeros(dof)


def step(theta, u, eta_fn, t, dt, integrator="euler"):
    """Integrate theta_dot = u + eta over one tick with u held constant."""
    theta = np.asarray(theta, dtype=float)
    u = np.asarray(u, dtype=float)
    if integrator == "euler":
        return theta + dt * (u + eta_fn(t))
    # u is constant over the step, so RK4 reduces to Simpson on eta(t)
    quad = (eta_fn(t) + 4.0 * eta_fn(t + dt / 2.0) + eta_fn(t + dt)) * dt / 6.0
    return theta + dt * u + quad


def lyapunov_value(err):
    """V = 1/2 |e_p|^2 + (e_eta-1)^2 + |e_eps|^2 + (e_eta_s-1)^2 + |e_s|^2."""
    e_eta, e_eps = err.e_q[0], err.e_q[1:]
    return float(0.5 * err.e_p @ err.e_p + (e_eta - 1.0) ** 2 + e_eps @ e_eps
                 + (err.e_qs[0] - 1.0) ** 2 + err.e_s @ err.e_s)


@dataclass
class SimTrace:
    t: np.ndarray
    theta: np.ndarray
    p: np.ndarray
    q: np.ndarray
    e_p: np.ndarray
    e_q: np.ndarray
    e_s: np.ndarray
    alpha: np.ndarray
    u: np.ndarray
    sigma_min: np.ndarray
    V: np.ndarray
    layer: np.ndarray              # layer index; -1 during settle
    phase: np.ndarray              # PHASE_* codes
    layer_time: np.ndarray         # time since the start of the current layer
    eta_energy: np.ndarray         # cumulative integral of eta^T JA^T JA eta
    diverged: bool = False
    notes: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    def layer_view(self, layer, phase=PHASE_DEPOSIT):
        mask = (self.layer == layer) & (self.phase == phase)
        return SimTrace(**{k: (getattr(self, k)[mask] if isinstance(getattr(self, k), np.ndarray)
                               else getattr(self, k))
                           for k in ("t", "theta", "p", "q", "e_p", "e_q", "e_s", "alpha",
                                     "u", "sigma_min", "V", "layer", "phase", "layer_time",
                                     "eta_energy")},
                        diverged=self.diverged, notes=self.notes)

    def layers(self):
        return sorted({int(l) for l in self.layer if l >= 0})

    def csv_header(self):
        m = self.theta.shape[1]
        return (["t"] + [f"theta_{i+1}" for i in range(m)]
                + ["p_x", "p_y", "p_z", "q_w", "q_x", "q_y", "q_z"]
                + ["e_p_x", "e_p_y", "e_p_z", "e_q_w", "e_q_x", "e_q_y", "e_q_z"]
                + ["e_s_1", "e_s_2", "alpha"]
                + [f"u_{i+1}" for i in range(m)]
                + ["sigma_min", "V"])

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(self.csv_header()) + "\n")
            for i in range(len(self)):
                row = np.concatenate((
                    [self.t[i]], self.theta[i], self.p[i], self.q[i],
                    self.e_p[i], self.e_q[i], self.e_s[i], [self.alpha[i]],
                    self.u[i], [self.sigma_min[i]], [self.V[i]],
                ))
                fh.write(",".join(format(v, ".9g") for v in row) + "\n")


class _Recorder:
    def __init__(self):
        self.rows = {k: [] for k in ("t", "theta", "p", "q", "e_p", "e_q", "e_s",
                                     "alpha", "u", "sigma_min", "V", "layer",
                                     "phase", "layer_time", "eta_energy")}

    def add(self, **kw):
        for k, v in kw.items():
            self.rows[k].append(v)

    def trace(self, diverged=False, notes=None):
        arr = {k: np.array(v) for k, v in self.rows.items()}
        return SimTrace(**arr, diverged=diverged, notes=notes or {})


def _controller_tick(chain, theta, ref, gains, dls_cfg, formulation="augmented"):
    pose, arm_pose, J = full_kinematics(chain, theta)
    err = compute_errors(ref, pose, arm_pose)
    lam = build_lambda(DEFAULT_SELECTION, pose.rotation())
    aug = augmented_jacobian(J, lam, chain.n_table)
    u1 = primary_control(ref, err, gains)
    u2 = secondary_control(ref.omega_sd, err.e_s, gains)
    if formulation == "constrained":
        cmap = constrained_task_map(J, lam, chain.n_table)
        u = constrained_velocity_command(cmap, u1, u2, dls_cfg)
    else:
        u = joint_velocity_command(aug, u1, u2, dls_cfg)
    return pose, err, aug, u


def run_deposition(chain, plan, gains=None, dls_cfg=None, sim_cfg=None, theta0=None,
                   formulation="augmented"):
    """Simulate the full deposition; returns the tick-by-tick SimTrace.

    The run starts with a settle phase holding the first reference so
    layer 0 begins converged, then executes the layers in sequence with
    an inter-layer dwell at the next layer's start point.
    """
    if formulation not in ("augmented", "constrained"):
        raise ValueError(f"unknown formulation {formulation!r}")
    gains = gains or ControlGains()
    dls_cfg = dls_cfg or DlsConfig()
    sim_cfg = sim_cfg or SimConfig()
    if theta0 is None:
        theta0 = chain.home_config if chain.home_config is not None else np.zeros(chain.dof)
    theta = np.asarray(theta0, dtype=float).copy()
    dt = sim_cfg.dt
    n_layers = layer_count(plan)
    eta_fn = eta_signal(chain.dof, sim_cfg)
    lag_state = np.zeros(chain.dof)      # first-order-lag internal rate state

    rec = _Recorder()
    t_global = 0.0
    u_prev = np.zeros(chain.dof)
    energy = 0.0
    err_floor = None

    def do_tick(ref, layer, phase, layer_time):
        nonlocal theta, t_global, u_prev, energy, lag_state, err_floor
        pose, err, aug, u = _controller_tick(chain, theta, ref, gains, dls_cfg,
                                             formulation)
        if sim_cfg.accel_limit > 0.0:
            du_max = sim_cfg.accel_limit * dt
            u = u_prev + np.clip(u - u_prev, -du_max, du_max)
        if sim_cfg.eta_model == "first-order-lag":
            # exact discrete response of w_dot = (u - w)/tau; eta = w - u
            decay = np.exp(-dt / sim_cfg.eta_tau)
            eta_now = lag_state - u
            theta_next = theta + dt * u + (lag_state - u) * sim_cfg.eta_tau * (1.0 - decay)
            lag_state = u + (lag_state - u) * decay
        else:
            eta_now = eta_fn(t_global)
            theta_next = step(theta, u, eta_fn, t_global, dt, sim_cfg.integrator)
        energy += float(eta_now @ (aug.matrix.T @ (aug.matrix @ eta_now))) * dt
        rec.add(t=t_global, theta=theta.copy(), p=pose.p, q=pose.q,
                e_p=err.e_p, e_q=err.e_q, e_s=err.e_s, alpha=err.alpha,
                u=u.copy(), sigma_min=aug.sigma_min, V=lyapunov_value(err),
                layer=layer, phase=phase, layer_time=layer_time, eta_energy=energy)
        if err_floor is not None:
            lim_p, lim_s = err_floor
            if np.linalg.norm(err.e_p) > lim_p or np.linalg.norm(err.e_s) > lim_s:
                raise DivergenceError(
                    f"error norm exceeded {sim_cfg.divergence_factor}x its initial value "
                    f"at t={t_global:.3f}s (layer {layer})",
                    trace=rec.trace(diverged=True))
        u_prev = u
        theta = theta_next
        t_global += dt
        return err

    if n_layers == 0:
        pose, _, J = full_kinematics(chain, theta)
        aug = augmented_jacobian(J, build_lambda(DEFAULT_SELECTION, pose.rotation()),
                                 chain.n_table)
        rec.add(t=0.0, theta=theta.copy(), p=pose.p, q=pose.q,
                e_p=np.zeros(3), e_q=quat.IDENTITY.copy(), e_s=np.zeros(2), alpha=0.0,
                u=np.zeros(chain.dof), sigma_min=aug.sigma_min, V=0.0, layer=-1,
                phase=PHASE_SETTLE, layer_time=0.0, eta_energy=0.0)
        return rec.trace()

    # settle onto the first reference point
    def hold_ref_at(layer, t_layer):
        """Stationary reference: the trajectory point with the velocity
        feedforward zeroed, for settle and dwell phases."""
        ref = layer_reference(plan, layer, t_layer)
        return replace(ref, pdot_d=np.zeros(3), omega_d=np.zeros(3))

    first_ref = hold_ref_at(0, 0.0)
    settle_ticks = int(round(sim_cfg.settle_time / dt))
    for k in range(settle_ticks):
        err = do_tick(first_ref, -1, PHASE_SETTLE, k * dt)
        if (np.linalg.norm(err.e_p) < sim_cfg.settle_tol_mm
                and np.linalg.norm(err.e_q[1:]) < sim_cfg.settle_tol_rad
                and np.linalg.norm(err.e_s) < sim_cfg.settle_tol_rad):
            break

    # divergence guard baseline: settled errors, floored to workspace
    # noise and to the largest inter-layer reference step (a legitimate
    # transient at every dwell)
    e0 = rec.trace()
    steps = [np.linalg.norm(layer_reference(plan, l + 1, 0.0).p_d
                            - layer_reference(plan, l, layer_duration(plan, l)).p_d)
             for l in range(n_layers - 1)]
    base_p = max(float(np.linalg.norm(e0.e_p[-1])), 1.0, max(steps, default=0.0))
    base_s = max(float(np.linalg.norm(e0.e_s[-1])), 0.01)
    err_floor = (sim_cfg.divergence_factor * base_p, sim_cfg.divergence_factor * base_s)

    def deposit_ref(layer, t_layer, T):
        """Layer reference with the hold-interval average velocity as
        feedforward; removes the zero-order-hold lag at the ramp ends."""
        ref = layer_reference(plan, layer, t_layer)
        t2 = min(t_layer + dt, T)
        if t2 > t_layer:
            ahead = layer_reference(plan, layer, t2)
            ref = replace(ref, pdot_d=(ahead.p_d - ref.p_d) / (t2 - t_layer))
        return ref

    for layer in range(n_layers):
        T = layer_duration(plan, layer)
        ticks = int(np.floor(T / dt + 1e-9)) + 1
        for k in range(ticks):
            t_layer = min(k * dt, T)
            do_tick(deposit_ref(layer, t_layer, T), layer, PHASE_DEPOSIT, t_layer)
        if plan.dwell > 0.0:
            if layer + 1 < n_layers:
                hold_layer, hold_ref = layer + 1, hold_ref_at(layer + 1, 0.0)
            else:
                # final hold: let the loop settle on the last point
                hold_layer, hold_ref = layer, hold_ref_at(layer, T)
            for k in range(int(round(plan.dwell / dt))):
                do_tick(hold_ref, hold_layer, PHASE_DWELL, k * dt)
    return rec.trace()


@dataclass
class RmsSummary:
    """Across-layer RMS and deviation band per error coordinate, per
    time instant into the layer."""

    t: np.ndarray
    rms: dict
    std: dict
    n_layers: int

    COORDS = ("e_p_x", "e_p_y", "e_p_z", "e_p_norm",
              "e_q_x", "e_q_y", "e_q_z", "e_q_norm",
              "e_s_1", "e_s_2", "alpha")


def _layer_matrix(view):
    return np.column_stack((
        view.e_p, np.linalg.norm(view.e_p, axis=1),
        view.e_q[:, 1:], np.linalg.norm(view.e_q[:, 1:], axis=1),
        view.e_s, view.alpha,
    ))


def rms_errors(layer_traces):
    """Per-time-instant RMS across layers: e_rms = sqrt(sum_k e_k^2 / N).

    Layers with different sample counts are truncated to the shortest.
    """
    if not layer_traces:
        raise ValueError("at least one layer trace is required")
    n = min(len(v) for v in layer_traces)
    if n == 0:
        raise ValueError("empty layer trace")
    stack = np.stack([_layer_matrix(v)[:n] for v in layer_traces])   # (L, n, C)
    rms = np.sqrt(np.mean(stack ** 2, axis=0))
    std = np.std(stack, axis=0)
    t = layer_traces[0].layer_time[:n]
    names = RmsSummary.COORDS
    return RmsSummary(t=t,
                      rms={c: rms[:, i] for i, c in enumerate(names)},
                      std={c: std[:, i] for i, c in enumerate(names)},
                      n_layers=len(layer_traces))


def rms_from_trace(trace):
    views = [trace.layer_view(l) for l in trace.layers()]
    return rms_errors([v for v in views if len(v)])


def export_rms(summary, path):
    cols = ["t"]
    for c in RmsSummary.COORDS:
        cols += [f"rms_{c}", f"std_{c}"]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for i in range(len(summary.t)):
            row = [summary.t[i]]
            for c in RmsSummary.COORDS:
                row += [summary.rms[c][i], summary.std[c][i]]
            fh.write(",".join(format(v, ".9g") for v in row) + "\n")
