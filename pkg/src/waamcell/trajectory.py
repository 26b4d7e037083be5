"""Per-tick task references for the deposition scenarios.

Positions are expressed in the deposition frame F_d (mm); the desired
torch axis is expressed in the arm-base frame.  Velocity feedforward is
the analytic derivative of each trajectory equation.

Scenarios:
  inclined-wall    straight thin wall leaning by a fixed angle
  curved-wall      straight base, 90-degree curved middle, horizontal top
  cylinder         circular layers with a per-layer phase lag
  bell-mouth       flaring circular layers on top of a cylinder
  singular-transit stress case sweeping the build tilt through vertical
"""

from dataclasses import dataclass, field

import numpy as np

SCENARIOS = ("inclined-wall", "curved-wall", "cylinder", "bell-mouth",
             "singular-transit")

CONTROL_RATE_HZ = 60.0


@dataclass(frozen=True)
class TrapezoidalProfile:
    t_a: float     # acceleration (and deceleration) time, s
    T: float       # total duration, s

    def __post_init__(self):
        if not (0.0 < self.t_a <= self.T / 2.0):
            raise ValueError(f"need 0 < t_a <= T/2, got t_a={self.t_a}, T={self.T}")


def trapezoidal_timing(t, profile):
    """Normalized path coordinate s(t) in [0, 1] and its rate."""
    t_a, T = profile.t_a, profile.T
    if t < 0.0 or t > T + 1e-12:
        raise ValueError(f"t={t} outside [0, {T}]")
    t = min(t, T)
    v_c = 1.0 / (T - t_a)
    if t < t_a:
        return v_c * t * t / (2.0 * t_a), v_c * t / t_a
    if t <= T - t_a:
        return v_c * (t - t_a / 2.0), v_c
    dt = T - t
    return 1.0 - v_c * dt * dt / (2.0 * t_a), v_c * dt / t_a


@dataclass(frozen=True)
class DepositionPlan:
    scenario: str
    v_ts: float = 5.0                 # travel speed, mm/s
    l_h: float = 2.0                  # layer height, mm
    t_a: float = 0.1                  # trapezoid ramp time, s
    # thin/curved wall geometry
    gamma: float = 0.0                # wall inclination, rad
    l_l: float = 100.0                # layer length, mm
    h1: float = 30.0                  # curved wall: base section height, mm
    h2: float = 20.0                  # curved wall: top section height, mm
    curve_radius: float = 30.0        # curved wall: curve radius R, mm
    # circular geometry
    r_c: float = 80.0                 # cylinder radius, mm
    flare_radius: float = 20.0        # bell-mouth flare radius r, mm
    flare_angle: float = np.pi / 3.0  # bell-mouth opening angle, rad
    cylinder_height: float = 90.0     # mm
    phase_lag_increment: float = np.pi / 36.0   # rad per layer
    # offsets of the trajectory from the F_d origin, mm
    o_x: float = 0.0
    o_y: float = 0.0
    o_z: float = 0.0
    n_layers: int | None = None       # override for the computed layer count
    alternate_direction: bool = True
    dwell: float = 2.0                # inter-layer pause, s
    z_d_inertial: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    # singular-transit sweep bounds, rad
    gamma_sweep: tuple = (0.35, -0.35)

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}, expected one of {SCENARIOS}")
        if self.l_h <= 0.0:
            raise ValueError("layer height must be positive")
        if self.v_ts <= 0.0:
            raise ValueError("travel speed must be positive")
        object.__setattr__(self, "z_d_inertial",
                           np.asarray(self.z_d_inertial, dtype=float))


# ---------------------------------------------------------------------------
# layer bookkeeping

def curved_wall_sections(plan):
    """Layer counts (n1, n_t, n3) of the three curved-wall sections."""
    n1 = int(round(plan.h1 / plan.l_h))
    n_t = int(round(np.pi * plan.curve_radius / (2.0 * plan.l_h)))
    n3 = int(round(plan.h2 / plan.l_h))
    return n1, n_t, n3


def curved_wall_delta_gamma(plan):
    """Incremental tilt per curved layer; recomputed from the rounded
    layer count so the quarter turn closes exactly."""
    _, n_t, _ = curved_wall_sections(plan)
    return np.pi / (2.0 * n_t)


def bellmouth_layer_count(plan):
    return int(round(plan.flare_radius * plan.flare_angle / plan.l_h))


def bellmouth_delta_gamma(plan):
    n_t = plan.n_layers if plan.n_layers is not None else bellmouth_layer_count(plan)
    return plan.flare_angle / n_t


def layer_count(plan):
    if plan.scenario == "curved-wall":
        computed = sum(curved_wall_sections(plan))
    elif plan.scenario == "cylinder":
        computed = int(round(plan.cylinder_height / plan.l_h))
    elif plan.scenario == "bell-mouth":
        computed = bellmouth_layer_count(plan)
    elif plan.scenario == "singular-transit":
        computed = 1
    else:
        computed = 20
    if plan.n_layers is not None:
        if plan.n_layers < 0:
            raise ValueError("n_layers must be >= 0")
        return plan.n_layers
    return computed


def layer_profile(plan, layer):
    if plan.scenario in ("cylinder", "bell-mouth"):
        omega = plan.v_ts / plan.r_c
        return None, 2.0 * np.pi / omega
    profile = TrapezoidalProfile(plan.t_a, plan.l_l / plan.v_ts + plan.t_a)
    return profile, profile.T


def layer_duration(plan, layer):
    return layer_profile(plan, layer)[1]


def _wall_timing(plan, layer, t, profile):
    """s(t) with the deposition direction reversed on odd layers."""
    reverse = plan.alternate_direction and layer % 2 == 1
    if reverse:
        s, sdot = trapezoidal_timing(profile.T - t, profile)
        return s, -sdot
    return trapezoidal_timing(t, profile)


def _rot_y(angle):
    return np.array([np.cos(angle / 2.0), 0.0, np.sin(angle / 2.0), 0.0])


# ---------------------------------------------------------------------------
# scenario reference equations
# each returns (p_d, q_d, pdot_d, omega_d); layer indices follow the
# deposition equations, see layer_reference for the 0-based dispatch

def inclined_wall_equation(plan, n_l, t, profile, layer_for_direction=None):
    s, sdot = _wall_timing(plan, n_l if layer_for_direction is None else layer_for_direction,
                           t, profile)
    g = plan.gamma
    p = np.array([
        np.sin(g) * n_l * plan.l_h + plan.o_x,
        plan.l_l * s + plan.o_y,
        np.cos(g) * n_l * plan.l_h,
    ])
    pdot = np.array([0.0, plan.l_l * sdot, 0.0])
    return p, _rot_y(g), pdot, np.zeros(3)


def curved_wall_equation(plan, layer, t, profile):
    n1, n_t, _ = curved_wall_sections(plan)
    dg = curved_wall_delta_gamma(plan)
    s, sdot = _wall_timing(plan, layer, t, profile)
    pdot = np.array([0.0, plan.l_l * sdot, 0.0])
    if layer < n1:                       # straight base, gamma = 0
        p = np.array([plan.o_x, plan.l_l * s + plan.o_y, layer * plan.l_h])
        return p, _rot_y(0.0), pdot, np.zeros(3)
    base_z = plan.o_z + n1 * plan.l_h    # nominal height of the base section
    if layer < n1 + n_t:                 # curved section
        k = layer - n1 + 1
        g = k * dg
        p = np.array([
            np.sin(g) * k * plan.l_h + plan.o_x,
            plan.l_l * s + plan.o_y,
            np.cos(g) * k * plan.l_h + base_z,
        ])
        return p, _rot_y(g), pdot, np.zeros(3)
    j = layer - n1 - n_t + 1             # horizontal top, gamma = pi/2
    p = np.array([
        (n_t + j) * plan.l_h + plan.o_x,
        plan.l_l * s + plan.o_y,
        base_z,
    ])
    return p, _rot_y(np.pi / 2.0), pdot, np.zeros(3)


def cylinder_equation(plan, n_l, t):
    omega = plan.v_ts / plan.r_c
    phase = omega * t + n_l * plan.phase_lag_increment
    p = np.array([
        plan.r_c * np.sin(phase) + plan.o_x,
        -plan.r_c * np.cos(phase) + plan.o_y,
        n_l * plan.l_h,
    ])
    pdot = plan.r_c * omega * np.array([np.cos(phase), np.sin(phase), 0.0])
    q = np.array([-1.0, 0.0, 0.0, 0.0])
    return p, q, pdot, np.zeros(3)


def bellmouth_equation(plan, n_l2, t):
    omega = plan.v_ts / plan.r_c
    dg = bellmouth_delta_gamma(plan)
    g = n_l2 * dg
    r_cn = plan.r_c + (1.0 - np.cos(g)) * plan.flare_radius
    phase = omega * t + n_l2 * plan.phase_lag_increment
    p = np.array([
        r_cn * np.sin(phase) + plan.o_x,
        -r_cn * np.cos(phase) + plan.o_y,
        plan.flare_radius * np.sin(g) + plan.o_z,
    ])
    pdot = r_cn * omega * np.array([np.cos(phase), np.sin(phase), 0.0])
    return p, _rot_y(g), pdot, np.zeros(3)


def singular_transit_equation(plan, t, profile):
    g0, g1 = plan.gamma_sweep
    T = profile.T
    g = g0 + (g1 - g0) * t / T
    gdot = (g1 - g0) / T
    s, sdot = trapezoidal_timing(t, profile)
    p = np.array([plan.o_x, plan.l_l * s + plan.o_y, plan.o_z])
    pdot = np.array([0.0, plan.l_l * sdot, 0.0])
    return p, _rot_y(g), pdot, np.array([0.0, gdot, 0.0])


def layer_reference(plan, layer, t):
    """TaskReference for 0-based `layer` at time `t` into that layer."""
    from .control import TaskReference

    n = layer_count(plan)
    if not 0 <= layer < n:
        raise ValueError(f"layer {layer} outside [0, {n})")
    profile, _ = layer_profile(plan, layer)
    if plan.scenario == "inclined-wall":
        p, q, pdot, om = inclined_wall_equation(plan, layer, t, profile)
    elif plan.scenario == "curved-wall":
        p, q, pdot, om = curved_wall_equation(plan, layer, t, profile)
    elif plan.scenario == "cylinder":
        p, q, pdot, om = cylinder_equation(plan, layer, t)
    elif plan.scenario == "bell-mouth":
        p, q, pdot, om = bellmouth_equation(plan, layer + 1, t)
    else:
        p, q, pdot, om = singular_transit_equation(plan, t, profile)
    return TaskReference(p_d=p, q_d=q, pdot_d=pdot, omega_d=om,
                         z_d_inertial=plan.z_d_inertial)


def reference_stream(plan, layer, dt=1.0 / CONTROL_RATE_HZ):
    """Uniform (t, TaskReference) samples covering one layer."""
    T = layer_duration(plan, layer)
    ticks = int(np.floor(T / dt + 1e-9)) + 1
    times = np.arange(ticks) * dt
    return times, [layer_reference(plan, layer, min(t, T)) for t in times]


def export_references(plan, path, dt=1.0 / CONTROL_RATE_HZ):
    """Layer-indexed reference CSV: layer, t, p_d, q_d, pdot_d, omega_d, z_d."""
    cols = (["layer", "t"]
            + [f"p_d_{a}" for a in "xyz"]
            + ["q_d_w", "q_d_x", "q_d_y", "q_d_z"]
            + [f"pdot_d_{a}" for a in "xyz"]
            + [f"omega_d_{a}" for a in "xyz"]
            + [f"z_d_{a}" for a in "xyz"])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for layer in range(layer_count(plan)):
            times, refs = reference_stream(plan, layer, dt)
            for t, ref in zip(times, refs):
                row = np.concatenate(([layer, t], ref.p_d, ref.q_d, ref.pdot_d,
                                      ref.omega_d, ref.z_d_inertial))
                fh.write(",".join(format(v, ".9g") for v in row) + "\n")
