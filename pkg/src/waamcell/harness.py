"""Command-line front end: load a configuration, run a deposition
scenario, export trace/RMS/plot files, and optionally compare the
augmented and constrained control formulations tick by tick.

Exit codes: 0 success, 2 configuration error, 3 divergence abort,
4 output I/O error.
"""

import argparse
import os
import sys
from dataclasses import dataclass, field

import numpy as np
import yaml

from .augmentation import DEFAULT_SELECTION, build_lambda, constrained_task_map
from .chain import ChainDescription, ConfigurationError, full_kinematics, load_chain
from .control import ControlGains
from .dls import DlsConfig
from .presets import PRESET_NAMES, default_chain, scenario_plan
from .simulate import (PHASE_DEPOSIT, DivergenceError, SimConfig, export_rms,
                       rms_from_trace, run_deposition, _controller_tick)
from .trajectory import layer_duration, layer_reference

CONFIG_ENV_VAR = "WAAMCELL_CONFIG"
EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_IO = 0, 2, 3, 4

FORMULATIONS = ("augmented", "constrained", "both")


@dataclass(frozen=True)
class HarnessConfig:
    """Fully resolved run description: every field validated on build."""

    chain: ChainDescription
    scenario: str
    plan: object
    gains: ControlGains
    dls: DlsConfig
    sim: SimConfig
    out_dir: str
    formulation: str = "augmented"
    chain_path: str | None = None


def _section(data, key):
    value = data.get(key, {})
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigurationError(f"config section {key!r} must be a mapping")
    return value


def build_config(file_data=None, scenario=None, layers=None, seed=None,
                 out_dir=None, eta=None, formulation=None, chain_path=None):
    """Merge config-file values and flag overrides into a HarnessConfig.

    Flags win over file values, which win over defaults.
    """
    data = dict(file_data or {})
    scenario = scenario or data.get("scenario")
    if scenario is None:
        raise ConfigurationError(
            f"no scenario selected; pass --scenario or set one in the config "
            f"(choices: {', '.join(PRESET_NAMES)})")

    plan_kw = dict(_section(data, "plan"))
    if layers is not None:
        plan_kw["n_layers"] = layers
    sim_kw = dict(_section(data, "sim"))
    if seed is not None:
        sim_kw["seed"] = seed
    if eta is not None:
        sim_kw["eta_model"] = eta

    chain_path = chain_path or data.get("chain")
    formulation = formulation or data.get("formulation", "augmented")
    if formulation not in FORMULATIONS:
        raise ConfigurationError(
            f"unknown formulation {formulation!r}, expected one of {FORMULATIONS}")
    out_dir = out_dir or data.get("out", "out")

    try:
        chain = load_chain(chain_path) if chain_path else default_chain()
        plan = scenario_plan(scenario, **plan_kw)
        gains = ControlGains(**_section(data, "gains"))
        dls = DlsConfig(**_section(data, "dls"))
        sim = SimConfig(**sim_kw)
    except ConfigurationError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(str(exc)) from exc
    return HarnessConfig(chain=chain, scenario=scenario, plan=plan, gains=gains,
                         dls=dls, sim=sim, out_dir=out_dir,
                         formulation=formulation, chain_path=chain_path)


# ---------------------------------------------------------------------------
# output files

def _fmt_row(values):
    return ",".join(format(float(v), ".9g") for v in values) + "\n"


def _write_layer_errors(trace, path):
    cols = ["layer", "layer_time", "e_p_x", "e_p_y", "e_p_z", "e_p_norm",
            "e_q_norm", "e_s_1", "e_s_2", "alpha"]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        mask = trace.phase == PHASE_DEPOSIT
        for i in np.where(mask)[0]:
            fh.write(_fmt_row([
                trace.layer[i], trace.layer_time[i],
                *trace.e_p[i], np.linalg.norm(trace.e_p[i]),
                np.linalg.norm(trace.e_q[i][1:]),
                *trace.e_s[i], trace.alpha[i],
            ]))


def _write_trajectory(trace, path):
    """Deposited path and its reference (p_d = p + e_p) per deposit tick."""
    cols = ["layer", "layer_time", "p_x", "p_y", "p_z", "p_d_x", "p_d_y", "p_d_z"]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for i in np.where(trace.phase == PHASE_DEPOSIT)[0]:
            fh.write(_fmt_row([
                trace.layer[i], trace.layer_time[i],
                *trace.p[i], *(trace.p[i] + trace.e_p[i]),
            ]))


def _render_plots(trace, summary, out_dir):
    import matplotlib
    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "waamcell"
    import matplotlib.pyplot as plt

    meta = {"Date": None}
    mask = trace.phase == PHASE_DEPOSIT
    layers = trace.layers()

    fig, axes = plt.subplots(3, 1, figsize=(7, 8), sharex=True)
    for layer in layers:
        view = trace.layer_view(layer)
        axes[0].plot(view.layer_time, np.linalg.norm(view.e_p, axis=1), lw=0.8)
        axes[1].plot(view.layer_time, np.linalg.norm(view.e_q[:, 1:], axis=1), lw=0.8)
        axes[2].plot(view.layer_time, view.alpha, lw=0.8)
    axes[0].set_ylabel("|e_p| [mm]")
    axes[1].set_ylabel("|e_q vec|")
    axes[2].set_ylabel("alpha [rad]")
    axes[2].set_xlabel("time into layer [s]")
    fig.suptitle("per-layer tracking errors")
    fig.savefig(os.path.join(out_dir, "errors.svg"), metadata=meta)
    plt.close(fig)

    fig, axes = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    for ax, coord, label in ((axes[0], "e_p_norm", "RMS |e_p| [mm]"),
                             (axes[1], "alpha", "RMS alpha [rad]")):
        rms, std = summary.rms[coord], summary.std[coord]
        ax.plot(summary.t, rms, lw=1.0)
        ax.fill_between(summary.t, np.maximum(rms - std, 0.0), rms + std, alpha=0.3)
        ax.set_ylabel(label)
    axes[1].set_xlabel("time into layer [s]")
    fig.suptitle(f"across-layer RMS (n={summary.n_layers}) with deviation band")
    fig.savefig(os.path.join(out_dir, "rms.svg"), metadata=meta)
    plt.close(fig)

    fig, axes = plt.subplots(1, 2, figsize=(10, 4.5))
    axes[0].plot(trace.p[mask, 0], trace.p[mask, 1], lw=0.6)
    axes[0].set_xlabel("x [mm]")
    axes[0].set_ylabel("y [mm]")
    axes[0].set_aspect("equal", adjustable="datalim")
    axes[1].plot(trace.t[mask], trace.p[mask, 2], lw=0.8)
    axes[1].set_xlabel("t [s]")
    axes[1].set_ylabel("z [mm]")
    fig.suptitle("torch trajectory in the deposition frame")
    fig.savefig(os.path.join(out_dir, "trajectory.svg"), metadata=meta)
    plt.close(fig)


def _export_all(trace, out_dir, sigma_dip=None):
    os.makedirs(out_dir, exist_ok=True)
    trace.to_csv(os.path.join(out_dir, "trace.csv"))
    _write_layer_errors(trace, os.path.join(out_dir, "layer_errors.csv"))
    _write_trajectory(trace, os.path.join(out_dir, "trajectory.csv"))
    summary = None
    if trace.layers():
        views = [trace.layer_view(l) for l in trace.layers()]
        views = [v for v in views if len(v)]
        if views:
            summary = rms_from_trace(trace)
            export_rms(summary, os.path.join(out_dir, "rms.csv"))
    if summary is not None:
        _render_plots(trace, summary, out_dir)
    with open(os.path.join(out_dir, "summary.txt"), "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write(f"ticks: {len(trace)}\n")
        fh.write(f"layers: {len(trace.layers())}\n")
        fh.write(f"diverged: {trace.diverged}\n")
        fh.write(f"sigma_min overall: {trace.sigma_min.min():.9g}\n")
        mask = trace.phase == PHASE_DEPOSIT
        if mask.any():
            fh.write(f"sigma_min deposit: {trace.sigma_min[mask].min():.9g}\n")
            fh.write(f"final |e_p| mm: {np.linalg.norm(trace.e_p[-1]):.9g}\n")
            fh.write(f"final alpha rad: {trace.alpha[-1]:.9g}\n")


# ---------------------------------------------------------------------------
# operations

def run(config):
    """Execute the configured scenario and write all artifacts."""
    formulation = "constrained" if config.formulation == "constrained" else "augmented"
    try:
        trace = run_deposition(config.chain, config.plan, gains=config.gains,
                               dls_cfg=config.dls, sim_cfg=config.sim,
                               formulation=formulation)
    except DivergenceError as exc:
        try:
            if exc.trace is not None:
                _export_all(exc.trace, config.out_dir)
        except OSError:
            pass
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    try:
        _export_all(trace, config.out_dir)
        if config.formulation == "both":
            report = compare_formulations(config, trace=trace)
            _write_comparison(report, os.path.join(config.out_dir, "comparison.txt"))
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


@dataclass(frozen=True)
class FormulationReport:
    max_task_deviation: float
    max_command_deviation: float
    compared_ticks: int
    flagged_singular_ticks: int
    notes: tuple = field(default_factory=tuple)


def compare_formulations(config, trace=None, stride=1):
    """Run both control pipelines on identical tick states.

    Ticks where sigma_min(J_A) is below the damping threshold are
    excluded from the exact comparison and counted as flagged.
    """
    if trace is None:
        trace = run_deposition(config.chain, config.plan, gains=config.gains,
                               dls_cfg=config.dls, sim_cfg=config.sim)
    chain, gains, dls = config.chain, config.gains, config.dls
    mask = trace.phase == PHASE_DEPOSIT
    idx = np.where(mask)[0][::stride]
    max_task = max_cmd = 0.0
    compared = flagged = 0
    durations = {l: layer_duration(config.plan, l) for l in trace.layers()}
    for i in idx:
        layer = int(trace.layer[i])
        if trace.sigma_min[i] < dls.sigma_threshold:
            flagged += 1
            continue
        t = min(trace.layer_time[i], durations[layer])
        ref = layer_reference(config.plan, layer, t)
        theta = trace.theta[i]
        _, _, aug, u_a = _controller_tick(chain, theta, ref, gains, dls, "augmented")
        _, _, _, u_c = _controller_tick(chain, theta, ref, gains, dls, "constrained")
        max_cmd = max(max_cmd, float(np.max(np.abs(u_a - u_c))))
        # task velocities of the same joint motion through both algebras
        pose, _, J = full_kinematics(chain, theta)
        lam = build_lambda(DEFAULT_SELECTION, pose.rotation())
        cmap = constrained_task_map(J, lam, chain.n_table)
        stacked_aug = aug.matrix @ u_a
        v, omega_s = cmap.task_velocities(u_a[:chain.n_table], u_a[chain.n_table:])
        stacked_con = np.concatenate((v, omega_s))
        max_task = max(max_task, float(np.max(np.abs(stacked_aug - stacked_con))))
        compared += 1
    notes = []
    if flagged:
        notes.append(f"{flagged} singular ticks excluded from the exact comparison")
    return FormulationReport(max_task_deviation=max_task,
                             max_command_deviation=max_cmd,
                             compared_ticks=compared,
                             flagged_singular_ticks=flagged,
                             notes=tuple(notes))


def _write_comparison(report, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"compared ticks: {report.compared_ticks}\n")
        fh.write(f"flagged singular ticks: {report.flagged_singular_ticks}\n")
        fh.write(f"max task-velocity deviation: {report.max_task_deviation:.9g}\n")
        fh.write(f"max joint-command deviation: {report.max_command_deviation:.9g}\n")
        for note in report.notes:
            fh.write(f"note: {note}\n")


# ---------------------------------------------------------------------------
# CLI

def _build_parser():
    parser = argparse.ArgumentParser(
        prog="waamcell",
        description="Simulate coordinated torch/table deposition scenarios.")
    parser.add_argument("--config", default=None,
                        help=f"YAML config file (default: ${CONFIG_ENV_VAR})")
    parser.add_argument("--scenario", default=None, choices=PRESET_NAMES,
                        help="scenario preset to run")
    parser.add_argument("--layers", type=int, default=None,
                        help="override the number of layers")
    parser.add_argument("--seed", type=int, default=None,
                        help="simulation seed (eta phases)")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--eta", default=None,
                        choices=("none", "decaying-sinusoid", "first-order-lag"),
                        help="internal-controller mismatch model")
    parser.add_argument("--formulation", default=None, choices=FORMULATIONS,
                        help="control formulation; 'both' also writes a "
                             "tick-by-tick comparison report")
    parser.add_argument("--chain", default=None,
                        help="chain-description YAML (default: built-in cell)")
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    config_path = args.config or os.environ.get(CONFIG_ENV_VAR)
    file_data = {}
    if config_path:
        try:
            with open(config_path, "r", encoding="utf-8") as fh:
                file_data = yaml.safe_load(fh) or {}
        except OSError as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except yaml.YAMLError as exc:
            print(f"error: {config_path}: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        if not isinstance(file_data, dict):
            print(f"error: {config_path}: config must be a mapping", file=sys.stderr)
            return EXIT_CONFIG
    try:
        config = build_config(file_data, scenario=args.scenario, layers=args.layers,
                              seed=args.seed, out_dir=args.out, eta=args.eta,
                              formulation=args.formulation, chain_path=args.chain)
    except (ConfigurationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
