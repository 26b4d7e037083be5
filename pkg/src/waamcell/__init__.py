"""Coordinated motion control and simulation for a dual-robot WAAM cell."""

from . import quaternion
from .augmentation import (AugmentedJacobian, DEFAULT_SELECTION, LambdaMap,
                           SelectionMatrix, augmented_jacobian, build_lambda,
                           build_selection_matrix, constrained_task_map)
from .chain import (ChainDescription, ConfigurationError, Joint, Pose,
                    arm_body_jacobian, arm_forward_kinematics, body_jacobian,
                    forward_kinematics, full_kinematics, load_chain,
                    system_jacobian, table_forward_kinematics)
from .control import (ControlGains, ErrorState, TaskReference, alignment_error,
                      alignment_error_rates, closed_loop_error_rates,
                      compute_errors, constrained_velocity_command,
                      joint_velocity_command, pose_error, primary_control,
                      secondary_control)
from .dls import DlsConfig, dls_inverse, filtered_dls_inverse
from .presets import PRESET_NAMES, default_chain, scenario_plan
from .simulate import (DivergenceError, RmsSummary, SimConfig, SimTrace,
                       export_rms, lyapunov_value, rms_errors, rms_from_trace,
                       run_deposition, step)
from .trajectory import (DepositionPlan, TrapezoidalProfile, layer_count,
                         layer_duration, layer_reference, reference_stream,
                         trapezoidal_timing)

__version__ = "0.1.0"
