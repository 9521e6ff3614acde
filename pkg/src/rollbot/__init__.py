"""Deterministic simulation and state estimation for a single-motor,
spring-driven spherical rolling robot."""

from .drivetrain import (
    DrivetrainState,
    RobotParams,
    apply_ratchet,
    lead_position,
    motor_angle_for_lead,
    nut_from_motor,
)
from .errors import (
    AlignmentError,
    ConfigKeyError,
    DegenerateGeometryError,
    DomainError,
    InvalidArgumentError,
    MalformedInputError,
    NoRealSolutionError,
    SimulationDivergenceError,
    SingularConfigurationError,
)
from .estimator import (
    GRAVITY,
    ForceSample,
    MassEstimate,
    SensorSample,
    SolutionBranch,
    estimate_db,
    estimate_force,
    estimate_run,
    gravity_angle,
    motor_angular_accel,
    torque_balance_residual,
    zero_phase_lowpass,
)
from .harness import RunMetrics, SweepSpec, compute_metrics, mean_relative_db_error, run_sweep
from .kinematics import (
    EulerAngles,
    PlanarDisplacement,
    contact_displacement,
    euler_from_rotation,
    rotation_from_euler,
    trajectory_from_angle_series,
)
from .simulator import (
    SimConfig,
    SimLog,
    SimState,
    TruthSample,
    equilibrium_state,
    initial_state,
    motor_model,
    run,
    step,
    total_energy,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentError",
    "ConfigKeyError",
    "DegenerateGeometryError",
    "DomainError",
    "DrivetrainState",
    "EulerAngles",
    "ForceSample",
    "GRAVITY",
    "InvalidArgumentError",
    "MalformedInputError",
    "MassEstimate",
    "NoRealSolutionError",
    "PlanarDisplacement",
    "RobotParams",
    "RunMetrics",
    "SensorSample",
    "SimConfig",
    "SimLog",
    "SimState",
    "SimulationDivergenceError",
    "SingularConfigurationError",
    "SolutionBranch",
    "SweepSpec",
    "TruthSample",
    "apply_ratchet",
    "compute_metrics",
    "contact_displacement",
    "equilibrium_state",
    "estimate_db",
    "estimate_force",
    "estimate_run",
    "euler_from_rotation",
    "gravity_angle",
    "initial_state",
    "lead_position",
    "mean_relative_db_error",
    "motor_angle_for_lead",
    "motor_angular_accel",
    "motor_model",
    "nut_from_motor",
    "rotation_from_euler",
    "run",
    "run_sweep",
    "step",
    "torque_balance_residual",
    "total_energy",
    "trajectory_from_angle_series",
    "zero_phase_lowpass",
]
