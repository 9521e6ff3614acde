"""Synthetic sensor-log generator with ground truth for estimator validation.

The dynamics integrated here are NOT a faithful model of the physical robot;
the full coupled rolling dynamics is out of scope.  This is a deliberately
simplified stand-in with two contracts:

* the discrete torque balance the estimator inverts holds exactly along the
  trajectory (the motor channel uses the balance as its equation of motion,
  and the emitted torque series is the torque actually delivered to the
  mechanism), and
* planar motion follows contact odometry on the attitude history.

Everything else is chosen for stability and plausibility, not fidelity:

* motor: affine DC model with back-EMF, plus stiction that latches the
  shaft at near-zero speed when the net torque is below a holding threshold
  (a 62:1 gearmotor does not back-drive freely),
* radial spring-mass: centrifugal + spring + gravity projection along the
  slider, with viscous damping and inelastic end stops,
* shell attitude: damped 2-axis pendulum in (roll, pitch) driven by the
  gravity torque of the internal mass offset (gradient of the mass height),
  and a yaw channel driven by the motor reaction torque,
* IMU: true body-frame specific force plus gravity; Euler angles are the
  integrator's continuous (unwrapped) angles.

Integration is semi-implicit Euler (rates first, then positions).
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .drivetrain import DrivetrainState, RobotParams, apply_ratchet
from .errors import InvalidArgumentError, SimulationDivergenceError
from .estimator import (
    GRAVITY,
    LEAD_GEOMETRY_FLOOR,
    SensorSample,
    gravity_angle,
)
from .kinematics import EulerAngles, rotation_from_euler

# Documented stand-in constants; none of them is a measured property.
MOTOR_TORQUE_CONSTANT = 0.01  # N*m/A at the rotor; also the back-EMF constant
MOTOR_STICTION_TORQUE = 0.02  # N*m holding torque at the output shaft
STICTION_SPEED_EPS = 1e-3  # rad/s below which stiction can latch
RADIAL_DAMPING = 1.5  # N*s/m viscous damping on the slider
SHELL_DAMPING = 0.05  # N*m*s per shell rate channel
DB_FLOOR = 1e-4  # m, inner end stop of the slider
DIVERGENCE_LIMIT = 1e6

_NOISE_CHANNELS = ("theta_m", "omega_m", "ax", "ay", "az", "gamma", "beta", "alpha")


@dataclass(frozen=True)
class SimConfig:
    """One simulation run: robot parameters, grid, drive profile, noise, seed.

    ``voltage_profile`` is piecewise constant: ``((t0, v0), (t1, v1), ...)``
    holds ``v_i`` from ``t_i`` until the next breakpoint (the first value
    also applies before ``t0``).  ``sensor_noise`` is a fractional standard
    deviation: each sensor channel gets additive Gaussian noise with sigma
    equal to the fraction times that channel's own standard deviation over
    the run; ground truth is never perturbed.
    """

    params: RobotParams = RobotParams()
    dt: float = 1e-3
    duration: float = 20.0
    voltage_profile: tuple[tuple[float, float], ...] = ((0.0, 6.0),)
    sensor_noise: float = 0.0
    seed: int = 0

    def validate(self) -> None:
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise InvalidArgumentError(f"dt must be strictly positive, got {self.dt}")
        if not (math.isfinite(self.duration) and self.duration >= 0):
            raise InvalidArgumentError(f"duration must be >= 0, got {self.duration}")
        if not (math.isfinite(self.sensor_noise) and self.sensor_noise >= 0):
            raise InvalidArgumentError(f"sensor_noise must be >= 0, got {self.sensor_noise}")
        if len(self.voltage_profile) == 0:
            raise InvalidArgumentError("voltage_profile must have at least one breakpoint")
        times = [t for t, _ in self.voltage_profile]
        if any(not math.isfinite(t) for t in times) or any(
            times[i] >= times[i + 1] for i in range(len(times) - 1)
        ):
            raise InvalidArgumentError(
                f"voltage_profile breakpoints must strictly increase, got {times}"
            )
        self.params.validate()


@dataclass
class SimState:
    """Simulator ground-truth state.

    ``rates`` holds the time derivatives of (gamma, beta, alpha).
    """

    euler: EulerAngles
    rates: np.ndarray
    drivetrain: DrivetrainState
    d_b: float
    d_b_rate: float
    motor_rate: float


@dataclass(frozen=True)
class TruthSample:
    t: float
    d_b: float
    d_a: float
    theta_n: float
    f_total: float


@dataclass
class SimLog:
    """Sensor samples, aligned ground truth, and the delivered-torque series."""

    samples: list[SensorSample]
    truth: list[TruthSample]
    torque: list[tuple[float, float]]


def voltage_at(profile: Sequence[tuple[float, float]], t: float) -> float:
    """Value of a piecewise-constant profile at time ``t``."""
    times = [p[0] for p in profile]
    idx = bisect.bisect_right(times, t) - 1
    return profile[max(idx, 0)][1]


def motor_model(voltage: float, motor_rate: float, params: RobotParams) -> float:
    """Output-shaft torque of the geared DC motor, N*m.

    ``tau = K*(V - K*omega)/R_a`` with ``K = reduction * MOTOR_TORQUE_CONSTANT``
    and the armature resistance derived from the nameplate so that stall
    current at nominal voltage equals the nominal current.  The torque
    constant itself is a documented default, not a measured value.
    """
    resistance = params.motor_nominal_voltage / params.motor_nominal_current
    k = params.motor_reduction * MOTOR_TORQUE_CONSTANT
    return k * (voltage - k * motor_rate) / resistance


def _clamped_lead_geometry(d_a: float, params: RobotParams) -> float:
    return min(max(d_a, LEAD_GEOMETRY_FLOOR), 2.0 * params.shell_radius)


def initial_state(params: RobotParams) -> SimState:
    """Rest state: identity attitude, spring at rest length, drivetrain at zero."""
    return SimState(
        euler=EulerAngles(0.0, 0.0, 0.0),
        rates=np.zeros(3),
        drivetrain=DrivetrainState.from_motor_angle(0.0, params),
        d_b=params.spring_rest_length,
        d_b_rate=0.0,
        motor_rate=0.0,
    )


def equilibrium_state(params: RobotParams) -> SimState:
    """Zero-input fixed point: mass hanging, spring balancing gravity.

    The radial position is ``d_s0 + m_b*g*cos(alpha_g)/k_s`` and the shell is
    pitched so the internal-mass offset vector points straight down, which
    zeroes the pendulum torque.
    """
    drive = DrivetrainState.from_motor_angle(0.0, params)
    d_d = _clamped_lead_geometry(drive.lead_position, params)
    alpha_g = gravity_angle(d_d, drive.nut_angle, np.eye(3), params.shell_radius)
    m_b = params.coupled_mass
    d_b = params.spring_rest_length + m_b * GRAVITY * math.cos(alpha_g) / params.total_stiffness
    p_x = d_b * math.cos(drive.nut_angle)
    p_y = d_b * math.sin(drive.nut_angle)
    p_z = drive.lead_position - params.screw_length / 2.0
    # Pitch that rotates the offset vector onto -z (valid while p_y == 0).
    beta_star = math.atan2(p_x, -p_z)
    if abs(p_y) > 1e-12:
        raise InvalidArgumentError("equilibrium construction assumes nut angle 0")
    return SimState(
        euler=EulerAngles(0.0, beta_star, 0.0),
        rates=np.zeros(3),
        drivetrain=drive,
        d_b=d_b,
        d_b_rate=0.0,
        motor_rate=0.0,
    )


@dataclass(frozen=True)
class _StepDerivatives:
    alpha_g: float
    rmat: np.ndarray
    tau_motor: float
    tau_applied: float
    motor_accel: float
    stuck: bool
    tilt_accel_alpha: float
    tilt_accel_beta: float
    yaw_accel: float


def _derivatives(state: SimState, voltage: float, params: RobotParams) -> _StepDerivatives:
    p = params
    m_b = p.coupled_mass
    drive = state.drivetrain
    d_d = _clamped_lead_geometry(drive.lead_position, p)
    rmat = rotation_from_euler(state.euler)
    alpha_g = gravity_angle(d_d, drive.nut_angle, rmat, p.shell_radius)

    # Motor channel: the torque balance is the equation of motion, so the
    # emitted torque satisfies it exactly along the trajectory.
    tau_motor = motor_model(voltage, state.motor_rate, p)
    tau_load = p.torque_arm * p.total_stiffness * (
        state.d_b - p.spring_rest_length
    ) - m_b * GRAVITY * state.d_b * math.cos(alpha_g)
    if abs(state.motor_rate) < STICTION_SPEED_EPS and abs(tau_motor - tau_load) <= MOTOR_STICTION_TORQUE:
        stuck = True
        motor_accel = 0.0
        tau_applied = tau_load  # stiction delivers exactly the balancing torque
    else:
        stuck = False
        motor_accel = (tau_motor - tau_load) / (m_b * state.d_b * state.d_b)
        tau_applied = tau_motor

    # Shell attitude: pendulum torques are gradients of the mass height
    # q_z = row3(R) . p with p the internal-mass offset in the body frame.
    sb, cb = math.sin(state.euler.beta), math.cos(state.euler.beta)
    sa, ca = math.sin(state.euler.alpha), math.cos(state.euler.alpha)
    p_x = state.d_b * math.cos(drive.nut_angle)
    p_y = state.d_b * math.sin(drive.nut_angle)
    p_z = drive.lead_position - p.screw_length / 2.0
    dqz_dbeta = -cb * p_x - sb * sa * p_y - sb * ca * p_z
    dqz_dalpha = cb * ca * p_y - cb * sa * p_z
    inertia_tilt = p.shell_mass * p.shell_radius**2 + m_b * (state.d_b**2 + p_z**2)
    inertia_yaw = p.shell_mass * p.shell_radius**2 + m_b * state.d_b**2
    g_rate, b_rate, a_rate = state.rates
    tilt_accel_beta = (-m_b * GRAVITY * dqz_dbeta - SHELL_DAMPING * b_rate) / inertia_tilt
    tilt_accel_alpha = (-m_b * GRAVITY * dqz_dalpha - SHELL_DAMPING * a_rate) / inertia_tilt
    yaw_accel = (-tau_motor - SHELL_DAMPING * g_rate) / inertia_yaw

    return _StepDerivatives(
        alpha_g=alpha_g,
        rmat=rmat,
        tau_motor=tau_motor,
        tau_applied=tau_applied,
        motor_accel=motor_accel,
        stuck=stuck,
        tilt_accel_alpha=tilt_accel_alpha,
        tilt_accel_beta=tilt_accel_beta,
        yaw_accel=yaw_accel,
    )


def _advance(
    state: SimState, derivs: _StepDerivatives, dt: float, params: RobotParams
) -> SimState:
    p = params
    m_b = p.coupled_mass

    if derivs.stuck:
        new_motor_rate = 0.0
    else:
        new_motor_rate = state.motor_rate + dt * derivs.motor_accel
    new_theta_m = state.drivetrain.motor_angle + dt * new_motor_rate
    new_drive = apply_ratchet(state.drivetrain, new_theta_m, p)

    nut_rate = p.gear_ratio * new_motor_rate
    radial_accel = (
        m_b * state.d_b * nut_rate * nut_rate
        - p.total_stiffness * (state.d_b - p.spring_rest_length)
        + m_b * GRAVITY * math.cos(derivs.alpha_g)
        - RADIAL_DAMPING * state.d_b_rate
    ) / m_b
    new_db_rate = state.d_b_rate + dt * radial_accel
    new_db = state.d_b + dt * new_db_rate
    if new_db < DB_FLOOR:
        new_db, new_db_rate = DB_FLOOR, 0.0  # inelastic stop
    elif new_db > p.slider_length:
        new_db, new_db_rate = p.slider_length, 0.0

    new_rates = state.rates + dt * np.array(
        [derivs.yaw_accel, derivs.tilt_accel_beta, derivs.tilt_accel_alpha]
    )
    new_euler = EulerAngles(*(state.euler.as_array() + dt * new_rates))

    values = (
        new_motor_rate,
        new_theta_m,
        new_db,
        new_db_rate,
        float(np.max(np.abs(new_rates))),
        float(np.max(np.abs(new_euler.as_array()))),
    )
    if any(not math.isfinite(v) or abs(v) > DIVERGENCE_LIMIT for v in values):
        raise SimulationDivergenceError(
            f"state magnitude exceeded {DIVERGENCE_LIMIT:g}; dt={dt} is too coarse"
        )
    return SimState(
        euler=new_euler,
        rates=new_rates,
        drivetrain=new_drive,
        d_b=new_db,
        d_b_rate=new_db_rate,
        motor_rate=new_motor_rate,
    )


def step(state: SimState, voltage: float, dt: float, params: RobotParams) -> SimState:
    """Advance the simulation by one semi-implicit Euler step.

    Raises:
        SimulationDivergenceError: if any state magnitude exceeds 1e6.
    """
    if not (math.isfinite(dt) and dt > 0):
        raise InvalidArgumentError(f"dt must be strictly positive, got {dt}")
    return _advance(state, _derivatives(state, voltage, params), dt, params)


def total_energy(state: SimState, params: RobotParams) -> float:
    """Bookkeeping energy of the stand-in dynamics, joules.

    Kinetic terms of every channel plus the spring potential, the radial
    gravity potential ``-m_b*g*cos(alpha_g)*d_b``, and the pendulum potential
    ``m_b*g*q_z``.  Used by the zero-input dissipation checks.
    """
    p = params
    m_b = p.coupled_mass
    drive = state.drivetrain
    d_d = _clamped_lead_geometry(drive.lead_position, p)
    alpha_g = gravity_angle(d_d, drive.nut_angle, np.eye(3), p.shell_radius)
    p_vec = np.array(
        [
            state.d_b * math.cos(drive.nut_angle),
            state.d_b * math.sin(drive.nut_angle),
            drive.lead_position - p.screw_length / 2.0,
        ]
    )
    q_z = float(rotation_from_euler(state.euler)[2] @ p_vec)
    p_z = p_vec[2]
    inertia_tilt = p.shell_mass * p.shell_radius**2 + m_b * (state.d_b**2 + p_z**2)
    inertia_yaw = p.shell_mass * p.shell_radius**2 + m_b * state.d_b**2
    g_rate, b_rate, a_rate = state.rates
    return (
        0.5 * m_b * state.d_b_rate**2
        + 0.5 * p.total_stiffness * (state.d_b - p.spring_rest_length) ** 2
        - m_b * GRAVITY * math.cos(alpha_g) * state.d_b
        + 0.5 * m_b * state.d_b**2 * state.motor_rate**2
        + 0.5 * inertia_tilt * (a_rate**2 + b_rate**2)
        + 0.5 * inertia_yaw * g_rate**2
        + m_b * GRAVITY * q_z
    )


def run(config: SimConfig) -> SimLog:
    """Run a full simulation and synthesize the sensor log.

    Deterministic given the seed.  Noise (when enabled) is added to sensor
    channels only; truth and torque stay exact.
    """
    config.validate()
    p = config.params
    m_b = p.coupled_mass
    n_steps = int(round(config.duration / config.dt))
    state = initial_state(p)

    times = np.empty(n_steps + 1)
    theta_m = np.empty(n_steps + 1)
    omega_m = np.empty(n_steps + 1)
    f_body = np.empty((n_steps + 1, 3))
    euler = np.empty((n_steps + 1, 3))
    db_true = np.empty(n_steps + 1)
    da_true = np.empty(n_steps + 1)
    thn_true = np.empty(n_steps + 1)
    tau_applied = np.empty(n_steps + 1)

    for k in range(n_steps + 1):
        t_k = k * config.dt
        volts = voltage_at(config.voltage_profile, t_k)
        derivs = _derivatives(state, volts, p)
        # IMU specific force: planar rolling acceleration plus gravity,
        # expressed in the body frame.
        a_world = np.array(
            [
                p.shell_radius * derivs.tilt_accel_beta,
                -p.shell_radius * derivs.tilt_accel_alpha,
                0.0,
            ]
        )
        times[k] = t_k
        theta_m[k] = state.drivetrain.motor_angle
        omega_m[k] = state.motor_rate
        f_body[k] = derivs.rmat.T @ (a_world + np.array([0.0, 0.0, GRAVITY]))
        euler[k] = state.euler.as_array()
        db_true[k] = state.d_b
        da_true[k] = state.drivetrain.lead_position
        thn_true[k] = state.drivetrain.nut_angle
        tau_applied[k] = derivs.tau_applied
        if k < n_steps:
            state = _advance(state, derivs, config.dt, p)

    f_true = m_b * np.linalg.norm(f_body - f_body[0], axis=1)

    clean = {
        "theta_m": theta_m,
        "omega_m": omega_m,
        "ax": f_body[:, 0].copy(),
        "ay": f_body[:, 1].copy(),
        "az": f_body[:, 2].copy(),
        "gamma": euler[:, 0].copy(),
        "beta": euler[:, 1].copy(),
        "alpha": euler[:, 2].copy(),
    }
    if config.sensor_noise > 0:
        rng = np.random.default_rng(config.seed)
        for name in _NOISE_CHANNELS:
            sigma = config.sensor_noise * float(np.std(clean[name]))
            if sigma > 0:
                clean[name] = clean[name] + sigma * rng.standard_normal(len(times))

    samples = [
        SensorSample(
            t=float(times[k]),
            theta_m=float(clean["theta_m"][k]),
            omega_m=float(clean["omega_m"][k]),
            accel=np.array([clean["ax"][k], clean["ay"][k], clean["az"][k]]),
            euler=EulerAngles(
                float(clean["gamma"][k]), float(clean["beta"][k]), float(clean["alpha"][k])
            ),
        )
        for k in range(n_steps + 1)
    ]
    truth = [
        TruthSample(float(times[k]), float(db_true[k]), float(da_true[k]),
                    float(thn_true[k]), float(f_true[k]))
        for k in range(n_steps + 1)
    ]
    torque = [(float(times[k]), float(tau_applied[k])) for k in range(n_steps + 1)]
    return SimLog(samples=samples, truth=truth, torque=torque)
