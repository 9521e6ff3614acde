"""Reconstruction of the hidden spring-mass state from encoder and IMU logs.

The internal mass position cannot be sensed directly.  This module recovers
it per sample from the motor encoder and the shell attitude:

1. gear transform: nut angle from motor angle,
2. spiral lead: axial position ``d_a`` (ratcheted),
3. actuator-frame geometry: gravity direction angle ``alpha_g``,
4. discrete torque balance: radial mass position ``d_b``.

The torque balance solved for ``d_b`` is

    m_b*d_b^2*ddtheta + r_m*k_s*(d_b - d_s0) - m_b*g*d_b*cos(alpha) = tau_m

with ``m_b`` the rotating mass plus sliding bar and ``ddtheta`` the
backward-differenced motor acceleration.  A separate pipeline turns the
filtered IMU acceleration into a total locomotion-force estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from scipy import signal

from .drivetrain import DrivetrainState, RobotParams, apply_ratchet
from .errors import (
    AlignmentError,
    DegenerateGeometryError,
    DomainError,
    InvalidArgumentError,
    MalformedInputError,
    NoRealSolutionError,
    SingularConfigurationError,
)
from .kinematics import EulerAngles, rotation_from_euler

GRAVITY = 9.80665  # m/s^2

# Lead position fed to the actuator-frame geometry is floored here: the
# gravity-angle construction is undefined at exactly zero but has a finite
# limit (pi/4) as the lead approaches zero.
LEAD_GEOMETRY_FLOOR = 1e-9

_ACCEL_SANITY_LIMIT = 1000.0  # m/s^2


class SolutionBranch(str, Enum):
    """Which formula produced a mass-position estimate."""

    QUADRATIC = "quadratic"
    LINEAR_FALLBACK = "linear-fallback"
    CLAMPED = "clamped"


@dataclass
class SensorSample:
    """One timestamped reading: encoder angle/rate, IMU accel, shell attitude."""

    t: float
    theta_m: float
    omega_m: float
    accel: np.ndarray  # (3,) body frame, m/s^2
    euler: EulerAngles

    def validate(self) -> None:
        if not math.isfinite(self.t):
            raise MalformedInputError(f"sample timestamp must be finite, got {self.t}")
        acc = np.asarray(self.accel, dtype=float)
        if acc.shape != (3,) or not np.all(np.isfinite(acc)):
            raise MalformedInputError(f"acceleration must be a finite 3-vector, got {self.accel}")
        if float(np.linalg.norm(acc)) >= _ACCEL_SANITY_LIMIT:
            raise MalformedInputError(
                f"acceleration magnitude {np.linalg.norm(acc):.1f} m/s^2 exceeds sanity bound"
            )


@dataclass(frozen=True)
class MassEstimate:
    """Reconstructed internal state at one sample time."""

    t: float
    d_a: float
    theta_n: float
    d_b: float
    alpha_g: float
    motor_accel: float
    branch: SolutionBranch


@dataclass(frozen=True)
class ForceSample:
    """Total locomotion-force estimate at one sample time, newtons."""

    t: float
    f_n: float


def motor_angular_accel(omega_now: float, omega_prev: float, dt: float) -> float:
    """Backward finite difference of the motor rate.

    Raises:
        InvalidArgumentError: if ``dt`` is not strictly positive.
    """
    if not (math.isfinite(dt) and dt > 0):
        raise InvalidArgumentError(f"dt must be > 0, got {dt}")
    return (omega_now - omega_prev) / dt


def gravity_angle(
    d_d: float,
    theta_n: float,
    rotation: np.ndarray,
    shell_radius: float,
    literal_composition: bool = False,
) -> float:
    """Gravity direction angle between the actuator axis and the mass-point vector.

    Two vectors are built in the actuator frame and carried through the shell
    attitude ``rotation``:

        T_d = R @ (0, 0, d_d)
        T_s = R @ (Rs*sin(theta_d)*cos(theta_n), Rs*sin(theta_d)*sin(theta_n), d_d)

    with ``theta_d = 2*asin(d_d / (2*Rs))``, and the returned angle is
    ``acos`` of their normalized dot product (clamped into [-1, 1]).  With
    ``literal_composition=True`` the angle is instead ``acos(sin(.))`` of the
    same normalized dot product, for side-by-side comparison with the
    alternative composition; the plain ``acos`` is the default and the form
    every other component uses.

    Raises:
        DomainError: if ``d_d`` is outside (0, 2*shell_radius].
        DegenerateGeometryError: if either vector has zero norm.
    """
    if not (math.isfinite(d_d) and 0.0 < d_d <= 2.0 * shell_radius):
        raise DomainError(
            f"axial displacement must lie in (0, {2.0 * shell_radius}], got {d_d}"
        )
    theta_d = 2.0 * math.asin(d_d / (2.0 * shell_radius))
    r = np.asarray(rotation, dtype=float)
    t_d = r @ np.array([0.0, 0.0, d_d])
    t_s = r @ np.array(
        [
            shell_radius * math.sin(theta_d) * math.cos(theta_n),
            shell_radius * math.sin(theta_d) * math.sin(theta_n),
            d_d,
        ]
    )
    norm_d = float(np.linalg.norm(t_d))
    norm_s = float(np.linalg.norm(t_s))
    if norm_d < 1e-300 or norm_s < 1e-300:
        raise DegenerateGeometryError("actuator-frame vector collapsed to zero norm")
    cos_angle = float(np.clip(np.dot(t_d, t_s) / (norm_d * norm_s), -1.0, 1.0))
    if literal_composition:
        return math.acos(math.sin(cos_angle))
    return math.acos(cos_angle)


def torque_balance_residual(
    params: RobotParams,
    d_b: float,
    ddtheta: float,
    alpha: float,
    tau_m: float,
    rotating_mass: float | None = None,
) -> float:
    """Left side minus right side of the discrete torque balance."""
    m = params.rotating_mass if rotating_mass is None else rotating_mass
    m_b = m + params.slider_bar_mass
    return (
        m_b * d_b * d_b * ddtheta
        + params.torque_arm * params.total_stiffness * (d_b - params.spring_rest_length)
        - m_b * GRAVITY * d_b * math.cos(alpha)
        - tau_m
    )


def estimate_db(
    params: RobotParams,
    ddtheta: float,
    alpha: float,
    tau_m: float,
    rotating_mass: float | None = None,
    accel_threshold: float | None = None,
) -> tuple[float, SolutionBranch]:
    """Solve the torque balance for the radial mass position ``d_b``.

    For |ddtheta| at or above the fallback threshold the balance is a
    quadratic ``a*d_b^2 + b*d_b + c = 0`` with

        a = m_b*ddtheta
        b = k_s*r_m - m_b*g*cos(alpha)
        c = -(k_s*r_m*d_s0 + tau_m)

    and the "+sqrt" root is returned; it is the branch that stays continuous
    with the linear fallback as ddtheta -> 0.  When b > 0 the root is
    computed as ``-2c / (b + sqrt(disc))`` to avoid cancellation at small
    ddtheta.  Below the threshold the quadratic term is dropped:

        d_b = (tau_m + k_s*r_m*d_s0) / (k_s*r_m - m_b*g*cos(alpha))

    The result is clamped into (0, slider_length] with branch CLAMPED when
    it falls outside.

    Raises:
        NoRealSolutionError: negative discriminant (carries its value).
        SingularConfigurationError: vanishing fallback denominator.
    """
    m = params.rotating_mass if rotating_mass is None else rotating_mass
    m_b = m + params.slider_bar_mass
    if m_b <= 0:
        raise InvalidArgumentError(f"coupled mass must be positive, got {m_b}")
    ks_rm = params.total_stiffness * params.torque_arm
    mu_g = GRAVITY * math.cos(alpha)
    eps = params.fallback_accel_threshold if accel_threshold is None else accel_threshold

    if abs(ddtheta) < eps:
        denom = ks_rm - m_b * mu_g
        if abs(denom) < 1e-12:
            raise SingularConfigurationError(
                "stiffness torque and gravity term cancel; the linear fallback "
                f"denominator is {denom:.3e}"
            )
        d_b = (tau_m + ks_rm * params.spring_rest_length) / denom
        branch = SolutionBranch.LINEAR_FALLBACK
    else:
        a = m_b * ddtheta
        b = ks_rm - m_b * mu_g
        c = -(ks_rm * params.spring_rest_length + tau_m)
        disc = b * b - 4.0 * a * c
        if disc < 0.0:
            raise NoRealSolutionError(
                f"torque balance has no real root (discriminant {disc:.6e})", disc
            )
        sq = math.sqrt(disc)
        if b > 0.0:
            d_b = -2.0 * c / (b + sq)
        else:
            d_b = (-b + sq) / (2.0 * a)
        branch = SolutionBranch.QUADRATIC

    if d_b <= 0.0:
        return 0.0, SolutionBranch.CLAMPED
    if d_b > params.slider_length:
        return params.slider_length, SolutionBranch.CLAMPED
    return d_b, branch


def zero_phase_lowpass(
    times: np.ndarray, values: np.ndarray, cutoff_hz: float
) -> np.ndarray:
    """Forward-backward 2nd-order low-pass filter (zero phase shift).

    ``values`` may be (n,) or (n, k); columns are filtered independently.
    Edges are handled by reflecting roughly one settling length of samples.

    Raises:
        MalformedInputError: if sampling is non-uniform beyond 1% jitter or
            the series is too short.
        InvalidArgumentError: if the cutoff is not below the Nyquist rate.
    """
    t = np.asarray(times, dtype=float)
    x = np.asarray(values, dtype=float)
    if t.ndim != 1 or len(t) < 3 or x.shape[0] != len(t):
        raise MalformedInputError(
            f"need >= 3 aligned samples, got {len(t)} times for {x.shape[0]} values"
        )
    dts = np.diff(t)
    mean_dt = float(np.mean(dts))
    if mean_dt <= 0:
        raise MalformedInputError("timestamps must be increasing")
    if float(np.max(np.abs(dts - mean_dt))) > 0.01 * mean_dt:
        raise MalformedInputError(
            "sampling must be uniform within 1% jitter "
            f"(mean dt {mean_dt:.6g}, max deviation {np.max(np.abs(dts - mean_dt)):.6g})"
        )
    fs = 1.0 / mean_dt
    if not (0.0 < cutoff_hz < 0.5 * fs):
        raise InvalidArgumentError(
            f"cutoff {cutoff_hz} Hz must lie below the Nyquist rate {0.5 * fs:.6g} Hz"
        )
    b, a = signal.butter(2, cutoff_hz, btype="low", fs=fs)
    padlen = min(len(t) - 1, max(9, int(round(fs / cutoff_hz))))
    return signal.filtfilt(b, a, x, axis=0, padtype="even", padlen=padlen)


def estimate_force(
    samples: Sequence[SensorSample], m_b: float, cutoff_hz: float = 5.0
) -> list[ForceSample]:
    """Total locomotion force from the filtered IMU acceleration.

    ``F_n(t) = m_b * ||R(t) @ a_filt(t) - R(t) @ a_g||`` where ``a_g`` is the
    filtered acceleration at the first sample, which must be taken at rest.

    Raises:
        MalformedInputError: with fewer than 3 samples.
    """
    if len(samples) < 3:
        raise MalformedInputError(f"need at least 3 samples, got {len(samples)}")
    t = np.array([s.t for s in samples], dtype=float)
    acc = np.array([np.asarray(s.accel, dtype=float) for s in samples])
    filtered = zero_phase_lowpass(t, acc, cutoff_hz)
    a_g = filtered[0]
    out = []
    for s, a in zip(samples, filtered):
        r = rotation_from_euler(s.euler)
        f_n = m_b * float(np.linalg.norm(r @ a - r @ a_g))
        out.append(ForceSample(s.t, f_n))
    return out


def estimate_run(
    samples: Sequence[SensorSample],
    params: RobotParams,
    torque_series: Sequence[tuple[float, float]],
    failures: list[tuple[int, Exception]] | None = None,
) -> list[MassEstimate]:
    """Run the per-sample estimation pipeline over a full log.

    ``torque_series`` must be aligned one-to-one with the samples.  The first
    sample uses zero motor acceleration (linear fallback).  A sample whose
    estimate fails (bad geometry, no real root, ...) is skipped, leaving a
    gap; the indexed exception is appended to ``failures`` when provided.

    Raises:
        MalformedInputError: on unordered timestamps.
        AlignmentError: when torque timestamps do not match the samples.
    """
    if len(samples) == 0:
        raise MalformedInputError("sample log is empty")
    if len(torque_series) != len(samples):
        raise AlignmentError(
            f"torque series has {len(torque_series)} rows for {len(samples)} samples"
        )
    for i in range(1, len(samples)):
        if not samples[i].t > samples[i - 1].t:
            raise MalformedInputError(
                f"sample timestamps must be strictly increasing (row {i})"
            )
    for i, (t_tau, _) in enumerate(torque_series):
        if abs(t_tau - samples[i].t) > 1e-9 + 1e-6 * abs(samples[i].t):
            raise AlignmentError(
                f"torque timestamp {t_tau} does not match sample time "
                f"{samples[i].t} at row {i}"
            )

    state = DrivetrainState.from_motor_angle(samples[0].theta_m, params)
    estimates: list[MassEstimate] = []
    prev_t = prev_omega = 0.0
    for i, sample in enumerate(samples):
        state = apply_ratchet(state, sample.theta_m, params)
        if i == 0:
            ddtheta = 0.0
        else:
            ddtheta = motor_angular_accel(sample.omega_m, prev_omega, sample.t - prev_t)
        tau_m = torque_series[i][1]
        try:
            rmat = rotation_from_euler(sample.euler)
            d_d = min(
                max(state.lead_position, LEAD_GEOMETRY_FLOOR),
                2.0 * params.shell_radius,
            )
            alpha_g = gravity_angle(
                d_d,
                state.nut_angle,
                rmat,
                params.shell_radius,
                literal_composition=params.eq6_literal,
            )
            d_b, branch = estimate_db(params, ddtheta, alpha_g, tau_m)
        except (DomainError, NoRealSolutionError, SingularConfigurationError, InvalidArgumentError) as exc:
            if failures is not None:
                failures.append((i, exc))
            prev_t, prev_omega = sample.t, sample.omega_m
            continue
        estimates.append(
            MassEstimate(
                t=sample.t,
                d_a=state.lead_position,
                theta_n=state.nut_angle,
                d_b=d_b,
                alpha_g=alpha_g,
                motor_accel=ddtheta,
                branch=branch,
            )
        )
        prev_t, prev_omega = sample.t, sample.omega_m
    return estimates
