"""Motor-to-nut gearing, spiral-lead translation, and the freewheel ratchet.

The motor pinion (``motor_gear_teeth``) drives the rotating nut
(``nut_teeth``); the nut's rotation advances the lead position along the
spiral screw, ``d_a = lead * theta_n / lead_divisor``.  A freewheel holder
prevents the lead position from retreating, modeled as a running maximum.

``lead_divisor`` defaults to pi, matching the drivetrain relation as
specified even though a conventional lead screw would use 2*pi per
revolution; override it in the params if a different convention is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class RobotParams:
    """Physical constants of the robot, SI units.

    Defaults are the reference build: 0.17 m shell, 17:34 gear stage,
    20 mm screw lead, 62:1 gearmotor at 6 V / 0.3 A.  ``rotating_mass``,
    ``total_stiffness``, ``torque_arm`` and ``spring_rest_length`` are the
    configurable study parameters.
    """

    shell_radius: float = 0.17
    slider_bar_mass: float = 0.028
    shell_mass: float = 1.0
    nut_mass: float = 0.02
    screw_mass: float = 0.085
    screw_pitch: float = 0.010
    screw_lead: float = 0.020
    nut_teeth: int = 34
    motor_gear_teeth: int = 17
    screw_length: float = 0.319
    slider_length: float = 0.11
    rotating_mass: float = 0.050
    total_stiffness: float = 200.0
    torque_arm: float = 0.02
    spring_rest_length: float = 0.03
    motor_nominal_voltage: float = 6.0
    motor_nominal_current: float = 0.3
    motor_reduction: float = 62.0
    lead_divisor: float = math.pi
    eq6_literal: bool = False
    filter_cutoff_hz: float = 5.0
    fallback_accel_threshold: float = 1e-6

    def validate(self) -> None:
        """Raise InvalidArgumentError naming the first offending field."""
        positive = (
            "shell_radius",
            "slider_bar_mass",
            "shell_mass",
            "nut_mass",
            "screw_mass",
            "screw_pitch",
            "screw_lead",
            "nut_teeth",
            "motor_gear_teeth",
            "screw_length",
            "slider_length",
            "rotating_mass",
            "total_stiffness",
            "torque_arm",
            "spring_rest_length",
            "motor_nominal_voltage",
            "motor_nominal_current",
            "motor_reduction",
            "lead_divisor",
            "filter_cutoff_hz",
        )
        for name in positive:
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise InvalidArgumentError(f"{name} must be strictly positive, got {value!r}")
        if self.motor_gear_teeth > self.nut_teeth:
            raise InvalidArgumentError(
                "motor_gear_teeth must not exceed nut_teeth (reduction stage), got "
                f"{self.motor_gear_teeth} > {self.nut_teeth}"
            )
        if self.fallback_accel_threshold <= 0:
            raise InvalidArgumentError(
                f"fallback_accel_threshold must be strictly positive, got "
                f"{self.fallback_accel_threshold!r}"
            )

    @property
    def gear_ratio(self) -> float:
        """Nut angle per motor angle: motor_gear_teeth / nut_teeth."""
        return self.motor_gear_teeth / self.nut_teeth

    @property
    def coupled_mass(self) -> float:
        """Mass carried by the spring: rotating mass plus sliding bar."""
        return self.rotating_mass + self.slider_bar_mass

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


@dataclass(frozen=True)
class DrivetrainState:
    """Kinematic state of the gear/screw stage.

    ``ratchet_anchor`` is the maximum lead position reached so far; it never
    decreases across a state sequence.
    """

    motor_angle: float
    nut_angle: float
    lead_position: float
    ratchet_anchor: float

    @classmethod
    def from_motor_angle(cls, theta_m: float, params: RobotParams) -> "DrivetrainState":
        theta_n = nut_from_motor(theta_m, params)
        d_a, _ = lead_position(theta_n, params)
        return cls(theta_m, theta_n, d_a, d_a)


def nut_from_motor(theta_m: float, params: RobotParams) -> float:
    """Nut angle (or rate) from the motor angle (or rate) via the gear stage."""
    if not math.isfinite(theta_m):
        raise InvalidArgumentError(f"motor angle must be finite, got {theta_m}")
    return params.gear_ratio * theta_m


def lead_position(theta_n: float, params: RobotParams) -> tuple[float, bool]:
    """Lead position along the screw for a nut angle, with saturation flag.

    ``d_a = screw_lead * theta_n / lead_divisor`` clamped into
    [0, screw_length]; the bool reports whether clamping occurred.
    """
    if not math.isfinite(theta_n):
        raise InvalidArgumentError(f"nut angle must be finite, got {theta_n}")
    raw = params.screw_lead * theta_n / params.lead_divisor
    if raw < 0.0:
        return 0.0, True
    if raw > params.screw_length:
        return params.screw_length, True
    return raw, False


def motor_angle_for_lead(d_a: float, params: RobotParams) -> float:
    """Motor angle that places the (unratcheted) lead at ``d_a``.

    Raises:
        InvalidArgumentError: if ``d_a`` is outside [0, screw_length].
    """
    if not (math.isfinite(d_a) and 0.0 <= d_a <= params.screw_length):
        raise InvalidArgumentError(
            f"lead position must lie in [0, {params.screw_length}], got {d_a}"
        )
    theta_n = d_a * params.lead_divisor / params.screw_lead
    return theta_n / params.gear_ratio


def apply_ratchet(
    state: DrivetrainState, new_motor_angle: float, params: RobotParams
) -> DrivetrainState:
    """Advance the drivetrain to a new motor angle under the freewheel.

    The lead position is the running maximum of the commanded (clamped)
    position, so backward motor motion never retracts it.
    """
    theta_n = nut_from_motor(new_motor_angle, params)
    raw, _ = lead_position(theta_n, params)
    d_a = max(state.ratchet_anchor, raw)
    return DrivetrainState(
        motor_angle=new_motor_angle,
        nut_angle=theta_n,
        lead_position=d_a,
        ratchet_anchor=d_a,
    )
