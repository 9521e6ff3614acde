"""Shell-orientation algebra and rolling-contact odometry.

Euler angles follow the ZYX convention reported by the shell IMU: yaw
``gamma`` about z, pitch ``beta`` about y, roll ``alpha`` about x, composed
as ``Rz(gamma) @ Ry(beta) @ Rx(alpha)``.

Contact odometry recovers the planar displacement of the rolling sphere
from its attitude history: ``x = R*(beta - beta0)``, ``y = -R*(alpha -
alpha0)``.  Angle differences must be taken on continuous (unwrapped)
series; the batch helper unwraps each channel before differencing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError, MalformedInputError

# |cos(beta)| below which the yaw/roll split is ambiguous.
GIMBAL_LOCK_COS_BETA = 1e-8


@dataclass(frozen=True)
class EulerAngles:
    """ZYX Euler triple in radians: yaw ``gamma``, pitch ``beta``, roll ``alpha``."""

    gamma: float
    beta: float
    alpha: float

    def as_array(self) -> np.ndarray:
        return np.array([self.gamma, self.beta, self.alpha], dtype=float)

    def is_finite(self) -> bool:
        return (
            math.isfinite(self.gamma)
            and math.isfinite(self.beta)
            and math.isfinite(self.alpha)
        )


@dataclass(frozen=True)
class PlanarDisplacement:
    """Contact-point displacement on the ground plane, meters (z fixed at 0)."""

    x: float
    y: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


def rotation_from_euler(angles: EulerAngles) -> np.ndarray:
    """Build the 3x3 rotation matrix Rz(gamma) @ Ry(beta) @ Rx(alpha).

    Args:
        angles: finite Euler triple.

    Returns:
        (3, 3) orthonormal array with determinant +1.

    Raises:
        InvalidArgumentError: if any angle is non-finite.
    """
    if not angles.is_finite():
        raise InvalidArgumentError(f"Euler angles must be finite, got {angles}")
    cg, sg = math.cos(angles.gamma), math.sin(angles.gamma)
    cb, sb = math.cos(angles.beta), math.sin(angles.beta)
    ca, sa = math.cos(angles.alpha), math.sin(angles.alpha)
    return np.array(
        [
            [cg * cb, cg * sb * sa - sg * ca, cg * sb * ca + sg * sa],
            [sg * cb, sg * sb * sa + cg * ca, sg * sb * ca - cg * sa],
            [-sb, cb * sa, cb * ca],
        ]
    )


def euler_from_rotation(rotation: np.ndarray) -> tuple[EulerAngles, bool]:
    """Recover ZYX Euler angles from a rotation matrix.

    Returns the angles plus a degeneracy flag.  Away from gimbal lock the
    round trip through :func:`rotation_from_euler` reproduces the matrix and
    ``beta`` lies in [-pi/2, pi/2].  At gimbal lock (|cos beta| < 1e-8) only
    the combination of yaw and roll is observable; the convention here is
    ``gamma = 0`` with the flag set.

    Raises:
        InvalidArgumentError: if the input is not a 3x3 orthonormal matrix.
    """
    r = np.asarray(rotation, dtype=float)
    if r.shape != (3, 3) or not np.all(np.isfinite(r)):
        raise InvalidArgumentError("rotation must be a finite 3x3 matrix")
    if np.max(np.abs(r.T @ r - np.eye(3))) > 1e-6:
        raise InvalidArgumentError("rotation matrix is not orthonormal")

    sin_beta = float(np.clip(-r[2, 0], -1.0, 1.0))
    beta = math.asin(sin_beta)
    cos_beta = math.hypot(r[2, 1], r[2, 2])
    if cos_beta < GIMBAL_LOCK_COS_BETA:
        # Only gamma -/+ alpha is determined; pin gamma to 0.
        if sin_beta > 0:
            alpha = math.atan2(r[0, 1], r[1, 1])
        else:
            alpha = math.atan2(-r[0, 1], r[1, 1])
        return EulerAngles(0.0, beta, alpha), True
    gamma = math.atan2(r[1, 0], r[0, 0])
    alpha = math.atan2(r[2, 1], r[2, 2])
    return EulerAngles(gamma, beta, alpha), False


def contact_displacement(
    angles: EulerAngles, angles0: EulerAngles, radius: float
) -> PlanarDisplacement:
    """Planar displacement of the sphere contact point between two attitudes.

    ``x = radius*(beta - beta0)``, ``y = -radius*(alpha - alpha0)``.  Both
    attitudes must come from the same continuous angle series; wrapped
    residues give wrong answers after more than half a turn.

    Raises:
        InvalidArgumentError: if ``radius`` is not strictly positive.
    """
    if not (math.isfinite(radius) and radius > 0):
        raise InvalidArgumentError(f"radius must be > 0, got {radius}")
    return PlanarDisplacement(
        x=radius * (angles.beta - angles0.beta),
        y=-radius * (angles.alpha - angles0.alpha),
    )


def unwrap_angle_series(series: Sequence[EulerAngles]) -> list[EulerAngles]:
    """Unwrap each angle channel over time (jumps > pi treated as wraps)."""
    arr = np.array([a.as_array() for a in series], dtype=float)
    unwrapped = np.unwrap(arr, axis=0)
    return [EulerAngles(*row) for row in unwrapped]


def trajectory_from_angle_series(
    series: Sequence[tuple[float, EulerAngles]], radius: float
) -> list[tuple[float, PlanarDisplacement]]:
    """Apply contact odometry to a timestamped attitude series.

    The series is unwrapped per channel before differencing against the
    first element.

    Raises:
        MalformedInputError: if timestamps are not strictly increasing.
    """
    if len(series) == 0:
        raise MalformedInputError("angle series is empty")
    times = [t for t, _ in series]
    for i in range(1, len(times)):
        if not times[i] > times[i - 1]:
            raise MalformedInputError(
                f"timestamps must be strictly increasing (row {i}: "
                f"{times[i]} after {times[i - 1]})"
            )
    unwrapped = unwrap_angle_series([a for _, a in series])
    ref = unwrapped[0]
    return [
        (t, contact_displacement(a, ref, radius))
        for t, a in zip(times, unwrapped)
    ]
