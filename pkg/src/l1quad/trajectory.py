"""Flat-output reference trajectories: hover, figure-8 and tilted figure-8.

The figure-8 is a Lissajous pattern around a center point p0,

    p(t) = p0 + [Ax sin(w t), Ay sin(2 w t), Az sin(2 w t)],  w = 2*pi/T,

with Az = 0 for the planar variant. Position derivatives through snap and
the yaw profile (constant by default) are produced analytically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["FlatOutput", "TrajectorySpec", "InvalidSpec", "sample", "validate"]

HOVER = "hover"
FIGURE8 = "figure8"
TILTED_FIGURE8 = "tilted_figure8"

KINDS = (HOVER, FIGURE8, TILTED_FIGURE8)

# Feasibility floor on ||a_d + g e3|| as a fraction of g; protects the
# denominator of the attitude feedforward in the controller.
ACCEL_MARGIN = 0.1


class InvalidSpec(ValueError):
    """Trajectory specification violates an invariant or the feasibility guard."""


@dataclass(frozen=True)
class FlatOutput:
    """One sample of the reference: position through snap, yaw through yaw accel."""

    pos: np.ndarray        # [m]
    vel: np.ndarray        # [m/s]
    acc: np.ndarray        # [m/s^2]
    jerk: np.ndarray       # [m/s^3]
    snap: np.ndarray       # [m/s^4]
    yaw: float = 0.0       # [rad]
    yaw_rate: float = 0.0  # [rad/s]
    yaw_acc: float = 0.0   # [rad/s^2]


@dataclass(frozen=True)
class TrajectorySpec:
    kind: str = HOVER
    center: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -1.0]))
    amp_x: float = 0.75    # [m]
    amp_y: float = 0.5     # [m]
    amp_z: float = 0.3     # [m], tilted figure-8 only
    period: float = 17.0   # [s]
    yaw: float = 0.0       # constant desired yaw [rad]


def sample(spec: TrajectorySpec, t: float) -> FlatOutput:
    """Evaluate the reference and its analytic derivatives at time t >= 0."""
    if spec.kind == HOVER:
        z = np.zeros(3)
        return FlatOutput(
            pos=np.array(spec.center, dtype=float),
            vel=z, acc=z.copy(), jerk=z.copy(), snap=z.copy(),
            yaw=spec.yaw,
        )

    w = 2.0 * math.pi / spec.period
    sx, cx = math.sin(w * t), math.cos(w * t)
    s2, c2 = math.sin(2.0 * w * t), math.cos(2.0 * w * t)
    ax, ay = spec.amp_x, spec.amp_y
    az = spec.amp_z if spec.kind == TILTED_FIGURE8 else 0.0
    w2, w3, w4 = w * w, w ** 3, w ** 4

    pos = spec.center + np.array([ax * sx, ay * s2, az * s2])
    vel = np.array([ax * w * cx, 2.0 * ay * w * c2, 2.0 * az * w * c2])
    acc = np.array([-ax * w2 * sx, -4.0 * ay * w2 * s2, -4.0 * az * w2 * s2])
    jerk = np.array([-ax * w3 * cx, -8.0 * ay * w3 * c2, -8.0 * az * w3 * c2])
    snap = np.array([ax * w4 * sx, 16.0 * ay * w4 * s2, 16.0 * az * w4 * s2])
    return FlatOutput(pos=pos, vel=vel, acc=acc, jerk=jerk, snap=snap, yaw=spec.yaw)


def validate(spec: TrajectorySpec, g: float = 9.81) -> None:
    """Check type invariants plus the feedforward feasibility guard.

    The guard requires ||a_d(t) + g e3|| >= ACCEL_MARGIN * g on a dense grid
    over one period. Raises InvalidSpec with a readable reason.
    """
    if spec.kind not in KINDS:
        raise InvalidSpec(f"unknown trajectory kind {spec.kind!r}")
    if not np.all(np.isfinite(spec.center)):
        raise InvalidSpec("center has non-finite components")
    if spec.period <= 0.0:
        raise InvalidSpec(f"period must be positive, got {spec.period}")
    if spec.amp_x < 0.0 or spec.amp_y < 0.0 or spec.amp_z < 0.0:
        raise InvalidSpec("amplitudes must be non-negative")
    if spec.kind == TILTED_FIGURE8 and spec.amp_z <= 0.0:
        raise InvalidSpec("tilted figure-8 requires amp_z > 0")
    if spec.kind == HOVER:
        return

    e3 = np.array([0.0, 0.0, 1.0])
    for i in range(1000):
        t = spec.period * i / 1000.0
        a = sample(spec, t).acc
        if np.linalg.norm(a + g * e3) < ACCEL_MARGIN * g:
            raise InvalidSpec(
                f"||a_d + g e3|| < {ACCEL_MARGIN} g at t = {t:.3f} s; "
                "trajectory too aggressive for the attitude feedforward"
            )
