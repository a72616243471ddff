"""SO(3) primitives: hat/vee maps, exponential map, Euler angles, re-orthonormalization.

Conventions used throughout the package:

* Vectors are numpy arrays of shape (3,), matrices of shape (3, 3).
* Rotation matrices map body-frame vectors to the inertial (NED) frame.
* Euler angles follow the intrinsic Z(yaw)-Y(pitch)-X(roll) sequence, i.e.
  R = Rz(yaw) @ Ry(pitch) @ Rx(roll).
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

__all__ = [
    "EulerZYX",
    "GimbalLock",
    "NotSkewSymmetric",
    "TooFarFromSO3",
    "E1",
    "E2",
    "E3",
    "hat",
    "vee",
    "exp_so3",
    "euler_to_rotation",
    "rotation_to_euler",
    "orthonormalize",
    "is_rotation",
]

# Standard basis, shared by the whole package (treated as read-only).
E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])
E1.flags.writeable = False
E2.flags.writeable = False
E3.flags.writeable = False

# Tolerance on the symmetric residue accepted by vee().
SKEW_TOL = 1e-9

# Frobenius tolerance on R^T R - I for a matrix to count as a rotation.
ROTATION_TOL = 1e-9


class NotSkewSymmetric(ValueError):
    """Matrix handed to vee() has a symmetric part above tolerance."""


class GimbalLock(ValueError):
    """Euler extraction requested too close to pitch = +-pi/2."""


class TooFarFromSO3(ValueError):
    """Matrix is too far from the rotation group to re-orthonormalize."""


class EulerZYX(NamedTuple):
    """Intrinsic 3-2-1 Euler angles in radians."""

    yaw: float
    pitch: float
    roll: float


def hat(v: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix of v, satisfying hat(v) @ w == cross(v, w)."""
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def vee(m: np.ndarray) -> np.ndarray:
    """Inverse of hat(). Raises NotSkewSymmetric if the symmetric part exceeds tolerance."""
    sym = 0.5 * (m + m.T)
    if np.linalg.norm(sym) > SKEW_TOL:
        raise NotSkewSymmetric(
            f"symmetric residue {np.linalg.norm(sym):.3e} exceeds {SKEW_TOL:.1e}"
        )
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def exp_so3(v: np.ndarray) -> np.ndarray:
    """Rotation matrix exp(hat(v)) via the Rodrigues formula.

    Below ||v|| = 1e-8 a second-order series is used so the sin(t)/t and
    (1-cos(t))/t^2 coefficients never divide by zero.
    """
    theta = math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
    k = hat(v)
    if theta < 1e-8:
        return np.eye(3) + k + 0.5 * (k @ k)
    a = math.sin(theta) / theta
    b = (1.0 - math.cos(theta)) / (theta * theta)
    return np.eye(3) + a * k + b * (k @ k)


def euler_to_rotation(e: EulerZYX) -> np.ndarray:
    """R = Rz(yaw) @ Ry(pitch) @ Rx(roll)."""
    cy, sy = math.cos(e.yaw), math.sin(e.yaw)
    cp, sp = math.cos(e.pitch), math.sin(e.pitch)
    cr, sr = math.cos(e.roll), math.sin(e.roll)
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )


def rotation_to_euler(r: np.ndarray) -> EulerZYX:
    """Extract intrinsic Z-Y-X angles. Raises GimbalLock near |pitch| = pi/2."""
    if abs(r[2, 0]) >= 1.0 - 1e-9:
        raise GimbalLock(f"|R[2,0]| = {abs(r[2, 0]):.12f} too close to 1")
    return EulerZYX(
        yaw=math.atan2(r[1, 0], r[0, 0]),
        pitch=-math.asin(r[2, 0]),
        roll=math.atan2(r[2, 1], r[2, 2]),
    )


def euler_clamped(r: np.ndarray) -> EulerZYX:
    """Non-raising Euler extraction for logging; clamps through gimbal lock."""
    s = min(1.0, max(-1.0, -r[2, 0]))
    return EulerZYX(
        yaw=math.atan2(r[1, 0], r[0, 0]),
        pitch=math.asin(s),
        roll=math.atan2(r[2, 1], r[2, 2]),
    )


def orthonormalize(m: np.ndarray) -> np.ndarray:
    """Nearest rotation matrix (polar-decomposition sense) to m.

    Uses the Newton-Schulz iteration R <- R (3I - R^T R)/2, which converges
    quadratically to the orthogonal polar factor for matrices near SO(3) and
    leaves exact rotations untouched. Raises TooFarFromSO3 outside its
    contraction region (about Frobenius distance 0.1 from the group).
    """
    gram_err = np.linalg.norm(m.T @ m - np.eye(3))
    if gram_err > 0.2 or np.linalg.det(m) <= 0.0:
        raise TooFarFromSO3(f"||M^T M - I|| = {gram_err:.3e}")
    r = m
    for _ in range(40):
        gram = r.T @ r
        err = abs(gram[0, 0] - 1.0) + abs(gram[1, 1] - 1.0) + abs(gram[2, 2] - 1.0)
        err += abs(gram[0, 1]) + abs(gram[0, 2]) + abs(gram[1, 2])
        if err < 1e-15:
            break
        r = r @ (1.5 * np.eye(3) - 0.5 * gram)
    return r


def is_rotation(r: np.ndarray, tol: float = ROTATION_TOL) -> bool:
    """True if r satisfies the SO(3) invariants within tol."""
    if r.shape != (3, 3) or not np.all(np.isfinite(r)):
        return False
    if np.linalg.norm(r.T @ r - np.eye(3)) > tol:
        return False
    return abs(np.linalg.det(r) - 1.0) <= tol
