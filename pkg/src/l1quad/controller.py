"""Baseline geometric tracking controller on SE(3).

Force/thrust law, desired attitude with flatness feedforward, attitude
errors, and the moment law. All math is in the NED convention of the
plant: gravity is +g along e3, hover thrust is positive, and the desired
body z-axis points along minus the desired force,

    F_d  = -Kp e_p - Kv e_v - m g e3 + m a_d
    f    = -F_d . (R e3)
    b3d  = -F_d / ||F_d||

Note on feedforward signs: the angular-rate feedforward is usually quoted
for the ENU convention where b3d = +F_d/||F_d||. Under the NED
construction above, b3d' = -h_omega (not +), so the first two components
of omega_d and domega_d flip sign relative to the ENU form:

    omega_d = [ h . b2d, -h . b1d, yaw_rate (e3 . b3d) ]

The test suite pins omega_d against a finite difference of the desired
attitude sequence, which fixes this sign unambiguously.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import E3, hat, vee
from .plant import ControlInput, PhysicalParams, QuadState
from .trajectory import FlatOutput

__all__ = [
    "GeometricGains",
    "DesiredAttitude",
    "DegenerateForce",
    "SingularYawAxis",
    "SmallFeedforwardDenominator",
    "ControllerError",
    "desired_force",
    "thrust_command",
    "desired_attitude",
    "desired_angular_rates",
    "attitude_errors",
    "moment_command",
    "control",
    "reference_state",
]

EPS_FORCE = 1e-6   # [N] minimum ||F_d|| for a well-defined thrust axis
EPS_YAW = 1e-6     # minimum ||b3d x b_int|| for a well-defined yaw frame

# Same floor as the trajectory validator: ||a_d + g e3|| >= 0.1 g.
FEEDFORWARD_MARGIN = 0.1


class ControllerError(RuntimeError):
    """Base class for controller singularities; the harness treats these as a crash."""


class DegenerateForce(ControllerError):
    """Desired force vanished; thrust direction undefined."""


class SingularYawAxis(ControllerError):
    """Desired z-axis is parallel to the yaw reference axis."""


class SmallFeedforwardDenominator(ControllerError):
    """||a_d + g e3|| fell below the feedforward floor."""


@dataclass(frozen=True)
class GeometricGains:
    """Diagonal position/velocity/attitude/rate gains (stored as 3x3)."""

    kp: np.ndarray = field(default_factory=lambda: np.diag([0.62, 0.45, 0.69]))
    kv: np.ndarray = field(default_factory=lambda: np.diag([0.10, 0.10, 0.15]))
    kr: np.ndarray = field(default_factory=lambda: np.diag([1.5e-2, 1.5e-2, 0.2e-2]))
    komega: np.ndarray = field(default_factory=lambda: np.diag([2.2e-3, 2.2e-3, 0.7e-3]))

    def __post_init__(self):
        for name in ("kp", "kv", "kr", "komega"):
            k = getattr(self, name)
            if k.shape != (3, 3) or np.linalg.norm(k - k.T) > 1e-12:
                raise ValueError(f"{name} must be a symmetric 3x3 matrix")
            if np.any(np.linalg.eigvalsh(k) <= 0.0):
                raise ValueError(f"{name} must be positive definite")

    def detuned(self, factor: float = 0.5) -> "GeometricGains":
        """Poorly tuned variant: kp and kr scaled down, kv/komega unchanged."""
        return GeometricGains(
            kp=factor * self.kp, kv=self.kv, kr=factor * self.kr, komega=self.komega
        )


@dataclass(frozen=True)
class DesiredAttitude:
    R_d: np.ndarray
    omega_d: np.ndarray
    domega_d: np.ndarray


def desired_force(
    flat: FlatOutput, x: QuadState, gains: GeometricGains, params: PhysicalParams
) -> np.ndarray:
    """F_d = -Kp e_p - Kv e_v - m g e3 + m a_d  (points up at hover in NED)."""
    e_p = x.p - flat.pos
    e_v = x.v - flat.vel
    return (
        -gains.kp @ e_p
        - gains.kv @ e_v
        - params.mass * params.gravity * E3
        + params.mass * flat.acc
    )


def thrust_command(f_des: np.ndarray, R: np.ndarray) -> float:
    """Collective thrust f = -F_d . (R e3); positive at hover."""
    return float(-(f_des @ R[:, 2]))


def desired_attitude(f_des: np.ndarray, flat: FlatOutput) -> np.ndarray:
    """Desired rotation R_d = [b1d b2d b3d] with b3d = -F_d/||F_d||.

    The intermediate axis b_int = [cos yaw, sin yaw, 0] fixes the heading;
    b2d = b3d x b_int (normalized) and b1d = b2d x b3d.
    """
    norm_f = np.linalg.norm(f_des)
    if norm_f < EPS_FORCE:
        raise DegenerateForce(f"||F_d|| = {norm_f:.3e} N")
    b3 = -f_des / norm_f
    b_int = np.array([math.cos(flat.yaw), math.sin(flat.yaw), 0.0])
    cross = np.cross(b3, b_int)
    norm_c = np.linalg.norm(cross)
    if norm_c < EPS_YAW:
        raise SingularYawAxis(f"||b3d x b_int|| = {norm_c:.3e}")
    b2 = cross / norm_c
    b1 = np.cross(b2, b3)
    return np.column_stack([b1, b2, b3])


def desired_angular_rates(
    flat: FlatOutput, R_d: np.ndarray, omega: np.ndarray, params: PhysicalParams
) -> tuple[np.ndarray, np.ndarray]:
    """Flatness feedforward (omega_d, domega_d) from the desired attitude columns.

    h = (j_d - (b3d . j_d) b3d) / ||a_d + g e3|| is the in-plane tilt rate of
    the thrust axis; its dot products with b2d/b1d give the body-x/y rates
    (signs per the module docstring). The angular-acceleration intermediate
    h' follows the published form verbatim, including its use of the
    measured omega in the -omega x b3d terms.
    """
    b1, b2, b3 = R_d[:, 0], R_d[:, 1], R_d[:, 2]
    denom = float(np.linalg.norm(flat.acc + params.gravity * E3))
    if denom < FEEDFORWARD_MARGIN * params.gravity:
        raise SmallFeedforwardDenominator(f"||a_d + g e3|| = {denom:.3e}")

    h = (flat.jerk - (b3 @ flat.jerk) * b3) / denom
    omega_d = np.array([h @ b2, -(h @ b1), flat.yaw_rate * (E3 @ b3)])

    h_dot = (
        flat.snap
        - ((np.cross(omega_d, b3) @ flat.acc) + b3 @ flat.snap) * b3
        + (b3 @ flat.jerk) * np.cross(omega, b3)
    ) / denom
    h_dot = h_dot - np.cross(omega, b3) - np.cross(omega, np.cross(omega, b3))
    domega_d = np.array([h_dot @ b2, -(h_dot @ b1), flat.yaw_acc * (E3 @ b3)])
    return omega_d, domega_d


def attitude_errors(
    R: np.ndarray, R_d: np.ndarray, omega: np.ndarray, omega_d: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """e_R = vee(R_d^T R - R^T R_d)/2 and e_omega = omega - R^T R_d omega_d."""
    m = R_d.T @ R
    e_r = vee(m - m.T) / 2.0
    e_omega = omega - m.T @ omega_d
    return e_r, e_omega


def moment_command(
    e_r: np.ndarray,
    e_omega: np.ndarray,
    omega: np.ndarray,
    omega_d: np.ndarray,
    domega_d: np.ndarray,
    R: np.ndarray,
    R_d: np.ndarray,
    gains: GeometricGains,
    params: PhysicalParams,
) -> np.ndarray:
    """M = -Kr e_R - Ko e_omega + omega x J omega - J(hat(omega) R^T R_d omega_d - R^T R_d domega_d)."""
    j = params.inertia
    rtrd = R.T @ R_d
    return (
        -gains.kr @ e_r
        - gains.komega @ e_omega
        + np.cross(omega, j @ omega)
        - j @ (hat(omega) @ rtrd @ omega_d - rtrd @ domega_d)
    )


def control(
    x: QuadState, flat: FlatOutput, gains: GeometricGains, params: PhysicalParams
) -> ControlInput:
    """Full baseline control: thrust plus moment for one sample."""
    f_des = desired_force(flat, x, gains, params)
    f = thrust_command(f_des, x.R)
    r_d = desired_attitude(f_des, flat)
    omega_d, domega_d = desired_angular_rates(flat, r_d, x.omega, params)
    e_r, e_omega = attitude_errors(x.R, r_d, x.omega, omega_d)
    m = moment_command(e_r, e_omega, x.omega, omega_d, domega_d, x.R, r_d, gains, params)
    return ControlInput(thrust=f, moment=m)


def reference_state(flat: FlatOutput, params: PhysicalParams) -> tuple[np.ndarray, np.ndarray]:
    """Zero-error desired attitude and body rate for initializing on a trajectory."""
    f_des = params.mass * (flat.acc - params.gravity * E3)
    r_d = desired_attitude(f_des, flat)
    omega_d, _ = desired_angular_rates(flat, r_d, np.zeros(3), params)
    return r_d, omega_d
