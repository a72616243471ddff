"""Uncertain quadrotor rigid-body dynamics and its fixed-step integrator.

State: position p and velocity v in the inertial NED frame, rotation R
(body to inertial), body angular rate omega. Nominal dynamics:

    p'     = v
    v'     = g e3 - (f/m) R e3
    R'     = R hat(omega)
    omega' = J^-1 (M - omega x J omega)

Uncertainty enters through a matched channel sigma_m (thrust axis + body
moments, shaped like the control), an unmatched channel sigma_um (body-xy
force), a per-channel input gain beta on the control, an inertial force /
body moment wrench, and a per-motor effectiveness factor routed through a
static X-configuration mixer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _kernel
from .geometry import E3, hat

__all__ = [
    "PhysicalParams",
    "QuadState",
    "ControlInput",
    "SignalTerm",
    "UncertaintySpec",
    "MixerParams",
    "NumericalDivergence",
    "input_matrices",
    "b_bar_inverse",
    "evaluate_signal",
    "evaluate_uncertainty",
    "evaluate_input_gain",
    "mixer_matrix",
    "apply_effectiveness",
    "derivative",
    "step",
    "advance",
]

DIVERGENCE_LIMIT = 1e6

# Signal term kinds for the declarative uncertainty catalog.
SIN = "sin"
RAMP = "ramp"
CONST = "const"


class NumericalDivergence(RuntimeError):
    """Integration produced a non-finite or absurdly large state component."""


@dataclass(frozen=True)
class PhysicalParams:
    """Rigid-body constants. Defaults are the Mambo-scale values used everywhere."""

    mass: float = 0.075                      # [kg]
    inertia: np.ndarray = field(             # [kg m^2]
        default_factory=lambda: np.diag([5.8e-5, 7.2e-5, 1.0e-4])
    )
    gravity: float = 9.81                    # [m/s^2]

    def __post_init__(self):
        if not self.mass > 0.0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        if not self.gravity > 0.0:
            raise ValueError(f"gravity must be positive, got {self.gravity}")
        j = np.asarray(self.inertia, dtype=float)
        if j.shape != (3, 3) or np.linalg.norm(j - j.T) > 1e-12:
            raise ValueError("inertia must be a symmetric 3x3 matrix")
        if np.any(np.linalg.eigvalsh(j) <= 0.0):
            raise ValueError("inertia must be positive definite")

    @cached_property
    def inertia_inv(self) -> np.ndarray:
        return np.linalg.inv(self.inertia)


@dataclass
class QuadState:
    """Full rigid-body state; z = [v; omega] is the partial state seen by the L1 loop."""

    p: np.ndarray
    v: np.ndarray
    R: np.ndarray
    omega: np.ndarray

    def partial_state(self) -> np.ndarray:
        return np.concatenate([self.v, self.omega])

    @classmethod
    def at_rest(cls, p=(0.0, 0.0, 0.0)) -> "QuadState":
        return cls(
            p=np.array(p, dtype=float),
            v=np.zeros(3),
            R=np.eye(3),
            omega=np.zeros(3),
        )


@dataclass
class ControlInput:
    """Collective thrust [N] and body moment [N m]."""

    thrust: float
    moment: np.ndarray

    def as_vector(self) -> np.ndarray:
        return np.array([self.thrust, self.moment[0], self.moment[1], self.moment[2]])

    @classmethod
    def from_vector(cls, u: np.ndarray) -> "ControlInput":
        return cls(thrust=float(u[0]), moment=np.array(u[1:4], dtype=float))


@dataclass(frozen=True)
class SaturationLimits:
    """Actuator limits applied to the total command before the plant."""

    f_min: float = 0.0
    f_max: float = 2.0 * 0.075 * 9.81   # 2 m g for the default vehicle
    m_max: float = 0.01                 # per-axis moment bound [N m]

    def __post_init__(self):
        if not (self.f_max > self.f_min and self.m_max > 0.0):
            raise ValueError("saturation limits must satisfy f_max > f_min, m_max > 0")

    def clamp(self, u4: np.ndarray) -> np.ndarray:
        out = np.empty(4)
        out[0] = min(max(u4[0], self.f_min), self.f_max)
        out[1:] = np.clip(u4[1:], -self.m_max, self.m_max)
        return out


@dataclass(frozen=True)
class SignalTerm:
    """One additive term of a scalar uncertainty signal.

    Evaluated at tau = t - t_on (time since the activation window opened):

        sin:   amplitude * sin(frequency * tau)
        ramp:  amplitude * tau
        const: amplitude

    With state_p1_squared set, the term is multiplied by p1(t)^2 (squared
    inertial x-position), which is the state-dependent factor used by the
    experiment catalog.
    """

    kind: str
    amplitude: float
    frequency: float = 0.0      # [rad/s], sin terms only
    state_p1_squared: bool = False

    def __post_init__(self):
        if self.kind not in (SIN, RAMP, CONST):
            raise ValueError(f"unknown signal term kind {self.kind!r}")


Signal = tuple  # tuple[SignalTerm, ...]; empty tuple means identically zero


def evaluate_signal(terms: Signal, tau: float, p1sq: float = 0.0) -> float:
    """Sum of the catalog terms at elapsed window time tau."""
    total = 0.0
    for term in terms:
        if term.kind == SIN:
            value = term.amplitude * math.sin(term.frequency * tau)
        elif term.kind == RAMP:
            value = term.amplitude * tau
        else:
            value = term.amplitude
        if term.state_p1_squared:
            value *= p1sq
        total += value
    return total


@dataclass(frozen=True)
class UncertaintySpec:
    """Declarative description of every injected uncertainty channel.

    All channels evaluate to neutral (0, or 1 for gains/effectiveness)
    outside the activation window [t_on, t_off]. The default instance is
    fully neutral. `beta` holds the deviation from unity, so the applied
    gain is 1 + evaluate_signal(beta[i], ...).
    """

    sigma_m: tuple = ((), (), (), ())       # direct matched [N, Nm, Nm, Nm]
    sigma_um: tuple = ((), ())              # direct unmatched [N, N]
    beta: tuple = ((), (), (), ())          # input gain deviation, dimensionless
    force: tuple = ((), (), ())             # inertial-frame force F0 [N]
    moment: tuple = ((), (), ())            # body-frame moment M0 [N m]
    effectiveness: tuple = (1.0, 1.0, 1.0, 1.0)   # per-motor thrust scale
    t_on: float = 0.0
    t_off: float = math.inf

    def active(self, t: float) -> bool:
        return self.t_on <= t <= self.t_off

    def has_any_channel(self) -> bool:
        groups = (self.sigma_m, self.sigma_um, self.beta, self.force, self.moment)
        if any(any(len(sig) > 0 for sig in group) for group in groups):
            return True
        return any(lam != 1.0 for lam in self.effectiveness)

    @cached_property
    def compiled(self) -> np.ndarray:
        """Signal table for the integrator kernel: rows of
        [channel, kind, amplitude, frequency, state_factor]."""
        from . import _kernel

        kind_ids = {SIN: _kernel.KIND_SIN, RAMP: _kernel.KIND_RAMP, CONST: _kernel.KIND_CONST}
        groups = (
            (self.sigma_m, _kernel.CH_SIGMA_M),
            (self.sigma_um, _kernel.CH_SIGMA_UM),
            (self.beta, _kernel.CH_BETA),
            (self.force, _kernel.CH_FORCE),
            (self.moment, _kernel.CH_MOMENT),
        )
        rows = [
            [float(base + i), float(kind_ids[term.kind]), term.amplitude,
             term.frequency, 1.0 if term.state_p1_squared else 0.0]
            for group, base in groups
            for i, sig in enumerate(group)
            for term in sig
        ]
        return np.array(rows, dtype=float) if rows else np.zeros((0, 5))


def evaluate_uncertainty(spec: UncertaintySpec, t: float, x: QuadState):
    """Total (sigma_m, sigma_um) at time t: direct signals plus the wrench.

    An inertial force F0 projects onto the thrust axis as sigma_m1 = -F0 . Re3
    (minus sign so that B(R) sigma_m reproduces +F0/m in the velocity
    dynamics) and onto the body-xy plane as sigma_um = [F0 . Re1, F0 . Re2].
    A body moment M0 adds directly to the moment rows of sigma_m.
    """
    sigma_m = np.zeros(4)
    sigma_um = np.zeros(2)
    if not spec.active(t):
        return sigma_m, sigma_um

    tau = t - spec.t_on
    p1sq = float(x.p[0]) ** 2
    for i in range(4):
        sigma_m[i] = evaluate_signal(spec.sigma_m[i], tau, p1sq)
    for i in range(2):
        sigma_um[i] = evaluate_signal(spec.sigma_um[i], tau, p1sq)

    f0 = np.array([evaluate_signal(spec.force[i], tau, p1sq) for i in range(3)])
    if f0.any():
        sigma_m[0] -= f0 @ x.R[:, 2]
        sigma_um[0] += f0 @ x.R[:, 0]
        sigma_um[1] += f0 @ x.R[:, 1]
    for i in range(3):
        sigma_m[1 + i] += evaluate_signal(spec.moment[i], tau, p1sq)
    return sigma_m, sigma_um


def evaluate_input_gain(spec: UncertaintySpec, t: float) -> np.ndarray:
    """Per-channel input gain beta(t); ones outside the activation window."""
    beta = np.ones(4)
    if spec.active(t):
        tau = t - spec.t_on
        for i in range(4):
            beta[i] += evaluate_signal(spec.beta[i], tau)
    return beta


def input_matrices(R: np.ndarray, params: PhysicalParams):
    """Input matrices of the partial-state dynamics z' = f(z) + B u + ...

    B maps [f, M] into [v'; omega'], B_perp spans the body-xy force
    directions orthogonal to B's columns, and B_bar = [B  B_perp] is the
    square matrix inverted by the adaptation law.
    """
    m_inv = 1.0 / params.mass
    b = np.zeros((6, 4))
    b[:3, 0] = -m_inv * R[:, 2]
    b[3:, 1:] = params.inertia_inv
    b_perp = np.zeros((6, 2))
    b_perp[:3, 0] = m_inv * R[:, 0]
    b_perp[:3, 1] = m_inv * R[:, 1]
    return b, b_perp, np.hstack([b, b_perp])


def b_bar_inverse(R: np.ndarray, params: PhysicalParams) -> np.ndarray:
    """Closed-form inverse of B_bar = [B  B_perp].

    For w = [w_v; w_omega] the solution sigma = B_bar^-1 w is

        sigma_m1     = -m (R^T w_v)_3
        sigma_m(2:4) =  J w_omega
        sigma_um     =  m [(R^T w_v)_1, (R^T w_v)_2]

    which follows from the orthonormality of the columns of R.
    """
    m = params.mass
    inv = np.zeros((6, 6))
    inv[0, :3] = -m * R[:, 2]
    inv[1:4, 3:] = params.inertia
    inv[4, :3] = m * R[:, 0]
    inv[5, :3] = m * R[:, 1]
    return inv


def mixer_matrix(mix: "MixerParams"):
    """Forward mixer A with u4 = A T (per-motor thrusts T), and its inverse.

    X configuration, NED body axes (x forward, y right, z down), motors at
    45 degrees: 1 front-right, 2 back-left, 3 front-left, 4 back-right;
    1 and 2 spin opposite to 3 and 4. Rows of A are mutually orthogonal,
    so the inverse is a scaled transpose.
    """
    d = mix.arm_length / math.sqrt(2.0)
    c = mix.torque_coeff
    a = np.array(
        [
            [1.0, 1.0, 1.0, 1.0],
            [-d, d, d, -d],
            [d, -d, d, -d],
            [-c, -c, c, c],
        ]
    )
    a_inv = a.T @ np.diag([0.25, 0.25 / (d * d), 0.25 / (d * d), 0.25 / (c * c)])
    return a, a_inv


@dataclass(frozen=True)
class MixerParams:
    """Static X-mixer geometry used only by the motor-effectiveness channel."""

    arm_length: float = 0.04    # [m]
    torque_coeff: float = 0.01  # [m] yaw torque per unit thrust

    def __post_init__(self):
        if not (self.arm_length > 0.0 and self.torque_coeff > 0.0):
            raise ValueError("mixer geometry must be positive")


def apply_effectiveness(mix: MixerParams, lam, u: ControlInput) -> ControlInput:
    """Route (f, M) through the mixer with per-motor thrust scales lam.

    Identity when lam == (1, 1, 1, 1); a lost motor fraction shows up as
    reduced thrust plus parasitic roll/pitch/yaw moments.
    """
    a, a_inv = mixer_matrix(mix)
    thrusts = a_inv @ u.as_vector()
    return ControlInput.from_vector(a @ (np.asarray(lam, dtype=float) * thrusts))


def derivative(
    x: QuadState,
    u: ControlInput,
    sigma_m: np.ndarray,
    sigma_um: np.ndarray,
    beta: np.ndarray,
    params: PhysicalParams,
):
    """Time derivative (p', v', omega') of the uncertain dynamics.

    The rotation evolves as R' = R hat(omega); the integrator applies that
    multiplicatively, so it is not returned here.
    """
    dv = (
        params.gravity * E3
        - (beta[0] * u.thrust + sigma_m[0]) / params.mass * x.R[:, 2]
        + (sigma_um[0] * x.R[:, 0] + sigma_um[1] * x.R[:, 1]) / params.mass
    )
    torque = beta[1:4] * u.moment + sigma_m[1:4]
    domega = params.inertia_inv @ (torque - np.cross(x.omega, params.inertia @ x.omega))
    return x.v.copy(), dv, domega


def step(
    x: QuadState,
    u: ControlInput,
    spec: UncertaintySpec,
    params: PhysicalParams,
    t: float,
    dt: float,
    mix: MixerParams | None = None,
) -> QuadState:
    """One integrator step of size dt (0 < dt <= 0.01) with u held constant."""
    return advance(x, u, spec, params, t, dt, 1, mix)


def advance(
    x: QuadState,
    u: ControlInput,
    spec: UncertaintySpec,
    params: PhysicalParams,
    t: float,
    dt: float,
    substeps: int,
    mix: MixerParams | None = None,
) -> QuadState:
    """Integrate the plant over `substeps` steps of size dt with u held (ZOH).

    Classical 4th-order Runge-Kutta on (p, v, omega) with the rotation
    advanced multiplicatively, R <- R exp_so3(theta); theta integrates the
    RK4-averaged body rate with the dexpinv commutator corrections
    (Munthe-Kaas scheme), which keeps the attitude update genuinely 4th
    order when the spin axis moves. Uncertainty is evaluated at the RK4
    stage times and the rotation is re-orthonormalized every step.

    The arithmetic lives in a JIT kernel (see _kernel.rk4_advance);
    `derivative` above is the readable reference for the same equations and
    the test suite pins the two against each other.
    """
    if not 0.0 < dt <= 0.01:
        raise ValueError(f"dt must lie in (0, 0.01], got {dt}")

    state = np.empty(18)
    state[0:3] = x.p
    state[3:6] = x.v
    state[6:15] = x.R.reshape(9)
    state[15:18] = x.omega

    u_nom = u.as_vector()
    lam_active = any(lam != 1.0 for lam in spec.effectiveness)
    if lam_active:
        u_mix = apply_effectiveness(
            mix if mix is not None else MixerParams(), spec.effectiveness, u
        ).as_vector()
    else:
        u_mix = u_nom

    status = _kernel.rk4_advance(
        state, u_nom, u_mix, lam_active, spec.compiled, spec.t_on, spec.t_off,
        params.mass, params.gravity, params.inertia, params.inertia_inv,
        t, dt, substeps, DIVERGENCE_LIMIT,
    )
    if status != _kernel.STATUS_OK:
        raise NumericalDivergence(f"state diverged during [{t}, {t + substeps * dt}] s")

    return QuadState(
        p=state[0:3].copy(),
        v=state[3:6].copy(),
        R=state[6:15].reshape(3, 3).copy(),
        omega=state[15:18].copy(),
    )
