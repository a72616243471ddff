"""L1 adaptive augmentation of the baseline controller.

Runs once per controller sample T_s on the partial state z = [v; omega]:

1. prediction error   z~ = z_hat - z
2. adaptation         sigma_hat = -Bbar^-1 Phi^-1 exp(As T_s) z~
                      with Phi = As^-1 (exp(As T_s) - I)
3. low-pass filter    u_ad = -C(sigma_hat_m); one first-order stage on the
                      thrust channel, two cascaded stages per moment channel
4. predictor          z_hat' = f(z) + B(R)(u + sigma_hat_m)
                      + Bperp(R) sigma_hat_um + As z~,
                      integrated over T_s by RK4 with held inputs

The piecewise-constant law makes sigma_hat exactly cancel the propagated
prediction error at the next sample (under exact discretization), so the
estimate tracks the true matched/unmatched uncertainty at sample rate;
the filter then keeps only the low-frequency content of the matched part
out of respect for the control channel's robustness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import E3
from .plant import PhysicalParams, SaturationLimits, b_bar_inverse

__all__ = ["L1Params", "L1State", "adaptation_update", "predictor_step",
           "filter_step", "l1_step"]


@dataclass(frozen=True)
class L1Params:
    """Adaptation/filter constants; defaults match the experiment table."""

    a_s: np.ndarray = field(                       # diagonal of As [1/s]
        default_factory=lambda: np.array([-5.0, -5.0, -5.0, -10.0, -10.0, -10.0])
    )
    t_s: float = 0.005                             # sample period [s]
    omega_f: float = 8.0                           # thrust LPF bandwidth [rad/s]
    omega_m: tuple = (4.0, 6.0)                    # cascaded moment LPF bandwidths [rad/s]

    def __post_init__(self):
        a = np.asarray(self.a_s, dtype=float)
        if a.shape != (6,) or not np.all(a < 0.0):
            raise ValueError("a_s must be six strictly negative diagonal entries")
        if not self.t_s > 0.0:
            raise ValueError(f"t_s must be positive, got {self.t_s}")
        if not (self.omega_f > 0.0 and self.omega_m[0] > 0.0 and self.omega_m[1] > 0.0):
            raise ValueError("filter bandwidths must be positive")


class L1State:
    """Mutable per-run state: predictor, estimate, filter memories, output.

    exp(As T_s), Phi and the filter pole factors are precomputed here (As is
    diagonal, so these are scalar exponentials); the step functions below
    assume the params they receive are the ones used at construction.
    """

    def __init__(self, params: L1Params, z0: np.ndarray):
        z0 = np.asarray(z0, dtype=float)
        if z0.shape != (6,):
            raise ValueError("z0 must have shape (6,)")
        self.z_hat = z0.copy()          # predictor state [v; omega]
        self.sigma_hat = np.zeros(6)    # [sigma_m (4); sigma_um (2)]
        self.z_tilde = np.zeros(6)      # last prediction error used
        self.u_ad = np.zeros(4)
        self.filt_f = 0.0               # thrust filter memory
        self.filt_m1 = np.zeros(3)      # first moment stage
        self.filt_m2 = np.zeros(3)      # second moment stage

        self.exp_as = np.exp(params.a_s * params.t_s)
        self.phi = (self.exp_as - 1.0) / params.a_s
        self.alpha_f = math.exp(-params.omega_f * params.t_s)
        self.alpha_m1 = math.exp(-params.omega_m[0] * params.t_s)
        self.alpha_m2 = math.exp(-params.omega_m[1] * params.t_s)


def adaptation_update(
    state: L1State, z_tilde: np.ndarray, R: np.ndarray, params: L1Params,
    phys: PhysicalParams,
) -> np.ndarray:
    """Piecewise-constant law: sigma_hat = -Bbar^-1 Phi^-1 mu, mu = exp(As T_s) z~."""
    w = state.exp_as * z_tilde / state.phi
    return -(b_bar_inverse(R, phys) @ w)


def predictor_step(
    state: L1State,
    z: np.ndarray,
    R: np.ndarray,
    omega: np.ndarray,
    u_total: np.ndarray,
    params: L1Params,
    phys: PhysicalParams,
) -> np.ndarray:
    """Integrate the predictor over one sample period by RK4.

    u_total is the 4-vector input applied to the plant (baseline plus
    adaptive). Measured z, R and all inputs are held constant across the
    period, so only the As(z_hat - z) term varies between stages.
    """
    w4 = u_total + state.sigma_hat[:4]
    c = np.empty(6)
    c[:3] = (
        phys.gravity * E3
        - w4[0] / phys.mass * R[:, 2]
        + (state.sigma_hat[4] * R[:, 0] + state.sigma_hat[5] * R[:, 1]) / phys.mass
    )
    c[3:] = phys.inertia_inv @ (w4[1:] - np.cross(omega, phys.inertia @ omega))

    a = params.a_s
    h = params.t_s
    z_hat = state.z_hat
    k1 = c + a * (z_hat - z)
    k2 = c + a * (z_hat + 0.5 * h * k1 - z)
    k3 = c + a * (z_hat + 0.5 * h * k2 - z)
    k4 = c + a * (z_hat + h * k3 - z)
    z_next = z_hat + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(z_next)):
        raise FloatingPointError("predictor state became non-finite")
    return z_next


def filter_step(state: L1State, sigma_m_hat: np.ndarray, params: L1Params) -> np.ndarray:
    """Low-pass the matched estimate and return u_ad = -(filtered sigma_m_hat).

    Each stage uses the exact pole discretization y+ = a y + (1 - a) x with
    a = exp(-omega T_s), so the DC gain is exactly one. The thrust channel
    has a single stage; each moment channel has two in cascade.
    """
    state.filt_f = state.alpha_f * state.filt_f + (1.0 - state.alpha_f) * sigma_m_hat[0]
    state.filt_m1 = state.alpha_m1 * state.filt_m1 + (1.0 - state.alpha_m1) * sigma_m_hat[1:]
    state.filt_m2 = state.alpha_m2 * state.filt_m2 + (1.0 - state.alpha_m2) * state.filt_m1
    u_ad = np.empty(4)
    u_ad[0] = -state.filt_f
    u_ad[1:] = -state.filt_m2
    return u_ad


def l1_step(
    state: L1State,
    z: np.ndarray,
    R: np.ndarray,
    omega: np.ndarray,
    u_b: np.ndarray,
    params: L1Params,
    phys: PhysicalParams,
    limits: SaturationLimits | None = None,
) -> np.ndarray:
    """One full augmentation sample; returns u_ad for the plant.

    Order per sample: error, adaptation, filter, predictor, with the
    predictor consuming the sigma_hat and u_ad just computed so that the
    input it assumes equals the input the plant receives this period. When
    `limits` is given the predictor sees the saturated total command, which
    is what the actuators actually apply.
    """
    state.z_tilde = state.z_hat - z
    state.sigma_hat = adaptation_update(state, state.z_tilde, R, params, phys)
    state.u_ad = filter_step(state, state.sigma_hat[:4], params)

    u_total = u_b + state.u_ad
    if limits is not None:
        u_total = limits.clamp(u_total)
    state.z_hat = predictor_step(state, z, R, omega, u_total, params, phys)
    return state.u_ad
