"""Simulation loop, metrics and comparison suites.

The loop runs the controller at the control rate (200 Hz by default),
applies the L1 augmentation when enabled, saturates the summed command,
and advances the plant through the inner integrator substeps (1 kHz) with
the command held. Everything observable is logged at the control rate and
can be written to CSV; `compare` runs scenarios with the augmentation off
and on and tabulates the tracking RMSE of both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernel, controller, plant, trajectory
from .l1 import L1State
from .scenarios import ScenarioConfig, with_l1

__all__ = [
    "RunLog",
    "Metrics",
    "EmptyWindow",
    "COMPLETED",
    "CRASHED",
    "CONTROLLER_ERROR",
    "CSV_COLUMNS",
    "run",
    "metrics",
    "compare",
    "write_log_csv",
    "write_summary_csv",
]

CRASH_DISTANCE = 2.0   # [m] tracking deviation that counts as a crash

COMPLETED = "completed"
CRASHED = "crashed"
CONTROLLER_ERROR = "controller_error"

CSV_COLUMNS = (
    ["t", "p_x", "p_y", "p_z", "v_x", "v_y", "v_z", "yaw", "pitch", "roll",
     "om_x", "om_y", "om_z", "pd_x", "pd_y", "pd_z", "f", "M_x", "M_y", "M_z",
     "uad_f", "uad_Mx", "uad_My", "uad_Mz"]
    + [f"sighat_{i}" for i in range(1, 7)]
    + [f"ztil_{i}" for i in range(1, 7)]
    + [f"sigtrue_m{i}" for i in range(1, 5)]
    + ["sigtrue_um1", "sigtrue_um2"]
)


class EmptyWindow(ValueError):
    """Metrics window contains no samples."""


@dataclass
class RunLog:
    """Control-rate time series of one run plus its termination status."""

    name: str
    l1_enabled: bool
    t: np.ndarray           # (n,)
    p: np.ndarray           # (n, 3)
    v: np.ndarray           # (n, 3)
    euler: np.ndarray       # (n, 3) yaw, pitch, roll
    omega: np.ndarray       # (n, 3)
    p_d: np.ndarray         # (n, 3)
    f: np.ndarray           # (n,) applied thrust (saturated, incl. u_ad)
    moment: np.ndarray      # (n, 3) applied moment
    u_ad: np.ndarray        # (n, 4)
    sigma_hat: np.ndarray   # (n, 6)
    z_tilde: np.ndarray     # (n, 6)
    sigma_true_m: np.ndarray   # (n, 4)
    sigma_true_um: np.ndarray  # (n, 2)
    status: str

    def position_error(self) -> np.ndarray:
        return np.linalg.norm(self.p - self.p_d, axis=1)

    @property
    def crashed(self) -> bool:
        return self.status != COMPLETED


@dataclass(frozen=True)
class Metrics:
    """Tracking-error summary; crashes report infinite RMSE."""

    rmse: float        # over the requested window
    rmse_full: float   # over the whole run
    max_error: float
    crashed: bool


_TRAJ_IDS = {
    trajectory.HOVER: _kernel.TRAJ_HOVER,
    trajectory.FIGURE8: _kernel.TRAJ_FIGURE8,
    trajectory.TILTED_FIGURE8: _kernel.TRAJ_TILTED,
}

_STATUS = {
    _kernel.RUN_COMPLETED: COMPLETED,
    _kernel.RUN_CRASHED: CRASHED,
    _kernel.RUN_CONTROLLER_ERROR: CONTROLLER_ERROR,
}


def run(config: ScenarioConfig) -> RunLog:
    """Simulate one scenario to completion, crash, or controller error.

    The vehicle starts exactly on the trajectory (position, velocity, the
    zero-error desired attitude and its body rate). The whole loop executes
    in a compiled kernel; the tests pin it against a reference loop composed
    from the public controller/l1/plant functions.
    """
    config.validated()
    period = config.control_period()
    n_ticks = round(config.duration * config.control_rate)

    for name in ("kp", "kv", "kr", "komega"):
        k = getattr(config.gains, name)
        if np.any(k != np.diag(np.diagonal(k))):
            raise ValueError(f"the simulation loop requires diagonal {name}")

    flat0 = trajectory.sample(config.trajectory, 0.0)
    r0, omega0 = controller.reference_state(flat0, config.phys)
    state = np.empty(18)
    state[0:3] = flat0.pos
    state[3:6] = flat0.vel
    state[6:15] = r0.reshape(9)
    state[15:18] = omega0

    # coefficient precomputation lives in L1State even when the loop runs compiled
    l1state = L1State(config.l1_params, state[3:6].tolist() + state[15:18].tolist())
    filt = np.zeros(7)

    unc = config.uncertainty
    use_mix = any(lam != 1.0 for lam in unc.effectiveness)
    mix_fwd, mix_inv = plant.mixer_matrix(config.mixer)
    tr = config.trajectory

    table = np.zeros((n_ticks, len(CSV_COLUMNS)))
    status_code, rows = _kernel.run_loop(
        n_ticks, period, config.plant_dt, round(period / config.plant_dt),
        round(period / config.l1_params.t_s),
        _TRAJ_IDS[tr.kind], np.asarray(tr.center, dtype=float),
        tr.amp_x, tr.amp_y, tr.amp_z, tr.period, tr.yaw,
        np.ascontiguousarray(np.diagonal(config.gains.kp)),
        np.ascontiguousarray(np.diagonal(config.gains.kv)),
        np.ascontiguousarray(np.diagonal(config.gains.kr)),
        np.ascontiguousarray(np.diagonal(config.gains.komega)),
        config.phys.mass, config.phys.gravity,
        config.phys.inertia, config.phys.inertia_inv,
        config.l1_enabled, np.asarray(config.l1_params.a_s, dtype=float),
        config.l1_params.t_s, l1state.exp_as, l1state.phi,
        l1state.alpha_f, l1state.alpha_m1, l1state.alpha_m2,
        config.limits.f_min, config.limits.f_max, config.limits.m_max,
        unc.compiled, unc.t_on, unc.t_off,
        use_mix, np.asarray(unc.effectiveness, dtype=float), mix_fwd, mix_inv,
        state, l1state.z_hat, filt, CRASH_DISTANCE, plant.DIVERGENCE_LIMIT,
        table,
    )

    table = table[:rows]
    return RunLog(
        name=config.name,
        l1_enabled=config.l1_enabled,
        status=_STATUS[status_code],
        t=table[:, 0],
        p=table[:, 1:4],
        v=table[:, 4:7],
        euler=table[:, 7:10],
        omega=table[:, 10:13],
        p_d=table[:, 13:16],
        f=table[:, 16],
        moment=table[:, 17:20],
        u_ad=table[:, 20:24],
        sigma_hat=table[:, 24:30],
        z_tilde=table[:, 30:36],
        sigma_true_m=table[:, 36:40],
        sigma_true_um=table[:, 40:42],
    )


def metrics(log: RunLog, window: tuple[float, float]) -> Metrics:
    """Position RMSE over [t0, t1] and over the full run; inf after a crash."""
    t0, t1 = window
    if t1 < t0:
        raise EmptyWindow(f"window [{t0}, {t1}] is empty")
    mask = (log.t >= t0 - 1e-9) & (log.t <= t1 + 1e-9)
    err = log.position_error()
    if log.crashed:
        return Metrics(
            rmse=math.inf, rmse_full=math.inf,
            max_error=float(err.max()) if err.size else math.inf, crashed=True,
        )
    if not mask.any():
        raise EmptyWindow(f"no samples in window [{t0}, {t1}]")
    return Metrics(
        rmse=float(np.sqrt(np.mean(err[mask] ** 2))),
        rmse_full=float(np.sqrt(np.mean(err ** 2))),
        max_error=float(err.max()),
        crashed=False,
    )


@dataclass(frozen=True)
class CompareRow:
    scenario: str
    rmse_off: float
    rmse_on: float
    ratio: float
    status_off: str
    status_on: str


def compare(configs, out_dir=None) -> list[CompareRow]:
    """Run each scenario with the augmentation off and on.

    Returns one row per scenario with window RMSEs and their ratio; when
    out_dir is given, writes one CSV per run plus summary.csv. Runs are
    executed in catalog order so repeated invocations are byte-identical.
    """
    from pathlib import Path

    rows = []
    logs = []
    for config in configs:
        window = config.metrics_window()
        log_off = run(with_l1(config, False))
        log_on = run(with_l1(config, True))
        m_off = metrics(log_off, window)
        m_on = metrics(log_on, window)
        if m_off.crashed and m_on.crashed:
            ratio = math.nan
        elif m_off.crashed:
            ratio = math.inf
        else:
            ratio = m_off.rmse / m_on.rmse
        rows.append(CompareRow(
            scenario=config.name, rmse_off=m_off.rmse, rmse_on=m_on.rmse,
            ratio=ratio, status_off=log_off.status, status_on=log_on.status,
        ))
        logs.append((log_off, log_on))

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for log_off, log_on in logs:
            write_log_csv(log_off, out / f"{log_off.name}_l1off.csv")
            write_log_csv(log_on, out / f"{log_on.name}_l1on.csv")
        write_summary_csv(rows, out / "summary.csv")
    return rows


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def write_log_csv(log: RunLog, path) -> None:
    """Write the run log with the documented column order, 9 significant digits."""
    n = log.t.shape[0]
    table = np.empty((n, len(CSV_COLUMNS)))
    table[:, 0] = log.t
    table[:, 1:4] = log.p
    table[:, 4:7] = log.v
    table[:, 7:10] = log.euler
    table[:, 10:13] = log.omega
    table[:, 13:16] = log.p_d
    table[:, 16] = log.f
    table[:, 17:20] = log.moment
    table[:, 20:24] = log.u_ad
    table[:, 24:30] = log.sigma_hat
    table[:, 30:36] = log.z_tilde
    table[:, 36:40] = log.sigma_true_m
    table[:, 40:42] = log.sigma_true_um
    lines = [",".join(CSV_COLUMNS)]
    lines.extend(",".join(_fmt(value) for value in row) for row in table)
    lines.append("")
    with open(path, "w", newline="\n") as handle:
        handle.write("\n".join(lines))


def write_summary_csv(rows, path) -> None:
    lines = ["scenario,rmse_off,rmse_on,ratio"]
    lines.extend(
        f"{row.scenario},{_fmt(row.rmse_off)},{_fmt(row.rmse_on)},{_fmt(row.ratio)}"
        for row in rows
    )
    lines.append("")
    with open(path, "w", newline="\n") as handle:
        handle.write("\n".join(lines))
