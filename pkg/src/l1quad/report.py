"""Matplotlib figures rendered next to the CSV output.

One overview figure per run (path, tracking error, uncertainty estimate
versus truth, adaptive command) and one bar chart per comparison suite
mirroring the usual off/on RMSE presentation, with crashed runs marked
"inf*" at the top of the axis.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_run", "render_comparison"]


def render_run(log, path) -> None:
    """Four-panel overview of one run."""
    fig, axes = plt.subplots(2, 2, figsize=(10, 7))
    fig.suptitle(f"{log.name} (L1 {'on' if log.l1_enabled else 'off'}, {log.status})")

    ax = axes[0, 0]
    ax.plot(log.p_d[:, 0], log.p_d[:, 1], "k--", lw=1, label="desired")
    ax.plot(log.p[:, 0], log.p[:, 1], "b-", lw=0.8, label="actual")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title("horizontal path")
    ax.axis("equal")
    ax.legend(fontsize=8)

    ax = axes[0, 1]
    ax.plot(log.t, log.position_error(), "b-", lw=0.8)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("|e_p| [m]")
    ax.set_title("tracking error")
    ax.grid(alpha=0.3)

    ax = axes[1, 0]
    ax.plot(log.t, log.sigma_true_m[:, 0], "k-", lw=1, label="true thrust")
    ax.plot(log.t, log.sigma_hat[:, 0], "r--", lw=0.8, label="estimate thrust")
    ax.plot(log.t, 1e2 * log.sigma_true_m[:, 2], "b-", lw=1, label="true pitch x100")
    ax.plot(log.t, 1e2 * log.sigma_hat[:, 2], "m--", lw=0.8, label="estimate x100")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("matched uncertainty [N, N m]")
    ax.set_title("estimate vs injected")
    ax.legend(fontsize=7)
    ax.grid(alpha=0.3)

    ax = axes[1, 1]
    ax.plot(log.t, log.u_ad[:, 0], lw=0.8, label="u_ad f [N]")
    for k, lbl in ((1, "u_ad Mx"), (2, "u_ad My"), (3, "u_ad Mz")):
        ax.plot(log.t, 1e2 * log.u_ad[:, k], lw=0.8, label=f"{lbl} x100")
    ax.set_xlabel("t [s]")
    ax.set_title("adaptive command")
    ax.legend(fontsize=7)
    ax.grid(alpha=0.3)

    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_comparison(rows, path) -> None:
    """Off/on RMSE bars per scenario; crashes render as full-height 'inf*' bars."""
    names = [row.scenario for row in rows]
    finite = [
        value for row in rows for value in (row.rmse_off, row.rmse_on)
        if math.isfinite(value)
    ]
    top = 1.5 * max(finite) if finite else 1.0

    fig, ax = plt.subplots(figsize=(max(6.0, 0.8 * len(rows) + 2), 4.5))
    xs = np.arange(len(rows))
    width = 0.38

    def bars(values, offset, color, label):
        heights = [value if math.isfinite(value) else top for value in values]
        hatches = ["//" if not math.isfinite(value) else None for value in values]
        rects = ax.bar(xs + offset, heights, width, color=color, label=label)
        for rect, value, hatch in zip(rects, values, hatches):
            if hatch:
                rect.set_hatch(hatch)
                rect.set_facecolor("white")
                rect.set_edgecolor(color)
                ax.text(rect.get_x() + rect.get_width() / 2, top, "inf*",
                        ha="center", va="bottom", fontsize=8, color=color)

    bars([row.rmse_off for row in rows], -width / 2, "tab:red", "L1 off")
    bars([row.rmse_on for row in rows], width / 2, "tab:blue", "L1 on")

    ax.set_xticks(xs)
    ax.set_xticklabels(names, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("position RMSE [m]")
    ax.set_ylim(0, 1.1 * top)
    ax.legend()
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
