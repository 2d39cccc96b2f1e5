"""Report figures rendered next to the JSON/CSV output.

One trajectory/timeseries figure per case plus campaign-level summaries
(slip against slope angle, point-turn yaw efficiency against slope angle).
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def render_case_figures(reports, out_dir: Path) -> list[Path]:
    written = []
    for rep in reports:
        if not rep.ticks:
            continue
        fig, (ax_map, ax_ts) = plt.subplots(
            1, 2, figsize=(10, 4.2), gridspec_kw={"width_ratios": [1, 1.4]}
        )
        xs = [f.true_x_m for f in rep.ticks]
        ys = [f.true_y_m for f in rep.ticks]
        ax_map.plot(xs, ys, "-", color="tab:blue", lw=1.5, label="true path")
        ax_map.plot(
            [f.tracked_x_m for f in rep.ticks],
            [f.tracked_y_m for f in rep.ticks],
            ".",
            color="tab:orange",
            ms=1.0,
            alpha=0.4,
            label="tracked",
        )
        ax_map.plot(xs[0], ys[0], "go", ms=6, label="start")
        ax_map.plot(xs[-1], ys[-1], "rs", ms=6, label="end")
        ax_map.set_xlabel("x (m)")
        ax_map.set_ylabel("y (m)")
        ax_map.set_title(rep.id)
        ax_map.axis("equal")
        ax_map.legend(fontsize=7, loc="best")

        ts = [f.t_s for f in rep.ticks]
        speed = [math.hypot(f.act_vx_mps, f.act_vy_mps) for f in rep.ticks]
        cmd = [math.hypot(f.cmd_vx_mps, f.cmd_vy_mps) for f in rep.ticks]
        slip = [sum(f.slip_ratio) / 4.0 for f in rep.ticks]
        ax_ts.plot(ts, cmd, "--", color="gray", lw=1, label="commanded speed")
        ax_ts.plot(ts, speed, color="tab:blue", lw=1, label="achieved speed")
        ax_ts.set_xlabel("time (s)")
        ax_ts.set_ylabel("speed (m/s)")
        ax2 = ax_ts.twinx()
        ax2.plot(ts, slip, color="tab:red", lw=1, alpha=0.7, label="mean slip")
        ax2.set_ylabel("slip ratio")
        ax2.set_ylim(0, 1.05)
        ax_ts.legend(fontsize=7, loc="upper left")
        ax_ts.set_title(f"verdict: {rep.verdict}")
        fig.tight_layout()
        path = out_dir / f"{rep.id}.png"
        fig.savefig(path, dpi=110)
        plt.close(fig)
        written.append(path)
    return written


def render_campaign_figures(reports, out_dir: Path) -> list[Path]:
    written = []
    slope_rows = []
    pt_rows = []
    for rep in reports:
        kind = rep.manoeuvre.get("type")
        if kind in ("up_slope", "cross_slope"):
            angle = rep.metrics.get("tilt_angle_deg")
            worst = max((w["slip_mean"] for w in rep.metrics["windows"]), default=0.0)
            slope_rows.append((kind, angle, worst))
        elif kind == "point_turn_on_slope":
            angle = rep.metrics.get("tilt_angle_deg")
            pt_rows.append((angle, rep.metrics.get("yaw_efficiency")))

    if slope_rows or pt_rows:
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
        for kind, marker, color in (("up_slope", "o", "tab:blue"),
                                    ("cross_slope", "s", "tab:green")):
            pts = sorted((a, s) for k, a, s in slope_rows if k == kind and a is not None)
            if pts:
                ax1.plot([p[0] for p in pts], [p[1] for p in pts], marker + "-",
                         color=color, label=kind.replace("_", " "))
        ax1.axhline(0.2, color="red", ls="--", lw=1, label="slip limit")
        ax1.set_xlabel("slope angle (deg)")
        ax1.set_ylabel("mean slip ratio")
        ax1.legend(fontsize=7)
        ax1.set_title("traverse slip vs slope")

        pts = sorted((a, e) for a, e in pt_rows if a is not None and e is not None)
        if pts:
            ax2.plot([p[0] for p in pts], [p[1] for p in pts], "o-", color="tab:purple")
        ax2.axhline(0.8, color="red", ls="--", lw=1)
        ax2.axhline(0.9, color="orange", ls="--", lw=1)
        ax2.set_xlabel("slope angle (deg)")
        ax2.set_ylabel("yaw efficiency")
        ax2.set_ylim(0, 1.05)
        ax2.set_title("point-turn efficiency vs slope")
        fig.tight_layout()
        path = out_dir / "campaign_slopes.png"
        fig.savefig(path, dpi=110)
        plt.close(fig)
        written.append(path)
    return written
