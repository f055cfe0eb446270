"""
Run artifacts: telemetry and trajectory CSVs, corridor dump and summary.

Files written by emit_report (into the chosen output folder):
    telemetry.csv   one row per control step, columns TELEMETRY_COLUMNS
    summary.txt     key: value lines
    trajectory.csv  planned p/v/a and arm angle sampled every 10 ms (plan runs)
    corridor.txt    corridor polytopes (plan runs that built one)
"""

from dataclasses import asdict
from pathlib import Path
from typing import Dict, Iterable

import numpy as np

from .corridor import write_corridor
from .optimizer import PlanResult
from .simulation import TELEMETRY_COLUMNS

TRAJECTORY_COLUMNS = ["t", "p_x", "p_y", "p_z", "v_x", "v_y", "v_z", "a_x", "a_y", "a_z", "alpha"]
TRAJECTORY_STEP = 0.01


def format_summary(summary) -> str:
    lines = []
    for key, value in asdict(summary).items():
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = f"{value:.6g}"
        else:
            text = str(value)
        lines.append(f"{key}: {text}")
    return "\n".join(lines) + "\n"


def write_telemetry_csv(rows: np.ndarray, path: Path) -> Path:
    path = Path(path)
    rows = np.asarray(rows, dtype=float).reshape(-1, len(TELEMETRY_COLUMNS))
    np.savetxt(path, rows, delimiter=",", fmt="%.6f", header=",".join(TELEMETRY_COLUMNS), comments="")
    return path


def write_trajectory_csv(result: PlanResult, path: Path, step: float = TRAJECTORY_STEP) -> Path:
    path = Path(path)
    traj = result.trajectory
    t = np.append(np.arange(0.0, traj.total_duration, step), traj.total_duration)
    data = np.column_stack([
        t,
        traj.sample(t, 0),
        traj.sample(t, 1),
        traj.sample(t, 2),
        result.morph_profile.alpha_at(t),
    ])
    np.savetxt(path, data, delimiter=",", fmt="%.6f", header=",".join(TRAJECTORY_COLUMNS), comments="")
    return path


def write_benchmark(rows: Iterable, path: Path) -> Path:
    """benchmark.csv: controller, v_max, avg_error, max_error."""
    path = Path(path)
    lines = ["controller,v_max,avg_error,max_error"]
    for row in rows:
        lines.append(f"{row.controller},{row.v_max:.3f},{row.avg_error:.6f},{row.max_error:.6f}")
    path.write_text("\n".join(lines) + "\n")
    return path


def emit_report(report, out_dir) -> Dict[str, Path]:
    """Write every artifact the run produced; returns {label: path}."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = {
        "telemetry": write_telemetry_csv(report.telemetry, out_dir / "telemetry.csv"),
    }
    summary_path = out_dir / "summary.txt"
    summary_path.write_text(format_summary(report.summary))
    written["summary"] = summary_path
    if report.plan is not None:
        written["trajectory"] = write_trajectory_csv(report.plan, out_dir / "trajectory.csv")
    if report.corridor is not None:
        written["corridor"] = write_corridor(report.corridor, out_dir / "corridor.txt")
    return written
