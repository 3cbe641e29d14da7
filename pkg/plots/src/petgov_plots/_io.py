"""Shared CSV / metadata loading for the figure scripts.

The trajectory CSV is the exact simulator log layout; the sidecar
``<csv>.meta.json`` written alongside it carries the effective scenario
parameters (constraint axes, cone angle, saturation, sampling period and
the goal attitude) that figures need but the log rows do not repeat.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pandas as pd

LOG_COLUMNS = (
    ["t"]
    + [f"R{r}{c}" for r in (1, 2, 3) for c in (1, 2, 3)]
    + ["omega_x", "omega_y", "omega_z"]
    + [f"Rg{r}{c}" for r in (1, 2, 3) for c in (1, 2, 3)]
    + ["V", "Gamma", "Gamma_d", "Gamma_g", "event_flag"]
    + ["tau_x", "tau_y", "tau_z", "tau_norm", "c_pointing", "phi_R_Rd", "phi_Rg_Rd"]
)


def load_log(csv_path) -> pd.DataFrame:
    frame = pd.read_csv(csv_path)
    missing = [name for name in LOG_COLUMNS if name not in frame.columns]
    if missing:
        raise ValueError(f"{csv_path}: missing columns: {', '.join(missing)}")
    if list(frame.columns) != LOG_COLUMNS:
        raise ValueError(f"{csv_path}: unexpected column layout")
    return frame


def axis_angle_matrix(axis_angle) -> np.ndarray:
    v = np.asarray(axis_angle, dtype=float)
    axis, angle = v[:3], float(v[3])
    if angle == 0.0:
        return np.eye(3)
    axis = axis / np.linalg.norm(axis)
    K = np.array(
        [
            [0.0, -axis[2], axis[1]],
            [axis[2], 0.0, -axis[0]],
            [-axis[1], axis[0], 0.0],
        ]
    )
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


class ScenarioMeta:
    """Constraint geometry and run parameters pulled from the sidecar."""

    def __init__(self, config: dict):
        self.a_b = np.asarray(config["a_b"], dtype=float)
        self.a_b /= np.linalg.norm(self.a_b)
        self.a_c = np.asarray(config["a_c"], dtype=float)
        self.a_c /= np.linalg.norm(self.a_c)
        self.theta_c = float(np.deg2rad(config["theta_c_deg"]))
        self.cos_theta_c = float(np.cos(self.theta_c))
        self.tau_max = float(config["tau_max"])
        self.T_s = float(config["T_s"])
        self.r_d = axis_angle_matrix(config["Rd_axis_angle"])


def load_meta(csv_path, meta_path=None) -> ScenarioMeta:
    path = Path(meta_path) if meta_path else Path(str(csv_path) + ".meta.json")
    if not path.exists():
        raise ValueError(
            f"metadata sidecar not found: {path} (pass --meta or keep the "
            "simulator's .meta.json next to the CSV)"
        )
    payload = json.loads(path.read_text())
    config = payload.get("effective_config", payload)
    return ScenarioMeta(config)


def rotation_stack(frame: pd.DataFrame, prefix: str = "R") -> np.ndarray:
    names = [f"{prefix}{r}{c}" for r in (1, 2, 3) for c in (1, 2, 3)]
    return frame[names].to_numpy().reshape(-1, 3, 3)
