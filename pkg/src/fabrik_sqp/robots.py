"""Robot models: DH tables, forward kinematics, and pose mismatch.

Ships the two supported manipulators (UR5 and KUKA LBR iiwa 14 R820)
with manufacturer kinematic constants. Joint limits default to
[-pi, pi] per joint; tighter limits can be configured or loaded from
JSON.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    CartesianError,
    cartesian_error,
    make_transform,
    require_transform,
    wrap_angle,
)

UR5 = "ur5"
KUKA = "kuka"


@dataclass(frozen=True)
class DHRow:
    """One standard Denavit-Hartenberg row (a, alpha, d, theta_offset)."""

    a: float
    alpha: float
    d: float
    theta_offset: float = 0.0

    def __post_init__(self):
        for name in ("a", "alpha", "d", "theta_offset"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"DH parameter {name} must be finite")
        # keep alpha in (-pi, pi]
        alpha = wrap_angle(self.alpha)
        if alpha == -math.pi:
            alpha = math.pi
        object.__setattr__(self, "alpha", alpha)


def dh_transform(row: DHRow, theta: float) -> np.ndarray:
    """Link transform Rz(theta + offset) Tz(d) Tx(a) Rx(alpha)."""
    th = theta + row.theta_offset
    ct, st = math.cos(th), math.sin(th)
    ca, sa = math.cos(row.alpha), math.sin(row.alpha)
    return np.array(
        [
            [ct, -st * ca, st * sa, row.a * ct],
            [st, ct * ca, -ct * sa, row.a * st],
            [0.0, sa, ca, row.d],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


@dataclass(frozen=True)
class RobotModel:
    name: str
    dh: tuple[DHRow, ...]
    link_lengths: np.ndarray
    joint_limits: np.ndarray  # (dof, 2) [lo, hi] radians

    def __post_init__(self):
        object.__setattr__(self, "dh", tuple(self.dh))
        object.__setattr__(self, "link_lengths", np.asarray(self.link_lengths, dtype=float))
        limits = np.asarray(self.joint_limits, dtype=float)
        if limits.shape != (len(self.dh), 2):
            raise ValueError("joint_limits must have one [lo, hi] pair per DH row")
        if np.any(limits[:, 0] >= limits[:, 1]):
            raise ValueError("each joint must satisfy lo < hi")
        object.__setattr__(self, "joint_limits", limits)

    @property
    def dof(self) -> int:
        return len(self.dh)

    def within_limits(self, theta, tol: float = 0.0) -> bool:
        theta = np.asarray(theta, dtype=float)
        return bool(
            np.all(theta >= self.joint_limits[:, 0] - tol)
            and np.all(theta <= self.joint_limits[:, 1] + tol)
        )


def _default_limits(dof: int) -> np.ndarray:
    return np.tile([-math.pi, math.pi], (dof, 1))


def ur5_model(joint_limits=None) -> RobotModel:
    """UR5 with the manufacturer standard DH table.

    Link lengths l1..l6 follow the geometric labelling used by the
    solvers: base riser, upper arm, forearm, wrist lateral offset, wrist
    riser, flange.
    """
    dh = (
        DHRow(a=0.0, alpha=math.pi / 2, d=0.089159),
        DHRow(a=-0.425, alpha=0.0, d=0.0),
        DHRow(a=-0.39225, alpha=0.0, d=0.0),
        DHRow(a=0.0, alpha=math.pi / 2, d=0.10915),
        DHRow(a=0.0, alpha=-math.pi / 2, d=0.09465),
        DHRow(a=0.0, alpha=0.0, d=0.0823),
    )
    lengths = np.array([dh[0].d, abs(dh[1].a), abs(dh[2].a), dh[3].d, dh[4].d, dh[5].d])
    limits = _default_limits(6) if joint_limits is None else joint_limits
    return RobotModel(name=UR5, dh=dh, link_lengths=lengths, joint_limits=limits)


def kuka_model(joint_limits=None) -> RobotModel:
    """KUKA LBR iiwa 14 R820 with the manufacturer standard DH table.

    Link lengths l1..l4: base-to-shoulder, shoulder-to-elbow,
    elbow-to-wrist, wrist-to-flange.
    """
    dh = (
        DHRow(a=0.0, alpha=-math.pi / 2, d=0.36),
        DHRow(a=0.0, alpha=math.pi / 2, d=0.0),
        DHRow(a=0.0, alpha=-math.pi / 2, d=0.42),
        DHRow(a=0.0, alpha=math.pi / 2, d=0.0),
        DHRow(a=0.0, alpha=-math.pi / 2, d=0.40),
        DHRow(a=0.0, alpha=math.pi / 2, d=0.0),
        DHRow(a=0.0, alpha=0.0, d=0.126),
    )
    lengths = np.array([dh[0].d, dh[2].d, dh[4].d, dh[6].d])
    limits = _default_limits(7) if joint_limits is None else joint_limits
    return RobotModel(name=KUKA, dh=dh, link_lengths=lengths, joint_limits=limits)


def get_model(name: str) -> RobotModel:
    key = name.strip().lower()
    if key == UR5:
        return ur5_model()
    if key == KUKA:
        return kuka_model()
    raise ValueError(f"unknown robot {name!r} (expected 'ur5' or 'kuka')")


def _derive_link_lengths(name: str, dh) -> np.ndarray:
    if name == UR5:
        return np.array([dh[0].d, abs(dh[1].a), abs(dh[2].a), dh[3].d, dh[4].d, dh[5].d])
    if name == KUKA:
        return np.array([dh[0].d, dh[2].d, dh[4].d, dh[6].d])
    raise ValueError(f"unknown robot name {name!r}")


def model_from_json(text: str) -> RobotModel:
    """Load a robot from the JSON schema {"name", "dh", "limits"} (SI units)."""
    doc = json.loads(text)
    for key in ("name", "dh", "limits"):
        if key not in doc:
            raise ValueError(f"robot JSON is missing field {key!r}")
    name = str(doc["name"]).lower()
    dh = tuple(
        DHRow(
            a=float(row["a"]),
            alpha=float(row["alpha"]),
            d=float(row["d"]),
            theta_offset=float(row.get("theta_offset", 0.0)),
        )
        for row in doc["dh"]
    )
    limits = np.asarray(doc["limits"], dtype=float)
    return RobotModel(
        name=name,
        dh=dh,
        link_lengths=_derive_link_lengths(name, dh),
        joint_limits=limits,
    )


def model_to_json(model: RobotModel) -> str:
    doc = {
        "name": model.name,
        "dh": [
            {"a": r.a, "alpha": r.alpha, "d": r.d, "theta_offset": r.theta_offset}
            for r in model.dh
        ],
        "limits": model.joint_limits.tolist(),
    }
    return json.dumps(doc, indent=2)


def load_model_file(path: str) -> RobotModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_json(fh.read())


# --- forward kinematics -----------------------------------------------------

def _check_theta(model: RobotModel, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (model.dof,):
        raise ValueError(f"{model.name} expects {model.dof} joint angles, got shape {theta.shape}")
    return theta


def forward_kinematics(model: RobotModel, theta) -> np.ndarray:
    """End-effector pose as the product of the link transforms."""
    theta = _check_theta(model, theta)
    T = np.eye(4)
    for row, th in zip(model.dh, theta):
        T = T @ dh_transform(row, th)
    return T


def fk_frames(model: RobotModel, theta) -> list[np.ndarray]:
    """Cumulative transforms [I, A1, A1 A2, ...] for each frame."""
    theta = _check_theta(model, theta)
    frames = [np.eye(4)]
    for row, th in zip(model.dh, theta):
        frames.append(frames[-1] @ dh_transform(row, th))
    return frames


def fk_prefix(model: RobotModel, theta_prefix) -> np.ndarray:
    """Product of the first len(theta_prefix) link transforms."""
    T = np.eye(4)
    for row, th in zip(model.dh, np.asarray(theta_prefix, dtype=float)):
        T = T @ dh_transform(row, th)
    return T


def pose_mismatch(model: RobotModel, theta, t_des) -> float:
    """Acceptance metric D = eps_rot + eps_pos for a candidate joint vector."""
    t_des = require_transform(t_des)
    return cartesian_error(forward_kinematics(model, theta), t_des).total
