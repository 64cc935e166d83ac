"""Forward kinematics, discrete joint actions and workspace validation for a 6-DOF arm."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

JOINT_NAMES = ("base", "shoulder", "elbow", "wrist1", "wrist2", "wrist3")
N_JOINTS = 6
N_ACTIONS = 10

# Rotation per action for the five actuated joints; wrist 3 only spins the camera.
STEP_SIZES = (0.025, 0.02, 0.02, 0.015, 0.015)


class InvalidActionError(ValueError):
    pass


@dataclass(frozen=True)
class DHTable:
    """Standard Denavit-Hartenberg rows ``(a, d, alpha, theta_offset)``, one per joint."""

    joints: tuple[tuple[float, float, float, float], ...]

    def __post_init__(self):
        rows = tuple(tuple(float(v) for v in row) for row in self.joints)
        if any(len(row) != 4 for row in rows):
            raise ValueError("each DH row needs (a, d, alpha, theta_offset)")
        if not np.all(np.isfinite(np.array(rows, dtype=float))):
            raise ValueError("DH parameters must be finite")
        object.__setattr__(self, "joints", rows)

    def as_array(self) -> np.ndarray:
        return np.array(self.joints, dtype=float)

    def __len__(self):
        return len(self.joints)


# UR10e-class nominal parameters (a, d, alpha, theta_offset).
UR10E_DH = DHTable(
    (
        (0.0, 0.1807, np.pi / 2, 0.0),
        (-0.6127, 0.0, 0.0, 0.0),
        (-0.57155, 0.0, 0.0, 0.0),
        (0.0, 0.17415, np.pi / 2, 0.0),
        (0.0, 0.11985, -np.pi / 2, 0.0),
        (0.0, 0.11655, 0.0, 0.0),
    )
)


@dataclass(frozen=True)
class Pose:
    position: np.ndarray
    orientation: np.ndarray

    def matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.orientation
        T[:3, 3] = self.position
        return T

    @classmethod
    def from_matrix(cls, T: np.ndarray) -> "Pose":
        return cls(np.array(T[:3, 3], dtype=float), np.array(T[:3, :3], dtype=float))

    def compose(self, other: "Pose") -> "Pose":
        """Return ``self * other`` (``other`` expressed in this frame)."""
        return Pose(
            self.position + self.orientation @ other.position,
            self.orientation @ other.orientation,
        )


@dataclass(frozen=True)
class WorkspaceLimits:
    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.min, dtype=float)
        hi = np.asarray(self.max, dtype=float)
        if lo.shape != (3,) or hi.shape != (3,):
            raise ValueError("workspace limits must be 3-vectors")
        if not np.all(lo < hi):
            raise ValueError("workspace min must be below max on every axis")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    def contains(self, p: np.ndarray) -> bool:
        # closed box: a point on a face is inside
        return bool(np.all(p >= self.min) and np.all(p <= self.max))


DEFAULT_LIMITS = WorkspaceLimits(np.array([-0.30, -0.75, 0.05]), np.array([0.50, 0.75, 1.30]))
DEFAULT_JOINT_LIMITS = (-2 * np.pi, 2 * np.pi)


@dataclass(frozen=True)
class DiscreteAction:
    index: int
    joint: int = field(init=False)
    direction: int = field(init=False)
    magnitude: float = field(init=False)

    def __post_init__(self):
        joint, direction, magnitude = decode_action(self.index)
        object.__setattr__(self, "joint", joint)
        object.__setattr__(self, "direction", direction)
        object.__setattr__(self, "magnitude", magnitude)


def dh_transform(a: float, d: float, alpha: float, theta: float) -> np.ndarray:
    ct, st = np.cos(theta), np.sin(theta)
    ca, sa = np.cos(alpha), np.sin(alpha)
    return np.array(
        [
            [ct, -st * ca, st * sa, a * ct],
            [st, ct * ca, -ct * sa, a * st],
            [0.0, sa, ca, d],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def forward_kinematics(dh: DHTable, q) -> Pose:
    """End-effector pose in the base frame for joint angles ``q``."""
    q = np.asarray(q, dtype=float)
    if q.shape != (len(dh),):
        raise ValueError(f"expected {len(dh)} joint angles, got shape {q.shape}")
    if not np.all(np.isfinite(q)):
        raise ValueError("joint angles must be finite")
    T = np.eye(4)
    for (a, d, alpha, offset), theta in zip(dh.joints, q):
        T = T @ dh_transform(a, d, alpha, theta + offset)
    return Pose.from_matrix(T)


def decode_action(index) -> tuple[int, int, float]:
    """Map an action index to ``(joint, direction, magnitude)``.

    Even indices move a joint in the positive direction, odd indices in the
    negative direction: ``2k -> (k, +1)`` and ``2k + 1 -> (k, -1)``.
    """
    if isinstance(index, (bool, np.bool_)) or not isinstance(index, (int, np.integer)):
        raise InvalidActionError(f"action index must be an integer, got {index!r}")
    if not 0 <= index < N_ACTIONS:
        raise InvalidActionError(f"action index {index} outside [0, {N_ACTIONS - 1}]")
    joint = int(index) // 2
    direction = 1 if index % 2 == 0 else -1
    return joint, direction, STEP_SIZES[joint]


def apply_action(q, action) -> np.ndarray:
    """Return a copy of ``q`` with one joint moved by the action's step."""
    if isinstance(action, DiscreteAction):
        joint, direction, magnitude = action.joint, action.direction, action.magnitude
    else:
        joint, direction, magnitude = decode_action(action)
    out = np.array(q, dtype=float, copy=True)
    out[joint] = out[joint] + direction * magnitude
    return out


def validate_move(
    dh: DHTable,
    limits: WorkspaceLimits,
    q_candidate,
    joint_limits: tuple[float, float] = DEFAULT_JOINT_LIMITS,
) -> bool:
    """True if the candidate configuration is allowed, False if the move is blocked."""
    q = np.asarray(q_candidate, dtype=float)
    lo, hi = joint_limits
    if not np.all(np.isfinite(q)) or np.any(q < lo) or np.any(q > hi):
        return False
    return limits.contains(forward_kinematics(dh, q).position)
