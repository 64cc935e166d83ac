"""Episodic reacher / tracker environments driven by the simulated arm and camera."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import kinematics as kin
from .scene import (
    CameraModel,
    MonitorModel,
    SceneConfig,
    TargetMode,
    TargetState,
    default_monitor,
    drift_target,
    render,
    reset_target,
)
from .vision import DEFAULT_CUTOFFS, Detection, HoughConfig, detect_target

FRAME_CENTER = (200.0, 150.0)
N_FEATURES = 9

# Named start configurations (base, shoulder, elbow, wrist 1, wrist 2, wrist 3).
#   edge: camera 0.175 m from the monitor and turned 0.12 rad (about 5 base
#         steps) to the side; the target sits at the right frame edge, so the
#         policy must centre it and close in by a step or two.
#   away: camera 0.30 m out and turned 0.5 rad (20 base steps); the target is
#         out of view at reset.
START_POSES = {
    "edge": (math.pi + 0.12, -1.882, 2.182, -0.3, math.pi / 2, math.pi),
    "away": (math.pi + 0.5, -2.14, 2.32, -0.18, math.pi / 2, math.pi),
}
DEFAULT_START_POSE = START_POSES["edge"]


class EnvVariant(enum.Enum):
    STATIC_REACHER = "static_reacher"
    REACHER = "reacher"
    TRACKER = "tracker"

    @property
    def target_mode(self) -> TargetMode:
        return {
            EnvVariant.STATIC_REACHER: TargetMode.STATIC,
            EnvVariant.REACHER: TargetMode.RANDOM_RESET,
            EnvVariant.TRACKER: TargetMode.TRACKER,
        }[self]


class ObservationMode(enum.Enum):
    IMAGE = "image"
    FEATURES = "features"


class EpisodeFinishedError(RuntimeError):
    pass


@dataclass(frozen=True)
class EnvConfig:
    variant: EnvVariant = EnvVariant.STATIC_REACHER
    max_episode_steps: int = 150
    goal_reward: float = 20.0
    out_of_frame_reward: float = -0.01
    block_penalty: float = 1.0
    goal_radius: float = 30.0
    goal_dist: float = 70.0
    max_dist: float = 250.0
    max_radius: float = 40.0
    min_radius: float = 10.0
    start_pose: tuple[float, ...] = DEFAULT_START_POSE
    observation_mode: ObservationMode = ObservationMode.IMAGE
    dh: kin.DHTable = kin.UR10E_DH
    limits: kin.WorkspaceLimits = kin.DEFAULT_LIMITS
    joint_limits: tuple[float, float] = kin.DEFAULT_JOINT_LIMITS
    camera: CameraModel = field(default_factory=CameraModel)
    monitor: MonitorModel = field(default_factory=default_monitor)
    scene: SceneConfig = field(default_factory=SceneConfig)
    hough: HoughConfig = field(default_factory=HoughConfig)
    cutoffs: tuple[int, int, int] = DEFAULT_CUTOFFS
    target_radius_px: float = 60.0
    reset_margin: int = 100

    def __post_init__(self):
        object.__setattr__(self, "variant", EnvVariant(self.variant))
        object.__setattr__(self, "observation_mode", ObservationMode(self.observation_mode))
        object.__setattr__(self, "start_pose", tuple(float(q) for q in self.start_pose))
        if len(self.start_pose) != kin.N_JOINTS:
            raise ValueError("start_pose needs 6 joint angles")
        if not self.min_radius < self.goal_radius < self.max_radius:
            raise ValueError("need min_radius < goal_radius < max_radius")
        if self.max_episode_steps < 1:
            raise ValueError("max_episode_steps must be >= 1")
        w, h = self.camera.resolution
        if not math.isclose(self.max_dist, math.hypot(w / 2, h / 2)):
            raise ValueError(f"max_dist must be the frame half-diagonal {math.hypot(w / 2, h / 2)}")


@dataclass
class StepResult:
    observation: np.ndarray
    reward: float
    terminated: bool
    truncated: bool
    info: dict


@dataclass
class EnvState:
    joints: np.ndarray
    target: TargetState
    step_count: int
    episode_lighting: float
    rng: np.random.Generator


def is_goal(d: Detection | None, cfg: EnvConfig = EnvConfig()) -> bool:
    if d is None:
        return False
    dist = math.hypot(d.center[0] - FRAME_CENTER[0], d.center[1] - FRAME_CENTER[1])
    return d.radius > cfg.goal_radius and dist < cfg.goal_dist


def compute_reward(d: Detection | None, blocked: bool, cfg: EnvConfig = EnvConfig()) -> float:
    """Shaped reward for one step.

    Goal -> ``goal_reward``; target not visible -> ``out_of_frame_reward``;
    otherwise the sum of a centring term in ``[-1, 0]`` and a size term in
    ``[-1, 0]``.  A blocked move costs an extra ``block_penalty``.
    """
    if is_goal(d, cfg):
        reward = cfg.goal_reward
    elif d is None:
        reward = cfg.out_of_frame_reward
    else:
        dist = math.hypot(d.center[0] - FRAME_CENTER[0], d.center[1] - FRAME_CENTER[1])
        dist_reward = -1.0 * dist / cfg.max_dist
        radius_reward = (d.radius - cfg.max_radius) / (cfg.max_radius - cfg.min_radius)
        reward = radius_reward + dist_reward
    if blocked:
        reward -= cfg.block_penalty
    return reward


def features(joints, d: Detection | None, cfg: EnvConfig = EnvConfig()) -> np.ndarray:
    """Compact observation: 5 actuated joint angles, a visibility flag, the target
    offset from the frame centre (each axis scaled to [-1, 1]) and radius / max_radius."""
    out = np.zeros(N_FEATURES)
    out[:5] = np.asarray(joints, dtype=float)[:5]
    if d is not None:
        out[5] = 1.0
        out[6] = (d.center[0] - FRAME_CENTER[0]) / FRAME_CENTER[0]
        out[7] = (d.center[1] - FRAME_CENTER[1]) / FRAME_CENTER[1]
        out[8] = d.radius / cfg.max_radius
    return out


class ArmEnv:
    """One arm, one camera, one monitor.  Single-threaded; make one per trial."""

    n_actions = kin.N_ACTIONS

    def __init__(self, cfg: EnvConfig = EnvConfig(), seed: int | None = None):
        self.cfg = cfg
        self.state: EnvState | None = None
        self._rng = np.random.default_rng(seed)
        self._done = True
        self.last_image: np.ndarray | None = None
        self.last_detection: Detection | None = None

    @property
    def observation_shape(self) -> tuple[int, ...]:
        if self.cfg.observation_mode is ObservationMode.FEATURES:
            return (N_FEATURES,)
        w, h = self.cfg.camera.resolution
        return (h, w, 3)

    def camera_pose(self, joints=None) -> kin.Pose:
        q = self.state.joints if joints is None else joints
        return self.cfg.camera.pose_from_flange(kin.forward_kinematics(self.cfg.dh, q))

    def reset(self, seed: int | None = None) -> np.ndarray:
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        cfg = self.cfg
        target = reset_target(
            cfg.variant.target_mode, self._rng, cfg.target_radius_px, cfg.reset_margin
        )
        self.state = EnvState(
            joints=np.array(cfg.start_pose, dtype=float),
            target=target,
            step_count=0,
            episode_lighting=cfg.scene.sample_lighting(self._rng),
            rng=self._rng,
        )
        self._done = False
        return self._observe()

    def _observe(self) -> np.ndarray:
        cfg, st = self.cfg, self.state
        img = render(
            cfg.camera, self.camera_pose(), cfg.monitor, st.target, cfg.scene, st.rng, st.episode_lighting
        )
        self.last_image = img
        self.last_detection = detect_target(img, cfg.cutoffs, cfg.hough)
        if cfg.observation_mode is ObservationMode.FEATURES:
            return features(st.joints, self.last_detection, cfg)
        return img

    def step(self, action) -> StepResult:
        if self.state is None or self._done:
            raise EpisodeFinishedError("call reset() before stepping a finished episode")
        cfg, st = self.cfg, self.state
        candidate = kin.apply_action(st.joints, int(action))
        blocked = not kin.validate_move(cfg.dh, cfg.limits, candidate, cfg.joint_limits)
        if not blocked:
            st.joints = candidate
        if cfg.variant is EnvVariant.TRACKER:
            st.target = drift_target(st.target)
        st.step_count += 1
        obs = self._observe()
        det = self.last_detection
        reward = compute_reward(det, blocked, cfg)
        terminated = is_goal(det, cfg)
        truncated = st.step_count >= cfg.max_episode_steps and not terminated
        self._done = terminated or truncated
        return StepResult(obs, reward, terminated, truncated, {"detection": det, "blocked": blocked})
