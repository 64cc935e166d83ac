"""Greedy rollouts of a saved network, with optional PNG frame dumps."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .. import nn
from ..agents import encode_observation, network_input
from ..env import ArmEnv, EnvConfig
from ..kinematics import N_ACTIONS

FRAME_EVERY = 10


@dataclass
class EpisodeResult:
    episode_return: float
    length: int
    goal: bool
    actions: list[int] = field(default_factory=list)
    rewards: list[float] = field(default_factory=list)


@dataclass
class EvalSummary:
    episodes: list[EpisodeResult]
    frames: list[Path] = field(default_factory=list)

    @property
    def mean_return(self) -> float:
        return float(np.mean([e.episode_return for e in self.episodes]))

    @property
    def mean_length(self) -> float:
        return float(np.mean([e.length for e in self.episodes]))

    @property
    def goal_rate(self) -> float:
        return float(np.mean([e.goal for e in self.episodes]))


def greedy_action(params: nn.NetworkParams, obs) -> int:
    """Arg-max action of the Q head, or the mode of the policy head."""
    out = nn.forward(params, network_input(encode_observation(obs))[None])
    head = out["q"] if "q" in out else out["logits"]
    return int(np.argmax(head.value[0]))


def check_compatible(params: nn.NetworkParams, env_cfg: EnvConfig) -> None:
    obs_shape = ArmEnv(env_cfg).observation_shape
    expected = obs_shape if len(obs_shape) == 1 else (obs_shape[0] // nn.network.DOWNSAMPLE, obs_shape[1] // nn.network.DOWNSAMPLE, 3)
    if tuple(params.arch["input"]) != tuple(expected):
        raise nn.ArchitectureError(
            f"checkpoint expects input {tuple(params.arch['input'])}, environment "
            f"({env_cfg.observation_mode.value} mode) produces {tuple(expected)}"
        )
    heads = params.arch["heads"]
    n_out = heads.get("q", heads.get("logits"))
    if n_out != N_ACTIONS:
        raise nn.ArchitectureError(f"checkpoint has no {N_ACTIONS}-way action head")


def evaluate(
    params: nn.NetworkParams,
    env_cfg: EnvConfig,
    episodes: int = 10,
    seed: int = 0,
    frame_dir: Path | None = None,
    policy=None,
) -> EvalSummary:
    """Run ``episodes`` rollouts; episode ``k`` resets the env with ``seed + k``.

    ``policy(obs) -> action`` replaces the greedy network policy when given.
    With ``frame_dir`` every tenth frame (step 0, 10, 20, ...) is saved as PNG.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    check_compatible(params, env_cfg)
    act = policy or (lambda o: greedy_action(params, o))
    env = ArmEnv(env_cfg)
    results, frames = [], []
    if frame_dir is not None:
        frame_dir = Path(frame_dir)
        frame_dir.mkdir(parents=True, exist_ok=True)
    for k in range(episodes):
        obs = env.reset(seed=seed + k)
        ep = EpisodeResult(0.0, 0, False)
        t = 0
        while True:
            if frame_dir is not None and t % FRAME_EVERY == 0:
                path = frame_dir / f"ep{k:03d}_step{t:03d}.png"
                Image.fromarray(env.last_image).save(path)
                frames.append(path)
            a = act(obs)
            res = env.step(a)
            t += 1
            ep.actions.append(int(a))
            ep.rewards.append(float(res.reward))
            ep.episode_return += res.reward
            obs = res.observation
            if res.terminated or res.truncated:
                ep.length, ep.goal = t, bool(res.terminated)
                break
        results.append(ep)
    return EvalSummary(results, frames)


def load_checkpoint(path) -> tuple[nn.NetworkParams, dict]:
    return nn.load_params(path)
