"""Deep Q-learning with a replay buffer, epsilon-greedy exploration and a delayed
target network."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .. import nn
from ..kinematics import N_ACTIONS
from ..nn import autodiff as ad
from .common import InsufficientDataError, ReplayBuffer, Transition, encode_observation, network_input


class TargetSync(enum.Enum):
    HARD = "hard"
    POLYAK = "polyak"


@dataclass(frozen=True)
class DQNConfig:
    gamma: float = 0.99
    lr: float = 5e-4
    batch_size: int = 64
    target_sync: TargetSync = TargetSync.HARD
    target_every: int = 1000
    polyak_rate: float = 0.005
    eps_start: float = 1.0
    eps_end: float = 0.01
    eps_decay_steps: int = 60_000
    train_start: int = 1000
    update_every: int = 1
    buffer_capacity: int = 20_000

    def __post_init__(self):
        object.__setattr__(self, "target_sync", TargetSync(self.target_sync))
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must lie in [0, 1)")
        if not 0 <= self.eps_end <= self.eps_start <= 1:
            raise ValueError("need 0 <= eps_end <= eps_start <= 1")
        if not 0 <= self.polyak_rate <= 1:
            raise ValueError("polyak_rate must lie in [0, 1]")
        for name in ("batch_size", "target_every", "eps_decay_steps", "update_every", "buffer_capacity"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.train_start < 0:
            raise ValueError("train_start must be >= 0")


def epsilon_at(step: int, cfg: DQNConfig) -> float:
    if step < 0:
        raise ValueError("step must be >= 0")
    frac = min(step / cfg.eps_decay_steps, 1.0)
    return cfg.eps_start + frac * (cfg.eps_end - cfg.eps_start)


def q_values(params: nn.NetworkParams, s: np.ndarray) -> np.ndarray:
    """Q-values for a batch of network inputs."""
    return nn.forward(params, s)["q"].value


def select_action_dqn(params: nn.NetworkParams, s: np.ndarray, eps: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy choice for a single network input; ties go to the lowest index."""
    if not 0 <= eps <= 1:
        raise ValueError("eps must lie in [0, 1]")
    # one uniform draw per call keeps the random stream aligned whatever the branch
    if rng.random() < eps:
        return int(rng.integers(N_ACTIONS))
    return int(np.argmax(q_values(params, s[None])[0]))


def td_targets(batch: dict, target_params: nn.NetworkParams, gamma: float) -> np.ndarray:
    """``r + gamma * max_a' Q(s', a'; target)``, with no bootstrap after a terminal step.

    Truncated steps still bootstrap: the state after a time-limit cut is not terminal.
    """
    r = np.asarray(batch["r"], dtype=np.float64)
    if r.size == 0:
        raise ValueError("empty batch")
    q_next = q_values(target_params, network_input(batch["s_next"])).max(axis=1)
    live = ~np.asarray(batch["terminated"], dtype=bool)
    return r + gamma * np.where(live, q_next, 0.0)


def dqn_loss(params: nn.NetworkParams, batch: dict, y: np.ndarray, tape: nn.Tape | None = None) -> ad.Tensor:
    q = nn.forward(params, network_input(batch["s"]), tape)["q"]
    q_sa = ad.take_along(q, batch["a"])
    return ad.mean(ad.square(q_sa - y))


def dqn_update(
    params: nn.NetworkParams,
    target_params: nn.NetworkParams,
    batch: dict,
    cfg: DQNConfig,
    opt: nn.AdamState,
) -> tuple[float, nn.NetworkParams]:
    """One Adam step on the squared TD error; the target network is only read."""
    if len(batch["r"]) < cfg.batch_size:
        raise InsufficientDataError(f"batch of {len(batch['r'])} < batch_size {cfg.batch_size}")
    y = td_targets(batch, target_params, cfg.gamma)
    tape = nn.Tape()
    loss = dqn_loss(params, batch, y, tape)
    grads = nn.backward(tape, loss)
    return float(loss.value), nn.NetworkParams(params.arch, nn.adam_step(params.tensors, grads, opt))


def sync_target(
    params: nn.NetworkParams, target_params: nn.NetworkParams, mode=TargetSync.HARD, rate: float = 1.0
) -> nn.NetworkParams:
    """Hard copy, or Polyak averaging ``rate * online + (1 - rate) * target``."""
    mode = TargetSync(mode)
    if set(params.tensors) != set(target_params.tensors):
        raise ValueError("online and target networks differ in parameter names")
    out = {}
    for name, p in params.tensors.items():
        t = target_params.tensors[name]
        if p.shape != t.shape:
            raise ValueError(f"{name}: shape mismatch {p.shape} vs {t.shape}")
        if mode is TargetSync.HARD or rate == 1.0:
            out[name] = p.copy()
        elif rate == 0.0:
            out[name] = t.copy()
        else:
            out[name] = rate * p + (1.0 - rate) * t
    return nn.NetworkParams(params.arch, out)


class DQNAgent:
    """Online learner: call :meth:`act` then :meth:`observe` once per env step."""

    kind = "dqn"

    def __init__(self, arch: dict, cfg: DQNConfig, seed: int):
        self.cfg = cfg
        self.params = nn.init_params(arch, seed)
        self.target = self.params.copy()
        self.opt = nn.AdamState(lr=cfg.lr)
        self.rng = np.random.default_rng([seed, 1])
        obs_shape = tuple(arch["input"])
        dtype = np.uint8 if len(obs_shape) == 3 else np.float64
        self.buffer = ReplayBuffer(cfg.buffer_capacity, obs_shape, dtype)
        self.steps = 0

    @property
    def epsilon(self) -> float:
        return epsilon_at(self.steps, self.cfg)

    def act(self, obs, greedy: bool = False) -> int:
        x = network_input(encode_observation(obs))
        return select_action_dqn(self.params, x, 0.0 if greedy else self.epsilon, self.rng)

    def observe(self, obs, action, reward, next_obs, terminated, truncated) -> dict | None:
        self.buffer.add(
            Transition(encode_observation(obs), int(action), float(reward), encode_observation(next_obs),
                       bool(terminated), bool(truncated))
        )
        self.steps += 1
        cfg = self.cfg
        stats = None
        if self.steps >= cfg.train_start and len(self.buffer) >= cfg.batch_size and self.steps % cfg.update_every == 0:
            batch = self.buffer.sample(cfg.batch_size, self.rng)
            loss, self.params = dqn_update(self.params, self.target, batch, cfg, self.opt)
            stats = {"loss": loss}
        if cfg.target_sync is TargetSync.HARD:
            if self.steps % cfg.target_every == 0:
                self.target = sync_target(self.params, self.target, TargetSync.HARD)
        else:
            self.target = sync_target(self.params, self.target, TargetSync.POLYAK, cfg.polyak_rate)
        return stats
