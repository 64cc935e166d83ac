"""Proximal policy optimization with a shared actor-critic network and GAE."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import nn
from ..nn import autodiff as ad
from .common import encode_observation, network_input


@dataclass(frozen=True)
class PPOConfig:
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_eps: float = 0.2
    epochs: int = 4
    minibatch_size: int = 128
    rollout_length: int = 1024
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    lr: float = 3e-4

    def __post_init__(self):
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must lie in [0, 1)")
        if not 0 <= self.gae_lambda <= 1:
            raise ValueError("gae_lambda must lie in [0, 1]")
        if self.clip_eps <= 0:
            raise ValueError("clip_eps must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 1 <= self.minibatch_size <= self.rollout_length:
            raise ValueError("need 1 <= minibatch_size <= rollout_length")
        if self.lr <= 0:
            raise ValueError("lr must be positive")


class RolloutBuffer:
    """One rollout of on-policy experience.

    ``next_value[t]`` is the value of the state reached after step ``t`` when that
    state is not stored as step ``t + 1`` (episode cut by the step cap, or end of
    the rollout); it is ignored after a terminal step.
    """

    def __init__(self, length: int, obs_shape: tuple[int, ...], obs_dtype=np.float64):
        self.length = int(length)
        self.s = np.zeros((length, *obs_shape), dtype=obs_dtype)
        self.a = np.zeros(length, dtype=np.int64)
        self.logp = np.zeros(length)
        self.value = np.zeros(length)
        self.r = np.zeros(length)
        self.terminated = np.zeros(length, dtype=bool)
        self.truncated = np.zeros(length, dtype=bool)
        self.next_value = np.zeros(length)
        self.advantages: np.ndarray | None = None
        self.returns: np.ndarray | None = None
        self.n = 0

    def __len__(self):
        return self.n

    @property
    def full(self) -> bool:
        return self.n == self.length

    def add(self, s, a, logp, value, r, terminated, truncated, next_value=0.0) -> None:
        if self.full:
            raise IndexError("rollout buffer is full")
        i = self.n
        self.s[i], self.a[i], self.logp[i], self.value[i] = s, a, logp, value
        self.r[i], self.terminated[i], self.truncated[i] = r, terminated, truncated
        self.next_value[i] = next_value
        self.n += 1

    def clear(self) -> None:
        self.n = 0
        self.advantages = None
        self.returns = None


def gae(rewards, values, next_values, terminated, episode_end, gamma: float, lam: float):
    """Raw GAE advantages and returns ``A + V``.

    ``next_values[t]`` is V of the state after step ``t``; ``episode_end[t]`` stops
    the recursion (termination or truncation) and ``terminated[t]`` also drops the
    bootstrap.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    n = rewards.size
    if n == 0:
        raise ValueError("empty rollout")
    values = np.asarray(values, dtype=np.float64)
    live = 1.0 - np.asarray(terminated, dtype=np.float64)
    carry = 1.0 - np.asarray(episode_end, dtype=np.float64)
    delta = rewards + gamma * live * np.asarray(next_values, dtype=np.float64) - values
    adv = np.zeros(n)
    running = 0.0
    for t in range(n - 1, -1, -1):
        running = delta[t] + gamma * lam * carry[t] * running
        adv[t] = running
    return adv, adv + values


def normalize_advantages(adv: np.ndarray) -> np.ndarray:
    centred = adv - adv.mean()
    std = centred.std()
    return centred / std if std > 0 else centred


def compute_gae(rollout: RolloutBuffer, gamma: float, lam: float, normalize: bool = True):
    """Fill ``rollout.advantages`` and ``rollout.returns`` and return them."""
    n = rollout.n
    if n == 0:
        raise ValueError("empty rollout")
    # the state after step t is step t + 1 unless the episode ended or the rollout stops
    next_values = rollout.next_value[:n].copy()
    ends = rollout.terminated[:n] | rollout.truncated[:n]
    inner = ~ends[:-1]
    next_values[:-1][inner] = rollout.value[1:n][inner]
    adv, ret = gae(rollout.r[:n], rollout.value[:n], next_values, rollout.terminated[:n], ends, gamma, lam)
    rollout.advantages = normalize_advantages(adv) if normalize else adv
    rollout.returns = ret
    return rollout.advantages, rollout.returns


def ppo_clip_loss(ratio, adv, clip_eps: float):
    """Per-sample clipped surrogate ``min(r A, clip(r, 1 - eps, 1 + eps) A)`` (to maximize)."""
    ratio = np.asarray(ratio, dtype=np.float64)
    adv = np.asarray(adv, dtype=np.float64)
    return np.minimum(ratio * adv, np.clip(ratio, 1 - clip_eps, 1 + clip_eps) * adv)


def ppo_loss(params: nn.NetworkParams, s, a, old_logp, adv, returns, cfg: PPOConfig, tape: nn.Tape | None = None):
    """Scalar loss to minimize: ``-surrogate + value_coef * value_mse - entropy_coef * entropy``.

    Returns the loss tensor and a dict of diagnostics (``ratio`` included).
    """
    out = nn.forward(params, s, tape)
    logp_all = ad.log_softmax(out["logits"])
    logp = ad.take_along(logp_all, a)
    ratio = ad.exp(logp - np.asarray(old_logp, dtype=np.float64))
    adv = np.asarray(adv, dtype=np.float64)
    surr = ad.minimum(ratio * adv, ad.clip(ratio, 1 - cfg.clip_eps, 1 + cfg.clip_eps) * adv)
    policy_obj = ad.mean(surr)
    value = ad.reshape(out["value"], (-1,))
    value_loss = ad.mean(ad.square(value - np.asarray(returns, dtype=np.float64)))
    entropy = ad.mean(ad.neg(ad.sum_(ad.exp(logp_all) * logp_all, axis=1)))
    loss = ad.neg(policy_obj) + cfg.value_coef * value_loss + ad.neg(entropy) * cfg.entropy_coef
    info = {
        "ratio": ratio.value,
        "policy_objective": float(policy_obj.value),
        "value_loss": float(value_loss.value),
        "entropy": float(entropy.value),
    }
    return loss, info


def ppo_update(
    params: nn.NetworkParams,
    rollout: RolloutBuffer,
    cfg: PPOConfig,
    opt: nn.AdamState,
    rng: np.random.Generator,
) -> tuple[dict, nn.NetworkParams]:
    """``epochs`` passes of shuffled minibatch Adam steps; clears the rollout."""
    if rollout.n != cfg.rollout_length:
        raise ValueError(f"rollout holds {rollout.n} steps, expected {cfg.rollout_length}")
    if rollout.advantages is None:
        compute_gae(rollout, cfg.gamma, cfg.gae_lambda)
    n = rollout.n
    s_all = network_input(rollout.s[:n])
    stats = {"policy_objective": [], "value_loss": [], "entropy": [], "clip_fraction": []}
    first_ratio = None
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n - cfg.minibatch_size + 1, cfg.minibatch_size):
            idx = order[start : start + cfg.minibatch_size]
            tape = nn.Tape()
            loss, info = ppo_loss(
                params, s_all[idx], rollout.a[idx], rollout.logp[idx],
                rollout.advantages[idx], rollout.returns[idx], cfg, tape,
            )
            grads = nn.backward(tape, loss)
            params = nn.NetworkParams(params.arch, nn.adam_step(params.tensors, grads, opt))
            if first_ratio is None:
                first_ratio = info["ratio"]
            for key in ("policy_objective", "value_loss", "entropy"):
                stats[key].append(info[key])
            stats["clip_fraction"].append(float(np.mean(np.abs(info["ratio"] - 1) > cfg.clip_eps)))
    rollout.clear()
    summary = {k: float(np.mean(v)) for k, v in stats.items()}
    summary["first_ratio"] = first_ratio
    return summary, params


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


class PPOAgent:
    """Online learner: call :meth:`act` then :meth:`observe` once per env step."""

    kind = "ppo"

    def __init__(self, arch: dict, cfg: PPOConfig, seed: int):
        self.cfg = cfg
        self.params = nn.init_params(arch, seed)
        self.opt = nn.AdamState(lr=cfg.lr)
        self.rng = np.random.default_rng([seed, 2])
        obs_shape = tuple(arch["input"])
        dtype = np.uint8 if len(obs_shape) == 3 else np.float64
        self.rollout = RolloutBuffer(cfg.rollout_length, obs_shape, dtype)
        self._pending: tuple | None = None
        self.steps = 0

    def _evaluate(self, encoded) -> tuple[np.ndarray, float]:
        out = nn.forward(self.params, network_input(encoded)[None])
        return _log_softmax(out["logits"].value[0]), float(out["value"].value[0, 0])

    def act(self, obs, greedy: bool = False) -> int:
        enc = encode_observation(obs)
        logp, value = self._evaluate(enc)
        if greedy:
            return int(np.argmax(logp))
        cdf = np.cumsum(np.exp(logp))
        a = int(min(np.searchsorted(cdf, self.rng.random() * cdf[-1], side="right"), logp.size - 1))
        self._pending = (enc, a, float(logp[a]), value)
        return a

    def observe(self, obs, action, reward, next_obs, terminated, truncated) -> dict | None:
        if self._pending is None or self._pending[1] != int(action):
            raise RuntimeError("observe() must follow act() for the same action")
        enc, a, logp, value = self._pending
        self._pending = None
        last = self.rollout.n == self.rollout.length - 1
        next_value = 0.0
        if not terminated and (truncated or last):
            next_value = self._evaluate(encode_observation(next_obs))[1]
        self.rollout.add(enc, a, logp, value, reward, terminated, truncated, next_value)
        self.steps += 1
        if not self.rollout.full:
            return None
        stats, self.params = ppo_update(self.params, self.rollout, self.cfg, self.opt, self.rng)
        stats.pop("first_ratio")
        return stats
