"""Seeded training trials with per-episode CSV metrics and final checkpoints."""

from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import nn
from ..agents import DQNAgent, PPOAgent
from ..env import ArmEnv, EnvConfig, ObservationMode
from ..kinematics import N_ACTIONS
from .config import RunConfig

log = logging.getLogger(__name__)

METRICS_COLUMNS = (
    "trial",
    "episode",
    "env_step",
    "episode_return",
    "episode_length",
    "mean_step_reward",
    "goal",
    "complete",
    "blocked_steps",
    "epsilon",
    "loss",
    "policy_objective",
    "value_loss",
    "entropy",
    "updates",
)


@dataclass
class MetricsRow:
    trial: int
    episode: int
    env_step: int
    episode_return: float
    episode_length: int
    mean_step_reward: float
    goal: int
    complete: int
    blocked_steps: int
    epsilon: float | None = None
    loss: float | None = None
    policy_objective: float | None = None
    value_loss: float | None = None
    entropy: float | None = None
    updates: int = 0

    def as_list(self) -> list[str]:
        return [_fmt(getattr(self, c)) for c in METRICS_COLUMNS]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def network_architecture(agent: str, env_cfg: EnvConfig) -> dict:
    heads = {"q": N_ACTIONS} if agent == "dqn" else {"logits": N_ACTIONS, "value": 1}
    if env_cfg.observation_mode is ObservationMode.FEATURES:
        return nn.feature_architecture(heads)
    w, h = env_cfg.camera.resolution
    return nn.image_architecture(heads, (h, w))


def make_agent(cfg: RunConfig, seed: int):
    arch = network_architecture(cfg.agent, cfg.env)
    if cfg.agent == "dqn":
        return DQNAgent(arch, cfg.agent_cfg, seed)
    return PPOAgent(arch, cfg.agent_cfg, seed)


def trial_seed(cfg: RunConfig, trial: int) -> int:
    return cfg.base_seed + trial


def run_trial(cfg: RunConfig, trial: int, out_dir: Path | None = None) -> tuple[list[MetricsRow], object]:
    """Train one agent for ``cfg.total_steps`` env steps.

    Returns the per-episode rows (the last one may be an unfinished episode,
    flagged ``complete = 0``) and the trained agent.  With ``out_dir`` the rows
    are also written to ``out_dir/metrics.csv`` as they arrive and the final
    network to ``out_dir/final.ckpt``.
    """
    seed = trial_seed(cfg, trial)
    env = ArmEnv(cfg.env, seed=seed)
    agent = make_agent(cfg, seed)
    rows: list[MetricsRow] = []
    sink = None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        sink = open(out_dir / "metrics.csv", "w", newline="", encoding="utf-8")
        writer = csv.writer(sink, lineterminator="\n")
        writer.writerow(METRICS_COLUMNS)
    try:
        obs = env.reset()
        ep_return, ep_len, blocked, stats = 0.0, 0, 0, []
        for step in range(1, cfg.total_steps + 1):
            action = agent.act(obs)
            res = env.step(action)
            upd = agent.observe(obs, action, res.reward, res.observation, res.terminated, res.truncated)
            if upd is not None:
                stats.append(upd)
            ep_return += res.reward
            ep_len += 1
            blocked += int(res.info["blocked"])
            obs = res.observation
            done = res.terminated or res.truncated
            if done or step == cfg.total_steps:
                row = MetricsRow(
                    trial=trial,
                    episode=len(rows),
                    env_step=step,
                    episode_return=float(ep_return),
                    episode_length=ep_len,
                    mean_step_reward=float(ep_return / ep_len),
                    goal=int(res.terminated),
                    complete=int(done),
                    blocked_steps=blocked,
                    updates=len(stats),
                )
                if cfg.agent == "dqn":
                    row.epsilon = float(agent.epsilon)
                    if stats:
                        row.loss = float(np.mean([s["loss"] for s in stats]))
                elif stats:
                    last = stats[-1]
                    row.policy_objective = last["policy_objective"]
                    row.value_loss = last["value_loss"]
                    row.entropy = last["entropy"]
                rows.append(row)
                if sink is not None:
                    writer.writerow(row.as_list())
                    sink.flush()
                ep_return, ep_len, blocked, stats = 0.0, 0, 0, []
                if done and step < cfg.total_steps:
                    obs = env.reset()
    finally:
        if sink is not None:
            sink.close()
    if out_dir is not None:
        nn.save_params(out_dir / "final.ckpt", agent.params, checkpoint_meta(cfg, trial))
    return rows, agent


def checkpoint_meta(cfg: RunConfig, trial: int) -> dict:
    return {
        "agent": cfg.agent,
        "observation_mode": cfg.env.observation_mode.value,
        "variant": cfg.env.variant.value,
        "trial": trial,
        "seed": trial_seed(cfg, trial),
        "total_steps": cfg.total_steps,
    }


def _trial_job(args) -> str:
    cfg, trial, out_dir = args
    run_trial(cfg, trial, out_dir)
    return str(out_dir)


def train(cfg: RunConfig) -> Path:
    """Run every trial and merge their rows into ``<run_dir>/metrics.csv``.

    Trials write only to their own ``trial_<i>`` directory, so running them in a
    process pool (``workers > 1``) gives the same files as running them in turn.
    """
    run_dir = cfg.run_dir
    run_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(cfg, i, run_dir / f"trial_{i}") for i in range(cfg.trials)]
    if cfg.workers > 1 and cfg.trials > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, cfg.trials)) as pool:
            list(pool.map(_trial_job, jobs))
    else:
        for job in jobs:
            log.info("trial %d/%d", job[1] + 1, cfg.trials)
            _trial_job(job)
    merged = io.StringIO()
    merged.write(",".join(METRICS_COLUMNS) + "\n")
    for _, _, trial_dir in jobs:
        lines = (trial_dir / "metrics.csv").read_text(encoding="utf-8").splitlines()
        for line in lines[1:]:
            merged.write(line + "\n")
    out = run_dir / "metrics.csv"
    out.write_text(merged.getvalue(), encoding="utf-8")
    return out
