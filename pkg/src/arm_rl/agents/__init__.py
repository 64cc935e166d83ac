from .common import InsufficientDataError, ReplayBuffer, Transition, encode_observation, network_input
from .dqn import (
    DQNAgent,
    DQNConfig,
    TargetSync,
    dqn_loss,
    dqn_update,
    epsilon_at,
    select_action_dqn,
    sync_target,
    td_targets,
)
from .ppo import (
    PPOAgent,
    PPOConfig,
    RolloutBuffer,
    compute_gae,
    gae,
    normalize_advantages,
    ppo_clip_loss,
    ppo_loss,
    ppo_update,
)

__all__ = [
    "DQNAgent",
    "DQNConfig",
    "InsufficientDataError",
    "PPOAgent",
    "PPOConfig",
    "ReplayBuffer",
    "RolloutBuffer",
    "TargetSync",
    "Transition",
    "compute_gae",
    "dqn_loss",
    "dqn_update",
    "encode_observation",
    "epsilon_at",
    "gae",
    "network_input",
    "normalize_advantages",
    "ppo_clip_loss",
    "ppo_loss",
    "ppo_update",
    "select_action_dqn",
    "sync_target",
    "td_targets",
]
