"""Train a PPO reacher on compact features, then watch the greedy policy.

Trains one seed, writes the learning curves as SVG, runs five greedy evaluation
episodes and dumps every tenth camera frame.

    python3 demos/reach_with_ppo.py [total_steps]

About 20k steps (a few minutes on one core) is enough for the policy to reach
the target in a handful of moves from the default start pose.
"""

import os
import sys
from pathlib import Path

from arm_rl import nn
from arm_rl.harness.config import build_run_config
from arm_rl.harness.evaluate import evaluate
from arm_rl.harness.plot import plot
from arm_rl.harness.train import train


def main(total_steps: int) -> None:
    out = Path(os.environ.get("ARM_RL_OUTPUT", "demo_output")) / "reach_with_ppo"
    cfg = build_run_config(
        {"agent": "ppo", "env.observation_mode": "features", "total_steps": str(total_steps), "trials": "1",
         "output_dir": str(out), "run_name": "ppo"},
        environ={},
    )
    metrics = train(cfg)
    print(f"metrics: {metrics}")
    for path in plot([metrics], out / "plots"):
        print(f"plot: {path}")
    params, _ = nn.load_params(cfg.run_dir / "trial_0" / "final.ckpt")
    summary = evaluate(params, cfg.env, episodes=5, seed=100, frame_dir=out / "frames")
    for k, ep in enumerate(summary.episodes):
        print(f"episode {k}: length {ep.length:3d} goal {ep.goal} return {ep.episode_return:+.2f} actions {ep.actions}")
    print(f"mean length {summary.mean_length:.1f}, goal rate {summary.goal_rate:.2f}, "
          f"{len(summary.frames)} frames in {out / 'frames'}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 20_000)
