"""Sweep the base joint around the centred pose and print what the camera reports.

The shaped reward is negative for every visible, non-goal view and only -0.01
when the target is out of view, so looking away is the cheapest place to sit.
This sweep shows where the target is visible, where the goal window is, and
what each step there is worth.

    python3 demos/reward_landscape.py
"""

import math

import numpy as np

from arm_rl.env import ArmEnv, EnvConfig, compute_reward, is_goal

CENTRED = (math.pi, -1.882, 2.182, -0.3, math.pi / 2, math.pi)


def main() -> None:
    print(" base offset  detection                 goal   reward")
    for offset in np.round(np.arange(-0.20, 0.201, 0.02), 2):
        pose = (CENTRED[0] + offset, *CENTRED[1:])
        env = ArmEnv(EnvConfig(observation_mode="features", start_pose=pose))
        env.reset(seed=0)
        det = env.last_detection
        seen = "none" if det is None else f"({det.center[0]:5.1f}, {det.center[1]:5.1f}) r={det.radius:4.1f}"
        print(f"  {offset:+.2f}      {seen:24s}  {is_goal(det)!s:5s}  {compute_reward(det, False):+.3f}")


if __name__ == "__main__":
    main()
