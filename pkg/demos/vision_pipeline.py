"""Render what the wrist camera sees from a few poses and run target detection.

Saves each frame and its red mask as PNG and prints the detection, whether it
counts as the goal, and the step reward it would earn.

    python3 demos/vision_pipeline.py [output_dir]
"""

import math
import os
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from arm_rl.env import START_POSES, ArmEnv, EnvConfig, compute_reward, is_goal
from arm_rl.vision import isolate_target

POSES = {
    "edge_start": START_POSES["edge"],
    "away_start": START_POSES["away"],
    "centred": (math.pi, -1.882, 2.182, -0.3, math.pi / 2, math.pi),
}


def main(out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for name, pose in POSES.items():
        env = ArmEnv(EnvConfig(observation_mode="features", start_pose=pose))
        env.reset(seed=0)
        img, det = env.last_image, env.last_detection
        Image.fromarray(img).save(out / f"{name}.png")
        Image.fromarray((isolate_target(img) * 255).astype(np.uint8)).save(out / f"{name}_mask.png")
        if det is None:
            print(f"{name:11s} no target   reward {compute_reward(det, False):+.3f}")
        else:
            print(f"{name:11s} centre ({det.center[0]:5.1f}, {det.center[1]:5.1f}) radius {det.radius:4.1f}"
                  f"  goal {is_goal(det)!s:5s}  reward {compute_reward(det, False):+.3f}")
    print(f"frames written to {out}")


if __name__ == "__main__":
    default = Path(os.environ.get("ARM_RL_OUTPUT", "demo_output")) / "vision_pipeline"
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else default)
