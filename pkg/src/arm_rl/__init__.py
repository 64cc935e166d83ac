"""Vision-based reacher / tracker RL workbench.

Subpackages: ``kinematics`` (arm model and discrete actions), ``scene`` (camera
and monitor renderer), ``vision`` (target detection), ``env`` (the RL
environment and shaped reward), ``nn`` (small autodiff networks), ``agents``
(DQN and PPO) and ``harness`` (training, evaluation, plots, CLI).
"""

__version__ = "0.1.0"
