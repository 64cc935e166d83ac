"""Run configuration: flat ``key = value`` files with dotted sections.

Example::

    agent = ppo
    total_steps = 40000
    env.variant = static_reacher
    env.observation_mode = features
    agent.lr = 3e-4
    scene.noise_std = 2.0

Values set with ``--set key=value`` on the command line override the file.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import kinematics as kin
from ..agents import DQNConfig, PPOConfig
from ..env import START_POSES, EnvConfig
from ..scene import CameraModel, SceneConfig, default_monitor
from ..vision import HoughConfig

OUTPUT_ENV_VAR = "ARM_RL_OUTPUT"
DEFAULT_STEPS = {"ppo": 40_000, "dqn": 60_000}


class ConfigError(ValueError):
    pass


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment, blank lines are skipped."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def parse_overrides(items) -> dict[str, str]:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = (part.strip() for part in item.split("=", 1))
        out[key] = value
    return out


def load_config_file(path) -> dict[str, str]:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config_text(text, str(p))


# --------------------------------------------------------------------------- value parsing

def _floats(value: str, n: int | None = None) -> tuple[float, ...]:
    vals = tuple(float(v) for v in value.replace("(", "").replace(")", "").split(",") if v.strip())
    if n is not None and len(vals) != n:
        raise ValueError(f"expected {n} comma-separated numbers")
    return vals


def _ints(value: str, n: int) -> tuple[int, ...]:
    vals = _floats(value, n)
    if any(v != int(v) for v in vals):
        raise ValueError("expected integers")
    return tuple(int(v) for v in vals)


def _bool(value: str) -> bool:
    low = value.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true/false")


def _int(value: str) -> int:
    f = float(value)
    if f != int(f):
        raise ValueError("expected an integer")
    return int(f)


_CONVERTERS = {int: _int, float: float, bool: _bool, str: str}


def _scalar_fields(cls) -> dict[str, object]:
    """Converters for the plain-typed fields of a config dataclass."""
    out = {}
    for f in dataclasses.fields(cls):
        default = f.default
        if default is dataclasses.MISSING:
            continue
        kind = type(default.value) if hasattr(default, "value") else type(default)
        if kind in _CONVERTERS:
            out[f.name] = _CONVERTERS[kind]
    return out


def _start_pose(value: str) -> tuple[float, ...]:
    """A preset name from ``START_POSES`` or six comma-separated joint angles."""
    name = value.strip()
    if name in START_POSES:
        return START_POSES[name]
    if name.replace("_", "").isalpha():
        raise ValueError(f"unknown start pose preset (known: {', '.join(sorted(START_POSES))})")
    return _floats(value, kin.N_JOINTS)


ENV_KEYS = {
    **_scalar_fields(EnvConfig),
    "start_pose": lambda v: _start_pose(v),
    "joint_limits": lambda v: _floats(v, 2),
    "cutoffs": lambda v: _ints(v, 3),
}
_SCENE_KEYS = {
    "noise_std": float,
    "lighting_scale_range": lambda v: _floats(v, 2),
    "wall_color": lambda v: _ints(v, 3),
    "room_color": lambda v: _ints(v, 3),
    "target_color": lambda v: _ints(v, 3),
}
_CAMERA_KEYS = {"focal_px": float, "mount_offset": lambda v: _floats(v, 3)}
_MONITOR_KEYS = {"distance": float, "center_yz": lambda v: _floats(v, 2)}
HOUGH_KEYS = _scalar_fields(HoughConfig)
_LIMIT_KEYS = {"min": lambda v: _floats(v, 3), "max": lambda v: _floats(v, 3)}
_AGENT_KEYS = {"dqn": _scalar_fields(DQNConfig), "ppo": _scalar_fields(PPOConfig)}
_TOP_KEYS = {
    "agent": str,
    "total_steps": _int,
    "trials": _int,
    "base_seed": _int,
    "output_dir": str,
    "run_name": str,
    "workers": _int,
    "smoothing_window": _int,
}


@dataclass(frozen=True)
class RunConfig:
    agent: str = "ppo"
    env: EnvConfig = field(default_factory=EnvConfig)
    agent_cfg: DQNConfig | PPOConfig = field(default_factory=PPOConfig)
    total_steps: int = DEFAULT_STEPS["ppo"]
    trials: int = 3
    base_seed: int = 0
    output_dir: str = "runs"
    run_name: str = ""
    workers: int = 1
    smoothing_window: int = 20

    def __post_init__(self):
        if self.agent not in DEFAULT_STEPS:
            raise ConfigError(f"agent: expected one of {sorted(DEFAULT_STEPS)}, got {self.agent!r}")
        if self.trials < 1:
            raise ConfigError("trials: must be >= 1")
        if self.total_steps <= 0:
            raise ConfigError("total_steps: must be > 0")
        if self.workers < 1:
            raise ConfigError("workers: must be >= 1")
        if self.smoothing_window < 1:
            raise ConfigError("smoothing_window: must be >= 1")
        expected = DQNConfig if self.agent == "dqn" else PPOConfig
        if not isinstance(self.agent_cfg, expected):
            raise ConfigError(f"agent config type {type(self.agent_cfg).__name__} does not match agent {self.agent!r}")

    @property
    def run_dir(self) -> Path:
        name = self.run_name or f"{self.agent}_{self.env.variant.value}"
        return Path(self.output_dir) / name


def convert_value(key: str, conv, value: str):
    try:
        return conv(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: cannot parse {value!r} ({exc})") from None


def build_run_config(values: dict[str, str], environ=None) -> RunConfig:
    """Validate dotted keys and assemble a :class:`RunConfig`.

    Unknown keys and unparsable values raise :class:`ConfigError` naming the key.
    ``ARM_RL_OUTPUT`` in ``environ`` (default ``os.environ``) overrides ``output_dir``.
    """
    environ = os.environ if environ is None else environ
    agent = values.get("agent", "ppo").strip().lower()
    if agent not in DEFAULT_STEPS:
        raise ConfigError(f"agent: expected one of {sorted(DEFAULT_STEPS)}, got {agent!r}")
    sections: dict[str, dict] = {s: {} for s in ("top", "env", "scene", "camera", "monitor", "hough", "limits", "agent", "dh")}
    tables = {
        "env": ENV_KEYS, "scene": _SCENE_KEYS, "camera": _CAMERA_KEYS, "monitor": _MONITOR_KEYS,
        "hough": HOUGH_KEYS, "limits": _LIMIT_KEYS, "agent": _AGENT_KEYS[agent],
    }
    for key, value in values.items():
        parts = key.split(".")
        if len(parts) == 1 and key in _TOP_KEYS:
            sections["top"][key] = convert_value(key, _TOP_KEYS[key], value) if key != "agent" else agent
        elif len(parts) == 2 and parts[0] in tables and parts[1] in tables[parts[0]]:
            sections[parts[0]][parts[1]] = convert_value(key, tables[parts[0]][parts[1]], value)
        elif len(parts) == 2 and parts[0] == "dh" and parts[1].isdigit() and int(parts[1]) < kin.N_JOINTS:
            sections["dh"][int(parts[1])] = convert_value(key, lambda v: _floats(v, 4), value)
        else:
            raise ConfigError(f"unknown config key {key!r}")

    try:
        env_kwargs = dict(sections["env"])
        if sections["scene"]:
            env_kwargs["scene"] = dataclasses.replace(SceneConfig(), **sections["scene"])
        if sections["camera"]:
            cam = sections["camera"]
            base = CameraModel()
            mount = base.mount
            if "mount_offset" in cam:
                mount = kin.Pose(np.array(cam["mount_offset"]), base.mount.orientation)
            env_kwargs["camera"] = dataclasses.replace(base, focal_px=cam.get("focal_px", base.focal_px), mount=mount)
        if sections["monitor"]:
            env_kwargs["monitor"] = default_monitor(**sections["monitor"])
        if sections["hough"]:
            env_kwargs["hough"] = HoughConfig(**sections["hough"])
        if sections["limits"]:
            lim = kin.DEFAULT_LIMITS
            env_kwargs["limits"] = kin.WorkspaceLimits(
                sections["limits"].get("min", lim.min), sections["limits"].get("max", lim.max)
            )
        if sections["dh"]:
            rows = list(kin.UR10E_DH.joints)
            for i, row in sections["dh"].items():
                rows[i] = row
            env_kwargs["dh"] = kin.DHTable(tuple(rows))
        env = EnvConfig(**env_kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"env: {exc}") from None

    top = sections["top"]
    total = top.get("total_steps", DEFAULT_STEPS[agent])
    agent_kwargs = dict(sections["agent"])
    if agent == "dqn":
        agent_kwargs.setdefault("eps_decay_steps", total)
    try:
        agent_cfg = (DQNConfig if agent == "dqn" else PPOConfig)(**agent_kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"agent: {exc}") from None
    top = {k: v for k, v in top.items() if k not in ("agent", "total_steps")}
    if environ.get(OUTPUT_ENV_VAR):
        top["output_dir"] = environ[OUTPUT_ENV_VAR]
    return RunConfig(agent=agent, env=env, agent_cfg=agent_cfg, total_steps=total, **top)


def env_config_from(values: dict[str, str]) -> EnvConfig:
    """Environment settings only (``env.*``, ``scene.*``, ... keys), ignoring agent keys."""
    keep = {k: v for k, v in values.items() if not k.startswith("agent.") and k not in _TOP_KEYS}
    return build_run_config(keep, environ={}).env
