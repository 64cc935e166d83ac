"""Command line: ``arm-rl {train,evaluate,plot,vision-debug}``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from .. import nn, vision
from .config import (
    ENV_KEYS,
    HOUGH_KEYS,
    OUTPUT_ENV_VAR,
    ConfigError,
    convert_value,
    build_run_config,
    env_config_from,
    load_config_file,
    parse_overrides,
)


def _values(args) -> dict[str, str]:
    values = load_config_file(args.config) if args.config else {}
    values.update(parse_overrides(args.set))
    return values


def cmd_train(args) -> int:
    from .train import train

    values = _values(args)
    if args.workers is not None:
        values["workers"] = str(args.workers)
    cfg = build_run_config(values)
    out = train(cfg)
    print(f"metrics: {out}")
    for i in range(cfg.trials):
        print(f"checkpoint: {cfg.run_dir / f'trial_{i}' / 'final.ckpt'}")
    return 0


def cmd_evaluate(args) -> int:
    from .evaluate import evaluate

    params, meta = nn.load_params(args.checkpoint)
    values = _values(args)
    if meta.get("observation_mode") and "env.observation_mode" not in values:
        values["env.observation_mode"] = meta["observation_mode"]
    if meta.get("variant") and "env.variant" not in values:
        values["env.variant"] = meta["variant"]
    env_cfg = env_config_from(values)
    frame_dir = None
    if args.dump_frames:
        base = Path(args.out or os.environ.get(OUTPUT_ENV_VAR) or Path(args.checkpoint).parent)
        frame_dir = base / "frames"
    summary = evaluate(params, env_cfg, args.episodes, args.seed, frame_dir)
    for k, ep in enumerate(summary.episodes):
        print(f"episode {k}: return {ep.episode_return:.4f} length {ep.length} goal {int(ep.goal)}")
    print(f"mean return {summary.mean_return:.4f} mean length {summary.mean_length:.2f} goal rate {summary.goal_rate:.2f}")
    if frame_dir is not None:
        print(f"frames: {len(summary.frames)} written to {frame_dir}")
    return 0


def cmd_plot(args) -> int:
    from .plot import plot

    out = args.out or os.environ.get(OUTPUT_ENV_VAR) or "plots"
    for path in plot(args.csv, out, args.window):
        print(path)
    return 0


def cmd_vision_debug(args) -> int:
    try:
        img = np.asarray(Image.open(args.image).convert("RGB"))
    except OSError as exc:
        raise ConfigError(f"cannot read image {args.image}: {exc}") from None
    hough, cutoffs = {}, vision.DEFAULT_CUTOFFS
    for key, value in parse_overrides(args.set).items():
        section, _, name = key.partition(".")
        if section == "hough" and name in HOUGH_KEYS:
            hough[name] = convert_value(key, HOUGH_KEYS[name], value)
        elif key == "env.cutoffs":
            cutoffs = convert_value(key, ENV_KEYS["cutoffs"], value)
        else:
            raise ConfigError(f"unknown config key {key!r} (vision-debug takes hough.* and env.cutoffs)")
    cfg = vision.HoughConfig(**hough)
    mask = vision.isolate_target(img, cutoffs)
    found = vision.hough_circles(mask, cfg)
    print(json.dumps({
        "image": str(args.image),
        "size": [int(img.shape[1]), int(img.shape[0])],
        "mask_pixels": int(mask.sum()),
        "detections": [{"center": list(d.center), "radius": d.radius, "votes": d.votes} for d in found],
    }, indent=2))
    if args.dump_dir:
        out = Path(args.dump_dir)
        out.mkdir(parents=True, exist_ok=True)
        stages = {
            "red": vision.threshold_channel(img[..., 0], cutoffs[0]),
            "green": vision.threshold_channel(img[..., 1], cutoffs[1]),
            "blue": vision.threshold_channel(img[..., 2], cutoffs[2]),
            "mask": mask,
            "edges": vision.edge_pixels(mask, cfg.edge_threshold),
        }
        for name, m in stages.items():
            Image.fromarray((m * 255).astype(np.uint8)).save(out / f"{name}.png")
        print(f"stages written to {out}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="arm-rl", description="Vision-based reacher / tracker RL workbench.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train seeded trials and write metrics + checkpoints")
    t.add_argument("--config", help="key = value config file")
    t.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config value")
    t.add_argument("--workers", type=int, help="run trials in this many processes")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("evaluate", help="greedy rollouts of a checkpoint")
    e.add_argument("checkpoint")
    e.add_argument("--config")
    e.add_argument("--set", action="append", metavar="KEY=VALUE")
    e.add_argument("--episodes", type=int, default=10)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--dump-frames", action="store_true", help="save every tenth frame as PNG")
    e.add_argument("--out", help="directory for frame dumps")
    e.set_defaults(func=cmd_evaluate)

    pl = sub.add_parser("plot", help="SVG learning curves from metrics CSVs")
    pl.add_argument("csv", nargs="+")
    pl.add_argument("--out")
    pl.add_argument("--window", type=int, default=20, help="trailing smoothing window in episodes")
    pl.set_defaults(func=cmd_plot)

    v = sub.add_parser("vision-debug", help="run target detection on a PNG image")
    v.add_argument("image")
    v.add_argument("--dump-dir", help="write the threshold, mask and edge stages as PNG")
    v.add_argument("--set", action="append", metavar="KEY=VALUE", help="hough.* or env.cutoffs")
    v.set_defaults(func=cmd_vision_debug)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"arm-rl {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
