"""Learning curves from metrics CSVs: trial mean with a standard-error band."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


class MetricsFormatError(ValueError):
    pass


def read_metrics(path) -> dict[int, dict[str, np.ndarray]]:
    """Rows grouped by trial, each column as an array.  Errors name the bad line."""
    path = Path(path)
    trials: dict[int, dict[str, list]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise MetricsFormatError(f"{path}: empty file")
        missing = [c for c in ("trial", "env_step", "mean_step_reward", "episode_length") if c not in header]
        if missing:
            raise MetricsFormatError(f"{path}:1: header lacks columns {missing}")
        col = {name: i for i, name in enumerate(header)}
        for row in reader:
            lineno = reader.line_num
            if len(row) != len(header):
                raise MetricsFormatError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                trial = int(row[col["trial"]])
                rec = {
                    "env_step": int(row[col["env_step"]]),
                    "mean_step_reward": float(row[col["mean_step_reward"]]),
                    "episode_length": float(row[col["episode_length"]]),
                }
                if "episode_return" in col:
                    rec["episode_return"] = float(row[col["episode_return"]])
                rec["complete"] = int(row[col["complete"]]) if "complete" in col else 1
            except ValueError as exc:
                raise MetricsFormatError(f"{path}:{lineno}: {exc}") from None
            store = trials.setdefault(trial, {k: [] for k in rec})
            if store["env_step"] and rec["env_step"] < store["env_step"][-1]:
                raise MetricsFormatError(f"{path}:{lineno}: env_step decreases within trial {trial}")
            for k, v in rec.items():
                store[k].append(v)
    if not trials:
        raise MetricsFormatError(f"{path}: no data rows")
    return {t: {k: np.asarray(v) for k, v in d.items()} for t, d in sorted(trials.items())}


def trailing_mean(values: np.ndarray, window: int) -> np.ndarray:
    """Mean of the last ``window`` values at each position (fewer at the start)."""
    values = np.asarray(values, dtype=np.float64)
    csum = np.concatenate([[0.0], np.cumsum(values)])
    idx = np.arange(1, values.size + 1)
    lo = np.maximum(idx - window, 0)
    return (csum[idx] - csum[lo]) / (idx - lo)


def band(curves: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray | None]:
    """Mean across trials and standard error ``std(ddof=1) / sqrt(n)``; None for one trial."""
    stack = np.vstack(curves)
    mean = stack.mean(axis=0)
    if stack.shape[0] < 2:
        return mean, None
    return mean, stack.std(axis=0, ddof=1) / np.sqrt(stack.shape[0])


def aligned_curves(trials: dict, column: str, window: int) -> tuple[np.ndarray, list[np.ndarray]]:
    """Smoothed per-trial curves on a shared env_step grid.

    The grid is the first trial's episode ends inside the range every trial
    covers; other trials are linearly interpolated onto it.
    """
    data = [d for d in trials.values() if (d["complete"] == 1).any()]
    if not data:
        data = list(trials.values())
    series = []
    for d in data:
        keep = d["complete"] == 1 if (d["complete"] == 1).any() else np.ones(d["env_step"].size, bool)
        series.append((d["env_step"][keep].astype(float), trailing_mean(d[column][keep], window)))
    lo = max(s[0][0] for s in series)
    hi = min(s[0][-1] for s in series)
    grid = series[0][0]
    grid = grid[(grid >= lo) & (grid <= hi)]
    if grid.size == 0:
        grid = np.array([hi])
    return grid, [np.interp(grid, x, y) for x, y in series]


def _chart(run_sets, column: str, ylabel: str, window: int, out: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for label, trials in run_sets:
        grid, curves = aligned_curves(trials, column, window)
        mean, se = band(curves)
        (line,) = ax.plot(grid, mean, label=f"{label} (n={len(curves)})", lw=1.5)
        if se is not None:
            ax.fill_between(grid, mean - se, mean + se, color=line.get_color(), alpha=0.25, lw=0)
    ax.set_xlabel("env step")
    ax.set_ylabel(ylabel)
    ax.grid(alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out


def plot(csv_paths, out_dir, window: int = 20) -> list[Path]:
    """Two SVG charts per CSV (mean step reward and episode length against
    env step), plus overlay charts when several CSVs are given."""
    if not csv_paths:
        raise ValueError("need at least one metrics CSV")
    if window < 1:
        raise ValueError("window must be >= 1")
    run_sets = []
    for p in csv_paths:
        p = Path(p)
        label = p.parent.name if p.name == "metrics.csv" else p.stem
        run_sets.append((label, read_metrics(p)))
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    matplotlib.rcParams["svg.hashsalt"] = "arm-rl"
    written = []
    charts = (("mean_step_reward", "mean reward per step", "reward"), ("episode_length", "episode length", "length"))
    names = [label for label, _ in run_sets]
    for i, (label, trials) in enumerate(run_sets):
        stem = label if names.count(label) == 1 else f"{label}_{i}"
        for column, ylabel, suffix in charts:
            written.append(_chart([(label, trials)], column, ylabel, window, out_dir / f"{stem}_{suffix}.svg"))
    if len(run_sets) > 1:
        for column, ylabel, suffix in charts:
            written.append(_chart(run_sets, column, ylabel, window, out_dir / f"comparison_{suffix}.svg"))
    return written


__all__ = ["MetricsFormatError", "aligned_curves", "band", "plot", "read_metrics", "trailing_mean"]
