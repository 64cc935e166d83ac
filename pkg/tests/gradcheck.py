"""Central finite-difference oracle for tape gradients."""

import numpy as np

from arm_rl import nn

H = 1e-5


def max_rel_error(analytic, numeric, floor=1e-6) -> float:
    a, n = np.asarray(analytic, float), np.asarray(numeric, float)
    return float(np.max(np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)))


def check_leaves(build, leaves: dict, rng=None, max_entries=40) -> float:
    """``build(tape_or_None, values) -> scalar Tensor``.  Compares the tape
    gradient of every named leaf with central differences on (a sample of) its
    entries and returns the worst relative error."""
    tape = nn.Tape()
    tensors = {k: tape.leaf(v, k) for k, v in leaves.items()}
    grads = nn.backward(tape, build(tape, tensors))
    rng = rng or np.random.default_rng(0)
    worst = 0.0
    for name, value in leaves.items():
        flat = value.reshape(-1)
        idx = np.arange(flat.size) if flat.size <= max_entries else rng.choice(flat.size, max_entries, replace=False)
        numeric = []
        for i in idx:
            vals = []
            for step in (H, -H):
                probe = {k: v.copy() for k, v in leaves.items()}
                probe[name].reshape(-1)[i] += step
                vals.append(float(build(None, {k: nn.Tensor(v) for k, v in probe.items()}).value))
            numeric.append((vals[0] - vals[1]) / (2 * H))
        worst = max(worst, max_rel_error(grads[name].reshape(-1)[idx], numeric))
    return worst


def check_params(loss_fn, params: nn.NetworkParams, rng=None, max_entries=25) -> float:
    """Same check over network parameters; ``loss_fn(params, tape_or_None)``."""
    tape = nn.Tape()
    grads = nn.backward(tape, loss_fn(params, tape))
    rng = rng or np.random.default_rng(0)
    worst = 0.0
    for name, value in params.tensors.items():
        flat = value.reshape(-1)
        idx = np.arange(flat.size) if flat.size <= max_entries else rng.choice(flat.size, max_entries, replace=False)
        numeric = []
        for i in idx:
            vals = []
            for step in (H, -H):
                probe = params.copy()
                probe.tensors[name].reshape(-1)[i] += step
                vals.append(float(loss_fn(probe, None).value))
            numeric.append((vals[0] - vals[1]) / (2 * H))
        worst = max(worst, max_rel_error(grads[name].reshape(-1)[idx], numeric))
    return worst
