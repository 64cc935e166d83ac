"""Layer-stack networks: architecture descriptors, initialization, forward pass and
checkpoint files."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import autodiff as ad

LAYER_KINDS = ("dense", "conv", "relu", "tanh")
DOWNSAMPLE = 5


class ArchitectureError(ValueError):
    pass


@dataclass
class NetworkParams:
    """Architecture descriptor plus named float64 parameter arrays."""

    arch: dict
    tensors: dict[str, np.ndarray] = field(default_factory=dict)

    def copy(self) -> "NetworkParams":
        return NetworkParams(json.loads(json.dumps(self.arch)), {k: v.copy() for k, v in self.tensors.items()})

    def n_params(self) -> int:
        return sum(v.size for v in self.tensors.values())


def image_architecture(heads: dict[str, int], frame_hw=(300, 400)) -> dict:
    h, w = frame_hw[0] // DOWNSAMPLE, frame_hw[1] // DOWNSAMPLE
    return {
        "input": [h, w, 3],
        "layers": [
            {"kind": "conv", "filters": 8, "size": 5, "stride": 2},
            {"kind": "relu"},
            {"kind": "conv", "filters": 16, "size": 3, "stride": 2},
            {"kind": "relu"},
            {"kind": "dense", "units": 128},
            {"kind": "relu"},
        ],
        "heads": dict(heads),
    }


def feature_architecture(heads: dict[str, int], n_features: int = 9) -> dict:
    return {
        "input": [n_features],
        "layers": [
            {"kind": "dense", "units": 64},
            {"kind": "relu"},
            {"kind": "dense", "units": 64},
            {"kind": "relu"},
        ],
        "heads": dict(heads),
    }


def _layer_shapes(arch: dict) -> tuple[list[dict[str, tuple[int, ...]]], int]:
    """Parameter shapes per hidden layer and the flattened width feeding the heads."""
    try:
        shape = tuple(int(n) for n in arch["input"])
        layers = arch["layers"]
        heads = arch["heads"]
    except (KeyError, TypeError) as exc:
        raise ArchitectureError(f"descriptor needs input/layers/heads: {exc}") from None
    if not heads or any(int(n) < 1 for n in heads.values()):
        raise ArchitectureError("need at least one head with a positive size")
    if len(shape) not in (1, 3) or min(shape) < 1:
        raise ArchitectureError(f"input must be (features,) or (H, W, C), got {shape}")
    out = []
    for i, layer in enumerate(layers):
        kind = layer.get("kind")
        if kind not in LAYER_KINDS:
            raise ArchitectureError(f"layer {i}: unknown kind {kind!r}")
        if kind == "conv":
            if len(shape) != 3:
                raise ArchitectureError(f"layer {i}: conv needs an image-shaped input")
            k, s, f = int(layer["size"]), int(layer.get("stride", 1)), int(layer["filters"])
            h, w, c = shape
            if k > h or k > w or s < 1 or f < 1:
                raise ArchitectureError(f"layer {i}: bad conv geometry for input {shape}")
            out.append({"W": (f, c, k, k), "b": (f,)})
            shape = ((h - k) // s + 1, (w - k) // s + 1, f)
        elif kind == "dense":
            n_in, units = int(np.prod(shape)), int(layer["units"])
            if units < 1:
                raise ArchitectureError(f"layer {i}: dense units must be positive")
            out.append({"W": (n_in, units), "b": (units,)})
            shape = (units,)
        else:
            out.append({})
    return out, int(np.prod(shape))


def init_params(arch: dict, seed: int) -> NetworkParams:
    """He-uniform hidden layers, small-uniform output heads, zero biases."""
    shapes, width = _layer_shapes(arch)
    rng = np.random.default_rng(seed)
    tensors = {}
    for i, layer in enumerate(shapes):
        if not layer:
            continue
        W = layer["W"]
        fan_in = int(np.prod(W[1:])) if len(W) == 4 else W[0]
        bound = np.sqrt(6.0 / fan_in)
        tensors[f"{i}.W"] = rng.uniform(-bound, bound, W)
        tensors[f"{i}.b"] = np.zeros(layer["b"])
    for name, n in arch["heads"].items():
        tensors[f"{name}.W"] = rng.uniform(-0.01, 0.01, (width, int(n)))
        tensors[f"{name}.b"] = np.zeros(int(n))
    return NetworkParams(json.loads(json.dumps(arch)), tensors)


def forward(params: NetworkParams, x, tape: ad.Tape | None = None) -> dict[str, ad.Tensor]:
    """Run a batch ``x`` of shape (N, *input) and return one tensor per head.

    With a tape the parameters become named leaves on it, so ``backward`` on
    any loss built from the heads returns gradients keyed like ``params.tensors``.
    """
    arch = params.arch
    xv = np.asarray(x, dtype=np.float64)
    in_shape = tuple(arch["input"])
    if xv.shape[1:] != in_shape:
        raise ArchitectureError(f"input batch shape {xv.shape} does not match {in_shape}")
    if tape is None:
        P = {k: ad.Tensor(v) for k, v in params.tensors.items()}
    else:
        P = {k: tape.leaf(v, k) for k, v in params.tensors.items()}
    h = ad.Tensor(xv)
    for i, layer in enumerate(arch["layers"]):
        kind = layer["kind"]
        if kind == "conv":
            h = ad.conv2d(h, P[f"{i}.W"], P[f"{i}.b"], int(layer.get("stride", 1)))
        elif kind == "dense":
            if h.value.ndim > 2:
                h = ad.reshape(h, (h.shape[0], -1))
            h = ad.dense(h, P[f"{i}.W"], P[f"{i}.b"])
        elif kind == "relu":
            h = ad.relu(h)
        elif kind == "tanh":
            h = ad.tanh(h)
    if h.value.ndim > 2:
        h = ad.reshape(h, (h.shape[0], -1))
    return {name: ad.dense(h, P[f"{name}.W"], P[f"{name}.b"]) for name in arch["heads"]}


def downsample_frame(img: np.ndarray, factor: int = DOWNSAMPLE) -> np.ndarray:
    """Box-average an (H, W, 3) uint8 frame by ``factor`` and scale to [0, 1]."""
    img = np.asarray(img, dtype=np.float64)
    h, w, c = img.shape
    h2, w2 = h // factor, w // factor
    blocks = img[: h2 * factor, : w2 * factor].reshape(h2, factor, w2, factor, c)
    return blocks.mean(axis=(1, 3)) / 255.0


# --------------------------------------------------------------------------- checkpoints

MAGIC = b"ARMRLNET"
VERSION = 1


def save_params(path, params: NetworkParams, meta: dict | None = None) -> None:
    """Write a versioned checkpoint: header, JSON descriptor, then named arrays.

    Layout (little endian): magic, u32 version, u32 json length, json bytes,
    u32 array count, then per array: u16 name length, name, u8 ndim, u32 dims,
    raw f8 values in C order.
    """
    header = json.dumps({"arch": params.arch, "meta": meta or {}}, sort_keys=True).encode()
    chunks = [MAGIC, struct.pack("<II", VERSION, len(header)), header, struct.pack("<I", len(params.tensors))]
    for name in sorted(params.tensors):
        arr = np.ascontiguousarray(params.tensors[name], dtype="<f8")
        key = name.encode()
        chunks.append(struct.pack("<H", len(key)) + key + struct.pack("<B", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(arr.tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_params(path) -> tuple[NetworkParams, dict]:
    data = Path(path).read_bytes()
    if data[: len(MAGIC)] != MAGIC:
        raise ValueError(f"{path}: not a network checkpoint")
    pos = len(MAGIC)
    version, n_header = struct.unpack_from("<II", data, pos)
    if version != VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    pos += 8
    header = json.loads(data[pos : pos + n_header].decode())
    pos += n_header
    (n_arrays,) = struct.unpack_from("<I", data, pos)
    pos += 4
    tensors = {}
    for _ in range(n_arrays):
        (n_name,) = struct.unpack_from("<H", data, pos)
        pos += 2
        name = data[pos : pos + n_name].decode()
        pos += n_name
        (ndim,) = struct.unpack_from("<B", data, pos)
        pos += 1
        shape = struct.unpack_from(f"<{ndim}I", data, pos)
        pos += 4 * ndim
        count = int(np.prod(shape))
        tensors[name] = np.frombuffer(data, dtype="<f8", count=count, offset=pos).reshape(shape).astype(np.float64)
        pos += 8 * count
    params = NetworkParams(header["arch"], tensors)
    _check_tensors(params)
    return params, header["meta"]


def _check_tensors(params: NetworkParams) -> None:
    shapes, width = _layer_shapes(params.arch)
    expected = {}
    for i, layer in enumerate(shapes):
        for k, s in layer.items():
            expected[f"{i}.{k}"] = s
    for name, n in params.arch["heads"].items():
        expected[f"{name}.W"] = (width, int(n))
        expected[f"{name}.b"] = (int(n),)
    got = {k: v.shape for k, v in params.tensors.items()}
    if got != expected:
        raise ArchitectureError(f"parameter shapes {got} do not match descriptor {expected}")
