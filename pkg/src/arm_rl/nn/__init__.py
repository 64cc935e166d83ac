from .autodiff import Tape, TapeConsumedError, Tensor, backward
from .network import (
    ArchitectureError,
    NetworkParams,
    downsample_frame,
    feature_architecture,
    forward,
    image_architecture,
    init_params,
    load_params,
    save_params,
)
from .optim import AdamState, adam_step

__all__ = [
    "AdamState",
    "ArchitectureError",
    "NetworkParams",
    "Tape",
    "TapeConsumedError",
    "Tensor",
    "adam_step",
    "backward",
    "downsample_frame",
    "feature_architecture",
    "forward",
    "image_architecture",
    "init_params",
    "load_params",
    "save_params",
]
