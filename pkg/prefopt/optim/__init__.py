"""
Adam with global-norm clipping, the training loop and trajectory recording.
"""

from .adam import AdamState, adam_step
from .clipping import clip_gradient
from .config import TrainConfig
from .trainer import train
from .trajectory import TRAJECTORY_COLUMNS, Trajectory, TrajectoryRecord

__all__ = [
    "AdamState",
    "TRAJECTORY_COLUMNS",
    "TrainConfig",
    "Trajectory",
    "TrajectoryRecord",
    "adam_step",
    "clip_gradient",
    "train",
]
