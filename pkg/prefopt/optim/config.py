"""
Training hyperparameters.
"""

import dataclasses
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

from ..datagen.dataset import SamplingMode
from ..errors import ValidationError
from ..losses.evaluation import EvaluationKind


def _positive_int(name: str, value) -> int:
    try:
        ok = not isinstance(value, bool) and int(value) == value and value >= 1
    except (TypeError, ValueError):
        ok = False
    if not ok:
        raise ValidationError(f"{name} must be an integer >= 1, got {value!r}")
    return int(value)


def _nonnegative_int(name: str, value) -> int:
    try:
        ok = not isinstance(value, bool) and int(value) == value and value >= 0
    except (TypeError, ValueError):
        ok = False
    if not ok:
        raise ValidationError(f"{name} must be a non-negative integer, got {value!r}")
    return int(value)


def _positive_real(name: str, value) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be a real number, got {value!r}") from None
    if not np.isfinite(value) or value <= 0.0:
        raise ValidationError(f"{name} must be > 0, got {value!r}")
    return value


# TrainConfig is checked and normalized once, in __post_init__. Strings from
# JSON or the CLI become enums and ints here, so the trainer never
# re-validates.
@dataclass(frozen=True)
class TrainConfig:
    """
    Hyperparameters of one training run.

    Args:
        learning_rate (float): Adam step size, > 0
        steps (int): Optimizer steps (one exact-gradient step per epoch in
            POPULATION mode)
        batch_size (int): Tuples per step in SAMPLED mode
        clip_max_norm (float, optional): Global gradient-norm cap; None disables
        mode (EvaluationKind): POPULATION (exact gradients) or SAMPLED
        seed (int): Seed of the batch generator
        beta1, beta2, eps: Adam constants
        record_every (int): Trajectory checkpoint spacing, in steps
        grad_tol (float, optional): Stop once the gradient norm falls below it
        pair_mode (SamplingMode): Pair distribution for population weights and
            for freshly sampled batches
        fixed_dataset_size (int, optional): In SAMPLED mode, draw one dataset of
            this size up front and cycle over it in shuffled epochs instead of
            sampling every batch fresh
    """

    learning_rate: float
    steps: int
    batch_size: int = 20
    clip_max_norm: Optional[float] = 10.0
    mode: EvaluationKind = EvaluationKind.POPULATION
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    record_every: int = 10
    grad_tol: Optional[float] = None
    pair_mode: SamplingMode = SamplingMode.UNIFORM_PAIRS
    fixed_dataset_size: Optional[int] = None

    def __post_init__(self):
        self._set("learning_rate", _positive_real("learning_rate", self.learning_rate))
        self._set("steps", _positive_int("steps", self.steps))
        self._set("batch_size", _positive_int("batch_size", self.batch_size))
        self._set("record_every", _positive_int("record_every", self.record_every))
        if self.clip_max_norm is not None:
            self._set("clip_max_norm", _positive_real("clip_max_norm", self.clip_max_norm))
        if self.grad_tol is not None:
            self._set("grad_tol", _positive_real("grad_tol", self.grad_tol))
        if self.fixed_dataset_size is not None:
            self._set("fixed_dataset_size", _positive_int("fixed_dataset_size", self.fixed_dataset_size))
        self._set("mode", EvaluationKind.parse(self.mode))
        self._set("pair_mode", SamplingMode.parse(self.pair_mode))
        if self.pair_mode is SamplingMode.DEGENERATE:
            raise ValidationError("pair_mode must be uniform_pairs or ref_product")
        self._set("seed", _nonnegative_int("seed", self.seed))
        for name in ("beta1", "beta2"):
            try:
                value = float(getattr(self, name))
            except (TypeError, ValueError):
                raise ValidationError(f"{name} must be a real number, got {getattr(self, name)!r}") from None
            if not 0.0 <= value < 1.0:
                raise ValidationError(f"{name} must lie in [0, 1), got {value!r}")
            self._set(name, value)
        self._set("eps", _positive_real("eps", self.eps))

    # frozen dataclass: write normalized values past __setattr__
    def _set(self, name: str, value) -> None:
        object.__setattr__(self, name, value)

    @property
    def betas(self):
        return (self.beta1, self.beta2)

    def replace(self, **changes) -> "TrainConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        doc = {f.name: getattr(self, f.name) for f in fields(self)}
        # enums as their plain strings so the dict is JSON-ready
        doc["mode"] = self.mode.value
        doc["pair_mode"] = self.pair_mode.value
        return doc

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainConfig":
        """
        Build a config from a JSON-style mapping.

        Raises:
            ValidationError: On unknown fields or invalid values
        """
        unknown = set(doc) - set(cls.field_names())
        if unknown:
            raise ValidationError(f"unknown training config fields: {', '.join(sorted(unknown))}")
        try:
            return cls(**doc)
        # a missing required field surfaces as a TypeError from __init__
        except TypeError as exc:
            raise ValidationError(f"incomplete training config: {exc}") from exc
