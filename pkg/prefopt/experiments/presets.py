"""
Method names, default lambda grids and training presets shared by the
experiment runners.
"""

import logging
from typing import List, Mapping, Optional, Sequence, Union

import numpy as np

from ..errors import ValidationError
from ..losses.catalog import DIVERGENCES, SHAPES, fdpo_spec, gpo_spec
from ..losses.evaluation import EvaluationKind
from ..losses.spec import LossKind, LossSpec, RegressionTarget, make_loss_spec
from ..optim.config import TrainConfig

logger = logging.getLogger(__name__)

ALL_METHODS = ("dpo", "ipo", "fdpo-js", "expo-comp", "expo-reg")
DEFAULT_LAMBDAS = (1e-5, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0)
EXPO_REG_LAMBDAS = tuple(round(0.1 * i, 1) for i in range(11))

SMALL_LAMBDA = 1e-5
LARGE_LAMBDA = 100.0

QPO_LEARNING_RATE = 1e-3
EXPO_LEARNING_RATE = 5e-4
PRESET_STEPS = 10_000
FDPO_STEP_FACTOR = 3

ConfigLike = Union[None, TrainConfig, Mapping]


def parse_methods(methods: Union[str, Sequence[str]]) -> List[str]:
    """
    Normalize a method list; "all" expands to the standard comparison set.

    Besides the preset kinds, "gpo-<shape>" and "fdpo-<divergence>" name
    catalogue members, and "expo-reg-oracle" the oracle-target regression loss.
    """
    if isinstance(methods, str):
        methods = [m for m in methods.split(",") if m.strip()]
    names: List[str] = []
    for method in methods:
        method = method.strip().lower()
        if method == "all":
            names.extend(m for m in ALL_METHODS if m not in names)
            continue
        method_kind(method)
        if method not in names:
            names.append(method)
    return names


def method_kind(method: str) -> LossKind:
    """The loss kind behind a method name."""
    if method == "expo-reg-oracle":
        return LossKind.EXPO_REG
    if method.startswith("gpo-"):
        if method[4:].replace("-", "_") not in SHAPES:
            raise ValidationError(f"unknown method {method!r}")
        return LossKind.QPO_CUSTOM
    if method.startswith("fdpo-") and method != "fdpo-js":
        if method[5:].replace("-", "_") not in DIVERGENCES:
            raise ValidationError(f"unknown method {method!r}")
        return LossKind.QPO_CUSTOM
    try:
        kind = LossKind.parse(method)
    except ValidationError:
        raise ValidationError(f"unknown method {method!r}") from None
    if kind in (LossKind.QPO_CUSTOM, LossKind.BT_REWARD):
        raise ValidationError(f"{method!r} is not an experiment method")
    return kind


def method_spec(method: str, lam: float) -> LossSpec:
    """LossSpec of a method at one lambda."""
    kind = method_kind(method)
    if method == "expo-reg-oracle":
        return make_loss_spec(kind, lam, target=RegressionTarget.ORACLE)
    if method.startswith("gpo-"):
        return gpo_spec(method[4:].replace("-", "_"), lam)
    if kind is LossKind.QPO_CUSTOM:
        return fdpo_spec(method[5:].replace("-", "_"), lam)
    return make_loss_spec(kind, lam)


def default_lambdas(method: str) -> List[float]:
    if method_kind(method) is LossKind.EXPO_REG:
        return list(EXPO_REG_LAMBDAS)
    return list(DEFAULT_LAMBDAS)


def lambdas_for(method: str, lambdas: Optional[Sequence[float]]) -> List[float]:
    """
    The grid a method runs on, in increasing order.

    Explicit grids are filtered per kind: regression-loss cells outside [0, 1]
    and non-positive values for the other kinds are skipped with a warning.
    """
    if lambdas is None:
        return default_lambdas(method)
    grid = sorted({float(lam) for lam in lambdas})
    if not grid:
        raise ValidationError("lambda grid is empty")
    if method_kind(method) is LossKind.EXPO_REG:
        keep = [lam for lam in grid if 0.0 <= lam <= 1.0]
    else:
        keep = [lam for lam in grid if lam > 0.0]
    skipped = [lam for lam in grid if lam not in keep]
    if skipped:
        logger.warning("%s: skipping lambda values out of range: %s", method, ", ".join(map(repr, skipped)))
    return keep


def is_small_lambda(method: str, lam: float) -> bool:
    return lam <= SMALL_LAMBDA


def is_large_lambda(method: str, lam: float) -> bool:
    if method_kind(method) is LossKind.EXPO_REG:
        return lam == 1.0
    return lam >= LARGE_LAMBDA


def step_factor(method: str) -> int:
    """Budget multiplier of a method: f-DPO members train three times longer."""
    return FDPO_STEP_FACTOR if method.startswith("fdpo") else 1


def preset_config(method: str) -> TrainConfig:
    """
    Training preset of a method.

    QPO methods run the batch-20 sampled protocol at lr 1e-3, EXPO methods
    take exact gradients at lr 5e-4. f-DPO members get three times the steps.
    """
    kind = method_kind(method)
    if kind.is_expo:
        return TrainConfig(learning_rate=EXPO_LEARNING_RATE, steps=PRESET_STEPS, mode=EvaluationKind.POPULATION)
    steps = PRESET_STEPS * step_factor(method)
    return TrainConfig(learning_rate=QPO_LEARNING_RATE, steps=steps, mode=EvaluationKind.SAMPLED, batch_size=20)


def resolve_config(method: str, config: ConfigLike) -> TrainConfig:
    """
    Effective config of a method: the preset, a mapping of overrides applied
    to the preset, or an explicit TrainConfig used as is.

    A `steps` override is a base budget: f-DPO members still get three times
    as many steps as the other methods.
    """
    if isinstance(config, TrainConfig):
        return config
    preset = preset_config(method)
    if not config:
        return preset
    unknown = set(config) - set(TrainConfig.field_names())
    if unknown:
        raise ValidationError(f"unknown training config fields: {', '.join(sorted(unknown))}")
    overrides = dict(config)
    if "steps" in overrides and isinstance(overrides["steps"], int) and not isinstance(overrides["steps"], bool):
        overrides["steps"] *= step_factor(method)
    return preset.replace(**overrides)


def config_echo(config: ConfigLike):
    if isinstance(config, TrainConfig):
        return config.to_dict()
    return {k: (v.value if hasattr(v, "value") else v) for k, v in dict(config or {}).items()}


def finite_or_none(value: float) -> Optional[float]:
    value = float(value)
    return value if np.isfinite(value) else None
