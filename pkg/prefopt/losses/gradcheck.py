"""
Central finite differences, used only to verify analytic gradients.
"""

from typing import Callable

import numpy as np

from ..core.instance import BanditInstance
from ..core.policy import PolicyModel
from ..errors import ValidationError
from .evaluation import EvaluationMode
from .objective import evaluate_loss, loss_gradient
from .spec import LossSpec

DEFAULT_STEP = 1e-6


def central_difference(fn: Callable[[np.ndarray], float], theta: np.ndarray, h: float = DEFAULT_STEP) -> np.ndarray:
    """
    Gradient of a scalar function by central differences.

    Formula: (f(theta + h e_i) - f(theta - h e_i)) / (2h) for every coordinate i

    Raises:
        ValidationError: If h is not a positive finite number
    """
    if not np.isfinite(h) or h <= 0.0:
        raise ValidationError(f"finite-difference step must be > 0, got {h!r}")
    theta = np.array(theta, dtype=np.float64)
    grad = np.zeros_like(theta)
    for idx in np.ndindex(theta.shape):
        # perturb one coordinate of a private copy in place
        orig = theta[idx]
        theta[idx] = orig + h
        up = fn(theta)
        theta[idx] = orig - h
        down = fn(theta)
        # restore before the next coordinate
        theta[idx] = orig
        grad[idx] = (up - down) / (2.0 * h)
    return grad


def finite_diff_gradient(
    spec: LossSpec,
    model: PolicyModel,
    instance: BanditInstance,
    mode: EvaluationMode,
    h: float = DEFAULT_STEP,
) -> np.ndarray:
    """
    d loss / d theta by central differences over every coordinate of theta.

    SAMPLED modes reuse the mode's fixed dataset for every evaluation.
    """
    return central_difference(
        lambda theta: evaluate_loss(spec, model.with_theta(theta), instance, mode),
        model.theta,
        h,
    )


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """max |a - n| / max(1, max |n|): relative for large gradients, absolute near 0."""
    scale = max(1.0, float(np.max(np.abs(numeric))))
    return float(np.max(np.abs(analytic - numeric))) / scale


def check_gradient(
    spec: LossSpec,
    model: PolicyModel,
    instance: BanditInstance,
    mode: EvaluationMode,
    h: float = DEFAULT_STEP,
) -> float:
    """Relative error between the analytic gradient and central differences."""
    numeric = finite_diff_gradient(spec, model, instance, mode, h)
    return relative_error(loss_gradient(spec, model, instance, mode), numeric)
