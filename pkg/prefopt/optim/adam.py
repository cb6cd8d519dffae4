"""
Adam update rule with bias correction, as a pure function of its state.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..errors import ShapeError


# AdamState is immutable: adam_step returns a new state instead of updating
# this one, so a trainer can keep or compare states freely.
@dataclass(frozen=True)
class AdamState:
    """
    First/second moment estimates and the number of steps taken.

    Attributes:
        m (np.ndarray): First moment estimate
        v (np.ndarray): Second moment estimate
        t (int): Steps taken so far
    """

    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, shape) -> "AdamState":
        return cls(np.zeros(shape), np.zeros(shape), 0)


def adam_step(
    state: AdamState,
    grad: np.ndarray,
    lr: float,
    betas: Tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
) -> Tuple[AdamState, np.ndarray]:
    """
    One Adam step.

    Formula:
        m = b1 m + (1 - b1) g
        v = b2 v + (1 - b2) g^2
        update = -lr * m_hat / (sqrt(v_hat) + eps),
        m_hat = m / (1 - b1^t), v_hat = v / (1 - b2^t)

    Returns:
        tuple[AdamState, np.ndarray]: The new state and the parameter delta

    Raises:
        ShapeError: If grad does not match the state's shape
    """
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != state.m.shape:
        raise ShapeError(f"gradient shape {grad.shape} does not match optimizer state {state.m.shape}")
    beta1, beta2 = betas
    t = state.t + 1
    m = beta1 * state.m + (1.0 - beta1) * grad
    v = beta2 * state.v + (1.0 - beta2) * grad**2
    # moments start at zero; dividing by 1 - beta^t removes that early bias
    m_hat = m / (1.0 - beta1**t)
    v_hat = v / (1.0 - beta2**t)
    # per-coordinate step of size about lr, whatever the gradient scale
    update = -lr * m_hat / (np.sqrt(v_hat) + eps)
    return AdamState(m, v, t), update
