"""
Exception hierarchy shared by every prefopt module.

All library errors derive from PrefOptError so callers (the CLI in particular)
can separate validation problems from runtime aborts.
"""

from typing import Optional, Sequence


class PrefOptError(Exception):
    """Root of all prefopt errors."""


class ValidationError(PrefOptError, ValueError):
    """An argument, configuration value or loaded document is invalid."""


class ShapeError(ValidationError):
    """Array dimensions or vector lengths do not match."""


class DomainError(PrefOptError, ValueError):
    """A value lies outside the domain of a function (e.g. a zero probability)."""


class UnknownPromptError(PrefOptError, KeyError):
    """A prompt identifier is not part of the instance."""

    def __str__(self) -> str:
        # KeyError quotes its argument; keep the message readable
        return str(self.args[0]) if self.args else "unknown prompt"


class InconsistencyError(PrefOptError):
    """
    A pairwise preference table cannot be represented by a Bradley-Terry policy.

    Attributes:
        residual (float): Largest absolute deviation between the table and the
            preferences implied by the reconstructed policy
    """

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class ConvergenceError(PrefOptError):
    """
    An optimization did not reach its gradient tolerance within its step limit.

    Attributes:
        grad_norm (float): Gradient norm after the last step
        gap_history (list[float]): Largest per-prompt reward gap at each checkpoint
    """

    def __init__(self, message: str, grad_norm: float, gap_history: Optional[Sequence[float]] = None):
        super().__init__(message)
        self.grad_norm = grad_norm
        self.gap_history = [] if gap_history is None else [float(g) for g in gap_history]


class TrainingAbort(PrefOptError):
    """
    Training produced a non-finite loss or gradient.

    Attributes:
        step (int): Optimizer step at which the problem was detected
        quantity (str): Which quantity was non-finite ("loss" or "gradient")
        value (float): The offending value (or gradient norm)
        trajectory: Checkpoints recorded before the abort, when available
    """

    def __init__(self, step: int, quantity: str, value: float, trajectory=None):
        super().__init__(f"non-finite {quantity} at step {step}: {value!r}")
        self.step = step
        self.quantity = quantity
        self.value = value
        self.trajectory = trajectory
