"""
Global-norm gradient clipping.
"""

import numpy as np

from ..errors import ValidationError


def clip_gradient(grad: np.ndarray, max_norm: float) -> np.ndarray:
    """
    Rescale grad so its global L2 norm is at most max_norm.

    Example:
        >>> clip_gradient(np.array([30.0, 40.0]), 10.0).tolist()
        [6.0, 8.0]

    Raises:
        ValidationError: If max_norm is not positive
    """
    if not max_norm > 0.0:
        raise ValidationError(f"max_norm must be > 0, got {max_norm!r}")
    grad = np.asarray(grad, dtype=np.float64)
    # one norm over every coordinate, not per row
    norm = float(np.linalg.norm(grad))
    if norm <= max_norm:
        return grad
    # same direction, norm exactly max_norm
    return grad * (max_norm / norm)
