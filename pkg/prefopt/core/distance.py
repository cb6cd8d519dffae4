"""
Distances between two policies over the same finite response set.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ShapeError

KL_SMOOTHING = 1e-12


@dataclass(frozen=True)
class PolicyDistanceReport:
    """
    Distances between p and q for one prompt.

    Attributes:
        prompt_id (str, optional): Prompt the two policies belong to
        tv (float): Total variation, in [0, 1]
        kl_pq (float): KL(p || q), smoothed
        kl_qp (float): KL(q || p), smoothed
        argmax_match (bool): Whether the modes coincide (lowest index on ties)
    """

    prompt_id: Optional[str]
    tv: float
    kl_pq: float
    kl_qp: float
    argmax_match: bool


def _smoothed_kl(p: np.ndarray, q: np.ndarray) -> float:
    kl = float(np.sum(p * (np.log(p + KL_SMOOTHING) - np.log(q + KL_SMOOTHING))))
    # smoothing can leave a tiny negative residue when p == q up to rounding
    return max(kl, 0.0)


def total_variation(p, q) -> float:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ShapeError(f"cannot compare policies of shapes {p.shape} and {q.shape}")
    return min(0.5 * float(np.abs(p - q).sum()), 1.0)


def policy_distance(p, q, prompt_id: Optional[str] = None) -> PolicyDistanceReport:
    """
    Compare two probability vectors.

    TV = 1/2 sum |p - q|; both KL directions use additive smoothing 1e-12
    inside the logarithms so near-degenerate policies stay finite.

    Raises:
        ShapeError: If the vectors have different lengths
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    tv = total_variation(p, q)
    return PolicyDistanceReport(
        prompt_id=prompt_id,
        tv=tv,
        kl_pq=_smoothed_kl(p, q),
        kl_qp=_smoothed_kl(q, p),
        argmax_match=bool(np.argmax(p) == np.argmax(q)),
    )
