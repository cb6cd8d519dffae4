"""
Per-prompt reward tables and the sum-zero gauge.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterator, Mapping, Sequence, Tuple

import numpy as np

from ..errors import UnknownPromptError, ValidationError


def gauge_fix(r: Sequence[float]) -> np.ndarray:
    """
    Remove the additive indeterminacy of a reward vector.

    Args:
        r: Reward vector over one prompt's responses

    Returns:
        np.ndarray: r - mean(r), which sums to 0
    """
    r = np.asarray(r, dtype=np.float64)
    return r - r.mean()


@dataclass(frozen=True)
class RewardTable:
    """
    Rewards keyed by prompt id, one real vector per prompt.

    Rewards are identified only up to a per-prompt constant, so the table is
    stored in canonical form: every per-prompt vector sums to 0.

    Args:
        entries (Mapping[str, Sequence[float]]): Prompt id -> reward vector
    """

    entries: Mapping[str, np.ndarray]
    _ids: Tuple[str, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        fixed: Dict[str, np.ndarray] = {}
        for prompt_id, values in dict(self.entries).items():
            vec = np.asarray(values, dtype=np.float64)
            if vec.ndim != 1 or vec.size == 0:
                raise ValidationError(f"reward for prompt {prompt_id!r} must be a non-empty vector")
            if not np.all(np.isfinite(vec)):
                raise ValidationError(f"reward for prompt {prompt_id!r} has non-finite entries")
            vec = gauge_fix(vec)
            vec.setflags(write=False)
            fixed[str(prompt_id)] = vec
        object.__setattr__(self, "entries", fixed)
        object.__setattr__(self, "_ids", tuple(fixed))

    def __getitem__(self, prompt_id: str) -> np.ndarray:
        try:
            return self.entries[prompt_id]
        except KeyError:
            raise UnknownPromptError(f"reward table has no prompt {prompt_id!r}") from None

    def __iter__(self) -> Iterator[str]:
        return iter(self._ids)

    def __len__(self) -> int:
        return len(self._ids)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RewardTable):
            return NotImplemented
        return self._ids == other._ids and all(
            np.array_equal(self.entries[k], other.entries[k]) for k in self._ids
        )

    def max_gap(self) -> float:
        """Largest within-prompt reward spread (max - min)."""
        return max(float(v.max() - v.min()) for v in self.entries.values())

    def to_dict(self) -> Dict[str, list]:
        return {k: v.tolist() for k, v in self.entries.items()}
