"""
Training trajectories: checkpointed loss, gradient norm, policy snapshot and
distances to pi*, pi_ref and the mode policy.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..core.distance import total_variation
from ..core.instance import BanditInstance
from ..core.oracles import mode_policy
from ..errors import ValidationError

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = [
    "step",
    "loss",
    "grad_norm",
    "prompt_id",
    "response_id",
    "prob",
    "tv_star",
    "tv_ref",
    "tv_delta",
]
# 17 significant digits write every float64 exactly
FLOAT_FORMAT = "%.17g"


# A TrajectoryRecord is one row of measurements. The distances are computed
# when the record is made, so reports never need the instance again.
@dataclass(frozen=True)
class TrajectoryRecord:
    """
    One checkpoint.

    Attributes:
        step (int): Optimizer steps taken before the checkpoint
        loss (float): Loss at the checkpoint's parameters
        grad_norm (float): Unclipped gradient norm at the checkpoint
        probs (np.ndarray): P x K policy snapshot (zero where masked)
        tv_star, tv_ref, tv_delta (np.ndarray): Per-prompt total variation to
            pi*, pi_ref and the mode policy of pi*
    """

    step: int
    loss: float
    grad_norm: float
    probs: np.ndarray
    tv_star: np.ndarray
    tv_ref: np.ndarray
    tv_delta: np.ndarray

    @classmethod
    def measure(
        cls, instance: BanditInstance, step: int, loss: float, grad_norm: float, probs: np.ndarray
    ) -> "TrajectoryRecord":
        tv_star, tv_ref, tv_delta = [], [], []
        for i, prompt in enumerate(instance.prompts):
            # drop the zero padding before comparing distributions
            pi = probs[i, : prompt.n_responses]
            tv_star.append(total_variation(pi, prompt.pi_star))
            tv_ref.append(total_variation(pi, prompt.pi_ref))
            tv_delta.append(total_variation(pi, mode_policy(prompt.pi_star)))
        return cls(step, float(loss), float(grad_norm), probs, np.array(tv_star), np.array(tv_ref), np.array(tv_delta))


# Trajectory keeps prompt and response ids next to the records, so the
# arrays inside each record can be labelled when written to CSV.
@dataclass(frozen=True)
class Trajectory:
    """
    Ordered checkpoints of one training run.

    Args:
        prompt_ids (tuple[str, ...]): Prompt order of the snapshots
        responses (tuple[tuple[str, ...], ...]): Response ids per prompt
        records (tuple[TrajectoryRecord, ...]): Checkpoints, strictly
            increasing in step
    """

    prompt_ids: Tuple[str, ...]
    responses: Tuple[Tuple[str, ...], ...]
    records: Tuple[TrajectoryRecord, ...]

    def __post_init__(self):
        records = tuple(self.records)
        steps = [r.step for r in records]
        if any(b <= a for a, b in zip(steps, steps[1:])):
            raise ValidationError("trajectory steps must be strictly increasing")
        object.__setattr__(self, "records", records)

    @classmethod
    def for_instance(cls, instance: BanditInstance, records: Sequence[TrajectoryRecord]) -> "Trajectory":
        return cls(
            tuple(instance.prompt_ids),
            tuple(p.responses for p in instance.prompts),
            tuple(records),
        )

    def __len__(self) -> int:
        return len(self.records)

    @property
    def final(self) -> TrajectoryRecord:
        return self.records[-1]

    @property
    def steps(self) -> np.ndarray:
        return np.array([r.step for r in self.records])

    @property
    def losses(self) -> np.ndarray:
        return np.array([r.loss for r in self.records])

    def prob_series(self, prompt_id: str, response_id: str) -> np.ndarray:
        """pi_theta(response | prompt) at every checkpoint."""
        try:
            i = self.prompt_ids.index(prompt_id)
            k = self.responses[i].index(response_id)
        except ValueError:
            raise ValidationError(f"trajectory has no ({prompt_id!r}, {response_id!r})") from None
        return np.array([r.probs[i, k] for r in self.records])

    def reward_gaps(self) -> np.ndarray:
        """
        Largest within-prompt log-probability spread at every checkpoint.

        For a model whose logits are rewards this is the largest reward gap.
        """
        gaps = []
        for r in self.records:
            spread = 0.0
            for i, resp in enumerate(self.responses):
                # floor keeps log finite for a collapsed response
                logp = np.log(np.maximum(r.probs[i, : len(resp)], 1e-300))
                spread = max(spread, float(logp.max() - logp.min()))
            gaps.append(spread)
        return np.array(gaps)

    def to_frame(self) -> pd.DataFrame:
        """Long format: one row per (checkpoint, prompt, response)."""
        rows: List[tuple] = []
        for r in self.records:
            for i, (prompt_id, resp) in enumerate(zip(self.prompt_ids, self.responses)):
                for k, response_id in enumerate(resp):
                    rows.append(
                        (
                            r.step,
                            r.loss,
                            r.grad_norm,
                            prompt_id,
                            response_id,
                            r.probs[i, k],
                            r.tv_star[i],
                            r.tv_ref[i],
                            r.tv_delta[i],
                        )
                    )
        return pd.DataFrame(rows, columns=TRAJECTORY_COLUMNS)

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        self.to_frame().to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        logger.info("wrote trajectory (%d checkpoints) to %s", len(self), path)
        return path

    @staticmethod
    def read_frame(path: Union[str, Path]) -> pd.DataFrame:
        """Read a saved trajectory CSV back with every float bit-exact."""
        return pd.read_csv(path, float_precision="round_trip")
