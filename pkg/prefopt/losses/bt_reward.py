"""
Bradley-Terry reward loss over a tabular reward, and the fitting routine.
"""

import logging
from dataclasses import replace
from typing import Optional

import numpy as np

from ..core.instance import BanditInstance
from ..core.policy import PolicyModel
from ..core.reward import RewardTable
from ..errors import ConvergenceError
from .evaluation import EvaluationKind, EvaluationMode
from .loss import PreferenceLoss
from .spec import LossKind, LossSpec

logger = logging.getLogger(__name__)

FIT_GRAD_TOL = 1e-4
FIT_GAP_DRIFT_TOL = 1e-3


# BTRewardLoss fits rewards, not a policy. uses_softmax = False makes the
# base class hand the raw logits to pair_terms, so each logit is a reward.
class BTRewardLoss(PreferenceLoss):
    """
    Formula: -log sigma(r(y_w) - r(y_l))

    The logits of the model are the rewards themselves; no softmax is applied,
    so the loss is invariant to a per-prompt shift of the rewards.
    """

    uses_softmax = False

    def pair_terms(self, s_w, s_l, ctx):
        gap = s_l - s_w
        values = np.logaddexp(0.0, gap)
        # exp(gap - softplus(gap)) is sigma(gap) without overflow
        slope = np.exp(gap - values)
        return values, -slope, slope


def default_fit_config():
    # optim imports losses; import here to avoid a cycle
    from ..optim.config import TrainConfig

    return TrainConfig(learning_rate=2e-4, steps=50000, record_every=100, grad_tol=1e-9)


def bt_reward_fit(
    instance: BanditInstance,
    mode: Optional[EvaluationMode] = None,
    config=None,
) -> RewardTable:
    """
    Fit one free reward per (prompt, response) by minimizing the BT loss.

    The reward is trained with the same Adam loop as policies, on the tabular
    (one-hot) version of the instance, and returned gauge-fixed. In SAMPLED
    mode the whole dataset is used as one batch.

    Args:
        instance (BanditInstance): The world
        mode (EvaluationMode, optional): Defaults to POPULATION
        config (TrainConfig, optional): Optimizer settings; defaults to Adam
            lr 2e-4 for 50000 steps

    Raises:
        ConvergenceError: If the final gradient norm exceeds 1e-4, or the
            largest reward gap still moves by more than 1e-3 over the last
            tenth of the run. `gap_history` holds the gap at each checkpoint.
    """
    # optim imports losses; import here to avoid a cycle
    from ..optim.trainer import train

    mode = mode or EvaluationMode.population()
    config = config or default_fit_config()
    # one free parameter per (prompt, response): the one-hot instance
    tabular = instance.tabular()
    spec = LossSpec(LossKind.BT_REWARD, 1.0)

    dataset = None
    if mode.kind is EvaluationKind.SAMPLED:
        dataset = mode.dataset
        config = replace(config, mode=EvaluationKind.SAMPLED, batch_size=len(dataset))
    else:
        config = replace(config, mode=EvaluationKind.POPULATION, pair_mode=mode.pair_mode)

    model, trajectory = train(spec, tabular, PolicyModel.zeros(tabular), config, dataset=dataset)

    gaps = trajectory.reward_gaps()
    final = trajectory.records[-1]
    rewards = {p.id: row[: p.n_responses] for p, row in zip(tabular.prompts, model.logits(tabular))}
    table = RewardTable(rewards)

    # the first checkpoints are far from the fit; only the last tenth has to be flat
    tail = gaps[-max(2, len(gaps) // 10):]
    drift = float(tail[-1] - tail[0])
    if final.grad_norm > FIT_GRAD_TOL or abs(drift) > FIT_GAP_DRIFT_TOL:
        raise ConvergenceError(
            f"reward fit did not converge: gradient norm {final.grad_norm:.3g}, "
            f"reward gap moved {drift:.3g} over the last checkpoints",
            final.grad_norm,
            gaps,
        )
    logger.info("reward fit converged after %d steps (gradient norm %.3g)", final.step, final.grad_norm)
    return table
