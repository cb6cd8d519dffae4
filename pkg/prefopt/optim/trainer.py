"""
The training loop: batch -> loss and gradient -> clip -> Adam -> apply.
"""

import logging
from typing import Iterator, List, Optional, Tuple

import numpy as np
from scipy.special import log_softmax

from ..core.instance import BanditInstance
from ..core.policy import PolicyModel
from ..datagen.dataset import PreferenceDataset
from ..datagen.sampling import draw_indices
from ..errors import DomainError, TrainingAbort, ValidationError
from ..losses.evaluation import EvaluationKind, TupleBatch, population_batch
from ..losses.objective import build_loss
from ..losses.spec import LossSpec
from .adam import AdamState, adam_step
from .clipping import clip_gradient
from .config import TrainConfig
from .trajectory import Trajectory, TrajectoryRecord

logger = logging.getLogger(__name__)


def _fresh_batches(instance: BanditInstance, config: TrainConfig, rng: np.random.Generator) -> Iterator[TupleBatch]:
    while True:
        yield TupleBatch.uniform(*draw_indices(instance, config.batch_size, config.pair_mode, rng))


def _epoch_batches(
    indices: Tuple[np.ndarray, np.ndarray, np.ndarray], batch_size: int, rng: np.random.Generator
) -> Iterator[TupleBatch]:
    prompt, winner, loser = indices
    n = prompt.size
    while True:
        # reshuffle at every epoch; the last batch of an epoch may be short
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            take = order[start : start + batch_size]
            yield TupleBatch.uniform(prompt[take], winner[take], loser[take])


def _batches(
    instance: BanditInstance, config: TrainConfig, dataset: Optional[PreferenceDataset]
) -> Iterator[TupleBatch]:
    # POPULATION: the exact weighted batch never changes, so build it once
    if config.mode is EvaluationKind.POPULATION and dataset is None:
        batch = population_batch(instance, config.pair_mode)
        while True:
            yield batch

    # one generator per run: the same seed gives the same batches
    rng = np.random.default_rng(config.seed)
    if dataset is not None:
        yield from _epoch_batches(dataset.indices(instance), config.batch_size, rng)
    elif config.fixed_dataset_size is not None:
        fixed = draw_indices(instance, config.fixed_dataset_size, config.pair_mode, rng)
        yield from _epoch_batches(fixed, config.batch_size, rng)
    else:
        yield from _fresh_batches(instance, config, rng)


def train(
    spec: LossSpec,
    instance: BanditInstance,
    init: PolicyModel,
    config: TrainConfig,
    dataset: Optional[PreferenceDataset] = None,
) -> Tuple[PolicyModel, Trajectory]:
    """
    Minimize a loss with Adam from the given initial policy.

    POPULATION mode takes the exact gradient every step. SAMPLED mode draws a
    fresh batch of `batch_size` tuples per step, or cycles in shuffled epochs
    over `dataset` (or a dataset of `fixed_dataset_size` drawn once). Gradients
    are clipped to `clip_max_norm` before the Adam step.

    Checkpoints are taken at step 0, every `record_every` steps and at the
    last step. With `grad_tol` set, training stops at the first step whose
    gradient norm is below it, without applying that step's update.

    Returns:
        tuple[PolicyModel, Trajectory]: Final parameters and the checkpoints

    Raises:
        TrainingAbort: On a non-finite loss or gradient; the exception carries
            the checkpoints recorded so far in `trajectory`
    """
    if dataset is not None and len(dataset) == 0:
        raise ValidationError("training dataset is empty")
    loss = build_loss(spec)
    phi = instance.feature_matrix
    ref_weights = instance.prompt_probs[:, None] * instance.pi_ref_matrix
    theta = np.array(init.theta, dtype=np.float64)
    model = init.with_theta(theta)
    model.logits(instance)  # shape check before the loop
    state = AdamState.zeros(theta.shape)
    batches = _batches(instance, config, dataset)
    records: List[TrajectoryRecord] = []

    logger.info(
        "training %s (lambda=%g) for %d steps, %s mode, lr %g",
        spec.label,
        spec.lam,
        config.steps,
        config.mode.value,
        config.learning_rate,
    )

    def abort(step: int, quantity: str, value: float):
        exc = TrainingAbort(step, quantity, value, Trajectory.for_instance(instance, records))
        logger.warning("%s: %s", spec.label, exc)
        return exc

    # steps + 1 passes: pass k measures the policy after k updates
    for step in range(config.steps + 1):
        logits = phi @ theta
        # padded responses get zero probability under the softmax
        logits = np.where(instance.mask, logits, -np.inf)
        try:
            result = loss.evaluate(logits, instance, next(batches), ref_weights)
        except DomainError:
            raise abort(step, "loss", float("nan")) from None
        grad = phi.T @ result.logit_grad
        grad_norm = float(np.linalg.norm(grad))
        if not np.isfinite(result.value):
            raise abort(step, "loss", result.value)
        if not np.isfinite(grad_norm):
            raise abort(step, "gradient", grad_norm)

        last = step == config.steps
        stop = config.grad_tol is not None and grad_norm < config.grad_tol
        if last or stop or step % config.record_every == 0:
            probs = np.exp(log_softmax(logits, axis=1))
            records.append(TrajectoryRecord.measure(instance, step, result.value, grad_norm, probs))
            logger.debug("step %d loss %.6g grad %.3g", step, result.value, grad_norm)
        # the last pass only measures; no update follows it
        if last or stop:
            break

        if config.clip_max_norm is not None:
            grad = clip_gradient(grad, config.clip_max_norm)
        state, update = adam_step(state, grad, config.learning_rate, config.betas, config.eps)
        theta = theta + update

    trajectory = Trajectory.for_instance(instance, records)
    final = trajectory.final
    logger.info(
        "finished %s after %d steps: loss %.6g, max TV to pi* %.4f",
        spec.label,
        final.step,
        final.loss,
        float(final.tv_star.max()),
    )
    return init.with_theta(theta), trajectory
