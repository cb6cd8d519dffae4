"""
Generating preference data from a bandit instance.

Every sampler owns one `numpy.random.default_rng(seed)` (PCG64) and draws in a
fixed order: all prompts, then all pairs, then all labels.
"""

import logging
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Tuple, Union

import numpy as np

from ..core.instance import BanditInstance
from ..errors import ValidationError
from .dataset import PreferenceDataset, Provenance, SamplingMode

logger = logging.getLogger(__name__)


class WeightedTuple(NamedTuple):
    prompt_id: str
    winner_id: str
    loser_id: str
    weight: float


def pair_probabilities(pi_ref: np.ndarray, mode: SamplingMode) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Unordered distinct pairs (i < j) of one prompt and their probabilities.

    UNIFORM_PAIRS gives every pair 1 / C(K, 2); REF_PRODUCT gives
    2 pi_i pi_j / (1 - sum pi^2), the i.i.d. pi_ref draw conditioned on i != j.
    """
    k = len(pi_ref)
    first, second = np.triu_indices(k, 1)
    if mode is SamplingMode.UNIFORM_PAIRS:
        prob = np.full(first.size, 1.0 / first.size)
    elif mode is SamplingMode.REF_PRODUCT:
        prob = 2.0 * pi_ref[first] * pi_ref[second] / (1.0 - np.sum(pi_ref**2))
    else:
        raise ValidationError(f"pair probabilities are undefined for mode {mode.value!r}")
    return first, second, prob


def population_weights(
    instance: BanditInstance, mode: Union[str, SamplingMode] = SamplingMode.UNIFORM_PAIRS
) -> List[WeightedTuple]:
    """
    Enumerate every ordered labeled outcome with its exact probability.

    Weight of (x, y_w, y_l) is P(x) * P({y_w, y_l} | x) * p*(y_w > y_l | x);
    the weights sum to 1.

    Example:
        For the single-prompt instance with pi* = (0.6, 0.3, 0.1) under
        UNIFORM_PAIRS, (x, y_a, y_b) has weight 1 * (1/3) * (2/3) = 2/9.
    """
    mode = SamplingMode.parse(mode)
    out = []
    for prompt in instance.prompts:
        first, second, prob = pair_probabilities(prompt.pi_ref, mode)
        star = prompt.pi_star
        for i, j, q in zip(first, second, prob):
            p_ij = star[i] / (star[i] + star[j])
            base = prompt.prob * q
            out.append(WeightedTuple(prompt.id, prompt.responses[i], prompt.responses[j], base * p_ij))
            out.append(WeightedTuple(prompt.id, prompt.responses[j], prompt.responses[i], base * (1.0 - p_ij)))
    return out


def draw_indices(
    instance: BanditInstance, n: int, mode: SamplingMode, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Draw n labeled tuples as (prompt, winner, loser) index arrays.

    Consumes the generator in the order prompts, pairs, labels; REF_PRODUCT
    redraws both responses of every tuple whose two draws coincide.
    """
    n_resp = np.array([p.n_responses for p in instance.prompts])
    prompt = rng.choice(len(instance), size=n, p=instance.prompt_probs)

    if mode is SamplingMode.UNIFORM_PAIRS:
        n_pairs = n_resp * (n_resp - 1) // 2
        width = int(n_pairs.max())
        first = np.zeros((len(instance), width), dtype=np.intp)
        second = np.zeros((len(instance), width), dtype=np.intp)
        for i, k in enumerate(n_resp):
            a, b = np.triu_indices(k, 1)
            first[i, : a.size] = a
            second[i, : b.size] = b
        slot = np.floor(rng.random(n) * n_pairs[prompt]).astype(np.intp)
        slot = np.minimum(slot, n_pairs[prompt] - 1)
        y1 = first[prompt, slot]
        y2 = second[prompt, slot]
    elif mode is SamplingMode.REF_PRODUCT:
        cdf = np.cumsum(instance.pi_ref_matrix, axis=1)

        def draw(rows: np.ndarray) -> np.ndarray:
            u = rng.random(rows.size)
            y = np.sum(u[:, None] > cdf[rows], axis=1)
            return np.minimum(y, n_resp[rows] - 1)

        y1 = draw(prompt)
        y2 = draw(prompt)
        clash = np.flatnonzero(y1 == y2)
        while clash.size:
            y1[clash] = draw(prompt[clash])
            y2[clash] = draw(prompt[clash])
            clash = clash[y1[clash] == y2[clash]]
    else:
        raise ValidationError(f"cannot sample tuples in mode {mode.value!r}")

    star = instance.pi_star_matrix
    p_first = star[prompt, y1] / (star[prompt, y1] + star[prompt, y2])
    first_wins = rng.random(n) < p_first
    winner = np.where(first_wins, y1, y2)
    loser = np.where(first_wins, y2, y1)
    return prompt, winner, loser


def sample_tuples(
    instance: BanditInstance,
    n: int,
    mode: Union[str, SamplingMode] = SamplingMode.UNIFORM_PAIRS,
    seed: int = 0,
) -> PreferenceDataset:
    """
    Sample n labeled tuples x ~ D_x, pair by mode, label z ~ p*.

    Args:
        instance (BanditInstance): The world
        n (int): Number of tuples, at least 1
        mode: REF_PRODUCT or UNIFORM_PAIRS
        seed (int): Seed of the generator; equal seeds give equal datasets

    Raises:
        ValidationError: If n < 1 or the mode cannot be sampled
    """
    mode = SamplingMode.parse(mode)
    if int(n) != n or n < 1:
        raise ValidationError(f"n must be a positive integer, got {n!r}")
    rng = np.random.default_rng(seed)
    prompt, winner, loser = draw_indices(instance, int(n), mode, rng)
    provenance = Provenance(seed=int(seed), mode=mode, n=int(n), instance_hash=instance.content_hash())
    logger.debug("sampled %d tuples (%s, seed %d)", n, mode.value, seed)
    return PreferenceDataset.from_indices(instance, prompt, winner, loser, provenance)


def degenerate_dataset(instance: BanditInstance) -> PreferenceDataset:
    """
    One tuple per unordered pair per prompt, won by the response with the
    larger pi* (lowest index on ties), so every empirical preference is 0 or 1.
    """
    tuples = []
    for prompt in instance.prompts:
        first, second = np.triu_indices(prompt.n_responses, 1)
        for i, j in zip(first, second):
            if prompt.pi_star[j] > prompt.pi_star[i]:
                i, j = j, i
            tuples.append((prompt.id, prompt.responses[i], prompt.responses[j]))
    provenance = Provenance(
        seed=None, mode=SamplingMode.DEGENERATE, n=len(tuples), instance_hash=instance.content_hash()
    )
    return PreferenceDataset(tuple(tuples), provenance)


@dataclass(frozen=True)
class ReferenceDraws:
    """
    Unlabeled responses y ~ pi_ref(.|x) with x ~ D_x, as index arrays.
    """

    prompt: np.ndarray
    response: np.ndarray
    seed: Optional[int] = None

    def __len__(self) -> int:
        return int(self.prompt.size)

    def frequencies(self, instance: BanditInstance) -> np.ndarray:
        """Empirical joint frequency of (x, y), P x K, summing to 1."""
        out = np.zeros((len(instance), instance.max_responses))
        np.add.at(out, (self.prompt, self.response), 1.0)
        return out / self.prompt.size


def sample_reference_responses(instance: BanditInstance, n: int, seed: int = 0) -> ReferenceDraws:
    """Draw n unlabeled (x, y) pairs with x ~ D_x and y ~ pi_ref(.|x)."""
    if int(n) != n or n < 1:
        raise ValidationError(f"n must be a positive integer, got {n!r}")
    rng = np.random.default_rng(seed)
    prompt = rng.choice(len(instance), size=int(n), p=instance.prompt_probs)
    cdf = np.cumsum(instance.pi_ref_matrix, axis=1)
    n_resp = np.array([p.n_responses for p in instance.prompts])
    u = rng.random(prompt.size)
    response = np.minimum(np.sum(u[:, None] > cdf[prompt], axis=1), n_resp[prompt] - 1)
    return ReferenceDraws(prompt=prompt, response=response, seed=int(seed))
