"""
How a loss expectation is realized: exactly over the population, or as the
mean over a sampled dataset. Both reduce to a weighted list of
(prompt, winner, loser) index tuples.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np

from ..core.instance import BanditInstance
from ..datagen.dataset import PreferenceDataset, SamplingMode
from ..datagen.sampling import ReferenceDraws, pair_probabilities
from ..errors import ValidationError

WEIGHT_TOL = 1e-12


# EvaluationKind subclasses str so config files and the CLI can use plain
# strings; parse() turns them into members.
class EvaluationKind(str, Enum):
    POPULATION = "population"
    SAMPLED = "sampled"

    @classmethod
    def parse(cls, name: Union[str, "EvaluationKind"]) -> "EvaluationKind":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            raise ValidationError(f"unknown evaluation mode {name!r}") from None


# TupleBatch stores tuples as parallel index arrays instead of a list of
# objects, so a loss can evaluate every tuple in one vectorized call.
@dataclass(frozen=True)
class TupleBatch:
    """
    Weighted labeled tuples as parallel index arrays.

    Attributes:
        prompt, winner, loser: Index arrays into the instance
        weight: Tuple weights (sum to 1)
    """

    prompt: np.ndarray
    winner: np.ndarray
    loser: np.ndarray
    weight: np.ndarray

    def __len__(self) -> int:
        return int(self.prompt.size)

    @classmethod
    def uniform(cls, prompt, winner, loser) -> "TupleBatch":
        prompt = np.asarray(prompt, dtype=np.intp)
        if prompt.size == 0:
            raise ValidationError("a sampled batch needs at least one tuple")
        weight = np.full(prompt.size, 1.0 / prompt.size)
        return cls(prompt, np.asarray(winner, dtype=np.intp), np.asarray(loser, dtype=np.intp), weight)


def population_batch(instance: BanditInstance, pair_mode: SamplingMode) -> TupleBatch:
    """Every ordered labeled outcome weighted by P(x) P(pair|x) p*(z)."""
    prompt, winner, loser, weight = [], [], [], []
    for x, p in enumerate(instance.prompts):
        first, second, prob = pair_probabilities(p.pi_ref, pair_mode)
        star = p.pi_star
        # Bradley-Terry label probability under pi*
        p_first = star[first] / (star[first] + star[second])
        base = p.prob * prob
        # each unordered pair appears twice: (first wins) and (second wins)
        prompt.extend([x] * (2 * first.size))
        winner.extend(np.concatenate([first, second]).tolist())
        loser.extend(np.concatenate([second, first]).tolist())
        weight.extend(np.concatenate([base * p_first, base * (1.0 - p_first)]).tolist())
    batch = TupleBatch(
        np.array(prompt, dtype=np.intp),
        np.array(winner, dtype=np.intp),
        np.array(loser, dtype=np.intp),
        np.array(weight),
    )
    # floating-point sums of many small weights drift; allow WEIGHT_TOL
    total = batch.weight.sum()
    if abs(total - 1.0) > WEIGHT_TOL:
        raise ValidationError(f"population weights sum to {total!r}, expected 1")
    return batch


# EvaluationMode is the one switch between the two ways of taking the loss
# expectation. Losses never branch on it; they only see the TupleBatch it
# produces.
@dataclass(frozen=True)
class EvaluationMode:
    """
    POPULATION (exact expectation) or SAMPLED (mean over a dataset).

    Args:
        kind (EvaluationKind): Which realization
        pair_mode (SamplingMode): Pair distribution of the population
        dataset (PreferenceDataset, optional): Required in SAMPLED mode
        reference_draws (ReferenceDraws, optional): When set, the
            unsupervised cross-entropy term uses these draws in place of the
            exact expectation over pi_ref
    """

    kind: EvaluationKind = EvaluationKind.POPULATION
    pair_mode: SamplingMode = SamplingMode.UNIFORM_PAIRS
    dataset: Optional[PreferenceDataset] = None
    reference_draws: Optional[ReferenceDraws] = None

    def __post_init__(self):
        # frozen dataclass: normalize string fields in place
        object.__setattr__(self, "kind", EvaluationKind.parse(self.kind))
        object.__setattr__(self, "pair_mode", SamplingMode.parse(self.pair_mode))
        if self.kind is EvaluationKind.SAMPLED:
            if self.dataset is None or len(self.dataset) == 0:
                raise ValidationError("SAMPLED evaluation needs a non-empty dataset")
        elif self.pair_mode is SamplingMode.DEGENERATE:
            raise ValidationError("the population pair distribution must be uniform_pairs or ref_product")

    @classmethod
    def population(
        cls,
        pair_mode: Union[str, SamplingMode] = SamplingMode.UNIFORM_PAIRS,
        reference_draws: Optional[ReferenceDraws] = None,
    ) -> "EvaluationMode":
        return cls(EvaluationKind.POPULATION, SamplingMode.parse(pair_mode), None, reference_draws)

    @classmethod
    def sampled(
        cls, dataset: PreferenceDataset, reference_draws: Optional[ReferenceDraws] = None
    ) -> "EvaluationMode":
        return cls(EvaluationKind.SAMPLED, SamplingMode.UNIFORM_PAIRS, dataset, reference_draws)

    def batch(self, instance: BanditInstance) -> TupleBatch:
        if self.kind is EvaluationKind.POPULATION:
            return population_batch(instance, self.pair_mode)
        # SAMPLED: every stored tuple counts once, weight 1 / n
        return TupleBatch.uniform(*self.dataset.indices(instance))

    def reference_weights(self, instance: BanditInstance) -> np.ndarray:
        """
        Joint weights of (x, y) for the unsupervised term, P x K.

        Exact: P(x) pi_ref(y|x). With reference draws: their empirical
        frequencies.
        """
        if self.reference_draws is not None:
            return self.reference_draws.frequencies(instance)
        return instance.prompt_probs[:, None] * instance.pi_ref_matrix
