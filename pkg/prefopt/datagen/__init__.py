"""
Preference data: sampled tuple datasets, exact population weights and the
degenerate single-label datasets.
"""

from .dataset import PreferenceDataset, Provenance, SamplingMode
from .sampling import (
    ReferenceDraws,
    WeightedTuple,
    degenerate_dataset,
    draw_indices,
    pair_probabilities,
    population_weights,
    sample_reference_responses,
    sample_tuples,
)

__all__ = [
    "PreferenceDataset",
    "Provenance",
    "ReferenceDraws",
    "SamplingMode",
    "WeightedTuple",
    "degenerate_dataset",
    "draw_indices",
    "pair_probabilities",
    "population_weights",
    "sample_reference_responses",
    "sample_tuples",
]
