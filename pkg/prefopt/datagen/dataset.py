"""
Preference datasets: labeled (prompt, winner, loser) tuples with provenance,
stored as CSV plus a JSON sidecar.
"""

import json
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..core.instance import BanditInstance
from ..errors import UnknownPromptError, ValidationError

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["prompt_id", "winner_id", "loser_id"]


class SamplingMode(str, Enum):
    """
    How response pairs are drawn for a prompt.

    REF_PRODUCT draws two responses i.i.d. from pi_ref (resampling equal
    draws); UNIFORM_PAIRS draws uniformly over unordered distinct pairs;
    DEGENERATE marks the exhaustive single-label datasets.
    """

    REF_PRODUCT = "ref_product"
    UNIFORM_PAIRS = "uniform_pairs"
    DEGENERATE = "degenerate"

    @classmethod
    def parse(cls, name: Union[str, "SamplingMode"]) -> "SamplingMode":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "_")
        try:
            return cls(key)
        except ValueError:
            raise ValidationError(f"unknown sampling mode {name!r}") from None


@dataclass(frozen=True)
class Provenance:
    """Where a dataset came from: seed, sampling mode, count and instance hash."""

    seed: Optional[int]
    mode: SamplingMode
    n: int
    instance_hash: str

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "mode": self.mode.value,
            "n": self.n,
            "instance_hash": self.instance_hash,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Provenance":
        try:
            return cls(
                seed=doc["seed"],
                mode=SamplingMode.parse(doc["mode"]),
                n=int(doc["n"]),
                instance_hash=str(doc["instance_hash"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed dataset provenance: {exc}") from exc


@dataclass(frozen=True)
class PreferenceDataset:
    """
    An ordered list of labeled tuples (prompt_id, winner_id, loser_id).

    Args:
        tuples: The labeled tuples; the winner never equals the loser
        provenance (Provenance): Seed, sampling mode, count, instance hash
    """

    tuples: Tuple[Tuple[str, str, str], ...]
    provenance: Provenance

    def __post_init__(self):
        tuples = tuple((str(x), str(w), str(l)) for x, w, l in self.tuples)
        for x, w, l in tuples:
            if w == l:
                raise ValidationError(f"tuple for prompt {x!r} has winner == loser ({w!r})")
        object.__setattr__(self, "tuples", tuples)

    def __len__(self) -> int:
        return len(self.tuples)

    def __iter__(self):
        return iter(self.tuples)

    def check_against(self, instance: BanditInstance) -> None:
        """
        Raise ValidationError if any tuple references an id missing from the
        instance.
        """
        for x, w, l in self.tuples:
            try:
                prompt = instance.prompt(x)
            except UnknownPromptError as exc:
                raise ValidationError(str(exc)) from None
            prompt.response_index(w)
            prompt.response_index(l)

    def indices(self, instance: BanditInstance) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Map ids to (prompt, winner, loser) index arrays of the instance."""
        lookup = {}
        for i, p in enumerate(instance.prompts):
            for k, r in enumerate(p.responses):
                lookup[(p.id, r)] = (i, k)
        n = len(self.tuples)
        prompt = np.empty(n, dtype=np.intp)
        winner = np.empty(n, dtype=np.intp)
        loser = np.empty(n, dtype=np.intp)
        for t, (x, w, l) in enumerate(self.tuples):
            try:
                i, kw = lookup[(x, w)]
                _, kl = lookup[(x, l)]
            except KeyError:
                instance.index_of(x)
                raise ValidationError(f"tuple {t} references an unknown response of prompt {x!r}") from None
            prompt[t], winner[t], loser[t] = i, kw, kl
        return prompt, winner, loser

    @classmethod
    def from_indices(
        cls,
        instance: BanditInstance,
        prompt: Sequence[int],
        winner: Sequence[int],
        loser: Sequence[int],
        provenance: Provenance,
    ) -> "PreferenceDataset":
        prompts = instance.prompts
        tuples = tuple(
            (prompts[i].id, prompts[i].responses[w], prompts[i].responses[l])
            for i, w, l in zip(prompt, winner, loser)
        )
        return cls(tuples, provenance)

    # --- files ---------------------------------------------------------------

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(list(self.tuples), columns=CSV_COLUMNS)

    @staticmethod
    def sidecar_path(path: Union[str, Path]) -> Path:
        path = Path(path)
        return path.with_name(path.name + ".json")

    def save(self, path: Union[str, Path]) -> Path:
        """Write `path` (CSV) and `path`.json (provenance)."""
        path = Path(path)
        self.to_frame().to_csv(path, index=False, lineterminator="\n")
        self.sidecar_path(path).write_text(
            json.dumps(self.provenance.to_dict(), indent=2, sort_keys=True) + "\n"
        )
        logger.info("wrote %d tuples to %s", len(self), path)
        return path

    @classmethod
    def load(cls, path: Union[str, Path], instance: Optional[BanditInstance] = None) -> "PreferenceDataset":
        """
        Read a dataset and its sidecar; with an instance, every id is checked.

        Raises:
            ValidationError: On a missing sidecar, a wrong header or bad ids
        """
        path = Path(path)
        sidecar = cls.sidecar_path(path)
        try:
            frame = pd.read_csv(path, dtype=str, keep_default_na=False)
            provenance = Provenance.from_dict(json.loads(sidecar.read_text()))
        except FileNotFoundError as exc:
            raise ValidationError(f"missing dataset file: {exc.filename}") from exc
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{sidecar}: invalid JSON ({exc})") from exc
        if list(frame.columns) != CSV_COLUMNS:
            raise ValidationError(f"{path}: expected header {','.join(CSV_COLUMNS)}")
        dataset = cls(tuple(frame.itertuples(index=False, name=None)), provenance)
        if instance is not None:
            dataset.check_against(instance)
            if provenance.instance_hash != instance.content_hash():
                logger.warning("%s was generated from a different instance", path)
        return dataset
