"""
The synthetic bandit world: prompts, their responses, the ground-truth policy
pi_star and the reference policy pi_ref.
"""

import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from ..errors import ShapeError, UnknownPromptError, ValidationError

PROB_TOL = 1e-12


def _frozen(values: Sequence[float], name: str) -> np.ndarray:
    try:
        arr = np.array(values, dtype=np.float64)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be numeric, got {values!r}") from None
    arr.setflags(write=False)
    return arr


def check_probability_vector(p: np.ndarray, name: str, strict: bool = True) -> None:
    """
    Validate a probability vector.

    Args:
        p (np.ndarray): Candidate probability vector
        name (str): Label used in error messages
        strict (bool): Require every entry in the open interval (0, 1)

    Raises:
        ValidationError: If the vector is empty, non-finite, does not sum to 1
            or (when strict) has an entry outside (0, 1)
    """
    if p.ndim != 1 or p.size == 0:
        raise ValidationError(f"{name} must be a non-empty vector")
    if not np.all(np.isfinite(p)):
        raise ValidationError(f"{name} has non-finite entries")
    if abs(p.sum() - 1.0) > PROB_TOL:
        raise ValidationError(f"{name} sums to {p.sum()!r}, expected 1")
    if strict and (np.any(p <= 0.0) or np.any(p >= 1.0)):
        raise ValidationError(f"{name} must have every entry in (0, 1)")
    if not strict and np.any(p < 0.0):
        raise ValidationError(f"{name} has negative entries")


@dataclass(frozen=True, eq=False)
class Prompt:
    """
    One prompt of a bandit instance.

    Args:
        id (str): Prompt identifier
        prob (float): Sampling probability under D_x
        features (np.ndarray): Feature vector phi(x), length F
        responses (tuple[str, ...]): Response identifiers, at least two
        pi_star (np.ndarray): Ground-truth (BT-optimal) policy over responses
        pi_ref (np.ndarray): Reference policy over responses
    """

    id: str
    prob: float
    features: np.ndarray
    responses: Tuple[str, ...]
    pi_star: np.ndarray
    pi_ref: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "features", _frozen(self.features, f"prompt {self.id!r} features"))
        object.__setattr__(self, "pi_star", _frozen(self.pi_star, f"prompt {self.id!r} pi_star"))
        object.__setattr__(self, "pi_ref", _frozen(self.pi_ref, f"prompt {self.id!r} pi_ref"))
        object.__setattr__(self, "responses", tuple(str(r) for r in self.responses))
        try:
            prob = float(self.prob)
        except (TypeError, ValueError):
            raise ValidationError(f"prompt {self.id!r} prob must be a number, got {self.prob!r}") from None
        object.__setattr__(self, "prob", prob)

    @property
    def n_responses(self) -> int:
        return len(self.responses)

    def response_index(self, response_id: str) -> int:
        try:
            return self.responses.index(response_id)
        except ValueError:
            raise ValidationError(f"prompt {self.id!r} has no response {response_id!r}") from None

    def __eq__(self, other) -> bool:
        if not isinstance(other, Prompt):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "prob": self.prob,
            "features": self.features.tolist(),
            "responses": list(self.responses),
            "pi_star": self.pi_star.tolist(),
            "pi_ref": self.pi_ref.tolist(),
        }


@dataclass(frozen=True)
class BanditInstance:
    """
    A finite prompt distribution with per-prompt response sets, the
    ground-truth policy pi_star and the reference policy pi_ref.

    Construction validates every invariant: strictly positive probability
    vectors summing to 1, prompt probabilities summing to 1, a shared feature
    dimension and distinct feature vectors.

    Besides the per-prompt view, the instance exposes padded arrays used by the
    vectorized loss code: `prompt_probs` (P), `feature_matrix` (P x F),
    `mask` (P x K), `pi_star_matrix` and `pi_ref_matrix` (P x K, zero where
    masked).
    """

    prompts: Tuple[Prompt, ...]
    _index: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        prompts = tuple(self.prompts)
        object.__setattr__(self, "prompts", prompts)
        if not prompts:
            raise ValidationError("an instance needs at least one prompt")

        index = {}
        for i, prompt in enumerate(prompts):
            if prompt.id in index:
                raise ValidationError(f"duplicate prompt id {prompt.id!r}")
            index[prompt.id] = i
            if not 0.0 < prompt.prob <= 1.0:
                raise ValidationError(f"prompt {prompt.id!r} probability must lie in (0, 1]")
            if prompt.n_responses < 2:
                raise ValidationError(f"prompt {prompt.id!r} needs at least two responses")
            if len(set(prompt.responses)) != prompt.n_responses:
                raise ValidationError(f"prompt {prompt.id!r} has duplicate response ids")
            for name in ("pi_star", "pi_ref"):
                vec = getattr(prompt, name)
                if vec.shape != (prompt.n_responses,):
                    raise ShapeError(f"prompt {prompt.id!r}: {name} length does not match responses")
                check_probability_vector(vec, f"prompt {prompt.id!r} {name}")
        object.__setattr__(self, "_index", index)

        probs = np.array([p.prob for p in prompts])
        if abs(probs.sum() - 1.0) > PROB_TOL:
            raise ValidationError(f"prompt probabilities sum to {probs.sum()!r}, expected 1")

        dims = {p.features.shape for p in prompts}
        if len(dims) != 1 or len(next(iter(dims))) != 1:
            raise ShapeError("every prompt needs a feature vector of the same length")
        feats = np.stack([p.features for p in prompts])
        if len({row.tobytes() for row in feats}) != len(prompts):
            raise ValidationError("feature vectors of distinct prompts must differ")

    # --- lookups -------------------------------------------------------------

    def __len__(self) -> int:
        return len(self.prompts)

    @property
    def prompt_ids(self) -> List[str]:
        return [p.id for p in self.prompts]

    def index_of(self, prompt_id: str) -> int:
        try:
            return self._index[prompt_id]
        except KeyError:
            raise UnknownPromptError(f"unknown prompt id {prompt_id!r}") from None

    def prompt(self, prompt_id: str) -> Prompt:
        return self.prompts[self.index_of(prompt_id)]

    # --- padded arrays -------------------------------------------------------

    @property
    def n_features(self) -> int:
        return self.prompts[0].features.shape[0]

    @property
    def max_responses(self) -> int:
        return max(p.n_responses for p in self.prompts)

    @cached_property
    def prompt_probs(self) -> np.ndarray:
        return _frozen([p.prob for p in self.prompts], "prompt probabilities")

    @cached_property
    def feature_matrix(self) -> np.ndarray:
        return _frozen(np.stack([p.features for p in self.prompts]), "feature matrix")

    @cached_property
    def mask(self) -> np.ndarray:
        mask = np.zeros((len(self.prompts), self.max_responses), dtype=bool)
        for i, p in enumerate(self.prompts):
            mask[i, : p.n_responses] = True
        mask.setflags(write=False)
        return mask

    def _padded(self, name: str) -> np.ndarray:
        out = np.zeros((len(self.prompts), self.max_responses))
        for i, p in enumerate(self.prompts):
            out[i, : p.n_responses] = getattr(p, name)
        out.setflags(write=False)
        return out

    @cached_property
    def pi_star_matrix(self) -> np.ndarray:
        return self._padded("pi_star")

    @cached_property
    def pi_ref_matrix(self) -> np.ndarray:
        return self._padded("pi_ref")

    # --- derived instances ---------------------------------------------------

    def with_pi_ref(self, pi_refs: Dict[str, Sequence[float]]) -> "BanditInstance":
        """Return a copy whose reference policy is replaced for the given prompts."""
        prompts = []
        for p in self.prompts:
            ref = pi_refs.get(p.id, p.pi_ref)
            prompts.append(Prompt(p.id, p.prob, p.features, p.responses, p.pi_star, ref))
        return BanditInstance(tuple(prompts))

    def tabular(self) -> "BanditInstance":
        """Return a copy with one-hot prompt features (one free row per prompt)."""
        eye = np.eye(len(self.prompts))
        prompts = [
            Prompt(p.id, p.prob, eye[i], p.responses, p.pi_star, p.pi_ref)
            for i, p in enumerate(self.prompts)
        ]
        return BanditInstance(tuple(prompts))

    # --- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {"prompts": [p.to_dict() for p in self.prompts]}

    @classmethod
    def from_dict(cls, doc: dict) -> "BanditInstance":
        """
        Build an instance from its JSON document, re-validating every invariant.

        Raises:
            ValidationError: If a field is missing or an invariant is violated
        """
        try:
            entries = doc["prompts"]
            prompts = tuple(
                Prompt(
                    id=str(e["id"]),
                    prob=e["prob"],
                    features=e["features"],
                    responses=e["responses"],
                    pi_star=e["pi_star"],
                    pi_ref=e["pi_ref"],
                )
                for e in entries
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed instance document: {exc}") from exc
        return cls(prompts)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "BanditInstance":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"instance is not valid JSON: {exc}") from exc
        return cls.from_dict(doc)

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "BanditInstance":
        return cls.from_json(Path(path).read_text())

    def content_hash(self) -> str:
        """SHA-256 of the canonical JSON document."""
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()

    def describe(self) -> str:
        parts = []
        for p in self.prompts:
            parts.append(
                f"{p.id}(p={p.prob:g}, pi*={np.round(p.pi_star, 4).tolist()}, "
                f"pi_ref={np.round(p.pi_ref, 4).tolist()})"
            )
        return "; ".join(parts)
