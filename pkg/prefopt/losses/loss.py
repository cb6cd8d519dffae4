"""
Abstract base class shared by every preference loss.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.special import log_softmax

from ..core.instance import BanditInstance
from .evaluation import TupleBatch
from .spec import LossSpec


# PairContext gathers the reference and target probabilities of every tuple
# once, so pair_terms() only indexes arrays.
@dataclass(frozen=True)
class PairContext:
    """
    Per-tuple quantities a loss may need besides the policy scores.

    Attributes:
        batch (TupleBatch): The weighted tuples
        log_ref_w, log_ref_l: log pi_ref of winner and loser
        star_w, star_l: pi* of winner and loser
    """

    batch: TupleBatch
    log_ref_w: np.ndarray
    log_ref_l: np.ndarray
    star_w: np.ndarray
    star_l: np.ndarray

    @classmethod
    def build(cls, instance: BanditInstance, batch: TupleBatch) -> "PairContext":
        ref = instance.pi_ref_matrix
        star = instance.pi_star_matrix
        idx_w = (batch.prompt, batch.winner)
        idx_l = (batch.prompt, batch.loser)
        return cls(batch, np.log(ref[idx_w]), np.log(ref[idx_l]), star[idx_w], star[idx_l])

    @property
    def ref_preference(self) -> np.ndarray:
        """p_ref(y_w > y_l) per tuple."""
        ref_w = np.exp(self.log_ref_w)
        return ref_w / (ref_w + np.exp(self.log_ref_l))

    @property
    def star_preference(self) -> np.ndarray:
        """p*(y_w > y_l) per tuple."""
        return self.star_w / (self.star_w + self.star_l)


# LossEvaluation is what evaluate() hands back to the trainer and to gradcheck.
@dataclass(frozen=True)
class LossEvaluation:
    """
    Result of one loss evaluation.

    Attributes:
        value (float): The loss
        per_tuple (np.ndarray): Pairwise term of every tuple (unweighted,
            without the unsupervised term)
        logit_grad (np.ndarray): d loss / d logits, P x K (zero where masked)
    """

    value: float
    per_tuple: np.ndarray
    logit_grad: np.ndarray


# PreferenceLoss is a template: evaluate() does the shared work and calls
# pair_terms(), which each subclass fills in. A new loss only writes the
# per-tuple value and its two score derivatives.
class PreferenceLoss(ABC):
    """
    A loss over weighted (prompt, winner, loser) tuples.

    Subclasses supply the pairwise term as a function of the winner and loser
    scores. Scores are log pi_theta for policy losses; losses that set
    `uses_softmax = False` score responses by their raw logits instead. The
    base class turns the pairwise term into a value and an exact gradient with
    respect to the logits, adding an optional unsupervised term.
    """

    uses_softmax = True

    def __init__(self, spec: LossSpec):
        self.spec = spec
        self.lam = spec.lam

    @abstractmethod
    def pair_terms(
        self, s_w: np.ndarray, s_l: np.ndarray, ctx: PairContext
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Pairwise loss of every tuple.

        Returns:
            tuple: (values, d values / d s_w, d values / d s_l)
        """
        raise NotImplementedError

    def unsupervised_terms(
        self, log_probs: np.ndarray, probs: np.ndarray, ref_weights: np.ndarray
    ) -> Tuple[float, np.ndarray]:
        """Value and logit gradient of a label-free term; none by default."""
        return 0.0, np.zeros_like(probs)

    def evaluate(
        self,
        logits: np.ndarray,
        instance: BanditInstance,
        batch: TupleBatch,
        ref_weights: Optional[np.ndarray] = None,
    ) -> LossEvaluation:
        """
        Loss and its logit gradient at the given P x K logits.

        Args:
            logits (np.ndarray): theta^T phi(x) per prompt, -inf where masked
            instance (BanditInstance): The world
            batch (TupleBatch): Weighted tuples realizing the expectation
            ref_weights (np.ndarray, optional): Joint (x, y) weights of the
                unsupervised term; exact P(x) pi_ref(y|x) when omitted
        """
        ctx = PairContext.build(instance, batch)
        if self.uses_softmax:
            scores = log_softmax(logits, axis=1)
            probs = np.exp(scores)
        else:
            scores = logits
            probs = None

        s_w = scores[batch.prompt, batch.winner]
        s_l = scores[batch.prompt, batch.loser]
        values, d_w, d_l = self.pair_terms(s_w, s_l, ctx)

        # chain rule: scatter each tuple's score derivatives onto its two logits
        coef_w = batch.weight * d_w
        coef_l = batch.weight * d_l
        # a response can appear in several tuples; add.at accumulates repeats
        grad = np.zeros(logits.shape)
        np.add.at(grad, (batch.prompt, batch.winner), coef_w)
        np.add.at(grad, (batch.prompt, batch.loser), coef_l)
        # weights sum to 1, so the dot product is the expectation
        value = float(np.dot(batch.weight, values))

        if self.uses_softmax:
            # d log pi_k / d z_j = 1[k == j] - pi_j
            totals = np.bincount(batch.prompt, weights=coef_w + coef_l, minlength=logits.shape[0])
            grad -= totals[:, None] * probs
            if ref_weights is None:
                ref_weights = instance.prompt_probs[:, None] * instance.pi_ref_matrix
            extra, extra_grad = self.unsupervised_terms(scores, probs, ref_weights)
            value += extra
            grad += extra_grad

        return LossEvaluation(value=value, per_tuple=values, logit_grad=grad)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(lam={self.lam!r})"
