"""
Linear-softmax policy over a bandit instance.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import log_softmax

from ..errors import ShapeError
from .instance import BanditInstance

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PolicyModel:
    """
    Linear-softmax policy pi_theta(y|x) = softmax(theta^T phi(x)) over the
    valid responses of x.

    Args:
        theta (np.ndarray): Logit matrix, F rows (feature dim) x K columns
            (max responses per prompt)
        masking (np.ndarray, optional): P x K valid-response mask; when omitted
            every column is valid for every prompt
    """

    theta: np.ndarray
    masking: Optional[np.ndarray] = None

    def __post_init__(self):
        theta = np.array(self.theta, dtype=np.float64)
        if theta.ndim != 2:
            raise ShapeError(f"theta must be a matrix, got shape {theta.shape}")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        if self.masking is not None:
            mask = np.array(self.masking, dtype=bool)
            if mask.ndim != 2 or mask.shape[1] != theta.shape[1]:
                raise ShapeError("mask must be P x K with K equal to theta's column count")
            mask.setflags(write=False)
            object.__setattr__(self, "masking", mask)

    @property
    def shape(self):
        return self.theta.shape

    def with_theta(self, theta: np.ndarray) -> "PolicyModel":
        return PolicyModel(theta, self.masking)

    def _check(self, instance: BanditInstance) -> np.ndarray:
        if self.theta.shape[0] != instance.n_features:
            raise ShapeError(
                f"theta has {self.theta.shape[0]} rows but prompts have {instance.n_features} features"
            )
        if self.theta.shape[1] != instance.max_responses:
            raise ShapeError(
                f"theta has {self.theta.shape[1]} columns but prompts have up to "
                f"{instance.max_responses} responses"
            )
        mask = instance.mask
        if self.masking is not None and not np.array_equal(self.masking, mask):
            raise ShapeError("model mask does not match the instance's response sets")
        return mask

    def logits(self, instance: BanditInstance) -> np.ndarray:
        """Raw logits theta^T phi(x) for every prompt, P x K (masked entries are -inf)."""
        mask = self._check(instance)
        z = instance.feature_matrix @ self.theta
        return np.where(mask, z, -np.inf)

    def log_probs(self, instance: BanditInstance) -> np.ndarray:
        """Log-probabilities for every prompt, P x K (masked entries are -inf)."""
        return log_softmax(self.logits(instance), axis=1)

    def probs(self, instance: BanditInstance) -> np.ndarray:
        """Probabilities for every prompt, P x K (masked entries are 0)."""
        return np.exp(self.log_probs(instance))

    @classmethod
    def zeros(cls, instance: BanditInstance) -> "PolicyModel":
        return cls(np.zeros((instance.n_features, instance.max_responses)), instance.mask)

    @classmethod
    def from_reference(cls, instance: BanditInstance) -> "PolicyModel":
        """
        Initialize theta so that pi_theta = pi_ref.

        Target logits are log pi_ref with the last valid response of each
        prompt pinned at 0. With one-hot features this is exact; otherwise theta
        is the least-squares solution of Phi theta = target, which is exact
        whenever the feature matrix has full row rank.
        """
        return cls.from_policy(instance, instance.pi_ref_matrix)

    @classmethod
    def from_policy(cls, instance: BanditInstance, probs: np.ndarray) -> "PolicyModel":
        """Initialize theta so that pi_theta reproduces the given P x K policy table."""
        mask = instance.mask
        probs = np.asarray(probs, dtype=np.float64)
        if probs.shape != mask.shape:
            raise ShapeError(f"policy table must be {mask.shape}, got {probs.shape}")
        target = np.zeros_like(probs)
        for i, prompt in enumerate(instance.prompts):
            k = prompt.n_responses
            row = np.log(probs[i, :k])
            target[i, :k] = row - row[k - 1]
        phi = instance.feature_matrix
        theta, _, rank, _ = np.linalg.lstsq(phi, target, rcond=None)
        if rank < phi.shape[0]:
            logger.warning(
                "feature matrix has rank %d < %d prompts; initial policy is a least-squares fit",
                rank,
                phi.shape[0],
            )
        return cls(theta, mask)


def softmax_policy(model: PolicyModel, instance: BanditInstance, x: str) -> np.ndarray:
    """
    Probability vector pi_theta(.|x) over the valid responses of prompt x.

    Formula: pi_theta(y|x) = exp(z_y) / sum_y' exp(z_y'),  z = theta^T phi(x)

    Args:
        model (PolicyModel): The policy parameters
        instance (BanditInstance): The world providing phi(x) and the response set
        x (str): Prompt id

    Returns:
        np.ndarray: Strictly positive probabilities summing to 1

    Raises:
        UnknownPromptError: If x is not a prompt of the instance
        ShapeError: If theta does not match the instance's dimensions
    """
    i = instance.index_of(x)
    k = instance.prompts[i].n_responses
    return np.exp(model.log_probs(instance)[i, :k])
