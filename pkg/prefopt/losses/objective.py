"""
Public entry points: evaluate a LossSpec and its gradient with respect to theta.
"""

from typing import Dict, Tuple, Type

import numpy as np

from ..core.instance import BanditInstance
from ..core.policy import PolicyModel
from ..errors import ValidationError
from .bt_reward import BTRewardLoss
from .dpo import DPOLoss
from .evaluation import EvaluationMode
from .expo_comp import EXPOCompositeLoss
from .expo_reg import EXPORegressionLoss
from .fdpo import FDPOLoss
from .ipo import IPOLoss
from .loss import LossEvaluation, PreferenceLoss
from .qpo import QPOLoss
from .spec import LossKind, LossSpec

# One class per LossKind. QPO_CUSTOM uses the generic class, which reads its
# shape and link from the spec.
LOSS_CLASSES: Dict[LossKind, Type[PreferenceLoss]] = {
    LossKind.DPO: DPOLoss,
    LossKind.IPO: IPOLoss,
    LossKind.FDPO_JS: FDPOLoss,
    LossKind.QPO_CUSTOM: QPOLoss,
    LossKind.EXPO_COMP: EXPOCompositeLoss,
    LossKind.EXPO_REG: EXPORegressionLoss,
    LossKind.BT_REWARD: BTRewardLoss,
}


def build_loss(spec: LossSpec) -> PreferenceLoss:
    """Instantiate the loss class behind a spec."""
    if not isinstance(spec, LossSpec):
        raise ValidationError(f"expected a LossSpec, got {type(spec).__name__}")
    return LOSS_CLASSES[spec.kind](spec)


def _run(spec: LossSpec, model: PolicyModel, instance: BanditInstance, mode: EvaluationMode) -> LossEvaluation:
    loss = build_loss(spec)
    batch = mode.batch(instance)
    ref_weights = mode.reference_weights(instance)
    return loss.evaluate(model.logits(instance), instance, batch, ref_weights)


def evaluate_loss(spec: LossSpec, model: PolicyModel, instance: BanditInstance, mode: EvaluationMode) -> float:
    """
    Loss value under the given evaluation mode.

    QPO kinds: E[psi(mu(r_w) - mu(r_l), lam)]. EXPO_COMP: supervised
    E[log(1 + pi(y_l)/pi(y_w))] plus lam times the cross-entropy to pi_ref.
    EXPO_REG: E[(p_theta - target)^2]. BT_REWARD: E[-log sigma(z_w - z_l)] on
    raw logits.

    Raises:
        DomainError: If a link returns non-finite values
        ShapeError: If theta does not match the instance
    """
    return _run(spec, model, instance, mode).value


def loss_gradient(spec: LossSpec, model: PolicyModel, instance: BanditInstance, mode: EvaluationMode) -> np.ndarray:
    """Exact d loss / d theta (same shape as theta)."""
    return loss_and_gradient(spec, model, instance, mode)[1]


def loss_and_gradient(
    spec: LossSpec, model: PolicyModel, instance: BanditInstance, mode: EvaluationMode
) -> Tuple[float, np.ndarray]:
    result = _run(spec, model, instance, mode)
    # logits = Phi theta, so d loss / d theta = Phi^T (d loss / d logits)
    return result.value, instance.feature_matrix.T @ result.logit_grad


def per_tuple_values(
    spec: LossSpec, model: PolicyModel, instance: BanditInstance, mode: EvaluationMode
) -> np.ndarray:
    """
    Pairwise term of every tuple, in batch order, without weights and
    without the unsupervised term.
    """
    return _run(spec, model, instance, mode).per_tuple
