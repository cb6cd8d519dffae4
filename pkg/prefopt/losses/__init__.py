"""
Preference losses: the quasi-convex family (DPO, IPO, f-DPO, custom shapes),
both EXPO losses and the tabular Bradley-Terry reward loss.
"""

from .bt_reward import BTRewardLoss, bt_reward_fit
from .catalog import DIVERGENCES, SHAPES, fdpo_spec, gpo_spec
from .dpo import DPOLoss
from .evaluation import EvaluationKind, EvaluationMode, TupleBatch
from .expo_comp import EXPOCompositeLoss
from .expo_reg import EXPORegressionLoss
from .fdpo import FDPOLoss
from .gradcheck import central_difference, check_gradient, finite_diff_gradient, relative_error
from .identities import supervised_kl_form
from .ipo import IPOLoss
from .loss import LossEvaluation, PreferenceLoss
from .objective import build_loss, evaluate_loss, loss_and_gradient, loss_gradient, per_tuple_values
from .qpo import QPOLoss
from .spec import LossKind, LossSpec, RegressionTarget, make_loss_spec

__all__ = [
    "BTRewardLoss",
    "DIVERGENCES",
    "DPOLoss",
    "EXPOCompositeLoss",
    "EXPORegressionLoss",
    "EvaluationKind",
    "EvaluationMode",
    "FDPOLoss",
    "IPOLoss",
    "LossEvaluation",
    "LossKind",
    "LossSpec",
    "PreferenceLoss",
    "QPOLoss",
    "RegressionTarget",
    "SHAPES",
    "TupleBatch",
    "bt_reward_fit",
    "build_loss",
    "central_difference",
    "check_gradient",
    "evaluate_loss",
    "fdpo_spec",
    "finite_diff_gradient",
    "gpo_spec",
    "loss_and_gradient",
    "loss_gradient",
    "make_loss_spec",
    "per_tuple_values",
    "relative_error",
    "supervised_kl_form",
]
