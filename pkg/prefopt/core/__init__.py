"""
Domain types of the tabular bandit world and its closed-form oracles.
"""

from .distance import KL_SMOOTHING, PolicyDistanceReport, policy_distance, total_variation
from .instance import BanditInstance, Prompt, check_probability_vector
from .oracles import (
    bt_policy_from_preferences,
    bt_preference,
    bt_preference_table,
    ipo_reward,
    ipo_reward_gauged,
    mode_policy,
    reward_from_policy,
    rlhf_closed_form,
    rlhf_objective,
)
from .policy import PolicyModel, softmax_policy
from .reward import RewardTable, gauge_fix

__all__ = [
    "BanditInstance",
    "KL_SMOOTHING",
    "PolicyDistanceReport",
    "PolicyModel",
    "Prompt",
    "RewardTable",
    "bt_policy_from_preferences",
    "bt_preference",
    "bt_preference_table",
    "check_probability_vector",
    "gauge_fix",
    "ipo_reward",
    "ipo_reward_gauged",
    "mode_policy",
    "policy_distance",
    "reward_from_policy",
    "rlhf_closed_form",
    "rlhf_objective",
    "softmax_policy",
    "total_variation",
]
