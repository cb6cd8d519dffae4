"""
Alternative closed forms used to cross-check the supervised preference term.
"""

from typing import Tuple, Union

import numpy as np
from scipy.special import expit, log_expit

from ..core.instance import BanditInstance
from ..core.policy import PolicyModel
from ..datagen.dataset import SamplingMode
from ..datagen.sampling import pair_probabilities


def supervised_kl_form(
    model: PolicyModel,
    instance: BanditInstance,
    pair_mode: Union[str, SamplingMode] = SamplingMode.UNIFORM_PAIRS,
) -> Tuple[float, np.ndarray]:
    """
    E_{x, pair}[KL(p* || p_theta)] over unordered pairs, with its theta-gradient.

    p_theta is the Bradley-Terry preference of pi_theta. The expectation equals
    the supervised term E[log(1 + pi_theta(y_l) / pi_theta(y_w))] minus the
    entropy of p*, which does not depend on theta.

    Returns:
        tuple[float, np.ndarray]: The value and d value / d theta
    """
    pair_mode = SamplingMode.parse(pair_mode)
    log_probs = model.log_probs(instance)
    probs = np.exp(log_probs)
    logit_grad = np.zeros_like(probs)
    value = 0.0
    for x, prompt in enumerate(instance.prompts):
        first, second, q = pair_probabilities(prompt.pi_ref, pair_mode)
        star = prompt.pi_star[first] / (prompt.pi_star[first] + prompt.pi_star[second])
        margin = log_probs[x, first] - log_probs[x, second]
        # Bernoulli KL between the pi* label and the policy preference
        kl = (
            star * (np.log(star) - log_expit(margin))
            + (1.0 - star) * (np.log1p(-star) - log_expit(-margin))
        )
        weight = prompt.prob * q
        value += float(np.dot(weight, kl))

        # d KL / d margin = sigma(margin) - p*
        slope = weight * (expit(margin) - star)
        d_logp = np.zeros(instance.max_responses)
        np.add.at(d_logp, first, slope)
        np.add.at(d_logp, second, -slope)
        # back through log-softmax: g - (sum g) * pi
        logit_grad[x] = d_logp - d_logp.sum() * probs[x]
    return value, instance.feature_matrix.T @ logit_grad
