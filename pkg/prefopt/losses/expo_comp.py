"""
Compositional EXPO: a supervised preference term plus a cross-entropy pull
toward the reference policy.
"""

import numpy as np
from scipy.special import expit

from .loss import PreferenceLoss


# EXPOCompositeLoss is the only loss with two parts. pair_terms gives the
# per-tuple supervised part. unsupervised_terms gives the reference pull,
# which PreferenceLoss adds once per evaluation, not once per tuple.
class EXPOCompositeLoss(PreferenceLoss):
    """
    Supervised + lam * unsupervised.

    Formula:
        supervised:   E[log(1 + pi_theta(y_l) / pi_theta(y_w))]
        unsupervised: -E_x E_{y ~ pi_ref} [log pi_theta(y|x)]

    The supervised term does not involve pi_ref. The unsupervised term is
    evaluated exactly over the response support unless the evaluation mode
    carries reference draws.
    """

    def pair_terms(self, s_w, s_l, ctx):
        # log(1 + pi_l / pi_w) = softplus(s_l - s_w)
        gap = s_l - s_w
        values = np.logaddexp(0.0, gap)
        slope = expit(gap)
        return values, -slope, slope

    def unsupervised_terms(self, log_probs, probs, ref_weights):
        if self.lam == 0.0:
            return 0.0, np.zeros_like(probs)
        # padded responses carry zero weight and a -inf log-probability
        valid = ref_weights > 0.0
        cross_entropy = -float(np.sum(ref_weights[valid] * log_probs[valid]))
        # gradient of cross-entropy through softmax: (row mass) * pi - weights
        row_mass = ref_weights.sum(axis=1, keepdims=True)
        grad = self.lam * (row_mass * probs - ref_weights)
        return self.lam * cross_entropy, grad
