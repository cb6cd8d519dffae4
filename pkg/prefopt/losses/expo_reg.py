"""
Regression EXPO: squared deviation of the policy's Bradley-Terry preference
from a reference-mixed target.
"""

from scipy.special import expit

from .loss import PreferenceLoss
from .spec import RegressionTarget


# EXPORegressionLoss regresses a preference probability, not a log-ratio.
# lam mixes the target: lam = 0 fits the labels, lam = 1 fits the
# reference policy's own preferences.
class EXPORegressionLoss(PreferenceLoss):
    """
    Formula:
        p_theta = pi_theta(y_w) / (pi_theta(y_w) + pi_theta(y_l))
        loss    = E[(p_theta - [lam * p_ref(y_w > y_l) + (1 - lam) * t])^2]

    t is 1 for the default constant target and p*(y_w > y_l) for the oracle
    target. Under population weights the two forms differ by a constant in
    theta.
    """

    def target(self, ctx):
        truth = ctx.star_preference if self.spec.target is RegressionTarget.ORACLE else 1.0
        return self.lam * ctx.ref_preference + (1.0 - self.lam) * truth

    def pair_terms(self, s_w, s_l, ctx):
        # pi_w / (pi_w + pi_l) is a sigmoid of the log-probability gap
        p_theta = expit(s_w - s_l)
        residual = p_theta - self.target(ctx)
        # chain rule through the sigmoid: d p / d (s_w - s_l) = p (1 - p)
        slope = 2.0 * residual * p_theta * (1.0 - p_theta)
        return residual**2, slope, -slope
