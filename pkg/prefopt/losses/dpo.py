"""
DPO: the logistic quasi-convex loss on log-ratios.
"""

from scipy.special import expit, log_expit

from .qpo import QPOLoss


# DPOLoss is a QPOLoss with the shape and link fixed: psi is the logistic
# loss and mu is log. Fixing both lets the subclass override pair_terms
# with a closed form instead of going through the shape objects.
class DPOLoss(QPOLoss):
    """
    Direct preference optimization.

    Formula: -log sigma(lam * (log r_w - log r_l)),  r = pi_theta / pi_ref

    Same value as the generic form with the logistic psi and mu = log; the
    closed form below skips the link evaluation.
    """

    def pair_terms(self, s_w, s_l, ctx):
        # s_* are log pi_theta, so subtracting log pi_ref gives log-ratios
        margin = (s_w - ctx.log_ref_w) - (s_l - ctx.log_ref_l)
        # log_expit stays finite for very negative margins
        values = -log_expit(self.lam * margin)
        slope = -self.lam * expit(-self.lam * margin)
        # the margin is antisymmetric in (w, l): the loser gets the negated slope
        return values, slope, -slope
