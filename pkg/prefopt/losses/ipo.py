"""
IPO: squared regression of the log-ratio margin onto 1 / (2 lam).
"""

from .qpo import QPOLoss


# IPOLoss swaps the logistic shape for a square. The loss has a finite
# minimum at margin 1 / (2 lam), so the margin cannot grow without bound.
class IPOLoss(QPOLoss):
    """
    Identity preference optimization.

    Formula: (log r_w - log r_l - 1 / (2 lam))^2

    At pi_theta = pi_ref every tuple costs (1 / (2 lam))^2, e.g. 25 at lam = 0.1.
    """

    def pair_terms(self, s_w, s_l, ctx):
        margin = (s_w - ctx.log_ref_w) - (s_l - ctx.log_ref_l)
        residual = margin - 0.5 / self.lam
        # d/d margin of residual^2
        slope = 2.0 * residual
        return residual**2, slope, -slope
