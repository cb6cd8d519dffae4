"""
Generic quasi-convex preference loss psi(mu(r_w) - mu(r_l), lam).
"""

import numpy as np

from ..errors import DomainError
from .loss import PairContext, PreferenceLoss
from .shapes import LOG_RATIO_FLOOR


# QPOLoss splits the per-tuple work in two: link_difference() applies mu to
# both sides of the pair, pair_terms() applies psi to the difference.
# DPO and IPO override pair_terms with closed forms.
class QPOLoss(PreferenceLoss):
    """
    Quasi-convex preference loss with pluggable shape and link.

    Formula:
        u = mu(pi_theta(y_w) / pi_ref(y_w)) - mu(pi_theta(y_l) / pi_ref(y_l))
        loss = E[psi(u, lam)]

    Ratios are clamped below at 1e-300 before mu; the clamped region has zero
    gradient.
    """

    def link_difference(self, s_w: np.ndarray, s_l: np.ndarray, ctx: PairContext):
        """u per tuple plus d u / d s_w and d u / d s_l."""
        mu = self.spec.mu
        # log-ratios; the log pi_ref terms are constant in theta
        rho_w = s_w - ctx.log_ref_w
        rho_l = s_l - ctx.log_ref_l
        clamp_w = rho_w < LOG_RATIO_FLOOR
        clamp_l = rho_l < LOG_RATIO_FLOOR
        rho_w = np.maximum(rho_w, LOG_RATIO_FLOOR)
        rho_l = np.maximum(rho_l, LOG_RATIO_FLOOR)

        mu_w = mu.value(rho_w)
        mu_l = mu.value(rho_l)
        if not (np.all(np.isfinite(mu_w)) and np.all(np.isfinite(mu_l))):
            raise DomainError(f"link {mu!r} returned non-finite values")
        # clamped entries contribute no gradient
        du_w = np.where(clamp_w, 0.0, mu.log_derivative(rho_w))
        du_l = np.where(clamp_l, 0.0, -mu.log_derivative(rho_l))
        return mu_w - mu_l, du_w, du_l

    def pair_terms(self, s_w, s_l, ctx):
        psi = self.spec.psi
        u, du_w, du_l = self.link_difference(s_w, s_l, ctx)
        values = psi.value(u, self.lam)
        # psi'(u) times du/ds for each side of the pair
        slope = psi.derivative(u, self.lam)
        return values, slope * du_w, slope * du_l
