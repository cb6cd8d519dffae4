"""
f-DPO with the Jensen-Shannon link.
"""

from .qpo import QPOLoss


# FDPOLoss adds no code of its own. The spec it is built from carries the
# Jensen-Shannon link, and QPOLoss.pair_terms already applies any link.
# The class exists so the loss has its own name and catalog entry.
class FDPOLoss(QPOLoss):
    """
    f-divergence preference optimization, Jensen-Shannon generator.

    Formula: -log sigma(lam * (mu(r_w) - mu(r_l))),  mu(v) = log(2v / (1 + v))

    mu saturates at log 2 as v grows, so a winner's term stops rewarding
    further mass once its ratio is large; d mu / d log v = sigma(-log v).
    """
