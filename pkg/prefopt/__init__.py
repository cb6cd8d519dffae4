"""
prefopt: a tabular preference-optimization laboratory.

Quasi-convex preference losses (DPO, IPO, f-DPO and custom shapes), the
compositional and regression EXPO losses, closed-form oracles over a finite
bandit world, Adam training, and experiment presets that check limit
behavior as the regularization strength moves between its extremes.
"""

__version__ = "0.1.0"
