"""
Named members of the quasi-convex family beyond the three presets: convex
shapes of lam * u with the log link, and f-divergence links with the logistic
shape.
"""

from typing import Dict, Optional, Type

from ..errors import ValidationError
from .shapes import (
    AlphaMu,
    ExponentialPsi,
    ForwardKLMu,
    IPOPsi,
    JensenShannonMu,
    LogisticPsi,
    LogMu,
    Mu,
    Psi,
    SavagePsi,
    SquaredPsi,
    TruncatedQuadraticPsi,
)
from .spec import LossKind, LossSpec

# Registries keyed by the class `name`, which is also the CLI spelling:
# gpo-<shape> and fdpo-<divergence> look their classes up here.
SHAPES: Dict[str, Type[Psi]] = {
    cls.name: cls
    for cls in (LogisticPsi, ExponentialPsi, SquaredPsi, TruncatedQuadraticPsi, SavagePsi, IPOPsi)
}

DIVERGENCES: Dict[str, Type[Mu]] = {
    cls.name: cls for cls in (LogMu, ForwardKLMu, JensenShannonMu, AlphaMu)
}


def lookup_psi(name: Optional[str]) -> Psi:
    try:
        return SHAPES[name]()
    except KeyError:
        raise ValidationError(f"unknown psi shape {name!r}; known: {', '.join(sorted(SHAPES))}") from None


def lookup_mu(name: Optional[str], alpha: float = 0.5) -> Mu:
    try:
        cls = DIVERGENCES[name]
    except KeyError:
        raise ValidationError(
            f"unknown divergence {name!r}; known: {', '.join(sorted(DIVERGENCES))}"
        ) from None
    # only the alpha link takes a parameter
    return cls(alpha) if cls is AlphaMu else cls()


def gpo_spec(shape: str, lam: float) -> LossSpec:
    """
    Convex-shape member with mu = log.

    Shapes (argument lam * u): logistic, exponential, squared (1 - lam u)^2,
    truncated_quadratic max(0, 1 - lam u)^2, savage 1 / (1 + e^(lam u))^2.
    """
    return LossSpec(LossKind.QPO_CUSTOM, lam, psi=lookup_psi(shape), mu=LogMu())


def fdpo_spec(divergence: str, lam: float, alpha: float = 0.5) -> LossSpec:
    """
    f-divergence member with the logistic shape and mu = f'.

    Links: reverse_kl (log v), forward_kl (-1/v), jensen_shannon
    (log(2v / (1 + v))), alpha ((1 - v^-alpha) / alpha, alpha in (0, 1)).
    """
    if divergence == "alpha" and not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha!r}")
    return LossSpec(LossKind.QPO_CUSTOM, lam, psi=LogisticPsi(), mu=lookup_mu(divergence, alpha))
