"""
Shape functions of the quasi-convex preference family.

A QPO loss is psi(mu(r_w) - mu(r_l), lam) with r = pi_theta / pi_ref. Both
pieces are evaluated on log-ratios s = log r so that near-degenerate policies
never exponentiate back into underflow.
"""

from abc import ABC, abstractmethod
from typing import Callable

import numpy as np
from scipy.special import expit, log_expit

# ratios below 1e-300 are clamped; QPOLoss gives them zero gradient
LOG_RATIO_FLOOR = float(np.log(1e-300))


# Psi is the shape half of a QPO loss. Subclasses only say how psi and its
# slope depend on u; QPOLoss does the chain rule back to the logits.
class Psi(ABC):
    """
    Scalar shape psi(u, lam) applied to the link difference u.

    Subclasses implement the value and its derivative in u; both are
    vectorized over u.
    """

    name = "psi"

    @abstractmethod
    def value(self, u: np.ndarray, lam: float) -> np.ndarray:
        raise NotImplementedError

    @abstractmethod
    def derivative(self, u: np.ndarray, lam: float) -> np.ndarray:
        raise NotImplementedError

    def __eq__(self, other) -> bool:
        return type(self) is type(other) and vars(self) == vars(other)

    def __hash__(self) -> int:
        return hash((type(self).__name__, self.name))

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"


# Mu is the link half of the pair. It is written on s = log v: a ratio
# pi_theta / pi_ref near zero is an ordinary negative number here.
class Mu(ABC):
    """
    Increasing link mu(v) on positive reals, evaluated at v = exp(s).

    `log_derivative` is d mu / d s = v * mu'(v).
    """

    name = "mu"

    @abstractmethod
    def value(self, s: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @abstractmethod
    def log_derivative(self, s: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __eq__(self, other) -> bool:
        return type(self) is type(other) and vars(self) == vars(other)

    def __hash__(self) -> int:
        return hash((type(self).__name__, self.name))

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"


# --- psi shapes ----------------------------------------------------------------


# Each shape below is a small class with no state. Equality compares class
# and attributes, so two specs built separately still compare equal.
class LogisticPsi(Psi):
    """-log sigma(lam * u), the DPO shape."""

    name = "logistic"

    def value(self, u, lam):
        return -log_expit(lam * np.asarray(u))

    def derivative(self, u, lam):
        return -lam * expit(-lam * np.asarray(u))


class IPOPsi(Psi):
    """(u - 1 / (2 lam))^2."""

    name = "ipo"

    def value(self, u, lam):
        return (np.asarray(u) - 0.5 / lam) ** 2

    def derivative(self, u, lam):
        return 2.0 * (np.asarray(u) - 0.5 / lam)


# ExponentialPsi is the exp(-lam u) shape. No public preset uses it; it is
# reachable as gpo-exponential.
class ExponentialPsi(Psi):
    name = "exponential"

    def value(self, u, lam):
        return np.exp(-lam * np.asarray(u))

    def derivative(self, u, lam):
        return -lam * np.exp(-lam * np.asarray(u))


class SquaredPsi(Psi):
    """(1 - lam * u)^2."""

    name = "squared"

    def value(self, u, lam):
        return (1.0 - lam * np.asarray(u)) ** 2

    def derivative(self, u, lam):
        return -2.0 * lam * (1.0 - lam * np.asarray(u))


class TruncatedQuadraticPsi(Psi):
    """max(0, 1 - lam * u)^2."""

    name = "truncated_quadratic"

    def value(self, u, lam):
        return np.maximum(0.0, 1.0 - lam * np.asarray(u)) ** 2

    def derivative(self, u, lam):
        return -2.0 * lam * np.maximum(0.0, 1.0 - lam * np.asarray(u))


class SavagePsi(Psi):
    """1 / (1 + exp(lam * u))^2."""

    name = "savage"

    def value(self, u, lam):
        return expit(-lam * np.asarray(u)) ** 2

    def derivative(self, u, lam):
        # d/du sigma(-lam u)^2 = -2 lam sigma^2 (1 - sigma)
        sig = expit(-lam * np.asarray(u))
        return -2.0 * lam * sig**2 * (1.0 - sig)


# FunctionPsi wraps plain callables, so a new shape can be tried without
# writing a subclass. The results are cast to float64 arrays.
class FunctionPsi(Psi):
    """
    Psi built from two callables, for shapes that have no named class.

    Args:
        value_fn: (u, lam) -> psi
        derivative_fn: (u, lam) -> d psi / d u
        name (str): Label used in reports
    """

    def __init__(self, value_fn: Callable, derivative_fn: Callable, name: str = "custom"):
        self._value_fn = value_fn
        self._derivative_fn = derivative_fn
        self.name = name

    def value(self, u, lam):
        return np.asarray(self._value_fn(np.asarray(u), lam), dtype=np.float64)

    def derivative(self, u, lam):
        return np.asarray(self._derivative_fn(np.asarray(u), lam), dtype=np.float64)

    def __repr__(self) -> str:
        return f"FunctionPsi(name={self.name!r})"


# --- mu links ------------------------------------------------------------------


class LogMu(Mu):
    """mu(v) = log v (reverse KL generator derivative, up to a constant)."""

    name = "reverse_kl"

    def value(self, s):
        return np.asarray(s, dtype=np.float64)

    def log_derivative(self, s):
        return np.ones_like(np.asarray(s, dtype=np.float64))


class JensenShannonMu(Mu):
    """mu(v) = log(2v / (1 + v)) = log 2 + log sigma(s); saturates at log 2."""

    name = "jensen_shannon"

    def value(self, s):
        return np.log(2.0) + log_expit(np.asarray(s, dtype=np.float64))

    def log_derivative(self, s):
        # d/ds log sigma(s) = sigma(-s)
        return expit(-np.asarray(s, dtype=np.float64))


class ForwardKLMu(Mu):
    """mu(v) = -1 / v."""

    name = "forward_kl"

    def value(self, s):
        return -np.exp(-np.asarray(s, dtype=np.float64))

    def log_derivative(self, s):
        return np.exp(-np.asarray(s, dtype=np.float64))


class AlphaMu(Mu):
    """mu(v) = (1 - v^(-alpha)) / alpha, alpha in (0, 1)."""

    name = "alpha"

    def __init__(self, alpha: float = 0.5):
        self.alpha = float(alpha)

    def value(self, s):
        return (1.0 - np.exp(-self.alpha * np.asarray(s, dtype=np.float64))) / self.alpha

    def log_derivative(self, s):
        return np.exp(-self.alpha * np.asarray(s, dtype=np.float64))

    def __repr__(self) -> str:
        return f"AlphaMu(alpha={self.alpha!r})"


# FunctionMu lets a user plug in any link written on v. It converts to the
# log-space interface the rest of the package expects.
class FunctionMu(Mu):
    """
    Mu built from callables on v (not on log v).

    Args:
        value_fn: v -> mu(v)
        derivative_fn: v -> mu'(v)
        name (str): Label used in reports
    """

    def __init__(self, value_fn: Callable, derivative_fn: Callable, name: str = "custom"):
        self._value_fn = value_fn
        self._derivative_fn = derivative_fn
        self.name = name

    def value(self, s):
        v = np.exp(np.asarray(s, dtype=np.float64))
        return np.asarray(self._value_fn(v), dtype=np.float64)

    def log_derivative(self, s):
        v = np.exp(np.asarray(s, dtype=np.float64))
        # chain rule in log space: d mu / d s = v * mu'(v)
        return v * np.asarray(self._derivative_fn(v), dtype=np.float64)

    def __repr__(self) -> str:
        return f"FunctionMu(name={self.name!r})"
