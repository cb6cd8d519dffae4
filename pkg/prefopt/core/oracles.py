"""
Closed-form oracles over a finite response set.

Every function here is pure and works on plain probability / reward vectors
indexed by response position.
"""

from typing import Tuple

import numpy as np
from scipy.special import rel_entr, softmax

from ..errors import DomainError, InconsistencyError, ShapeError, ValidationError
from .instance import BanditInstance
from .reward import gauge_fix

BT_TOLERANCE = 1e-9


def _strictly_positive(pi, name: str) -> np.ndarray:
    pi = np.asarray(pi, dtype=np.float64)
    if pi.ndim != 1 or pi.size == 0:
        raise ShapeError(f"{name} must be a non-empty vector")
    if np.any(~np.isfinite(pi)) or np.any(pi <= 0.0):
        raise DomainError(f"{name} must be strictly positive, got {pi.tolist()}")
    return pi


def _positive_lambda(lam: float) -> float:
    lam = float(lam)
    if not np.isfinite(lam) or lam <= 0.0:
        raise ValidationError(f"lambda must be a positive real, got {lam!r}")
    return lam


def bt_preference(pi, y1: int, y2: int) -> float:
    """
    Bradley-Terry preference implied by a policy.

    Formula: p(y1 > y2) = pi[y1] / (pi[y1] + pi[y2]); exactly 1/2 when y1 == y2.

    Args:
        pi: Strictly positive probability vector
        y1 (int): Index of the first response
        y2 (int): Index of the second response

    Returns:
        float: Probability that y1 is preferred over y2

    Raises:
        DomainError: If pi has a zero (or negative) entry

    Example:
        >>> bt_preference([0.6, 0.3, 0.1], 0, 1)
        0.6666666666666666
    """
    pi = _strictly_positive(pi, "pi")
    if not (0 <= y1 < pi.size and 0 <= y2 < pi.size):
        raise ValidationError(f"response indices ({y1}, {y2}) out of range for {pi.size} responses")
    if y1 == y2:
        return 0.5
    return float(pi[y1] / (pi[y1] + pi[y2]))


def bt_preference_table(pi) -> np.ndarray:
    """Full K x K table T[i, j] = bt_preference(pi, i, j) (diagonal 1/2)."""
    pi = _strictly_positive(pi, "pi")
    table = pi[:, None] / (pi[:, None] + pi[None, :])
    np.fill_diagonal(table, 0.5)
    return table


def bt_policy_from_preferences(pref_table, tol: float = BT_TOLERANCE) -> Tuple[np.ndarray, float]:
    """
    Reconstruct the Bradley-Terry policy behind a pairwise preference table.

    Response 0 is anchored at unnormalized mass 1 and every following response
    is reached by chaining consecutive ratios
    pi[j+1] / pi[j] = p(j+1 > j) / p(j > j+1). The result is normalized, then
    checked against every pair of the table.

    Args:
        pref_table: K x K matrix with T[i, j] = p(i > j)
        tol (float): Largest accepted consistency residual

    Returns:
        tuple[np.ndarray, float]: The policy and the consistency residual
            max_{i,j} |bt_preference(pi, i, j) - T[i, j]|

    Raises:
        ValidationError: If the table is not square, has entries outside (0, 1)
            or violates p(i > j) + p(j > i) = 1
        InconsistencyError: If the residual exceeds tol
    """
    table = np.asarray(pref_table, dtype=np.float64)
    if table.ndim != 2 or table.shape[0] != table.shape[1] or table.shape[0] < 2:
        raise ShapeError(f"preference table must be square with K >= 2, got shape {table.shape}")
    off = ~np.eye(table.shape[0], dtype=bool)
    if np.any(~np.isfinite(table)) or np.any(table[off] <= 0.0) or np.any(table[off] >= 1.0):
        raise ValidationError("pairwise preferences must lie strictly inside (0, 1)")
    if np.max(np.abs(table + table.T - 1.0)[off]) > tol:
        raise ValidationError("preference table violates p(i > j) + p(j > i) = 1")

    k = table.shape[0]
    log_mass = np.zeros(k)
    for j in range(k - 1):
        log_mass[j + 1] = log_mass[j] + np.log(table[j + 1, j]) - np.log(table[j, j + 1])
    pi = softmax(log_mass)

    implied = bt_preference_table(pi)
    residual = float(np.max(np.abs(implied - table)[off]))
    if residual > tol:
        raise InconsistencyError(
            f"preference table is not Bradley-Terry representable (residual {residual:.3g})",
            residual,
        )
    return pi, residual


def mode_policy(pi) -> np.ndarray:
    """
    One-hot policy at the mode of pi; ties go to the lowest index.

    Example:
        >>> mode_policy([0.5, 0.5]).tolist()
        [1.0, 0.0]
    """
    pi = np.asarray(pi, dtype=np.float64)
    out = np.zeros_like(pi)
    out[int(np.argmax(pi))] = 1.0
    return out


def rlhf_closed_form(pi_ref, r, lam: float) -> np.ndarray:
    """
    Minimizer of the KL-regularized reward objective.

    Formula: pi(y) = pi_ref(y) * exp(r(y) / lam) / Z

    Computed as a softmax of log pi_ref + r / lam, which subtracts the largest
    logit before exponentiating.

    Raises:
        ValidationError: If lam <= 0
        DomainError: If pi_ref has a zero entry
        ShapeError: If pi_ref and r differ in length
    """
    lam = _positive_lambda(lam)
    pi_ref = _strictly_positive(pi_ref, "pi_ref")
    r = np.asarray(r, dtype=np.float64)
    if r.shape != pi_ref.shape:
        raise ShapeError(f"reward length {r.shape} does not match pi_ref {pi_ref.shape}")
    return softmax(np.log(pi_ref) + r / lam)


def rlhf_objective(pi, pi_ref, r, lam: float) -> float:
    """
    KL-regularized objective -sum pi * r + lam * KL(pi || pi_ref), evaluated
    exactly over the finite response set (lower is better).
    """
    pi = np.asarray(pi, dtype=np.float64)
    pi_ref = _strictly_positive(pi_ref, "pi_ref")
    r = np.asarray(r, dtype=np.float64)
    if not (pi.shape == pi_ref.shape == r.shape):
        raise ShapeError("pi, pi_ref and r must have the same length")
    return float(-np.dot(pi, r) + lam * np.sum(rel_entr(pi, pi_ref)))


def reward_from_policy(pi_r, pi_ref, lam: float) -> np.ndarray:
    """
    Invert rlhf_closed_form: the gauge-fixed reward lam * log(pi_r / pi_ref).

    The lam * log Z term of the inversion is a per-prompt constant and is
    exactly what the sum-zero gauge removes.

    Raises:
        DomainError: If either policy has a zero entry
        ValidationError: If lam <= 0
    """
    lam = _positive_lambda(lam)
    pi_r = _strictly_positive(pi_r, "pi_r")
    pi_ref = _strictly_positive(pi_ref, "pi_ref")
    if pi_r.shape != pi_ref.shape:
        raise ShapeError("pi_r and pi_ref must have the same length")
    return gauge_fix(lam * (np.log(pi_r) - np.log(pi_ref)))


def ipo_reward(instance: BanditInstance, x: str) -> np.ndarray:
    """
    IPO reward r(y) = sum_{y'} pi_ref(y') * p*(y > y'), self-comparison included.

    Returned raw (entries in [0, 1]); see `ipo_reward_gauged` for the
    sum-zero view.

    Raises:
        UnknownPromptError: If x is not a prompt of the instance
    """
    prompt = instance.prompt(x)
    return bt_preference_table(prompt.pi_star) @ prompt.pi_ref


def ipo_reward_gauged(instance: BanditInstance, x: str) -> np.ndarray:
    return gauge_fix(ipo_reward(instance, x))
