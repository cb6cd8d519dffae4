"""
The synthetic bandit worlds used by the experiment presets.
"""

from typing import Sequence, Tuple

import numpy as np

from ..core.instance import BanditInstance, Prompt, check_probability_vector
from ..errors import ValidationError

RESPONSES = ("y_a", "y_b", "y_c")
INTERP_PI_STAR = (0.6, 0.3, 0.1)
INTERP_PI_REF = (0.4, 0.4, 0.2)
GOOD_PI_STAR = (0.6, 0.3, 0.1)
BAD_PI_STAR = (0.4, 0.2, 0.4)
BAD_PI_REF = (0.6, 0.2, 0.2)


def build_interpolation_instance() -> BanditInstance:
    """One prompt (probability 1, feature [1]), pi* = (0.6, 0.3, 0.1), pi_ref = (0.4, 0.4, 0.2)."""
    return BanditInstance((Prompt("x", 1.0, [1.0], RESPONSES, INTERP_PI_STAR, INTERP_PI_REF),))


def build_preservation_instance() -> BanditInstance:
    """
    Two equiprobable prompts with one-hot features.

    On the good prompt x_g the reference is already optimal
    (pi_ref = pi* = (0.6, 0.3, 0.1)); on the bad prompt x_b it is not
    (pi* = (0.4, 0.2, 0.4), pi_ref = (0.6, 0.2, 0.2)).
    """
    return BanditInstance(
        (
            Prompt("x_g", 0.5, [1.0, 0.0], RESPONSES, GOOD_PI_STAR, GOOD_PI_STAR),
            Prompt("x_b", 0.5, [0.0, 1.0], RESPONSES, BAD_PI_STAR, BAD_PI_REF),
        )
    )


def build_degeneracy_instances(
    pi_ref_a: Sequence[float], pi_ref_b: Sequence[float]
) -> Tuple[BanditInstance, BanditInstance]:
    """
    Two single-prompt instances that differ only in pi_ref.

    With three responses pi* is (0.6, 0.3, 0.1); otherwise pi* is proportional
    to (K, K-1, ..., 1), so it defines a strict total order.

    Raises:
        ValidationError: If the references differ in length, are equal, or
            are not strictly positive probability vectors
    """
    ref_a = np.asarray(pi_ref_a, dtype=np.float64)
    ref_b = np.asarray(pi_ref_b, dtype=np.float64)
    if ref_a.shape != ref_b.shape:
        raise ValidationError("both reference policies must cover the same responses")
    check_probability_vector(ref_a, "pi_ref_a")
    check_probability_vector(ref_b, "pi_ref_b")
    if np.array_equal(ref_a, ref_b):
        raise ValidationError("the two reference policies must differ")
    k = ref_a.size
    if k == 3:
        star = np.array(INTERP_PI_STAR)
        responses = RESPONSES
    else:
        star = np.arange(k, 0, -1, dtype=np.float64)
        star /= star.sum()
        responses = tuple(f"y_{i}" for i in range(k))
    return tuple(
        BanditInstance((Prompt("x", 1.0, [1.0], responses, star, ref),)) for ref in (ref_a, ref_b)
    )


def _interior(rng: np.random.Generator, k: int) -> np.ndarray:
    p = 0.9 * rng.dirichlet(np.ones(k)) + 0.1 / k
    return p / p.sum()


def random_instance(
    rng: np.random.Generator, max_prompts: int = 3, max_responses: int = 4, n_features: int = 3
) -> BanditInstance:
    """
    A random world for gradient checks: 1..max_prompts prompts with 2..max_responses
    responses each, Gaussian features, and pi*, pi_ref and prompt
    probabilities bounded away from 0.
    """
    n_prompts = int(rng.integers(1, max_prompts + 1))
    probs = _interior(rng, n_prompts)
    prompts = []
    for i in range(n_prompts):
        k = int(rng.integers(2, max_responses + 1))
        prompts.append(
            Prompt(
                f"x{i}",
                probs[i],
                rng.normal(size=n_features),
                [f"y{j}" for j in range(k)],
                _interior(rng, k),
                _interior(rng, k),
            )
        )
    return BanditInstance(tuple(prompts))
