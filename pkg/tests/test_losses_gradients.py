"""
Tests for analytic loss gradients: agreement with central differences, the
symmetric zero-gradient point and the identities between equivalent forms.
"""
import numpy as np
import pytest

from prefopt.core.instance import BanditInstance, Prompt
from prefopt.core.policy import PolicyModel
from prefopt.datagen import SamplingMode, sample_tuples
from prefopt.errors import ValidationError
from prefopt.experiments.instances import build_interpolation_instance, random_instance
from prefopt.losses import (
    EvaluationMode,
    LossKind,
    central_difference,
    check_gradient,
    evaluate_loss,
    fdpo_spec,
    finite_diff_gradient,
    gpo_spec,
    loss_gradient,
    make_loss_spec,
    supervised_kl_form,
)
from prefopt.losses.shapes import FunctionMu, FunctionPsi, LogMu

GRAD_TOL = 1e-4
IDENTITY_TOL = 1e-10

SPECS = [
    ("dpo", lambda lam: make_loss_spec("dpo", lam)),
    ("ipo", lambda lam: make_loss_spec("ipo", lam)),
    ("fdpo-js", lambda lam: make_loss_spec("fdpo-js", lam)),
    ("expo-comp", lambda lam: make_loss_spec("expo-comp", lam)),
    ("expo-reg", lambda lam: make_loss_spec("expo-reg", min(lam, 1.0) / 2)),
    ("expo-reg-oracle", lambda lam: make_loss_spec("expo-reg", min(lam, 1.0) / 2, target="oracle")),
    ("bt-reward", lambda lam: make_loss_spec("bt-reward", lam)),
    ("gpo-exponential", lambda lam: gpo_spec("exponential", lam)),
    ("gpo-savage", lambda lam: gpo_spec("savage", lam)),
    ("fdpo-forward-kl", lambda lam: fdpo_spec("forward_kl", lam)),
    ("fdpo-alpha", lambda lam: fdpo_spec("alpha", lam)),
]


def _random_model(rng, inst):
    return PolicyModel(rng.normal(size=(inst.n_features, inst.max_responses)), inst.mask)


class TestGradientCheck:
    """Test cases for loss_gradient against finite differences."""

    @pytest.mark.parametrize("name, build", SPECS, ids=[s[0] for s in SPECS])
    def test_population_gradient(self, name, build):
        """Test 20 random (theta, instance) pairs under exact population weights."""
        rng = np.random.default_rng(30)
        for trial in range(20):
            inst = random_instance(rng)
            spec = build(float(rng.uniform(0.1, 2.0)))
            pair_mode = SamplingMode.REF_PRODUCT if trial % 2 else SamplingMode.UNIFORM_PAIRS
            error = check_gradient(spec, _random_model(rng, inst), inst, EvaluationMode.population(pair_mode))
            assert error < GRAD_TOL, f"{name} trial {trial}: relative error {error:.3g}"

    @pytest.mark.parametrize("name, build", SPECS, ids=[s[0] for s in SPECS])
    def test_sampled_gradient(self, name, build):
        """Test the empirical-mean gradient on a fixed sampled dataset."""
        rng = np.random.default_rng(31)
        for trial in range(5):
            inst = random_instance(rng)
            mode = EvaluationMode.sampled(sample_tuples(inst, 40, SamplingMode.REF_PRODUCT, seed=trial))
            spec = build(float(rng.uniform(0.1, 2.0)))
            assert check_gradient(spec, _random_model(rng, inst), inst, mode) < GRAD_TOL

    def test_custom_shape_and_link(self):
        """Test a user-supplied psi and mu built from callables."""
        psi = FunctionPsi(lambda u, lam: np.log1p(np.exp(-lam * u)), lambda u, lam: -lam / (1 + np.exp(lam * u)))
        mu = FunctionMu(lambda v: np.sqrt(v), lambda v: 0.5 / np.sqrt(v), name="sqrt")
        spec = make_loss_spec(LossKind.QPO_CUSTOM, 0.7, psi=psi, mu=mu)
        rng = np.random.default_rng(32)
        inst = random_instance(rng)
        assert check_gradient(spec, _random_model(rng, inst), inst, EvaluationMode.population()) < GRAD_TOL


class TestFiniteDifferences:
    """Test cases for the central-difference oracle itself."""

    def test_quadratic(self):
        """Test that sum(theta^2) gives 2 theta."""
        theta = np.array([[0.5, -1.5], [2.0, 0.25]])
        np.testing.assert_allclose(central_difference(lambda t: float(np.sum(t**2)), theta), 2 * theta, atol=1e-8)

    def test_quadratic_through_custom_loss(self):
        """Test a squared shape with identity-like link: gradient matches the analytic one."""
        inst = build_interpolation_instance()
        psi = FunctionPsi(lambda u, lam: lam * u**2, lambda u, lam: 2 * lam * u, name="square")
        spec = make_loss_spec(LossKind.QPO_CUSTOM, 1.0, psi=psi, mu=LogMu())
        model = PolicyModel(np.array([[0.3, -0.2, 0.1]]))
        mode = EvaluationMode.population()
        np.testing.assert_allclose(
            finite_diff_gradient(spec, model, inst, mode),
            loss_gradient(spec, model, inst, mode),
            atol=1e-7,
        )

    def test_zero_step(self):
        """Test that h = 0 is a validation error."""
        inst = build_interpolation_instance()
        with pytest.raises(ValidationError):
            finite_diff_gradient(
                make_loss_spec("dpo", 0.1), PolicyModel.zeros(inst), inst, EvaluationMode.population(), h=0.0
            )


class TestSymmetricPoint:
    """Test cases for the gradient at the reference with tied preferences."""

    @pytest.mark.parametrize("kind", ["dpo", "ipo", "fdpo-js"])
    def test_zero_gradient(self, kind):
        """Test that QPO gradients vanish at pi_ref when p* = 1/2 on every pair."""
        inst = BanditInstance(
            (Prompt("x", 1.0, [1.0], ["a", "b", "c", "d"], [0.25] * 4, [0.1, 0.2, 0.3, 0.4]),)
        )
        grad = loss_gradient(make_loss_spec(kind, 0.3), PolicyModel.from_reference(inst), inst, EvaluationMode.population())
        np.testing.assert_allclose(grad, 0.0, atol=1e-12)

    def test_cross_entropy_gradient_vanishes_only_at_reference(self):
        """Test the unsupervised EXPO term: zero gradient at pi_ref, nonzero elsewhere."""
        inst = build_interpolation_instance()
        mode = EvaluationMode.population()

        def unsupervised_grad(model):
            one = loss_gradient(make_loss_spec("expo-comp", 1.0), model, inst, mode)
            two = loss_gradient(make_loss_spec("expo-comp", 2.0), model, inst, mode)
            return two - one

        np.testing.assert_allclose(unsupervised_grad(PolicyModel.from_reference(inst)), 0.0, atol=1e-12)
        assert np.abs(unsupervised_grad(PolicyModel.zeros(inst))).max() > 1e-3


class TestEquivalentForms:
    """Test cases for losses that differ only by a theta-independent constant."""

    def test_regression_targets_share_gradients(self):
        """Test constant target vs true-preference target on 100 random (theta, instance) pairs."""
        rng = np.random.default_rng(33)
        mode = EvaluationMode.population()
        for _ in range(100):
            inst = random_instance(rng)
            lam = float(rng.uniform(0.0, 1.0))
            model = _random_model(rng, inst)
            constant = loss_gradient(make_loss_spec("expo-reg", lam), model, inst, mode)
            oracle = loss_gradient(make_loss_spec("expo-reg", lam, target="oracle"), model, inst, mode)
            np.testing.assert_allclose(constant, oracle, atol=IDENTITY_TOL)

    def test_regression_targets_differ_by_constant(self):
        """Test that the value offset has spread below 1e-10 over 10 random theta."""
        rng = np.random.default_rng(34)
        inst = random_instance(rng)
        mode = EvaluationMode.population()
        offsets = []
        for _ in range(10):
            model = _random_model(rng, inst)
            constant = evaluate_loss(make_loss_spec("expo-reg", 0.3), model, inst, mode)
            oracle = evaluate_loss(make_loss_spec("expo-reg", 0.3, target="oracle"), model, inst, mode)
            offsets.append(constant - oracle)
        assert max(offsets) - min(offsets) < IDENTITY_TOL

    @pytest.mark.parametrize("pair_mode", [SamplingMode.UNIFORM_PAIRS, SamplingMode.REF_PRODUCT])
    def test_supervised_term_is_expected_kl(self, pair_mode):
        """Test the KL form of the supervised term: equal gradients and a constant offset."""
        rng = np.random.default_rng(35)
        inst = random_instance(rng)
        mode = EvaluationMode.population(pair_mode)
        one, two = make_loss_spec("expo-comp", 1.0), make_loss_spec("expo-comp", 2.0)
        offsets = []
        for _ in range(10):
            model = _random_model(rng, inst)
            sup_value = 2 * evaluate_loss(one, model, inst, mode) - evaluate_loss(two, model, inst, mode)
            sup_grad = 2 * loss_gradient(one, model, inst, mode) - loss_gradient(two, model, inst, mode)
            kl_value, kl_grad = supervised_kl_form(model, inst, pair_mode)
            np.testing.assert_allclose(kl_grad, sup_grad, atol=IDENTITY_TOL)
            offsets.append(sup_value - kl_value)
        assert max(offsets) - min(offsets) < IDENTITY_TOL
