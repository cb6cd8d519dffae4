"""
Tests for the bandit world, the linear-softmax policy, reward tables and
policy distances.
"""
import json

import numpy as np
import pytest

from prefopt.core import (
    BanditInstance,
    PolicyModel,
    Prompt,
    RewardTable,
    gauge_fix,
    policy_distance,
    softmax_policy,
    total_variation,
)
from prefopt.errors import ShapeError, UnknownPromptError, ValidationError
from prefopt.experiments.instances import (
    build_degeneracy_instances,
    build_interpolation_instance,
    build_preservation_instance,
    random_instance,
)


def _prompt(pid="x", prob=1.0, features=(1.0,), star=(0.6, 0.3, 0.1), ref=(0.4, 0.4, 0.2)):
    return Prompt(pid, prob, list(features), [f"y{i}" for i in range(len(star))], star, ref)


class TestBanditInstance:
    """Test cases for BanditInstance validation and views."""

    def test_interpolation_world(self):
        """Test the preset single-prompt instance."""
        inst = build_interpolation_instance()
        assert inst.prompt_ids == ["x"]
        np.testing.assert_array_equal(inst.prompt("x").pi_star, [0.6, 0.3, 0.1])
        assert total_variation(inst.prompt("x").pi_ref, inst.prompt("x").pi_star) == pytest.approx(0.2)

    def test_preservation_world(self):
        """Test the two-prompt instance: equal weights, pi_ref = pi* on x_g, TV 0.2 on x_b."""
        inst = build_preservation_instance()
        np.testing.assert_array_equal(inst.prompt_probs, [0.5, 0.5])
        good, bad = inst.prompt("x_g"), inst.prompt("x_b")
        np.testing.assert_array_equal(good.pi_ref, good.pi_star)
        assert total_variation(bad.pi_ref, bad.pi_star) == pytest.approx(0.2)
        assert inst.feature_matrix.shape == (2, 2)

    def test_probability_vector_must_sum_to_one(self):
        """Test that pi* off the simplex is rejected."""
        with pytest.raises(ValidationError):
            BanditInstance((_prompt(star=(0.6, 0.3, 0.2)),))

    def test_entries_must_be_interior(self):
        """Test that a zero entry in pi_ref is rejected."""
        with pytest.raises(ValidationError):
            BanditInstance((_prompt(ref=(0.5, 0.5, 0.0)),))

    def test_prompt_probabilities_sum_to_one(self):
        """Test that prompt probabilities must form a distribution."""
        with pytest.raises(ValidationError):
            BanditInstance((_prompt("a", 0.5, (1.0, 0.0)), _prompt("b", 0.4, (0.0, 1.0))))

    def test_distinct_features(self):
        """Test that two prompts may not share a feature vector."""
        with pytest.raises(ValidationError):
            BanditInstance((_prompt("a", 0.5, (1.0, 0.0)), _prompt("b", 0.5, (1.0, 0.0))))

    def test_feature_dimension_mismatch(self):
        """Test that feature vectors must share a length."""
        with pytest.raises(ShapeError):
            BanditInstance((_prompt("a", 0.5, (1.0, 0.0)), _prompt("b", 0.5, (1.0,))))

    def test_duplicate_prompt_ids(self):
        """Test that prompt ids are unique."""
        with pytest.raises(ValidationError):
            BanditInstance((_prompt("a", 0.5, (1.0, 0.0)), _prompt("a", 0.5, (0.0, 1.0))))

    def test_unknown_prompt(self):
        """Test lookup of a missing prompt id."""
        with pytest.raises(UnknownPromptError):
            build_interpolation_instance().prompt("nope")

    def test_padded_arrays_with_ragged_responses(self):
        """Test mask and zero padding when prompts have different response counts."""
        inst = BanditInstance(
            (
                _prompt("a", 0.5, (1.0, 0.0)),
                _prompt("b", 0.5, (0.0, 1.0), star=(0.5, 0.5), ref=(0.3, 0.7)),
            )
        )
        assert inst.max_responses == 3
        np.testing.assert_array_equal(inst.mask, [[True, True, True], [True, True, False]])
        np.testing.assert_array_equal(inst.pi_ref_matrix[1], [0.3, 0.7, 0.0])

    def test_json_round_trip(self, tmp_path):
        """Test save/load keeps every field and the content hash."""
        inst = build_preservation_instance()
        path = inst.save(tmp_path / "inst.json")
        loaded = BanditInstance.load(path)
        assert loaded == inst
        assert loaded.content_hash() == inst.content_hash()

    def test_loader_revalidates(self):
        """Test that a document violating an invariant is rejected on load."""
        doc = build_interpolation_instance().to_dict()
        doc["prompts"][0]["pi_star"] = [0.7, 0.3, 0.1]
        with pytest.raises(ValidationError):
            BanditInstance.from_json(json.dumps(doc))

    def test_malformed_document(self):
        """Test that missing fields are validation errors."""
        with pytest.raises(ValidationError):
            BanditInstance.from_dict({"prompts": [{"id": "x"}]})

    @pytest.mark.parametrize(
        "field, value",
        [("prob", "abc"), ("features", ["a", "b"]), ("pi_star", ["0.6", "x", "0.1"]), ("pi_ref", {"y_a": 1.0})],
    )
    def test_non_numeric_fields(self, field, value):
        """Test that non-numeric values are validation errors naming the field."""
        doc = build_interpolation_instance().to_dict()
        doc["prompts"][0][field] = value
        with pytest.raises(ValidationError, match=field):
            BanditInstance.from_dict(doc)

    def test_with_pi_ref_and_tabular(self):
        """Test derived copies: replaced reference and one-hot features."""
        inst = build_interpolation_instance().with_pi_ref({"x": [0.2, 0.3, 0.5]})
        np.testing.assert_array_equal(inst.prompt("x").pi_ref, [0.2, 0.3, 0.5])
        tab = random_instance(np.random.default_rng(4)).tabular()
        np.testing.assert_array_equal(tab.feature_matrix, np.eye(len(tab)))

    def test_degeneracy_pair(self):
        """Test the two instances differ only in pi_ref."""
        a, b = build_degeneracy_instances([0.4, 0.4, 0.2], [0.2, 0.3, 0.5])
        np.testing.assert_array_equal(a.prompt("x").pi_star, b.prompt("x").pi_star)
        assert not np.array_equal(a.prompt("x").pi_ref, b.prompt("x").pi_ref)

    def test_degeneracy_pair_must_differ(self):
        """Test that equal references are rejected."""
        with pytest.raises(ValidationError):
            build_degeneracy_instances([0.4, 0.4, 0.2], [0.4, 0.4, 0.2])


class TestPolicyModel:
    """Test cases for the linear-softmax policy."""

    def test_zero_theta_is_uniform(self):
        """Test symmetry at theta = 0."""
        inst = build_interpolation_instance()
        np.testing.assert_allclose(softmax_policy(PolicyModel.zeros(inst), inst, "x"), np.full(3, 1 / 3))

    def test_log_logits_reproduce_policy(self):
        """Test that logits log(0.6, 0.3, 0.1) give (0.6, 0.3, 0.1)."""
        inst = build_interpolation_instance()
        model = PolicyModel(np.log([[0.6, 0.3, 0.1]]))
        np.testing.assert_allclose(softmax_policy(model, inst, "x"), [0.6, 0.3, 0.1], atol=1e-15)

    def test_hand_evaluated_softmax(self):
        """Test logits (2, 1, 0) to five decimals."""
        inst = build_interpolation_instance()
        pi = softmax_policy(PolicyModel(np.array([[2.0, 1.0, 0.0]])), inst, "x")
        np.testing.assert_allclose(pi, [0.66524, 0.24473, 0.09003], atol=5e-6)

    def test_from_reference(self):
        """Test that the reference initialization reproduces pi_ref on every prompt."""
        inst = build_preservation_instance()
        probs = PolicyModel.from_reference(inst).probs(inst)
        np.testing.assert_allclose(probs, inst.pi_ref_matrix, atol=1e-12)

    def test_random_models_are_distributions(self):
        """Test that masked softmax rows sum to 1 with positive valid entries."""
        rng = np.random.default_rng(5)
        for _ in range(20):
            inst = random_instance(rng)
            model = PolicyModel(rng.normal(size=(inst.n_features, inst.max_responses)), inst.mask)
            probs = model.probs(inst)
            np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)
            assert np.all(probs[inst.mask] > 0.0)
            assert np.all(probs[~inst.mask] == 0.0)

    def test_shape_mismatch(self):
        """Test that theta rows must match the feature dimension."""
        inst = build_interpolation_instance()
        with pytest.raises(ShapeError):
            softmax_policy(PolicyModel(np.zeros((2, 3))), inst, "x")

    def test_unknown_prompt(self):
        """Test softmax_policy on a missing prompt."""
        inst = build_interpolation_instance()
        with pytest.raises(UnknownPromptError):
            softmax_policy(PolicyModel.zeros(inst), inst, "y")


class TestRewardTable:
    """Test cases for gauge fixing and reward tables."""

    def test_gauge_fix_sums_to_zero(self):
        """Test the sum-zero gauge."""
        assert gauge_fix([1.0, 2.0, 6.0]).sum() == pytest.approx(0.0, abs=1e-15)

    def test_table_stores_canonical_form(self):
        """Test that rewards differing by a constant compare equal."""
        a = RewardTable({"x": [1.0, 2.0, 3.0]})
        b = RewardTable({"x": [11.0, 12.0, 13.0]})
        assert a == b
        np.testing.assert_allclose(a["x"], [-1.0, 0.0, 1.0])
        assert a.max_gap() == pytest.approx(2.0)

    def test_non_finite_rejected(self):
        """Test that infinite rewards are invalid."""
        with pytest.raises(ValidationError):
            RewardTable({"x": [0.0, np.inf]})

    def test_unknown_prompt(self):
        """Test lookup of a missing prompt."""
        with pytest.raises(UnknownPromptError):
            RewardTable({"x": [0.0, 1.0]})["z"]


class TestPolicyDistance:
    """Test cases for policy_distance."""

    def test_identical(self):
        """Test zero distances and a matching argmax for p = q."""
        report = policy_distance([0.6, 0.3, 0.1], [0.6, 0.3, 0.1], "x")
        assert report.tv == 0.0
        assert report.kl_pq == pytest.approx(0.0, abs=1e-15)
        assert report.argmax_match

    def test_known_tv_values(self):
        """Test TV 0.2 for the interpolation reference and the bad prompt of the preservation world."""
        assert policy_distance([0.4, 0.4, 0.2], [0.6, 0.3, 0.1]).tv == pytest.approx(0.2)
        assert policy_distance([0.6, 0.2, 0.2], [0.4, 0.2, 0.4]).tv == pytest.approx(0.2)

    def test_degenerate_policy_keeps_kl_finite(self):
        """Test that smoothing keeps KL finite against a one-hot policy."""
        report = policy_distance([0.6, 0.3, 0.1], [1.0, 0.0, 0.0])
        assert np.isfinite(report.kl_pq) and report.kl_pq > 0.0

    def test_length_mismatch(self):
        """Test that vectors of different lengths are a shape error."""
        with pytest.raises(ShapeError):
            policy_distance([0.5, 0.5], [0.2, 0.3, 0.5])

    def test_triangle_inequality(self):
        """Test TV on random triples."""
        rng = np.random.default_rng(6)
        for _ in range(200):
            p, q, r = rng.dirichlet(np.ones(4), size=3)
            assert total_variation(p, r) <= total_variation(p, q) + total_variation(q, r) + 1e-15
