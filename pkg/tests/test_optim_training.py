"""
Tests for the optimizer pieces (Adam, clipping, configuration), the training
loop and recorded trajectories.
"""
import numpy as np
import pytest

from prefopt.core.policy import PolicyModel
from prefopt.datagen import degenerate_dataset
from prefopt.errors import ShapeError, TrainingAbort, ValidationError
from prefopt.experiments import ALL_METHODS, method_spec
from prefopt.experiments.instances import build_interpolation_instance, build_preservation_instance
from prefopt.losses import EvaluationKind, LossKind, make_loss_spec
from prefopt.losses.shapes import FunctionPsi, LogMu
from prefopt.optim import (
    TRAJECTORY_COLUMNS,
    AdamState,
    TrainConfig,
    Trajectory,
    TrajectoryRecord,
    adam_step,
    clip_gradient,
    train,
)


class TestAdam:
    """Test cases for adam_step."""

    def test_first_step_is_signed_learning_rate(self):
        """Test that bias correction makes the first update -lr * g / (|g| + eps)."""
        state = AdamState.zeros((2,))
        state, update = adam_step(state, np.array([0.5, -4.0]), lr=0.01)
        np.testing.assert_allclose(update, [-0.01, 0.01], rtol=1e-6)
        assert state.t == 1

    def test_moments(self):
        """Test the moment recursions over two steps."""
        state = AdamState.zeros((1,))
        state, _ = adam_step(state, np.array([1.0]), lr=0.1)
        state, update = adam_step(state, np.array([3.0]), lr=0.1)
        m = 0.9 * 0.1 + 0.1 * 3.0
        v = 0.999 * 0.001 + 0.001 * 9.0
        expected = -0.1 * (m / (1 - 0.81)) / (np.sqrt(v / (1 - 0.999**2)) + 1e-8)
        np.testing.assert_allclose(state.m, [m])
        np.testing.assert_allclose(update, [expected])

    def test_zero_gradient_gives_zero_update(self):
        """Test no movement when the gradient is exactly zero."""
        _, update = adam_step(AdamState.zeros((3,)), np.zeros(3), lr=1.0)
        np.testing.assert_array_equal(update, 0.0)

    def test_shape_mismatch(self):
        """Test that the gradient must match the state."""
        with pytest.raises(ShapeError):
            adam_step(AdamState.zeros((2,)), np.zeros(3), lr=0.1)


class TestClipping:
    """Test cases for clip_gradient."""

    def test_rescales_large_gradient(self):
        """Test [30, 40] clipped to norm 10."""
        np.testing.assert_allclose(clip_gradient(np.array([30.0, 40.0]), 10.0), [6.0, 8.0])

    def test_small_gradient_unchanged(self):
        """Test that a gradient within the cap is returned as is."""
        grad = np.array([[1.0, -2.0], [0.5, 0.0]])
        np.testing.assert_array_equal(clip_gradient(grad, 10.0), grad)

    def test_invalid_cap(self):
        """Test that max_norm must be positive."""
        with pytest.raises(ValidationError):
            clip_gradient(np.ones(2), 0.0)


class TestTrainConfig:
    """Test cases for TrainConfig validation and serialization."""

    def test_defaults(self):
        """Test batch size 20, clip 10 and the Adam constants."""
        config = TrainConfig(learning_rate=1e-3, steps=100)
        assert config.batch_size == 20
        assert config.clip_max_norm == 10.0
        assert config.betas == (0.9, 0.999)
        assert config.mode is EvaluationKind.POPULATION

    @pytest.mark.parametrize(
        "changes",
        [
            {"learning_rate": -1.0},
            {"learning_rate": float("inf")},
            {"steps": 0},
            {"steps": 2.5},
            {"batch_size": True},
            {"beta1": 1.0},
            {"beta2": "abc"},
            {"seed": -3},
            {"mode": "stochastic"},
            {"pair_mode": "degenerate"},
            {"clip_max_norm": 0.0},
        ],
    )
    def test_invalid_values(self, changes):
        """Test that each bad field is a validation error."""
        doc = {"learning_rate": 1e-3, "steps": 10, **changes}
        with pytest.raises(ValidationError):
            TrainConfig(**doc)

    def test_round_trip(self):
        """Test to_dict / from_dict with enum fields as strings."""
        config = TrainConfig(learning_rate=5e-4, steps=30, mode="sampled", pair_mode="ref_product", seed=9)
        doc = config.to_dict()
        assert doc["mode"] == "sampled" and doc["pair_mode"] == "ref_product"
        assert TrainConfig.from_dict(doc) == config

    def test_unknown_field(self):
        """Test that a misspelled key is rejected."""
        with pytest.raises(ValidationError):
            TrainConfig.from_dict({"learning_rate": 1e-3, "steps": 10, "lr": 1e-3})

    def test_missing_field(self):
        """Test that required fields must be present."""
        with pytest.raises(ValidationError):
            TrainConfig.from_dict({"steps": 10})


class TestTrain:
    """Test cases for the training loop."""

    def test_population_training_lowers_loss(self):
        """Test that exact-gradient DPO steps reduce the loss."""
        inst = build_interpolation_instance()
        config = TrainConfig(learning_rate=1e-2, steps=200, record_every=50)
        _, traj = train(make_loss_spec("dpo", 1.0), inst, PolicyModel.from_reference(inst), config)
        assert traj.losses[-1] < traj.losses[0]
        np.testing.assert_array_equal(traj.steps, [0, 50, 100, 150, 200])

    @pytest.mark.parametrize("method", ALL_METHODS)
    @pytest.mark.parametrize("build", [build_interpolation_instance, build_preservation_instance])
    def test_small_learning_rate_never_raises_loss(self, method, build):
        """Test that exact-gradient steps at lr 1e-4 never raise the loss across a 50-step window."""
        inst = build()
        config = TrainConfig(learning_rate=1e-4, steps=500, record_every=50)
        _, traj = train(method_spec(method, 0.5), inst, PolicyModel.from_reference(inst), config)
        assert len(traj.losses) == 11
        assert np.max(np.diff(traj.losses)) <= 1e-9

    def test_checkpoints_include_last_step(self):
        """Test that the last step is recorded even off the spacing."""
        inst = build_interpolation_instance()
        config = TrainConfig(learning_rate=1e-3, steps=25, record_every=10)
        _, traj = train(make_loss_spec("ipo", 1.0), inst, PolicyModel.from_reference(inst), config)
        np.testing.assert_array_equal(traj.steps, [0, 10, 20, 25])

    def test_sampled_training_is_deterministic(self):
        """Test equal seeds give equal parameters and trajectories."""
        inst = build_preservation_instance()
        config = TrainConfig(learning_rate=1e-2, steps=50, mode="sampled", seed=5)
        runs = [train(make_loss_spec("dpo", 0.5), inst, PolicyModel.from_reference(inst), config) for _ in range(2)]
        np.testing.assert_array_equal(runs[0][0].theta, runs[1][0].theta)
        np.testing.assert_array_equal(runs[0][1].losses, runs[1][1].losses)

    def test_seed_changes_sampled_run(self):
        """Test that another seed draws other batches."""
        inst = build_preservation_instance()
        base = TrainConfig(learning_rate=1e-2, steps=20, mode="sampled", seed=1)
        a, _ = train(make_loss_spec("dpo", 0.5), inst, PolicyModel.from_reference(inst), base)
        b, _ = train(make_loss_spec("dpo", 0.5), inst, PolicyModel.from_reference(inst), base.replace(seed=2))
        assert not np.array_equal(a.theta, b.theta)

    def test_fixed_dataset_epochs(self):
        """Test training over a fixed dataset drawn once."""
        inst = build_preservation_instance()
        config = TrainConfig(learning_rate=1e-2, steps=30, mode="sampled", batch_size=4, fixed_dataset_size=12)
        model, traj = train(make_loss_spec("expo-comp", 0.1), inst, PolicyModel.from_reference(inst), config)
        assert np.all(np.isfinite(model.theta))
        assert traj.final.step == 30

    def test_explicit_dataset(self):
        """Test full-batch training on the degenerate dataset moves mass off the loser."""
        inst = build_interpolation_instance()
        data = degenerate_dataset(inst)
        config = TrainConfig(learning_rate=1e-2, steps=100, mode="sampled", batch_size=len(data))
        _, traj = train(make_loss_spec("dpo", 0.1), inst, PolicyModel.from_reference(inst), config, dataset=data)
        series = traj.prob_series("x", "y_c")
        assert series[-1] < series[0]

    def test_gradient_tolerance_stops_early(self):
        """Test that a run starting at the optimum stops at step 0."""
        inst = build_preservation_instance()
        config = TrainConfig(learning_rate=1e-3, steps=100, grad_tol=1e-8)
        model, traj = train(make_loss_spec("expo-reg", 1.0), inst, PolicyModel.from_reference(inst), config)
        assert len(traj) == 1 and traj.final.step == 0
        np.testing.assert_array_equal(model.theta, PolicyModel.from_reference(inst).theta)

    def test_first_update_bounded_by_learning_rate(self):
        """Test that a tightly clipped first step still moves no coordinate by more than lr."""
        inst = build_interpolation_instance()
        init = PolicyModel.from_reference(inst)
        config = TrainConfig(learning_rate=0.05, steps=1, clip_max_norm=1e-3)
        model, _ = train(make_loss_spec("ipo", 0.01), inst, init, config)
        assert np.max(np.abs(model.theta - init.theta)) <= 0.05 + 1e-9

    def test_non_finite_loss_aborts(self):
        """Test that a NaN loss raises TrainingAbort with the trajectory so far."""
        inst = build_interpolation_instance()
        psi = FunctionPsi(lambda u, lam: np.where(u > 0.05, np.nan, -u), lambda u, lam: -np.ones_like(u), "bad")
        spec = make_loss_spec(LossKind.QPO_CUSTOM, 1.0, psi=psi, mu=LogMu())
        config = TrainConfig(learning_rate=0.01, steps=500, record_every=1)
        with pytest.raises(TrainingAbort) as info:
            train(spec, inst, PolicyModel.from_reference(inst), config)
        assert info.value.quantity == "loss"
        assert info.value.step > 0
        assert len(info.value.trajectory) == info.value.step

    def test_empty_dataset(self):
        """Test that an empty dataset is rejected."""
        inst = build_interpolation_instance()
        data = degenerate_dataset(inst)
        empty = type(data)((), data.provenance)
        with pytest.raises(ValidationError):
            train(
                make_loss_spec("dpo", 0.1),
                inst,
                PolicyModel.zeros(inst),
                TrainConfig(learning_rate=1e-3, steps=1),
                dataset=empty,
            )

    def test_shape_mismatch(self):
        """Test that the initial model must match the instance."""
        inst = build_interpolation_instance()
        with pytest.raises(ShapeError):
            train(make_loss_spec("dpo", 0.1), inst, PolicyModel(np.zeros((2, 3))), TrainConfig(learning_rate=1e-3, steps=1))


class TestTrajectory:
    """Test cases for Trajectory views and files."""

    def _trajectory(self):
        inst = build_preservation_instance()
        config = TrainConfig(learning_rate=1e-2, steps=20, record_every=10)
        return train(make_loss_spec("expo-comp", 0.5), inst, PolicyModel.from_reference(inst), config)[1]

    def test_initial_distances(self):
        """Test TV to pi_ref is 0 and TV to pi* is (0, 0.2) at step 0."""
        first = self._trajectory().records[0]
        np.testing.assert_allclose(first.tv_ref, 0.0, atol=1e-12)
        np.testing.assert_allclose(first.tv_star, [0.0, 0.2], atol=1e-12)

    def test_frame_layout(self):
        """Test one row per checkpoint, prompt and response."""
        frame = self._trajectory().to_frame()
        assert list(frame.columns) == TRAJECTORY_COLUMNS
        assert len(frame) == 3 * 2 * 3

    def test_csv_round_trip(self, tmp_path):
        """Test that the CSV keeps full float precision in every float column."""
        traj = self._trajectory()
        path = traj.save(tmp_path / "traj.csv")
        loaded = Trajectory.read_frame(path)
        frame = traj.to_frame()
        for column in frame.select_dtypes("float").columns:
            np.testing.assert_array_equal(loaded[column].to_numpy(), frame[column].to_numpy())
        assert "\r" not in path.read_text()

    def test_prob_series_unknown_response(self):
        """Test lookup of a response that does not exist."""
        with pytest.raises(ValidationError):
            self._trajectory().prob_series("x_g", "y_z")

    def test_steps_must_increase(self):
        """Test the ordering invariant of checkpoints."""
        inst = build_interpolation_instance()
        probs = inst.pi_ref_matrix
        rec = TrajectoryRecord.measure(inst, 5, 1.0, 0.1, probs)
        with pytest.raises(ValidationError):
            Trajectory.for_instance(inst, [rec, rec])
