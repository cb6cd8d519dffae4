"""
Tests for the command-line entry point: argument validation, exit codes and
the files each command writes.
"""
import json

import pandas as pd
import pytest

from prefopt.cli import EXIT_ABORT, EXIT_INVALID, EXIT_OK, EXIT_THRESHOLD, main
from prefopt.errors import TrainingAbort
from prefopt.experiments.instances import (
    build_degeneracy_instances,
    build_interpolation_instance,
    build_preservation_instance,
)


class TestUsage:
    """Test cases for parsing and argument validation."""

    def test_help(self, capsys):
        """Test that --help exits with status 0."""
        assert main(["--help"]) == EXIT_OK
        assert "interp" in capsys.readouterr().out

    def test_missing_command(self, capsys):
        """Test that a bare invocation is a usage error."""
        assert main([]) == EXIT_INVALID
        assert "error" in capsys.readouterr().err

    @pytest.mark.parametrize(
        "argv",
        [
            ["train", "--method", "dpo", "--lambda", "0.1", "--lr", "-1"],
            ["train", "--method", "dpo", "--lambda", "0.1", "--steps", "0"],
            ["train", "--method", "dpo", "--lambda", "0.1", "--seed", "-4"],
            ["interp", "--lambdas", "a,b"],
            ["gen-data", "--sampling-mode", "triples"],
            ["gradcheck", "--trials", "zero"],
        ],
    )
    def test_bad_flag_values(self, argv, capsys):
        """Test that malformed flag values exit with status 1 and a message."""
        assert main(argv) == EXIT_INVALID
        assert capsys.readouterr().err

    def test_missing_lambda(self, tmp_path):
        """Test that train needs a lambda."""
        assert main(["train", "--method", "dpo", "--out", str(tmp_path)]) == EXIT_INVALID

    def test_lambda_out_of_range(self, tmp_path):
        """Test that the regression loss rejects lambda > 1."""
        assert main(["train", "--method", "expo-reg", "--lambda", "1.5", "--out", str(tmp_path)]) == EXIT_INVALID

    def test_unknown_method(self, tmp_path):
        """Test that an unknown method name is a configuration error."""
        assert main(["train", "--method", "ppo", "--lambda", "0.1", "--out", str(tmp_path)]) == EXIT_INVALID

    def test_config_file_errors(self, tmp_path):
        """Test unknown keys and invalid JSON in the config file."""
        bad_key = tmp_path / "bad_key.json"
        bad_key.write_text(json.dumps({"learning_rat": 0.1}))
        bad_json = tmp_path / "bad.json"
        bad_json.write_text("{steps: 3")
        for path in (bad_key, bad_json, tmp_path / "missing.json"):
            argv = ["interp", "--methods", "dpo", "--config", str(path), "--out", str(tmp_path)]
            assert main(argv) == EXIT_INVALID

    def test_non_numeric_instance_file(self, tmp_path, capsys):
        """Test that an instance with a non-numeric probability exits with status 1."""
        doc = build_preservation_instance().to_dict()
        doc["prompts"][0]["prob"] = "abc"
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        assert main(["gen-data", "--instance", str(path), "--out", str(tmp_path)]) == EXIT_INVALID
        assert "prob" in capsys.readouterr().err

    def test_invalid_seed_environment(self, tmp_path, monkeypatch):
        """Test that a malformed PREFOPT_SEED is rejected."""
        monkeypatch.setenv("PREFOPT_SEED", "abc")
        assert main(["gen-data", "--out", str(tmp_path)]) == EXIT_INVALID


class TestTrainCommand:
    """Test cases for `prefopt train`."""

    def test_writes_trajectory_and_result(self, tmp_path, capsys):
        """Test a short composite-loss run."""
        argv = ["train", "--method", "expo-comp", "--lambda", "0.1", "--steps", "20", "--out", str(tmp_path)]
        assert main(argv) == EXIT_OK
        (run_dir,) = (tmp_path / "train").iterdir()
        frame = pd.read_csv(run_dir / "trajectory.csv")
        assert frame["step"].max() == 20
        result = json.loads((run_dir / "result.json").read_text())
        assert result["loss"] == {"kind": "expo-comp", "lambda": 0.1}
        assert result["config"]["steps"] == 20
        assert set(result["prompts"][0]["policy"]) == {"y_a", "y_b", "y_c"}
        assert "expo-comp" in capsys.readouterr().out

    def test_config_file_and_flags(self, tmp_path):
        """Test that flags override file values."""
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"steps": 50, "learning_rate": 0.01, "lambda": 0.5}))
        argv = ["train", "--method", "ipo", "--config", str(path), "--steps", "10", "--out", str(tmp_path)]
        assert main(argv) == EXIT_OK
        (run_dir,) = (tmp_path / "train").iterdir()
        config = json.loads((run_dir / "result.json").read_text())["config"]
        assert config["steps"] == 10 and config["learning_rate"] == 0.01

    def test_reward_model(self, tmp_path):
        """Test training the tabular reward."""
        argv = ["train", "--method", "bt-reward", "--lambda", "1", "--steps", "30", "--out", str(tmp_path)]
        assert main(argv) == EXIT_OK

    def test_custom_instance_and_dataset(self, tmp_path):
        """Test training over a generated dataset on an instance file."""
        inst_path = build_preservation_instance().save(tmp_path / "inst.json")
        gen = ["gen-data", "--instance", str(inst_path), "--n", "40", "--seed", "2", "--out", str(tmp_path), "--name", "d.csv"]
        assert main(gen) == EXIT_OK
        argv = [
            "train", "--method", "dpo", "--lambda", "0.1", "--steps", "15", "--batch", "8",
            "--instance", str(inst_path), "--dataset", str(tmp_path / "d.csv"), "--out", str(tmp_path),
        ]
        assert main(argv) == EXIT_OK

    def test_dataset_for_other_instance(self, tmp_path):
        """Test that dataset ids are checked against the instance."""
        assert main(["gen-data", "--n", "10", "--out", str(tmp_path), "--name", "d.csv"]) == EXIT_OK
        inst_path = build_preservation_instance().save(tmp_path / "inst.json")
        argv = [
            "train", "--method", "dpo", "--lambda", "0.1", "--steps", "5",
            "--instance", str(inst_path), "--dataset", str(tmp_path / "d.csv"), "--out", str(tmp_path),
        ]
        assert main(argv) == EXIT_INVALID


class TestGenDataCommand:
    """Test cases for `prefopt gen-data`."""

    def test_same_seed_same_bytes(self, tmp_path):
        """Test reproducible output files."""
        for sub in ("a", "b"):
            assert main(["gen-data", "--n", "100", "--seed", "3", "--out", str(tmp_path / sub)]) == EXIT_OK
        a = (tmp_path / "a" / "uniform_pairs_100_3.csv").read_bytes()
        b = (tmp_path / "b" / "uniform_pairs_100_3.csv").read_bytes()
        assert a == b
        assert (tmp_path / "a" / "uniform_pairs_100_3.csv.json").exists()

    def test_seed_from_environment(self, tmp_path, monkeypatch):
        """Test the PREFOPT_SEED fallback."""
        monkeypatch.setenv("PREFOPT_SEED", "11")
        assert main(["gen-data", "--n", "5", "--out", str(tmp_path)]) == EXIT_OK
        assert (tmp_path / "uniform_pairs_5_11.csv").exists()

    def test_degenerate(self, tmp_path):
        """Test the exhaustive single-label dataset."""
        assert main(["gen-data", "--sampling-mode", "degenerate", "--out", str(tmp_path), "--name", "deg.csv"]) == EXIT_OK
        assert len(pd.read_csv(tmp_path / "deg.csv")) == 3


class TestGradcheckCommand:
    """Test cases for `prefopt gradcheck`."""

    def test_passes(self, tmp_path):
        """Test a few random cases per method and the results table."""
        argv = ["gradcheck", "--methods", "dpo,expo-reg", "--trials", "3", "--seed", "1", "--out", str(tmp_path)]
        assert main(argv) == EXIT_OK
        frame = pd.read_csv(tmp_path / "gradcheck" / "results.csv")
        assert len(frame) == 6
        assert frame["pass"].all()

    def test_impossible_tolerance(self, tmp_path, capsys):
        """Test that cases above the tolerance exit with status 2."""
        argv = ["gradcheck", "--methods", "ipo", "--trials", "2", "--tol", "1e-300", "--out", str(tmp_path)]
        assert main(argv) == EXIT_THRESHOLD
        assert "exceed" in capsys.readouterr().out

    def test_unknown_method(self, tmp_path):
        """Test that unknown methods are rejected."""
        assert main(["gradcheck", "--methods", "ppo", "--out", str(tmp_path)]) == EXIT_INVALID


class TestExperimentCommands:
    """Test cases for `prefopt interp`, `preserve` and `degeneracy`."""

    def test_interp_passes(self, tmp_path, capsys):
        """Test a cell without checks: status 0 and a report directory."""
        argv = ["interp", "--methods", "expo-comp", "--lambdas", "0.1", "--steps", "20", "--out", str(tmp_path)]
        assert main(argv) == EXIT_OK
        (report_dir,) = (tmp_path / "interpolation").iterdir()
        assert (report_dir / "summary.json").exists()
        assert "0/0 checks passed" in capsys.readouterr().out

    def test_threshold_failure(self, tmp_path, capsys):
        """Test that an unconverged small-lambda cell fails its check with status 2."""
        argv = ["interp", "--methods", "expo-comp", "--lambdas", "1e-5", "--steps", "5", "--out", str(tmp_path)]
        assert main(argv) == EXIT_THRESHOLD
        assert "FAIL sic_small_lambda" in capsys.readouterr().out

    def test_formats(self, tmp_path):
        """Test that --formats csv skips the JSON files; five steps cannot improve x_b."""
        argv = [
            "preserve", "--methods", "expo-comp", "--lambdas", "0.1", "--steps", "5",
            "--formats", "csv", "--out", str(tmp_path),
        ]
        assert main(argv) == EXIT_THRESHOLD
        (report_dir,) = (tmp_path / "preservation").iterdir()
        assert (report_dir / "cells.csv").exists()
        assert not (report_dir / "summary.json").exists()

    def test_instance_file(self, tmp_path):
        """Test interp on a single-prompt world read from a file."""
        inst_path = build_degeneracy_instances([0.4, 0.4, 0.2], [0.2, 0.3, 0.5])[1].save(tmp_path / "inst.json")
        argv = [
            "interp", "--methods", "expo-comp", "--lambdas", "0.1", "--steps", "20",
            "--instance", str(inst_path), "--out", str(tmp_path),
        ]
        assert main(argv) == EXIT_OK
        (report_dir,) = (tmp_path / "interpolation").iterdir()
        summary = json.loads((report_dir / "summary.json").read_text())
        assert summary["cells"][0]["status"] == "ok"

    @pytest.mark.parametrize("command, build", [("interp", build_preservation_instance), ("preserve", build_interpolation_instance)])
    def test_instance_file_wrong_world(self, command, build, tmp_path):
        """Test that interp needs one prompt and preserve needs x_g and x_b."""
        inst_path = build().save(tmp_path / "inst.json")
        argv = [command, "--methods", "dpo", "--lambdas", "0.1", "--instance", str(inst_path), "--out", str(tmp_path)]
        assert main(argv) == EXIT_INVALID

    def test_abort(self, tmp_path, monkeypatch, capsys):
        """Test that an aborted cell exits with status 3."""

        def explode(spec, instance, init, config, dataset=None):
            raise TrainingAbort(0, "gradient", float("inf"))

        monkeypatch.setattr("prefopt.experiments.experiment.train", explode)
        argv = ["interp", "--methods", "dpo", "--lambdas", "0.1", "--out", str(tmp_path)]
        assert main(argv) == EXIT_ABORT
        assert "ABORT dpo" in capsys.readouterr().out

    def test_degeneracy_short_run(self, tmp_path):
        """Test that a too-short run leaves the two runs apart (status 2) and writes trajectories."""
        argv = [
            "degeneracy", "--methods", "dpo", "--control", "none", "--steps", "20", "--out", str(tmp_path),
        ]
        assert main(argv) == EXIT_THRESHOLD
        (report_dir,) = (tmp_path / "degeneracy").iterdir()
        assert len(list((report_dir / "traj").iterdir())) == 2

    def test_degeneracy_bad_reference(self, tmp_path):
        """Test that equal references are a configuration error."""
        argv = ["degeneracy", "--pi-ref-a", "0.4,0.4,0.2", "--pi-ref-b", "0.4,0.4,0.2", "--out", str(tmp_path)]
        assert main(argv) == EXIT_INVALID
