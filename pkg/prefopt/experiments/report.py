"""
Experiment results: per-cell records, threshold checks and the on-disk report.
"""

import hashlib
import json
import logging
import operator
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..core.distance import policy_distance
from ..core.instance import BanditInstance
from ..core.oracles import mode_policy
from ..errors import PrefOptError, ValidationError
from ..losses.spec import LossSpec
from ..optim.config import TrainConfig
from ..optim.trajectory import FLOAT_FORMAT, Trajectory

logger = logging.getLogger(__name__)

CELL_COLUMNS = ["method", "lambda", "prompt_id", "tv_star", "tv_ref", "tv_delta", "pass"]
REPORT_FORMATS = ("json", "csv")
HASH_LENGTH = 12

_OPERATORS = {"<=": operator.le, ">=": operator.ge, "<": operator.lt, ">": operator.gt}


@dataclass(frozen=True)
class Check:
    """
    One pass/fail verdict with the value it was decided on.

    Attributes:
        name (str): What is checked, e.g. "sic_small_lambda"
        measured (float): Measured value (nan when the cell aborted)
        op (str): Comparison applied as `measured op threshold`
        threshold (float): Declared threshold
        passed (bool): Outcome
        method (str, optional): Cell name the check belongs to
        lam (float, optional): Cell lambda; None for sweep-level checks
        prompt_id (str, optional): Prompt the check is about
    """

    name: str
    measured: float
    op: str
    threshold: float
    passed: bool
    method: Optional[str] = None
    lam: Optional[float] = None
    prompt_id: Optional[str] = None

    @classmethod
    def compare(
        cls,
        name: str,
        measured: float,
        op: str,
        threshold: float,
        method: Optional[str] = None,
        lam: Optional[float] = None,
        prompt_id: Optional[str] = None,
    ) -> "Check":
        if op not in _OPERATORS:
            raise ValidationError(f"unknown comparison {op!r}")
        measured = float(measured)
        passed = bool(np.isfinite(measured) and _OPERATORS[op](measured, threshold))
        return cls(name, measured, op, float(threshold), passed, method, lam, prompt_id)

    def applies_to(self, method: str, lam: float, prompt_id: str) -> bool:
        return (
            self.method == method
            and self.lam == lam
            and (self.prompt_id is None or self.prompt_id == prompt_id)
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "method": self.method,
            "lambda": self.lam,
            "prompt_id": self.prompt_id,
            "measured": _json_float(self.measured),
            "op": self.op,
            "threshold": self.threshold,
            "pass": self.passed,
        }


@dataclass
class CellResult:
    """
    Outcome of one (method, lambda) training run.

    Attributes:
        name (str): Cell name in reports (the method, possibly with a suffix)
        spec (LossSpec): Loss that was trained
        config (TrainConfig): Effective training config
        instance (BanditInstance): World the cell trained on
        trajectory (Trajectory, optional): Checkpoints; partial when aborted
        error (str, optional): Abort message
        emit_trajectory (bool): Write the trajectory CSV with the report
        seconds (float): Wall-clock time of the run
    """

    name: str
    spec: LossSpec
    config: TrainConfig
    instance: BanditInstance
    trajectory: Optional[Trajectory] = None
    error: Optional[str] = None
    emit_trajectory: bool = False
    seconds: float = 0.0

    @property
    def lam(self) -> float:
        return self.spec.lam

    @property
    def ok(self) -> bool:
        return self.error is None and self.trajectory is not None

    @property
    def final_probs(self) -> Optional[np.ndarray]:
        return self.trajectory.final.probs if self.ok else None

    def policy(self, prompt_id: str) -> Optional[np.ndarray]:
        if not self.ok:
            return None
        i = self.instance.index_of(prompt_id)
        return self.final_probs[i, : self.instance.prompts[i].n_responses]

    def tv(self, prompt_id: str, target: str) -> float:
        """Final TV of one prompt to "star", "ref" or "delta"; nan when aborted."""
        if not self.ok:
            return float("nan")
        i = self.instance.index_of(prompt_id)
        return float(getattr(self.trajectory.final, f"tv_{target}")[i])

    @property
    def trajectory_file(self) -> Optional[str]:
        if not (self.emit_trajectory and self.trajectory is not None and len(self.trajectory)):
            return None
        return f"traj/{self.name}_{self.lam!r}.csv"

    def to_dict(self) -> dict:
        doc = {
            "method": self.name,
            "lambda": self.lam,
            "loss": self.spec.to_dict(),
            "config": self.config.to_dict(),
            "status": "ok" if self.ok else "aborted",
            "error": self.error,
            "trajectory_file": self.trajectory_file,
            "prompts": [],
        }
        for prompt in self.instance.prompts:
            pi = self.policy(prompt.id)
            entry = {"prompt_id": prompt.id, "policy": None}
            if pi is not None:
                entry["policy"] = dict(zip(prompt.responses, pi.tolist()))
                for target, other in (
                    ("star", prompt.pi_star),
                    ("ref", prompt.pi_ref),
                    ("delta", mode_policy(prompt.pi_star)),
                ):
                    dist = policy_distance(pi, other, prompt.id)
                    entry[f"tv_{target}"] = dist.tv
                    entry[f"kl_{target}"] = dist.kl_pq
                entry["argmax_matches_star"] = bool(np.argmax(pi) == np.argmax(prompt.pi_star))
            doc["prompts"].append(entry)
        return doc


@dataclass
class ExperimentReport:
    """
    Everything one experiment produced.

    Attributes:
        experiment (str): Experiment name, also the report directory name
        instances (list[BanditInstance]): Worlds the cells trained on
        config (dict): Echo of the requested configuration
        cells (list[CellResult]): Cell outcomes in plan order
        checks (list[Check]): Threshold verdicts
        tables (dict): Derived summary tables (JSON-ready)
        wall_clock (dict): Seconds spent, total and per cell
    """

    experiment: str
    instances: List[BanditInstance]
    config: dict
    cells: List[CellResult] = field(default_factory=list)
    checks: List[Check] = field(default_factory=list)
    tables: Dict[str, object] = field(default_factory=dict)
    wall_clock: Dict[str, object] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failed_checks(self) -> List[Check]:
        return [c for c in self.checks if not c.passed]

    @property
    def aborted_cells(self) -> List[CellResult]:
        return [c for c in self.cells if not c.ok]

    def cell(self, name: str, lam: float) -> CellResult:
        for c in self.cells:
            if c.name == name and c.lam == lam:
                return c
        raise ValidationError(f"no cell ({name!r}, {lam!r}) in {self.experiment} report")

    def config_hash(self) -> str:
        """First characters of the SHA-256 of the config echo and instance hashes."""
        doc = {
            "experiment": self.experiment,
            "config": self.config,
            "instances": [inst.content_hash() for inst in self.instances],
        }
        text = json.dumps(doc, sort_keys=True, default=str)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:HASH_LENGTH]

    def cell_frame(self) -> pd.DataFrame:
        rows = []
        for c in self.cells:
            for prompt in c.instance.prompts:
                verdicts = [k.passed for k in self.checks if k.applies_to(c.name, c.lam, prompt.id)]
                rows.append(
                    (
                        c.name,
                        c.lam,
                        prompt.id,
                        c.tv(prompt.id, "star"),
                        c.tv(prompt.id, "ref"),
                        c.tv(prompt.id, "delta"),
                        c.ok and all(verdicts),
                    )
                )
        return pd.DataFrame(rows, columns=CELL_COLUMNS)

    def summary(self) -> dict:
        return {
            "experiment": self.experiment,
            "instances": [
                {"hash": inst.content_hash(), "description": inst.describe(), "instance": inst.to_dict()}
                for inst in self.instances
            ],
            "config": self.config,
            "cells": [c.to_dict() for c in self.cells],
            "checks": [c.to_dict() for c in self.checks],
            "tables": self.tables,
            "passed": self.passed,
        }


def _json_float(value: float) -> Optional[float]:
    value = float(value)
    return value if np.isfinite(value) else None


def _write_text(path: Path, text: str) -> Path:
    try:
        path.write_text(text)
    except OSError as exc:
        raise PrefOptError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def emit_report(
    report: ExperimentReport,
    directory: Union[str, Path],
    formats: Iterable[str] = REPORT_FORMATS,
) -> List[Path]:
    """
    Write a report under `<directory>/<experiment>/<config hash>/`.

    "json" writes summary.json and timing.json, "csv" writes cells.csv and one
    trajectory CSV per flagged cell under traj/. Only timing.json depends on
    wall-clock time; everything else is byte-identical across reruns with the
    same configuration.

    Returns:
        list[Path]: The files written

    Raises:
        ValidationError: On an unknown format
        PrefOptError: On I/O failures, with the offending path
    """
    formats = list(formats)
    unknown = set(formats) - set(REPORT_FORMATS)
    if unknown:
        raise ValidationError(f"unknown report formats: {', '.join(sorted(unknown))}")

    out = Path(directory) / report.experiment / report.config_hash()
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise PrefOptError(f"cannot create report directory {out}: {exc.strerror or exc}") from exc

    written: List[Path] = []
    if "json" in formats:
        summary = json.dumps(report.summary(), indent=2, sort_keys=True, allow_nan=False)
        written.append(_write_text(out / "summary.json", summary + "\n"))
        timing = json.dumps(report.wall_clock, indent=2, sort_keys=True)
        written.append(_write_text(out / "timing.json", timing + "\n"))
    if "csv" in formats:
        cells_csv = report.cell_frame().to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        written.append(_write_text(out / "cells.csv", cells_csv))
        flagged = [c for c in report.cells if c.trajectory_file]
        if flagged:
            (out / "traj").mkdir(exist_ok=True)
        for c in flagged:
            path = out / c.trajectory_file
            try:
                c.trajectory.save(path)
            except OSError as exc:
                raise PrefOptError(f"cannot write {path}: {exc.strerror or exc}") from exc
            written.append(path)
    logger.info("wrote %d report files to %s", len(written), out)
    return written


def sweep_violation(values: Sequence[float], increasing: bool) -> float:
    """
    Largest step against the expected direction over an ordered sequence.

    Zero when the sequence is monotone in the expected direction; nan when any
    value is missing.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.size < 2:
        return 0.0
    if not np.all(np.isfinite(arr)):
        return float("nan")
    steps = np.diff(arr)
    worst = -steps.min() if increasing else steps.max()
    return max(float(worst), 0.0)
