"""
Base class of the preset experiments: plan cells, train them concurrently,
judge the results.
"""

import logging
import time
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Union

from ..core.instance import BanditInstance
from ..core.policy import PolicyModel
from ..datagen.dataset import PreferenceDataset
from ..errors import TrainingAbort, ValidationError
from ..losses.spec import LossSpec
from ..optim.config import TrainConfig, _positive_int
from ..optim.trainer import train
from .presets import ConfigLike, config_echo, lambdas_for, method_spec, parse_methods, resolve_config
from .report import CellResult, Check, ExperimentReport

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CellPlan:
    """One training run to perform."""

    name: str
    method: str
    spec: LossSpec
    config: TrainConfig
    instance: BanditInstance
    dataset: Optional[PreferenceDataset] = None
    emit_trajectory: bool = False


class Experiment(ABC):
    """
    A grid of (method, lambda) training runs with declared thresholds.

    Subclasses name the world they train on and the checks they evaluate.
    The default plan trains every method on every lambda of its grid from
    pi_ref, keeping the trajectories of the smallest and largest lambda.

    Args:
        methods (str | Sequence[str]): Method names, or "all"
        lambdas (Sequence[float], optional): Grid for every method; each
            method's default grid when omitted
        config (TrainConfig | Mapping, optional): Either one config for every
            cell, or overrides applied to each method's preset
        workers (int): Cells trained concurrently
    """

    name = "experiment"

    def __init__(
        self,
        methods: Union[str, Sequence[str]],
        lambdas: Optional[Sequence[float]] = None,
        config: ConfigLike = None,
        workers: int = 1,
    ):
        self.methods = parse_methods(methods)
        if lambdas is not None and len(lambdas) == 0:
            raise ValidationError("lambda grid is empty")
        self.lambdas = None if lambdas is None else [float(lam) for lam in lambdas]
        self.config = config
        self.workers = _positive_int("workers", workers)

    @abstractmethod
    def instances(self) -> List[BanditInstance]:
        """Worlds the experiment trains on."""
        raise NotImplementedError

    @abstractmethod
    def checks(self, cells: List[CellResult]) -> List[Check]:
        """Threshold verdicts over the finished cells."""
        raise NotImplementedError

    def tables(self, cells: List[CellResult]) -> Dict[str, object]:
        return {}

    def plan(self) -> List[CellPlan]:
        instance = self.instances()[0]
        plans = []
        for method in self.methods:
            grid = lambdas_for(method, self.lambdas)
            config = resolve_config(method, self.config)
            for lam in grid:
                plans.append(
                    CellPlan(
                        name=method,
                        method=method,
                        spec=method_spec(method, lam),
                        config=config,
                        instance=instance,
                        emit_trajectory=lam in (grid[0], grid[-1]),
                    )
                )
        return plans

    def config_echo(self) -> dict:
        return {
            "methods": list(self.methods),
            "lambdas": self.lambdas,
            "train": config_echo(self.config),
        }

    def run_cell(self, plan: CellPlan) -> CellResult:
        cell = CellResult(
            name=plan.name,
            spec=plan.spec,
            config=plan.config,
            instance=plan.instance,
            emit_trajectory=plan.emit_trajectory,
        )
        start = time.perf_counter()
        try:
            _, cell.trajectory = train(
                plan.spec,
                plan.instance,
                PolicyModel.from_reference(plan.instance),
                plan.config,
                dataset=plan.dataset,
            )
        except TrainingAbort as exc:
            logger.warning("%s cell %s (lambda=%g) aborted: %s", self.name, plan.name, plan.spec.lam, exc)
            cell.error = str(exc)
            cell.trajectory = exc.trajectory
        cell.seconds = time.perf_counter() - start
        logger.info("%s cell %s (lambda=%g) done in %.2fs", self.name, plan.name, plan.spec.lam, cell.seconds)
        return cell

    def run(self) -> ExperimentReport:
        """Train every planned cell and evaluate the checks."""
        plans = self.plan()
        logger.info("%s: %d cells on %d worker(s)", self.name, len(plans), self.workers)
        start = time.perf_counter()
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            cells = list(pool.map(self.run_cell, plans))
        report = ExperimentReport(
            experiment=self.name,
            instances=self.instances(),
            config=self.config_echo(),
            cells=cells,
            checks=self.checks(cells),
            tables=self.tables(cells),
        )
        report.wall_clock = {
            "total_seconds": time.perf_counter() - start,
            "cells": {f"{c.name}_{c.lam!r}": c.seconds for c in cells},
        }
        failed = len(report.failed_checks)
        if failed:
            logger.warning("%s: %d of %d checks failed", self.name, failed, len(report.checks))
        return report
