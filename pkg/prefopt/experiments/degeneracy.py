"""
Degeneracy probe: train on data whose empirical preferences are all 0 or 1
under two different reference policies and compare where the runs end.
"""

from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core.distance import total_variation
from ..core.instance import BanditInstance
from ..datagen.sampling import degenerate_dataset
from ..errors import ValidationError
from ..losses.evaluation import EvaluationKind
from .experiment import CellPlan, Experiment
from .instances import build_degeneracy_instances
from .presets import ConfigLike, config_echo, finite_or_none, method_kind, method_spec, resolve_config
from .report import CellResult, Check, ExperimentReport, sweep_violation

REF_LABELS = ("ref_a", "ref_b")
AGREEMENT_TV = 0.02
CONTROL_MIN_TV = 0.05
MONOTONE_TOL = 1e-12
BURN_IN = 0.1
PROMPT = "x"


class DegeneracyExperiment(Experiment):
    """
    Full-batch training on the degenerate dataset under two references.

    Checks:
        each probed method: the two converged policies agree within 0.02 TV
        each probed run: the never-winning response loses mass by the end, and
            its probability is non-increasing over the checkpoints after a
            10% burn-in
        the control (regression loss) run pair differs by more than 0.05 TV

    Args:
        pi_ref_a, pi_ref_b (Sequence[float]): The two reference policies
        config (TrainConfig | Mapping, optional): As for the other experiments;
            batches always cover the whole dataset
        methods (Sequence[str]): Probed methods
        lam (float): Their lambda
        control (str, optional): Control method, None to skip it
        control_lam (float): Control lambda
    """

    name = "degeneracy"

    def __init__(
        self,
        pi_ref_a: Sequence[float],
        pi_ref_b: Sequence[float],
        config: ConfigLike = None,
        methods: Sequence[str] = ("dpo", "fdpo-js"),
        lam: float = 0.1,
        control: Optional[str] = "expo-reg",
        control_lam: float = 0.5,
        workers: int = 1,
    ):
        super().__init__(methods, [lam], config, workers)
        self.pair = build_degeneracy_instances(pi_ref_a, pi_ref_b)
        self.lam = float(lam)
        self.control = control
        self.control_lam = float(control_lam)
        if control is not None:
            if control in self.methods:
                raise ValidationError(f"control {control!r} is also a probed method")
            method_spec(control, self.control_lam)

    def instances(self) -> List[BanditInstance]:
        return list(self.pair)

    def _runs(self) -> List[Tuple[str, float]]:
        runs = [(m, self.lam) for m in self.methods]
        if self.control is not None:
            runs.append((self.control, self.control_lam))
        return runs

    def plan(self) -> List[CellPlan]:
        plans = []
        for method, lam in self._runs():
            spec = method_spec(method, lam)
            base = resolve_config(method, self.config)
            for label, instance in zip(REF_LABELS, self.pair):
                dataset = degenerate_dataset(instance)
                config = base.replace(mode=EvaluationKind.SAMPLED, batch_size=len(dataset))
                plans.append(
                    CellPlan(
                        name=f"{method}@{label}",
                        method=method,
                        spec=spec,
                        config=config,
                        instance=instance,
                        dataset=dataset,
                        emit_trajectory=True,
                    )
                )
        return plans

    def config_echo(self) -> dict:
        return {
            "methods": list(self.methods),
            "lambda": self.lam,
            "control": self.control,
            "control_lambda": self.control_lam,
            "pi_ref_a": self.pair[0].prompts[0].pi_ref.tolist(),
            "pi_ref_b": self.pair[1].prompts[0].pi_ref.tolist(),
            "train": config_echo(self.config),
        }

    def _loser(self) -> str:
        prompt = self.pair[0].prompts[0]
        # lowest pi*, last index on ties: it never wins a degenerate tuple
        k = prompt.n_responses - 1 - int(np.argmin(prompt.pi_star[::-1]))
        return prompt.responses[k]

    def _pairs(self, cells: List[CellResult]) -> Dict[str, Tuple[CellResult, CellResult]]:
        by_name = {c.name: c for c in cells}
        return {m: tuple(by_name[f"{m}@{label}"] for label in REF_LABELS) for m, _ in self._runs()}

    @staticmethod
    def _between(a: CellResult, b: CellResult) -> float:
        if not (a.ok and b.ok):
            return float("nan")
        return total_variation(a.policy(PROMPT), b.policy(PROMPT))

    def checks(self, cells: List[CellResult]) -> List[Check]:
        checks: List[Check] = []
        loser = self._loser()
        for method, (a, b) in self._pairs(cells).items():
            between = self._between(a, b)
            if method == self.control:
                checks.append(Check.compare("control_depends_on_ref", between, ">", CONTROL_MIN_TV, method))
                continue
            checks.append(Check.compare("reference_independence", between, "<=", AGREEMENT_TV, method))
            for c in (a, b):
                checks.append(
                    Check.compare("loser_mass_shrinks", _loser_drop(c, loser), ">", 0.0, c.name, c.lam, PROMPT)
                )
                checks.append(
                    Check.compare("loser_monotone", _loser_rise(c, loser), "<=", MONOTONE_TOL, c.name, c.lam, PROMPT)
                )
        return checks

    def tables(self, cells: List[CellResult]) -> Dict[str, object]:
        loser = self._loser()
        rows = []
        for method, (a, b) in self._pairs(cells).items():
            rows.append(
                {
                    "method": method,
                    "lambda": a.lam,
                    "family": "expo" if method_kind(method).is_expo else "qpo",
                    "tv_between": finite_or_none(self._between(a, b)),
                    "loser": loser,
                    "loser_final": [finite_or_none(_loser_series(c, loser)[-1]) if c.ok else None for c in (a, b)],
                }
            )
        return {"degeneracy": rows}


def _loser_series(cell: CellResult, loser: str) -> np.ndarray:
    return cell.trajectory.prob_series(PROMPT, loser)


def _loser_drop(cell: CellResult, loser: str) -> float:
    """Initial minus final probability of the loser; nan when the run aborted."""
    if not cell.ok:
        return float("nan")
    series = _loser_series(cell, loser)
    return float(series[0] - series[-1])


def _loser_rise(cell: CellResult, loser: str) -> float:
    """Largest increase of the loser's probability between checkpoints after burn-in."""
    if not cell.ok:
        return float("nan")
    steps = cell.trajectory.steps
    series = _loser_series(cell, loser)[steps >= BURN_IN * cell.config.steps]
    return sweep_violation(series, increasing=False)


def run_degeneracy_probe(
    pi_ref_a: Sequence[float],
    pi_ref_b: Sequence[float],
    config: ConfigLike = None,
    methods: Sequence[str] = ("dpo", "fdpo-js"),
    lam: float = 0.1,
    control: Optional[str] = "expo-reg",
    control_lam: float = 0.5,
    workers: int = 1,
) -> ExperimentReport:
    """
    Probe whether training on 0/1 preferences forgets the reference policy.

    Example:
        >>> report = run_degeneracy_probe([0.4, 0.4, 0.2], [0.2, 0.3, 0.5])
        >>> [c.name for c in report.checks if c.name == "reference_independence"]
        ['reference_independence', 'reference_independence']

    Raises:
        ValidationError: If the references are not two distinct strictly
            positive vectors of the same length
    """
    return DegeneracyExperiment(pi_ref_a, pi_ref_b, config, methods, lam, control, control_lam, workers).run()
