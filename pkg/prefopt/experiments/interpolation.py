"""
Interpolation sweep on the single-prompt world: where does each method land
between pi* and pi_ref as lambda moves from tiny to huge?
"""

from typing import Dict, List, Optional, Sequence, Union

from ..core.instance import BanditInstance
from ..errors import ValidationError
from ..losses.spec import LossKind
from .experiment import Experiment
from .instances import build_interpolation_instance
from .presets import ConfigLike, finite_or_none, is_large_lambda, is_small_lambda, method_kind
from .report import CellResult, Check, ExperimentReport, sweep_violation

TV_TOL = 0.02
WIC_MIN_TV_STAR = 0.15
SWEEP_TOL = 0.01
WIC_KINDS = (LossKind.DPO, LossKind.IPO, LossKind.FDPO_JS)


class InterpolationExperiment(Experiment):
    """
    Checks per cell:
        small lambda, EXPO: TV to pi* <= 0.02 (the strong interpolation endpoint)
        small lambda, DPO, IPO and f-DPO: TV to the mode policy <= 0.02 and TV to
            pi* >= 0.15 (the weak endpoint, not the strong one)
        small lambda, every QPO method: TV to pi* > 0.02
        large lambda, every method: TV to pi_ref <= 0.02
    and per EXPO method over its sweep: TV to pi* non-decreasing and TV to
    pi_ref non-increasing in lambda, up to 0.01 per step.
    """

    name = "interpolation"

    def __init__(
        self,
        methods: Union[str, Sequence[str]],
        lambdas: Optional[Sequence[float]] = None,
        config: ConfigLike = None,
        workers: int = 1,
        instance: Optional[BanditInstance] = None,
    ):
        super().__init__(methods, lambdas, config, workers)
        self.world = build_interpolation_instance() if instance is None else instance
        if len(self.world.prompts) != 1:
            raise ValidationError(
                f"the interpolation sweep needs a single-prompt instance, got {len(self.world.prompts)} prompts"
            )
        self.prompt_id = self.world.prompts[0].id

    def instances(self) -> List[BanditInstance]:
        return [self.world]

    def checks(self, cells: List[CellResult]) -> List[Check]:
        checks: List[Check] = []
        for c in cells:
            kind = method_kind(c.name)
            tv_star = c.tv(self.prompt_id, "star")
            if is_small_lambda(c.name, c.lam):
                if kind.is_expo:
                    checks.append(Check.compare("sic_small_lambda", tv_star, "<=", TV_TOL, c.name, c.lam))
                else:
                    if kind in WIC_KINDS:
                        checks.append(
                            Check.compare("wic_mode_policy", c.tv(self.prompt_id, "delta"), "<=", TV_TOL, c.name, c.lam)
                        )
                        checks.append(
                            Check.compare("wic_not_pi_star", tv_star, ">=", WIC_MIN_TV_STAR, c.name, c.lam)
                        )
                    checks.append(Check.compare("sic_failure", tv_star, ">", TV_TOL, c.name, c.lam))
            if is_large_lambda(c.name, c.lam):
                checks.append(Check.compare("large_lambda_ref", c.tv(self.prompt_id, "ref"), "<=", TV_TOL, c.name, c.lam))

        for method, sweep in _sweeps(cells).items():
            if not method_kind(method).is_expo or len(sweep) < 2:
                continue
            stars = [c.tv(self.prompt_id, "star") for c in sweep]
            refs = [c.tv(self.prompt_id, "ref") for c in sweep]
            checks.append(
                Check.compare("sweep_tv_star_nondecreasing", sweep_violation(stars, True), "<=", SWEEP_TOL, method)
            )
            checks.append(
                Check.compare("sweep_tv_ref_nonincreasing", sweep_violation(refs, False), "<=", SWEEP_TOL, method)
            )
        return checks

    def tables(self, cells: List[CellResult]) -> Dict[str, object]:
        """Small-lambda endpoint per method: does it reach pi*?"""
        rows = []
        for method, sweep in _sweeps(cells).items():
            small = sweep[0]
            if not is_small_lambda(method, small.lam):
                continue
            tv_star = small.tv(self.prompt_id, "star")
            rows.append(
                {
                    "method": method,
                    "family": "expo" if method_kind(method).is_expo else "qpo",
                    "lambda": small.lam,
                    "tv_star": finite_or_none(tv_star),
                    "reaches_pi_star": bool(tv_star <= TV_TOL),
                }
            )
        return {"small_lambda_endpoint": rows}


def _sweeps(cells: List[CellResult]) -> Dict[str, List[CellResult]]:
    sweeps: Dict[str, List[CellResult]] = {}
    for c in cells:
        sweeps.setdefault(c.name, []).append(c)
    for sweep in sweeps.values():
        sweep.sort(key=lambda c: c.lam)
    return sweeps


def run_interpolation(
    methods: Union[str, Sequence[str]],
    lambdas: Optional[Sequence[float]] = None,
    config: ConfigLike = None,
    workers: int = 1,
    instance: Optional[BanditInstance] = None,
) -> ExperimentReport:
    """
    Train every method x lambda on the interpolation world from pi_ref.

    Args:
        methods (str | Sequence[str]): Method names, or "all"
        lambdas (Sequence[float], optional): Grid; per-method defaults when omitted
        config (TrainConfig | Mapping, optional): Config for every cell, or
            overrides of the method presets
        workers (int): Cells trained concurrently
        instance (BanditInstance, optional): Single-prompt world to sweep
            instead of the built-in one

    Returns:
        ExperimentReport: Cells, threshold checks and the small-lambda table.
            Aborted cells are recorded and fail their checks.

    Example:
        >>> report = run_interpolation(["expo-comp"], [1e-5, 100.0])
        >>> report.passed
        True
    """
    return InterpolationExperiment(methods, lambdas, config, workers, instance).run()
