"""
Preservation on the good/bad prompt world: can a method improve the bad
prompt without moving the good one away from its (already optimal) reference?
"""

from typing import Dict, List, Optional, Sequence, Union

from ..core.instance import BanditInstance
from ..errors import ValidationError
from .experiment import Experiment
from .instances import build_preservation_instance
from .presets import ConfigLike, finite_or_none, is_large_lambda, method_kind
from .report import CellResult, Check, ExperimentReport

GOOD = "x_g"
BAD = "x_b"
IMPROVED_TV = 0.18
PRESERVED_TV = 0.02


def _improves(cell: CellResult) -> bool:
    return cell.tv(BAD, "star") < IMPROVED_TV


def _preserves(cell: CellResult) -> bool:
    return cell.tv(GOOD, "star") <= PRESERVED_TV


class PreservationExperiment(Experiment):
    """
    Checks:
        every QPO cell that improves x_b (TV to pi* < 0.18) degrades x_g
            (TV to pi* > 0.02); vacuous for cells that do not improve x_b
        every EXPO method has some lambda that improves x_b while keeping x_g
            within 0.02 of pi*
        large lambda: x_g within 0.02 and x_b no better than 0.18

    A custom world must name its prompts x_g and x_b.
    """

    name = "preservation"

    def __init__(
        self,
        methods: Union[str, Sequence[str]],
        lambdas: Optional[Sequence[float]] = None,
        config: ConfigLike = None,
        workers: int = 1,
        instance: Optional[BanditInstance] = None,
    ):
        super().__init__(methods, lambdas, config, workers)
        self.world = build_preservation_instance() if instance is None else instance
        missing = {GOOD, BAD} - set(self.world.prompt_ids)
        if missing:
            raise ValidationError(f"the preservation world needs prompts {GOOD!r} and {BAD!r}; missing {sorted(missing)}")

    def instances(self) -> List[BanditInstance]:
        return [self.world]

    def checks(self, cells: List[CellResult]) -> List[Check]:
        checks: List[Check] = []
        expo_cells: Dict[str, List[CellResult]] = {}
        for c in cells:
            kind = method_kind(c.name)
            if kind.is_expo:
                expo_cells.setdefault(c.name, []).append(c)
            elif not c.ok or _improves(c):
                checks.append(
                    Check.compare("improvement_degrades_good", c.tv(GOOD, "star"), ">", PRESERVED_TV, c.name, c.lam, GOOD)
                )
            if is_large_lambda(c.name, c.lam):
                checks.append(Check.compare("large_lambda_good", c.tv(GOOD, "star"), "<=", PRESERVED_TV, c.name, c.lam, GOOD))
                checks.append(Check.compare("large_lambda_bad", c.tv(BAD, "star"), ">=", IMPROVED_TV, c.name, c.lam, BAD))

        for method, group in expo_cells.items():
            # measured: best x_b TV among cells that preserve x_g (nan if none)
            keep = [c.tv(BAD, "star") for c in group if c.ok and _preserves(c)]
            best = min(keep) if keep else float("nan")
            checks.append(Check.compare("improves_bad_and_preserves_good", best, "<", IMPROVED_TV, method))
        return checks

    def tables(self, cells: List[CellResult]) -> Dict[str, object]:
        rows = [
            {
                "method": c.name,
                "lambda": c.lam,
                "tv_good": finite_or_none(c.tv(GOOD, "star")),
                "tv_bad": finite_or_none(c.tv(BAD, "star")),
                "improves_bad": c.ok and _improves(c),
                "preserves_good": c.ok and _preserves(c),
            }
            for c in cells
        ]
        return {"preservation": rows}


def run_preservation(
    methods: Union[str, Sequence[str]],
    lambdas: Optional[Sequence[float]] = None,
    config: ConfigLike = None,
    workers: int = 1,
    instance: Optional[BanditInstance] = None,
) -> ExperimentReport:
    """
    Train every method x lambda on the two-prompt preservation world.

    Per cell the report records the TV to pi* on the good and the bad prompt.
    A custom `instance` must name its prompts x_g and x_b.

    Returns:
        ExperimentReport: Cells, checks and the per-cell preservation table
    """
    return PreservationExperiment(methods, lambdas, config, workers, instance).run()
