"""
Preset experiments (interpolation sweep, preservation, degeneracy probe) and
their machine-readable reports.
"""

from .degeneracy import DegeneracyExperiment, run_degeneracy_probe
from .experiment import CellPlan, Experiment
from .instances import (
    build_degeneracy_instances,
    build_interpolation_instance,
    build_preservation_instance,
    random_instance,
)
from .interpolation import InterpolationExperiment, run_interpolation
from .presets import (
    ALL_METHODS,
    DEFAULT_LAMBDAS,
    EXPO_REG_LAMBDAS,
    lambdas_for,
    method_kind,
    method_spec,
    parse_methods,
    preset_config,
    resolve_config,
)
from .preservation import PreservationExperiment, run_preservation
from .report import CELL_COLUMNS, CellResult, Check, ExperimentReport, emit_report, sweep_violation

__all__ = [
    "ALL_METHODS",
    "CELL_COLUMNS",
    "CellPlan",
    "CellResult",
    "Check",
    "DEFAULT_LAMBDAS",
    "DegeneracyExperiment",
    "EXPO_REG_LAMBDAS",
    "Experiment",
    "ExperimentReport",
    "InterpolationExperiment",
    "PreservationExperiment",
    "build_degeneracy_instances",
    "build_interpolation_instance",
    "build_preservation_instance",
    "emit_report",
    "lambdas_for",
    "method_kind",
    "method_spec",
    "parse_methods",
    "preset_config",
    "random_instance",
    "resolve_config",
    "run_degeneracy_probe",
    "run_interpolation",
    "run_preservation",
    "sweep_violation",
]
