"""
Command-line entry point: `python -m prefopt <command> [options]`.

Exit status: 0 success, 1 invalid arguments or configuration, 2 a declared
threshold failed, 3 a run aborted.
"""

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from .core.distance import policy_distance
from .core.instance import BanditInstance
from .core.policy import PolicyModel
from .datagen.dataset import PreferenceDataset, SamplingMode
from .datagen.sampling import degenerate_dataset, sample_tuples
from .errors import PrefOptError, ValidationError
from .experiments.degeneracy import run_degeneracy_probe
from .experiments.instances import build_interpolation_instance, random_instance
from .experiments.interpolation import run_interpolation
from .experiments.presets import ALL_METHODS, method_spec, resolve_config
from .experiments.preservation import run_preservation
from .experiments.report import REPORT_FORMATS, ExperimentReport, emit_report
from .losses.bt_reward import default_fit_config
from .losses.evaluation import EvaluationMode
from .losses.gradcheck import check_gradient
from .losses.spec import LossKind, LossSpec, make_loss_spec
from .optim.config import TrainConfig
from .optim.trainer import train
from .optim.trajectory import FLOAT_FORMAT

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_THRESHOLD = 2
EXIT_ABORT = 3

SEED_ENV = "PREFOPT_SEED"
GRADCHECK_TOL = 1e-4
GRADCHECK_METHODS = ALL_METHODS + ("expo-reg-oracle", "gpo-exponential", "fdpo-forward-kl", "bt-reward")

# flag dest -> TrainConfig field
TRAIN_FLAGS = {
    "mode": "mode",
    "steps": "steps",
    "lr": "learning_rate",
    "batch": "batch_size",
    "clip": "clip_max_norm",
    "seed": "seed",
    "record_every": "record_every",
    "pair_mode": "pair_mode",
}
FILE_KEYS = {"methods", "lambdas", "lambda", "workers", "control", "control_lambda", "pi_ref_a", "pi_ref_b"}


class UsageError(ValidationError):
    """Malformed command line."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


# --- argument types -----------------------------------------------------------


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not np.isfinite(value) or value <= 0.0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text!r}")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text!r}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text!r}")
    return value


def _float_list(text: str) -> List[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("expected at least one value")
    return values


def _lambda(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None


# --- parser -------------------------------------------------------------------


def _add_training_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("training (unset flags keep the config file or method preset)")
    g.add_argument("--mode", choices=["population", "sampled"], help="exact or mini-batch gradients")
    g.add_argument("--steps", type=_positive_int, help="optimizer steps")
    g.add_argument("--lr", type=_positive_float, help="Adam learning rate")
    g.add_argument("--batch", type=_positive_int, help="tuples per step in sampled mode")
    g.add_argument("--clip", type=_positive_float, help="global gradient-norm cap")
    g.add_argument("--seed", type=_seed, help=f"batch sampling seed (fallback: ${SEED_ENV}, then 0)")
    g.add_argument("--record-every", type=_positive_int, help="checkpoint spacing in steps")
    g.add_argument(
        "--pair-mode", choices=[SamplingMode.UNIFORM_PAIRS.value, SamplingMode.REF_PRODUCT.value],
        help="pair distribution",
    )
    p.add_argument("--config", type=Path, help="JSON file with TrainConfig fields, methods and lambdas")
    p.add_argument("--out", type=Path, default=Path("runs"), help="output directory")


def _add_report_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--workers", type=_positive_int, help="cells trained concurrently (default 1)")
    p.add_argument(
        "--formats", type=lambda t: [f for f in t.split(",") if f], default=list(REPORT_FORMATS),
        help="report formats, comma-separated: json,csv",
    )


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="prefopt", description="Tabular preference-optimization laboratory.", formatter_class=fmt)
    parser.add_argument(
        "--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="logging level"
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, runner, text in (
        ("interp", run_interpolation, "lambda sweep on the single-prompt interpolation world"),
        ("preserve", run_preservation, "good/bad prompt preservation experiment"),
    ):
        p = sub.add_parser(name, help=text, description=text, formatter_class=fmt)
        p.add_argument("--methods", help="comma-separated methods or 'all' (default all)")
        p.add_argument("--lambdas", type=_float_list, help="comma-separated lambda grid (default per method)")
        p.add_argument("--instance", type=Path, help="instance JSON (default: the built-in world)")
        _add_training_flags(p)
        _add_report_flags(p)
        p.set_defaults(handler=_cmd_experiment, runner=runner)

    p = sub.add_parser("degeneracy", help="degenerate-data probe under two reference policies", formatter_class=fmt)
    p.add_argument("--pi-ref-a", type=_float_list, help="first reference policy (default 0.4,0.4,0.2)")
    p.add_argument("--pi-ref-b", type=_float_list, help="second reference policy (default 0.2,0.3,0.5)")
    p.add_argument("--methods", help="probed methods (default dpo,fdpo-js)")
    p.add_argument("--lambda", dest="lam", type=_lambda, help="lambda of the probed methods (default 0.1)")
    p.add_argument("--control", help="control method, 'none' to skip (default expo-reg)")
    p.add_argument("--control-lambda", type=_lambda, help="control lambda (default 0.5)")
    _add_training_flags(p)
    _add_report_flags(p)
    p.set_defaults(handler=_cmd_degeneracy)

    p = sub.add_parser("train", help="train one method on an instance", formatter_class=fmt)
    p.add_argument("--method", required=True, help="method name, e.g. dpo or expo-comp")
    p.add_argument("--lambda", dest="lam", type=_lambda, help="regularization strength")
    p.add_argument("--instance", type=Path, help="instance JSON (default: interpolation world)")
    p.add_argument("--dataset", type=Path, help="preference CSV to cycle over instead of fresh samples")
    _add_training_flags(p)
    p.set_defaults(handler=_cmd_train)

    p = sub.add_parser("gradcheck", help="compare analytic and finite-difference gradients", formatter_class=fmt)
    p.add_argument("--methods", default="all", help="comma-separated methods or 'all'")
    p.add_argument("--trials", type=_positive_int, default=20, help="random cases per method")
    p.add_argument("--tol", type=_positive_float, default=GRADCHECK_TOL, help="largest accepted relative error")
    p.add_argument("--seed", type=_seed, help=f"seed of the random cases (fallback: ${SEED_ENV}, then 0)")
    p.add_argument("--instance", type=Path, help="fixed instance JSON instead of random ones")
    p.add_argument("--out", type=Path, default=Path("runs"), help="output directory")
    p.set_defaults(handler=_cmd_gradcheck)

    p = sub.add_parser("gen-data", help="sample a preference dataset", formatter_class=fmt)
    p.add_argument("--n", type=_positive_int, default=200, help="tuples to draw")
    p.add_argument(
        "--sampling-mode", default=SamplingMode.UNIFORM_PAIRS.value, choices=[m.value for m in SamplingMode],
        help="pair distribution; degenerate writes one tuple per pair and ignores --n",
    )
    p.add_argument("--seed", type=_seed, help=f"sampling seed (fallback: ${SEED_ENV}, then 0)")
    p.add_argument("--instance", type=Path, help="instance JSON (default: interpolation world)")
    p.add_argument("--out", type=Path, default=Path("runs"), help="output directory")
    p.add_argument("--name", help="CSV file name (default <mode>_<n>_<seed>.csv)")
    p.set_defaults(handler=_cmd_gen_data)
    return parser


# --- configuration ------------------------------------------------------------


def _env_seed() -> Optional[int]:
    text = os.environ.get(SEED_ENV)
    if text is None or text == "":
        return None
    try:
        seed = int(text)
    except ValueError:
        raise ValidationError(f"{SEED_ENV} must be a non-negative integer, got {text!r}") from None
    if seed < 0:
        raise ValidationError(f"{SEED_ENV} must be a non-negative integer, got {text!r}")
    return seed


def _seed_value(args) -> int:
    if args.seed is not None:
        return args.seed
    env = _env_seed()
    return 0 if env is None else env


def load_config_file(path: Optional[Path]) -> dict:
    """
    Read a JSON config file of TrainConfig fields plus experiment keys.

    Raises:
        ValidationError: On unreadable files, invalid JSON or unknown keys
    """
    if path is None:
        return {}
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ValidationError(f"cannot read config file {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValidationError(f"config file {path} must hold a JSON object")
    unknown = set(doc) - FILE_KEYS - set(TrainConfig.field_names())
    if unknown:
        raise ValidationError(f"config file {path}: unknown keys {', '.join(sorted(unknown))}")
    return doc


def train_overrides(args, doc: dict) -> Dict[str, object]:
    """TrainConfig overrides: file values, then explicit flags, then the seed fallback."""
    overrides = {k: v for k, v in doc.items() if k in TrainConfig.field_names()}
    for flag, field_name in TRAIN_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides[field_name] = value
    if "seed" not in overrides:
        env = _env_seed()
        if env is not None:
            overrides["seed"] = env
    return overrides


def _numbers(value, name: str) -> List[float]:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        value = [value]
    try:
        return [float(v) for v in value]
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be a list of numbers, got {value!r}") from None


def _load_instance(path: Optional[Path]) -> BanditInstance:
    if path is None:
        return build_interpolation_instance()
    try:
        return BanditInstance.load(path)
    except OSError as exc:
        raise ValidationError(f"cannot read instance {path}: {exc.strerror or exc}") from exc


def _short_hash(doc) -> str:
    text = json.dumps(doc, sort_keys=True, default=str)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]


# --- commands -----------------------------------------------------------------


def _report_status(report: ExperimentReport, files: Sequence[Path]) -> int:
    checks = report.checks
    where = files[0].parent if files else "(no files)"
    print(
        f"{report.experiment}: {len(report.cells)} cells, "
        f"{sum(c.passed for c in checks)}/{len(checks)} checks passed, report in {where}"
    )
    for c in report.failed_checks:
        scope = c.method if c.lam is None else f"{c.method} lambda={c.lam!r}"
        print(f"  FAIL {c.name} [{scope}]: {c.measured!r} {c.op} {c.threshold!r}")
    if report.aborted_cells:
        for cell in report.aborted_cells:
            print(f"  ABORT {cell.name} lambda={cell.lam!r}: {cell.error}")
        return EXIT_ABORT
    return EXIT_OK if report.passed else EXIT_THRESHOLD


def _cmd_experiment(args) -> int:
    doc = load_config_file(args.config)
    methods = args.methods or doc.get("methods", "all")
    lambdas = args.lambdas if args.lambdas is not None else doc.get("lambdas")
    if lambdas is not None:
        lambdas = _numbers(lambdas, "lambdas")
    workers = args.workers or doc.get("workers", 1)
    instance = _load_instance(args.instance) if args.instance is not None else None
    report = args.runner(methods, lambdas, train_overrides(args, doc), workers, instance)
    return _report_status(report, emit_report(report, args.out, args.formats))


def _cmd_degeneracy(args) -> int:
    doc = load_config_file(args.config)
    control = args.control if args.control is not None else doc.get("control", "expo-reg")
    if isinstance(control, str) and control.lower() == "none":
        control = None
    report = run_degeneracy_probe(
        _numbers(args.pi_ref_a or doc.get("pi_ref_a", [0.4, 0.4, 0.2]), "pi_ref_a"),
        _numbers(args.pi_ref_b or doc.get("pi_ref_b", [0.2, 0.3, 0.5]), "pi_ref_b"),
        config=train_overrides(args, doc),
        methods=args.methods or doc.get("methods") or "dpo,fdpo-js",
        lam=args.lam if args.lam is not None else doc.get("lambda", 0.1),
        control=control,
        control_lam=args.control_lambda if args.control_lambda is not None else doc.get("control_lambda", 0.5),
        workers=args.workers or doc.get("workers", 1),
    )
    return _report_status(report, emit_report(report, args.out, args.formats))


def _cmd_train(args) -> int:
    doc = load_config_file(args.config)
    lam = args.lam if args.lam is not None else doc.get("lambda")
    if lam is None:
        raise ValidationError("train needs --lambda (or 'lambda' in the config file)")
    method = args.method.strip().lower()
    spec = _spec_for(method, lam)
    instance = _load_instance(args.instance)
    overrides = train_overrides(args, doc)
    if spec.kind is LossKind.BT_REWARD:
        config = default_fit_config().replace(**overrides)
        init = PolicyModel.zeros(instance)
    else:
        config = resolve_config(method, overrides)
        init = PolicyModel.from_reference(instance)
    dataset = PreferenceDataset.load(args.dataset, instance) if args.dataset is not None else None

    model, trajectory = train(spec, instance, init, config, dataset=dataset)

    echo = {
        "loss": spec.to_dict(),
        "config": config.to_dict(),
        "instance_hash": instance.content_hash(),
        "dataset": None if args.dataset is None else str(args.dataset),
    }
    out = args.out / "train" / _short_hash(echo)
    out.mkdir(parents=True, exist_ok=True)
    trajectory.save(out / "trajectory.csv")
    probs = model.probs(instance)
    prompts = []
    for i, prompt in enumerate(instance.prompts):
        pi = probs[i, : prompt.n_responses]
        dist = policy_distance(pi, prompt.pi_star, prompt.id)
        prompts.append(
            {
                "prompt_id": prompt.id,
                "policy": dict(zip(prompt.responses, pi.tolist())),
                "tv_star": dist.tv,
                "kl_star": dist.kl_pq,
                "tv_ref": policy_distance(pi, prompt.pi_ref).tv,
            }
        )
    result = dict(echo, steps=trajectory.final.step, final_loss=trajectory.final.loss, prompts=prompts)
    (out / "result.json").write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    print(f"{spec.label} lambda={spec.lam!r}: loss {trajectory.final.loss:.6g} after {trajectory.final.step} steps, output in {out}")
    return EXIT_OK


def _spec_for(method: str, lam: float) -> LossSpec:
    if method == LossKind.BT_REWARD.value:
        return make_loss_spec(LossKind.BT_REWARD, lam)
    return method_spec(method, lam)


def _gradcheck_methods(text: str) -> List[str]:
    names: List[str] = []
    for name in (m.strip().lower() for m in text.split(",") if m.strip()):
        for method in GRADCHECK_METHODS if name == "all" else (name,):
            if method not in names:
                names.append(method)
    return names


def _cmd_gradcheck(args) -> int:
    rng = np.random.default_rng(_seed_value(args))
    fixed = _load_instance(args.instance) if args.instance is not None else None
    mode = EvaluationMode.population()
    rows = []
    for method in _gradcheck_methods(args.methods):
        _spec_for(method, 0.5)  # reject unknown names before any work
        for trial in range(args.trials):
            instance = fixed if fixed is not None else random_instance(rng)
            is_reg = method.startswith("expo-reg")
            lam = float(rng.uniform(0.0, 1.0) if is_reg else rng.uniform(0.1, 2.0))
            spec = _spec_for(method, lam)
            theta = rng.normal(size=(instance.n_features, instance.max_responses))
            error = check_gradient(spec, PolicyModel(theta, instance.mask), instance, mode)
            rows.append((method, trial, lam, error, error < args.tol))
    frame = pd.DataFrame(rows, columns=["method", "trial", "lambda", "rel_error", "pass"])
    out = args.out / "gradcheck"
    out.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out / "results.csv", index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    for method, group in frame.groupby("method", sort=False):
        print(f"{method:18s} max relative error {group['rel_error'].max():.3e}")
    failed = int((~frame["pass"]).sum())
    if failed:
        print(f"{failed} of {len(frame)} cases exceed {args.tol!r}")
        return EXIT_THRESHOLD
    return EXIT_OK


def _cmd_gen_data(args) -> int:
    instance = _load_instance(args.instance)
    mode = SamplingMode.parse(args.sampling_mode)
    seed = _seed_value(args)
    if mode is SamplingMode.DEGENERATE:
        dataset = degenerate_dataset(instance)
    else:
        dataset = sample_tuples(instance, args.n, mode=mode, seed=seed)
    args.out.mkdir(parents=True, exist_ok=True)
    path = dataset.save(args.out / (args.name or f"{mode.value}_{len(dataset)}_{seed}.csv"))
    print(f"wrote {len(dataset)} tuples to {path}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run one command and return its exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:
        # --help and --version
        return int(exc.code or 0)

    logging.basicConfig(level=args.log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    handler: Callable = args.handler
    try:
        return handler(args)
    except ValidationError as exc:
        print(f"prefopt {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except PrefOptError as exc:
        print(f"prefopt {args.command}: aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except OSError as exc:
        print(f"prefopt {args.command}: aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
