"""
Loss specifications: a loss kind, its regularization strength and, for the
custom quasi-convex kind, the (psi, mu) pair.
"""

import json
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np

from ..errors import DomainError, ValidationError
from .shapes import IPOPsi, JensenShannonMu, LogisticPsi, LogMu, Mu, Psi

# log v on 100 points over [1e-6, 1e6]; links are checked on this grid
MU_GRID = np.log(np.logspace(-6, 6, 100))


# LossKind names every trainable loss. Values are the strings used by the
# CLI and in result files.
class LossKind(str, Enum):
    DPO = "dpo"
    IPO = "ipo"
    FDPO_JS = "fdpo-js"
    QPO_CUSTOM = "qpo-custom"
    EXPO_COMP = "expo-comp"
    EXPO_REG = "expo-reg"
    BT_REWARD = "bt-reward"

    @classmethod
    def parse(cls, name: Union[str, "LossKind"]) -> "LossKind":
        """Accept enum members, values ("fdpo-js") and names ("FDPO_JS")."""
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("_", "-")
        for kind in cls:
            if kind.value == key:
                return kind
        raise ValidationError(f"unknown loss kind {name!r}")

    @property
    def is_qpo(self) -> bool:
        return self in (LossKind.DPO, LossKind.IPO, LossKind.FDPO_JS, LossKind.QPO_CUSTOM)

    @property
    def is_expo(self) -> bool:
        return self in (LossKind.EXPO_COMP, LossKind.EXPO_REG)


class RegressionTarget(str, Enum):
    """What stands in for the true preference in the regression loss target."""

    CONSTANT = "constant"
    ORACLE = "oracle"


PRESET_SHAPES = {
    LossKind.DPO: (LogisticPsi, LogMu),
    LossKind.IPO: (IPOPsi, LogMu),
    LossKind.FDPO_JS: (LogisticPsi, JensenShannonMu),
}


def check_mu(mu: Mu) -> None:
    """
    Require mu(1) finite and mu strictly increasing on 100 points spanning
    [1e-6, 1e6].

    Raises:
        DomainError: If mu is non-finite at 1 or on the grid
        ValidationError: If mu is not strictly increasing
    """
    # s = 0 is v = 1
    at_one = np.asarray(mu.value(np.zeros(1)))
    if not np.all(np.isfinite(at_one)):
        raise DomainError(f"mu {mu!r} is not finite at 1")
    values = np.asarray(mu.value(MU_GRID), dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise DomainError(f"mu {mu!r} is not finite on [1e-6, 1e6]")
    if not np.all(np.diff(values) > 0.0):
        raise ValidationError(f"mu {mu!r} must be strictly increasing")


# LossSpec is the value object every other module passes around. It is
# frozen and validated once, so a loss built from it can trust lam and the
# shape pair.
@dataclass(frozen=True)
class LossSpec:
    """
    A named loss with its parameters.

    Args:
        kind (LossKind): Which loss
        lam (float): Regularization strength; in [0, 1] for EXPO_REG, > 0 otherwise
        psi (Psi, optional): Shape for QPO kinds (set automatically for presets)
        mu (Mu, optional): Link for QPO kinds (set automatically for presets)
        target (RegressionTarget): EXPO_REG target form
    """

    kind: LossKind
    lam: float
    psi: Optional[Psi] = None
    mu: Optional[Mu] = None
    target: RegressionTarget = RegressionTarget.CONSTANT

    def __post_init__(self):
        kind = LossKind.parse(self.kind)
        object.__setattr__(self, "kind", kind)
        try:
            lam = float(self.lam)
        except (TypeError, ValueError):
            raise ValidationError(f"lambda must be a real number, got {self.lam!r}") from None
        object.__setattr__(self, "lam", lam)
        if not np.isfinite(lam):
            raise ValidationError(f"lambda must be finite, got {lam!r}")
        if kind is LossKind.EXPO_REG:
            if not 0.0 <= lam <= 1.0:
                raise ValidationError(f"{kind.value} lambda must lie in [0, 1], got {lam!r}")
        elif lam <= 0.0:
            raise ValidationError(f"{kind.value} lambda must be > 0, got {lam!r}")

        object.__setattr__(self, "target", RegressionTarget(self.target))

        # presets fix their own shape and link; passing one is ignored
        if kind in PRESET_SHAPES:
            psi_cls, mu_cls = PRESET_SHAPES[kind]
            object.__setattr__(self, "psi", psi_cls())
            object.__setattr__(self, "mu", mu_cls())
        elif kind is LossKind.QPO_CUSTOM:
            if self.psi is None or self.mu is None:
                raise ValidationError("qpo-custom needs both psi and mu")
            check_mu(self.mu)
        elif self.psi is not None or self.mu is not None:
            raise ValidationError(f"{kind.value} takes no psi/mu")

    @property
    def label(self) -> str:
        if self.kind is LossKind.QPO_CUSTOM:
            return f"qpo[{self.psi.name},{self.mu.name}]"
        if self.target is RegressionTarget.ORACLE:
            return f"{self.kind.value}-oracle"
        return self.kind.value

    def to_dict(self) -> dict:
        doc = {"kind": self.kind.value, "lambda": self.lam}
        if self.kind is LossKind.QPO_CUSTOM:
            doc["psi"] = self.psi.name
            doc["mu"] = self.mu.name
        if self.target is not RegressionTarget.CONSTANT:
            doc["target"] = self.target.value
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "LossSpec":
        """
        Rebuild a spec from its JSON document.

        qpo-custom documents are accepted only when psi and mu name entries of
        the shape catalogue.
        """
        try:
            kind = LossKind.parse(doc["kind"])
            lam = doc["lambda"]
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed loss spec: {exc}") from exc
        if kind is LossKind.QPO_CUSTOM:
            from .catalog import lookup_mu, lookup_psi

            return cls(kind, lam, psi=lookup_psi(doc.get("psi")), mu=lookup_mu(doc.get("mu")))
        return cls(kind, lam, target=doc.get("target", RegressionTarget.CONSTANT))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "LossSpec":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"loss spec is not valid JSON: {exc}") from exc


def make_loss_spec(
    kind: Union[str, LossKind],
    lam: float,
    psi: Optional[Psi] = None,
    mu: Optional[Mu] = None,
    target: Union[str, RegressionTarget] = RegressionTarget.CONSTANT,
) -> LossSpec:
    """
    Build a validated LossSpec.

    Presets fill in their shape: DPO uses psi = -log sigma(lam u) with mu = log,
    IPO uses psi = (u - 1/(2 lam))^2 with mu = log, FDPO_JS uses the logistic
    psi with mu(v) = log(2v / (1 + v)). EXPO kinds and BT_REWARD carry only lam.

    Raises:
        ValidationError: If lam is out of range for the kind, or psi/mu are
            missing (QPO_CUSTOM) or not increasing
    """
    try:
        target = RegressionTarget(target)
    except ValueError:
        raise ValidationError(f"unknown regression target {target!r}") from None
    return LossSpec(LossKind.parse(kind), lam, psi=psi, mu=mu, target=target)
