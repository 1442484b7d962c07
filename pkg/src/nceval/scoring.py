"""Score transformation and Overall aggregation.

Lower-is-better distances (FID, Hausdorff, modified Hausdorff, ASD) are mapped
into (0, 1] with ``f1(x) = exp(-x / 200)`` and summed with the raw Dice and
mIoU values, giving an Overall score in [0, 6].
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, IncompleteMetrics, NegativeInput, UnknownCandidate, ValidationError

__all__ = [
    "f1",
    "f2",
    "f3",
    "f4",
    "CANDIDATES",
    "CRITERIA",
    "DesiderataResult",
    "check_desiderata",
    "RawMetricVector",
    "OverallScore",
    "aggregate_overall",
]

F4_LIMIT = 400.0
OPERATIVE_RANGE = (0.0, 400.0)
GRID_STEP = 0.5
UNIFORM_RATE_MAX_RATIO = 10.0


def _nonneg(x: float) -> float:
    x = float(x)
    if not x >= 0.0:  # also rejects NaN
        raise NegativeInput(f"transformation input must be >= 0, got {x}")
    return x


def f1(x: float) -> float:
    return math.exp(-_nonneg(x) / 200.0)


def f2(x: float) -> float:
    return 1.0 / (_nonneg(x) + 1.0)


def f3(x: float) -> float:
    return 1.0 / math.sqrt(_nonneg(x) + 1.0)


def f4(x: float) -> float:
    x = _nonneg(x)
    if x > F4_LIMIT:
        raise DomainError(f"f4 is only defined on [0, {F4_LIMIT:g}], got {x}")
    return -x / F4_LIMIT + 1.0


CANDIDATES: dict[str, Callable[[float], float]] = {"f1": f1, "f2": f2, "f3": f3, "f4": f4}

# Unchecked closed forms, smooth on x > -1; used only for derivative estimates
# so that central differences can straddle the ends of the grid.
_EXTENDED = {
    "f1": lambda x: np.exp(-x / 200.0),
    "f2": lambda x: 1.0 / (x + 1.0),
    "f3": lambda x: 1.0 / np.sqrt(x + 1.0),
    "f4": lambda x: -x / F4_LIMIT + 1.0,
}
DERIVATIVE_STEP = 1e-3

CRITERIA = (
    "domain",
    "codomain",
    "strictly_decreasing",
    "uniform_rate",
    "uniformly_continuous",
    "differentiable",
)

# Properties not checkable on a finite grid, certified per candidate:
# all four are elementary functions smooth on x > -1 with bounded derivative
# on [0, inf) (f4 on its closed interval), hence uniformly continuous and
# differentiable on their domain.
_ANALYTIC = {
    "f1": {"uniformly_continuous": True, "differentiable": True},
    "f2": {"uniformly_continuous": True, "differentiable": True},
    "f3": {"uniformly_continuous": True, "differentiable": True},
    "f4": {"uniformly_continuous": True, "differentiable": True},
}


@dataclass(frozen=True)
class DesiderataResult:
    candidate: str
    passed: dict[str, bool]
    analytic: tuple[str, ...]
    derivative_ratio: float
    detail: dict[str, str] = field(default_factory=dict)

    @property
    def all_passed(self) -> bool:
        return all(self.passed.values())


def check_desiderata(candidate: str) -> DesiderataResult:
    """Evaluate the six selection criteria for a candidate transformation.

    Criteria (i)-(iv) are checked numerically on ``[0, 400]`` with step 0.5.
    The uniform-rate test estimates ``|f'|`` by central differences (step
    1e-3) at every grid point and requires ``max|f'| / min|f'| <= 10``.
    Criteria (v) and (vi) are certified analytically and listed in
    ``analytic``.
    """
    if candidate not in CANDIDATES:
        raise UnknownCandidate(f"unknown candidate {candidate!r}; expected one of {sorted(CANDIDATES)}")
    f = CANDIDATES[candidate]
    lo, hi = OPERATIVE_RANGE
    grid = np.arange(lo, hi + GRID_STEP / 2, GRID_STEP)
    detail: dict[str, str] = {}

    try:
        values = np.array([f(float(x)) for x in grid])
        domain_ok = bool(np.isfinite(values).all())
    except (NegativeInput, DomainError, ValueError) as exc:
        values = None
        domain_ok = False
        detail["domain"] = str(exc)

    if values is None:
        passed = dict.fromkeys(CRITERIA[:4], False)
        ratio = math.inf
    else:
        codomain_ok = bool(((values >= 0.0) & (values <= 1.0)).all())
        steps = np.diff(values)
        decreasing_ok = bool((steps < 0).all())
        g = _EXTENDED[candidate]
        h = DERIVATIVE_STEP
        slopes = np.abs(g(grid + h) - g(grid - h)) / (2 * h)
        ratio = float(slopes.max() / slopes.min()) if slopes.min() > 0 else math.inf
        uniform_ok = ratio <= UNIFORM_RATE_MAX_RATIO
        detail["uniform_rate"] = f"max|f'|/min|f'| = {ratio:.6g} (threshold {UNIFORM_RATE_MAX_RATIO:g})"
        passed = {
            "domain": domain_ok,
            "codomain": codomain_ok,
            "strictly_decreasing": decreasing_ok,
            "uniform_rate": uniform_ok,
        }
    passed.update(_ANALYTIC[candidate])
    return DesiderataResult(
        candidate=candidate,
        passed={k: passed[k] for k in CRITERIA},
        analytic=("uniformly_continuous", "differentiable"),
        derivative_ratio=ratio,
        detail=detail,
    )


@dataclass(frozen=True)
class RawMetricVector:
    """The six dataset-level metrics. Any field may be ``None`` when not measured."""

    cn: float | None = None
    sr: float | None = None
    la: float | None = None
    bdp: float | None = None
    mc: float | None = None
    ads: float | None = None

    FIELDS = ("cn", "sr", "la", "bdp", "mc", "ads")

    def __post_init__(self):
        for name in self.FIELDS:
            v = getattr(self, name)
            if v is None:
                continue
            v = float(v)
            object.__setattr__(self, name, v)
            if not math.isfinite(v):
                raise ValidationError(f"{name} must be finite, got {v}")
            if name in ("sr", "la"):
                if not 0.0 <= v <= 1.0:
                    raise ValidationError(f"{name} must lie in [0, 1], got {v}")
            elif v < 0.0:
                raise NegativeInput(f"{name} must be >= 0, got {v}")

    @property
    def complete(self) -> bool:
        return all(getattr(self, k) is not None for k in self.FIELDS)

    def missing(self) -> list[str]:
        return [k for k in self.FIELDS if getattr(self, k) is None]

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.FIELDS}


@dataclass(frozen=True)
class OverallScore:
    transformed: dict[str, float]
    retained: dict[str, float]
    overall: float

    def to_dict(self) -> dict:
        return asdict(self)


def aggregate_overall(v: RawMetricVector) -> OverallScore:
    """Sum of f1-transformed CN, BDP, MC, ADS plus raw SR and LA, in that order."""
    if not v.complete:
        raise IncompleteMetrics(f"cannot aggregate; missing {', '.join(v.missing())}")
    transformed = {
        "cn": f1(v.cn),
        "bdp": f1(v.bdp),
        "mc": f1(v.mc),
        "ads": f1(v.ads),
    }
    retained = {"sr": v.sr, "la": v.la}
    total = 0.0
    for value in (transformed["cn"], transformed["bdp"], transformed["mc"], transformed["ads"], v.sr, v.la):
        total += value
    return OverallScore(transformed, retained, total)
