"""Decay profiles and the three-way limit verdict.

A profile samples phi(r) as r -> 0 (local Kato profiles) or T(R) as R -> infinity
(tail, B0 and resolvent-ladder profiles). Numerics cannot certify a limit, so every
profile carries an IN / OUT / INCONCLUSIVE verdict from one transparent rule.
"""

import logging
import math
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

logger = logging.getLogger(__name__)


class Verdict(str, Enum):
    IN = "IN"
    OUT = "OUT"
    INCONCLUSIVE = "INCONCLUSIVE"


class Status(str, Enum):
    """Outcome of a single numerical evaluation."""
    OK = "ok"
    INFINITE = "infinite"
    INCONCLUSIVE = "inconclusive"
    SKIPPED = "skipped"


class Approach(str, Enum):
    ZERO = "zero"
    INFINITY = "infinity"


def _coerce_float(value):
    if isinstance(value, str):
        return float(value)
    return value


class DecayProfile(BaseModel):
    """Sampled function with a fitted decay exponent and a limit-to-zero verdict."""
    abscissae: List[float] = Field(..., description="Strictly increasing positive abscissae")
    values: List[float] = Field(..., description="Nonnegative values, +inf allowed")
    approach: Approach = Field(Approach.ZERO, description="Which end of the abscissae the limit is taken at")
    fitted_exponent: Optional[float] = Field(None, description="Power slope (or exponential rate) near the limit")
    fit_kind: Optional[str] = Field(None, description="'power' or 'exponential'")
    fit_confidence: Optional[float] = Field(None, description="Coefficient of determination of the fit")
    verdict: Verdict = Field(Verdict.INCONCLUSIVE, description="Limit-to-zero verdict")
    label: str = Field("", description="What was profiled")
    notes: List[str] = Field(default_factory=list, description="Low-confidence flags and remarks")

    @field_validator("abscissae", "values", mode="before")
    @classmethod
    def _parse_infinities(cls, v):
        return [_coerce_float(x) for x in v]

    @field_validator("fitted_exponent", "fit_confidence", mode="before")
    @classmethod
    def _parse_optional(cls, v):
        return _coerce_float(v)

    @model_validator(mode="after")
    def _check_shape(self) -> "DecayProfile":
        if len(self.abscissae) != len(self.values):
            raise ValueError("abscissae and values must have equal length")
        if any(b <= a for a, b in zip(self.abscissae, self.abscissae[1:])):
            raise ValueError("abscissae must be strictly increasing")
        if any(v < 0 or math.isnan(v) for v in self.values):
            raise ValueError("profile values must be nonnegative")
        return self

    def toward_limit(self) -> List[Tuple[float, float]]:
        """(abscissa, value) pairs ordered from far to near the limit."""
        pairs = list(zip(self.abscissae, self.values))
        return pairs[::-1] if self.approach == Approach.ZERO else pairs

    @classmethod
    def build(
        cls,
        abscissae: Sequence[float],
        values: Sequence[float],
        approach: Approach = Approach.ZERO,
        label: str = "",
        abs_factor: float = 1e-3,
        plateau_rel: float = 0.10,
        notes: Optional[List[str]] = None,
    ) -> "DecayProfile":
        """Sort, fit and judge a raw profile."""
        order = np.argsort(np.asarray(abscissae, dtype=float))
        xs = [float(abscissae[i]) for i in order]
        vs = [float(values[i]) for i in order]
        profile = cls(abscissae=xs, values=vs, approach=approach, label=label, notes=list(notes or []))
        profile.fitted_exponent, profile.fit_kind, profile.fit_confidence = fit_decay(
            xs, vs, approach
        )
        profile.verdict = decide_verdict(profile, abs_factor=abs_factor, plateau_rel=plateau_rel)
        if profile.verdict == Verdict.INCONCLUSIVE:
            logger.debug(f"Profile '{label}' is inconclusive: {vs}")
        return profile


def fit_decay(
    abscissae: Sequence[float], values: Sequence[float], approach: Approach, window: int = 5
) -> Tuple[Optional[float], Optional[str], Optional[float]]:
    """Least-squares fit of log(value) against log(x), and against x toward infinity.

    Returns (exponent, kind, r2). For kind 'exponential' the exponent is the decay rate.
    """
    pairs = list(zip(abscissae, values))
    if approach == Approach.ZERO:
        pairs = pairs[::-1]
    usable = [(x, v) for x, v in pairs if 0 < v < math.inf and x > 0][-window:]
    if len(usable) < 2:
        return None, None, None
    x = np.array([p[0] for p in usable])
    y = np.log(np.array([p[1] for p in usable]))

    def _fit(t):
        slope, intercept = np.polyfit(t, y, 1)
        residual = y - (slope * t + intercept)
        total = np.sum((y - y.mean()) ** 2)
        r2 = 1.0 - float(np.sum(residual ** 2) / total) if total > 0 else 1.0
        return float(slope), r2

    power_slope, power_r2 = _fit(np.log(x))
    if approach == Approach.INFINITY:
        exp_slope, exp_r2 = _fit(x)
        if exp_r2 > power_r2 + 1e-6 and exp_slope < 0:
            return -exp_slope, "exponential", exp_r2
    return power_slope, "power", power_r2


def decide_verdict(profile: DecayProfile, abs_factor: float = 1e-3, plateau_rel: float = 0.10) -> Verdict:
    """IN when the last three values fall by a cumulative factor 2 and end below
    abs_factor times the first finite value; OUT on a plateau (within plateau_rel),
    on growth, or when the limit end is infinite; INCONCLUSIVE otherwise."""
    seq = [v for _, v in profile.toward_limit()]
    if not seq:
        return Verdict.INCONCLUSIVE
    if seq[-1] == 0.0:
        return Verdict.IN
    if math.isinf(seq[-1]):
        return Verdict.OUT
    if len(seq) < 3:
        return Verdict.INCONCLUSIVE

    finite = [v for v in seq if 0 < v < math.inf]
    reference = finite[0] if finite else seq[0]
    last3 = seq[-3:]
    if any(math.isinf(v) for v in last3):
        return Verdict.INCONCLUSIVE

    decreasing = last3[-1] <= 0.5 * last3[0]
    small = last3[-1] < abs_factor * reference
    if decreasing and small:
        return Verdict.IN

    low, high = min(last3), max(last3)
    if low > 0 and high <= (1.0 + plateau_rel) * low:
        return Verdict.OUT
    if last3[0] <= last3[1] <= last3[2]:
        return Verdict.OUT
    return Verdict.INCONCLUSIVE
