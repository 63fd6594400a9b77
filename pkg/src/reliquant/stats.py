"""Zero-failure ("balls and urn") reliability statistics.

Assumptions of use: demands are independent draws from a fixed operational
distribution, each demand has a deterministic pass/fail verdict, and no
failure was observed. Per-hour figures assume a constant failure rate
(exponential time to failure).

All formulas go through ``log1p``/``expm1`` so that probabilities far below
machine epsilon (where ``1 - p == 1.0``) still give correct answers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import ValidationError


class Basis(str, Enum):
    PER_DEMAND = "per_demand"
    PER_HOUR = "per_hour"


def _open_unit(name, x):
    x = float(x)
    if not 0.0 < x < 1.0:
        raise ValidationError(f"{name} must lie strictly inside (0, 1), got {x!r}")
    return x


def _positive(name, x):
    x = float(x)
    if not (x > 0.0 and math.isfinite(x)):
        raise ValidationError(f"{name} must be a positive finite number, got {x!r}")
    return x


@dataclass(frozen=True)
class ReliabilityTarget:
    """A bound (pfd or failure rate per hour) to be shown at a confidence level."""

    bound: float
    confidence: float
    basis: Basis = Basis.PER_DEMAND

    def __post_init__(self):
        object.__setattr__(self, "basis", Basis(self.basis))
        if self.basis is Basis.PER_DEMAND:
            _open_unit("pfd", self.bound)
        else:
            _positive("rate", self.bound)
        _open_unit("confidence", self.confidence)


@dataclass(frozen=True)
class TestRequirement:
    """Failure-free evidence needed for a target: a demand count or a duration in hours."""

    __test__ = False  # not a pytest class

    basis: Basis
    count: int | None = None
    hours: float | None = None

    def __post_init__(self):
        if self.basis is Basis.PER_DEMAND:
            if self.count is None or self.count < 1:
                raise ValidationError("count must be >= 1")
        elif self.hours is None or not self.hours > 0:
            raise ValidationError("duration must be > 0")


@dataclass(frozen=True)
class DemonstratedClaim:
    bound: float
    confidence: float
    basis: Basis
    tests: int | None = None
    hours: float | None = None
    failures: int = 0

    def __post_init__(self):
        if self.failures != 0:
            raise ValidationError("a reliability claim requires zero observed failures")


def required_test_count(pfd: float, confidence: float) -> int:
    """Smallest N with (1 - pfd)**N <= 1 - confidence."""
    p = _open_unit("pfd", pfd)
    c = _open_unit("confidence", confidence)
    log_survive = math.log1p(-p)
    log_target = math.log1p(-c)
    n = max(1, math.ceil(log_target / log_survive))
    # the quotient can land one ulp on the wrong side of an integer
    while n > 1 and (n - 1) * log_survive <= log_target:
        n -= 1
    while n * log_survive > log_target:
        n += 1
    return n


def achieved_confidence(pfd: float, tests: int) -> float:
    """Confidence that the pfd is below ``pfd`` after ``tests`` failure-free demands."""
    p = _open_unit("pfd", pfd)
    if tests < 0:
        raise ValidationError(f"tests must be nonnegative, got {tests}")
    if tests == 0:
        return 0.0
    return -math.expm1(tests * math.log1p(-p))


def demonstrated_pfd(tests: int, confidence: float) -> float:
    """Tightest pfd claimable at ``confidence`` after ``tests`` failure-free demands."""
    if int(tests) != tests or tests < 1:
        raise ValidationError(f"tests must be a positive integer, got {tests!r}")
    c = _open_unit("confidence", confidence)
    return -math.expm1(math.log1p(-c) / tests)


def required_test_hours(rate: float, confidence: float) -> float:
    """Failure-free hours needed to show a failure rate of ``rate`` per hour."""
    lam = _positive("rate", rate)
    c = _open_unit("confidence", confidence)
    return -math.log1p(-c) / lam


def demonstrated_failure_rate(hours: float, confidence: float) -> float:
    t = _positive("hours", hours)
    c = _open_unit("confidence", confidence)
    return -math.log1p(-c) / t


def plan(target: ReliabilityTarget) -> TestRequirement:
    if target.basis is Basis.PER_DEMAND:
        return TestRequirement(Basis.PER_DEMAND, count=required_test_count(target.bound, target.confidence))
    return TestRequirement(Basis.PER_HOUR, hours=required_test_hours(target.bound, target.confidence))


def format_sig(x: float, digits: int = 3) -> str:
    """Render ``x`` to ``digits`` significant figures in compact scientific form, e.g. ``4.61e6``."""
    if x == 0:
        return "0"
    mantissa, exponent = f"{x:.{digits - 1}e}".split("e")
    return f"{mantissa}e{int(exponent)}"


_SCALE_WORDS = ((1e12, "trillion"), (1e9, "billion"), (1e6, "million"), (1e3, "thousand"))


def format_words(x: float, digits: int = 3) -> str:
    """Render ``x`` as e.g. ``4.61 million`` (``digits`` significant figures)."""
    rounded = float(f"{x:.{digits - 1}e}")
    for scale, word in _SCALE_WORDS:
        if abs(rounded) >= scale:
            return f"{rounded / scale:.{_decimals(rounded / scale, digits)}f} {word}"
    return f"{rounded:.{_decimals(rounded, digits)}f}"


def _decimals(x, digits):
    if x == 0:
        return digits - 1
    return max(0, digits - 1 - math.floor(math.log10(abs(x))))
