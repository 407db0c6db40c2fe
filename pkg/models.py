"""
models.py
Shared result types, exceptions, constants and exact-rational helpers.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple, Union

# A boolean assignment: one bit per variable, 1 meaning True (-1 under l(x) = 1 - 2x).
Assignment = Tuple[int, ...]
# A linear ordering: variable indices listed from first to last position.
Ordering = Tuple[int, ...]

BRANCH_CERTIFICATE = "yes-certificate"
BRANCH_KERNEL = "kernel+exhaustive"
BRANCH_APPROX = "approx"
BRANCH_EXACT = "exact"
BRANCH_HELD_KARP = "held-karp"

# 3! * 2^(3t) at t = 2: makes every ordering payoff coefficient integral.
ORDERING_SCALE = 384


class InstanceError(ValueError):
    """Malformed instance or instance file."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ResourceGuardError(RuntimeError):
    """An exhaustive search would exceed its configured variable ceiling."""

    def __init__(self, what: str, count: int, guard: int, advice: str = "raise the guard"):
        self.count = count
        self.guard = guard
        super().__init__(f"{what}: {count} variables exceed guard {guard} ({advice})")


class KernelBoundError(RuntimeError):
    """A kernel came out larger than its proven size bound; a solver bug, not bad input."""

    def __init__(self, what: str, count: int, bound: int):
        self.count = count
        self.bound = bound
        super().__init__(f"{what}: {count} variables exceed proven bound {bound}")


@dataclass(frozen=True)
class Yes:
    witness: Tuple[int, ...]
    achieved_weight: int
    branch: str = BRANCH_CERTIFICATE

    @property
    def kind(self) -> str:
        return "yes"


@dataclass(frozen=True)
class No:
    optimum_weight: int
    witness: Tuple[int, ...]
    branch: str = BRANCH_KERNEL

    @property
    def kind(self) -> str:
        return "no"


Verdict = Union[Yes, No]


@dataclass(frozen=True)
class YesCertificate:
    assignment: Assignment


@dataclass(frozen=True)
class Exact:
    assignment: Assignment
    weight: int


@dataclass(frozen=True)
class Approx:
    assignment: Assignment
    weight: int


def fraction_str(value) -> str:
    """Render an exact rational as num/den in lowest terms (den always printed)."""
    f = Fraction(value)
    return f"{f.numerator}/{f.denominator}"


def parse_fraction(text: str) -> Fraction:
    """Parse NUM/DEN or an integer into an exact rational."""
    try:
        if "/" in text:
            num, den = text.split("/", 1)
            return Fraction(int(num), int(den))
        return Fraction(int(text))
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"not an exact rational: {text!r}")
