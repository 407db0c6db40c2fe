"""
polynomial.py
Exact multilinear polynomials over +-1 variables, dyadic rationals and the
Walsh-Hadamard transform used to compute Fourier expansions from truth tables.

Convention: a point is indexed by an integer b whose bit i is set when input
i is -1 (True); the character of subset S at b is (-1)^popcount(b & S).
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Tuple

from models import fraction_str

Monomial = Tuple[int, ...]


@dataclass(frozen=True)
class DyadicRational:
    """numerator / 2^log2_denominator, normalized (odd numerator, or 0/2^0)."""
    numerator: int
    log2_denominator: int = 0

    def __post_init__(self):
        if self.log2_denominator < 0:
            raise ValueError(f"negative log2_denominator {self.log2_denominator}")
        if self.numerator == 0 and self.log2_denominator != 0:
            raise ValueError("zero must have log2_denominator 0")
        if self.log2_denominator > 0 and self.numerator % 2 == 0:
            raise ValueError(f"not normalized: {self.numerator}/2^{self.log2_denominator}")

    @classmethod
    def from_fraction(cls, value) -> "DyadicRational":
        f = Fraction(value)
        den = f.denominator
        if den & (den - 1):
            raise ValueError(f"{fraction_str(f)} is not dyadic")
        return cls(f.numerator, den.bit_length() - 1)

    def to_fraction(self) -> Fraction:
        return Fraction(self.numerator, 1 << self.log2_denominator)

    def __str__(self) -> str:
        return fraction_str(self.to_fraction())


def walsh_hadamard(values: List) -> List:
    """Unnormalized transform: out[S] = sum_b values[b] * (-1)^popcount(b & S)."""
    size = len(values)
    if size == 0 or size & (size - 1):
        raise ValueError(f"transform length {size} is not a power of two")
    out = list(values)
    h = 1
    while h < size:
        for start in range(0, size, 2 * h):
            for i in range(start, start + h):
                a, b = out[i], out[i + h]
                out[i], out[i + h] = a + b, a - b
        h *= 2
    return out


def _monomial(variables: Iterable[int]) -> Monomial:
    mono = tuple(sorted(variables))
    if len(set(mono)) != len(mono):
        raise ValueError(f"repeated variable in monomial {mono}")
    return mono


class MultilinearPolynomial:
    """Sparse map monomial -> exact coefficient; zero coefficients are never stored."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Optional[Mapping[Iterable[int], object]] = None):
        self._terms: Dict[Monomial, Fraction] = {}
        for mono, coef in (terms or {}).items():
            self._accumulate(_monomial(mono), Fraction(coef))

    @classmethod
    def from_table(cls, values: List, num_inputs: int, base: int = 1) -> "MultilinearPolynomial":
        """Fourier expansion of a function given by its values on all 2^num_inputs points."""
        if len(values) != 1 << num_inputs:
            raise ValueError(f"expected {1 << num_inputs} values, got {len(values)}")
        scale = Fraction(1, 1 << num_inputs)
        poly = cls()
        for mask, total in enumerate(walsh_hadamard([Fraction(v) for v in values])):
            if total:
                mono = tuple(i + base for i in range(num_inputs) if (mask >> i) & 1)
                poly._terms[mono] = total * scale
        return poly

    def _accumulate(self, mono: Monomial, coef: Fraction):
        value = self._terms.get(mono, 0) + coef
        if value:
            self._terms[mono] = value
        else:
            self._terms.pop(mono, None)

    def items(self) -> Iterator[Tuple[Monomial, Fraction]]:
        return iter(sorted(self._terms.items(), key=lambda kv: (len(kv[0]), kv[0])))

    def dyadic_items(self) -> Iterator[Tuple[Monomial, DyadicRational]]:
        """items() with dyadic coefficients; ValueError on the first non-dyadic one."""
        for mono, coef in self.items():
            yield mono, DyadicRational.from_fraction(coef)

    @property
    def terms(self) -> Dict[Monomial, Fraction]:
        return dict(self._terms)

    def coefficient(self, variables: Iterable[int]) -> Fraction:
        return self._terms.get(_monomial(variables), Fraction(0))

    @property
    def constant(self) -> Fraction:
        return self._terms.get((), Fraction(0))

    @property
    def degree(self) -> int:
        return max((len(m) for m in self._terms), default=0)

    def variables(self) -> List[int]:
        return sorted({v for mono in self._terms for v in mono})

    def is_constant(self) -> bool:
        return all(not mono for mono in self._terms)

    def evaluate(self, point: Mapping[int, int]) -> Fraction:
        """Value at a +-1 point given as variable -> +1/-1."""
        total = Fraction(0)
        for mono, coef in self._terms.items():
            sign = 1
            for v in mono:
                sign *= point[v]
            total += coef * sign
        return total

    def without_constant(self) -> "MultilinearPolynomial":
        out = MultilinearPolynomial()
        out._terms = {m: c for m, c in self._terms.items() if m}
        return out

    def renamed(self, mapping: Mapping[int, int]) -> "MultilinearPolynomial":
        """Substitute variable indices through an injective mapping."""
        out = MultilinearPolynomial()
        for mono, coef in self._terms.items():
            out._accumulate(_monomial(mapping[v] for v in mono), coef)
        return out

    def add_scaled(self, other: "MultilinearPolynomial", scale=1) -> "MultilinearPolynomial":
        """In-place self += scale * other; returns self for chaining."""
        scale = Fraction(scale)
        for mono, coef in other._terms.items():
            self._accumulate(mono, coef * scale)
        return self

    def __add__(self, other: "MultilinearPolynomial") -> "MultilinearPolynomial":
        out = MultilinearPolynomial()
        out._terms = dict(self._terms)
        return out.add_scaled(other)

    def __mul__(self, scale) -> "MultilinearPolynomial":
        return MultilinearPolynomial().add_scaled(self, scale)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultilinearPolynomial):
            return NotImplemented
        return self._terms == other._terms

    def __len__(self) -> int:
        return len(self._terms)

    def __repr__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for mono, coef in self.items():
            name = "*".join(f"x{v}" for v in mono)
            parts.append(fraction_str(coef) + (f"*{name}" if name else ""))
        return " + ".join(parts)
