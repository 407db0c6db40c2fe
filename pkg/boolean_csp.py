"""
boolean_csp.py
Boolean Max-c-CSP instances given by truth-table predicates, their exact
Fourier expansions, the reductions to and from Max-c-Lin-2, the Above-Average
solver and kernel, and the hybrid approximate-or-exact algorithm.

The decision question is: does some assignment reach weight >= rho*W + k/2^c?
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import ceil
from typing import Dict, Iterable, Sequence, Tuple, Union

import lin2_core
import metrics
from lin2_core import Lin2Equation, Lin2System
from models import (
    Approx, Assignment, BRANCH_APPROX, BRANCH_EXACT, Exact, InstanceError, No,
    ResourceGuardError, Verdict, Yes, YesCertificate,
)
from polynomial import MultilinearPolynomial

logger = logging.getLogger(__name__)

MAX_PREDICATE_ARITY = 16


@dataclass(frozen=True)
class Predicate:
    """
    Truth table over `arity` inputs. Entry b is the value at the point whose
    i-th input is True (-1) exactly when bit i of b is set.
    """
    name: str
    arity: int
    table: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "table", tuple(self.table))
        if not 1 <= self.arity <= MAX_PREDICATE_ARITY:
            raise InstanceError(f"predicate {self.name}: arity {self.arity} outside 1..{MAX_PREDICATE_ARITY}")
        if len(self.table) != 1 << self.arity:
            raise InstanceError(
                f"predicate {self.name}: truth table has {len(self.table)} entries, expected {1 << self.arity}"
            )
        if any(bit not in (0, 1) for bit in self.table):
            raise InstanceError(f"predicate {self.name}: truth table entries must be 0 or 1")

    @classmethod
    def from_bits(cls, name: str, arity: int, bits: str) -> "Predicate":
        if set(bits) - {"0", "1"}:
            raise InstanceError(f"predicate {name}: truth table {bits!r} is not a bit string")
        return cls(name, arity, tuple(int(ch) for ch in bits))

    @property
    def ones(self) -> int:
        return sum(self.table)

    def value(self, inputs: Sequence[int]) -> int:
        index = 0
        for i, bit in enumerate(inputs):
            index |= bit << i
        return self.table[index]


@dataclass(frozen=True)
class BooleanConstraint:
    predicate: Predicate
    scope: Tuple[int, ...]
    weight: int

    def __post_init__(self):
        object.__setattr__(self, "scope", tuple(self.scope))
        if len(self.scope) != self.predicate.arity:
            raise InstanceError(
                f"predicate {self.predicate.name} has arity {self.predicate.arity}, scope has {len(self.scope)} variables"
            )
        if len(set(self.scope)) != len(self.scope):
            raise InstanceError(f"repeated variable in scope {self.scope}")
        if self.weight < 1:
            raise InstanceError(f"weight must be positive, got {self.weight}")

    def satisfied_by(self, bits: Sequence[int]) -> bool:
        return bool(self.predicate.value([bits[v] for v in self.scope]))


@dataclass(frozen=True)
class BooleanCspInstance:
    num_vars: int
    arity_bound: int
    constraints: Tuple[BooleanConstraint, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if self.arity_bound < 1:
            raise InstanceError(f"arity bound must be positive, got {self.arity_bound}")
        for con in self.constraints:
            if con.predicate.arity > self.arity_bound:
                raise InstanceError(
                    f"predicate {con.predicate.name} has arity {con.predicate.arity} above bound {self.arity_bound}"
                )
            if min(con.scope) < 0 or max(con.scope) >= self.num_vars:
                raise InstanceError(f"scope {con.scope} out of range for {self.num_vars} variables")

    @property
    def total_weight(self) -> int:
        return sum(con.weight for con in self.constraints)

    def predicates(self) -> Dict[str, Predicate]:
        """Distinct predicates by name, in order of first use."""
        out: Dict[str, Predicate] = {}
        for con in self.constraints:
            known = out.setdefault(con.predicate.name, con.predicate)
            if known != con.predicate:
                raise InstanceError(f"two different predicates named {con.predicate.name}")
        return out


@dataclass(frozen=True)
class CspKernel:
    instance: BooleanCspInstance
    k: int
    # variables[new index] = original index
    variables: Tuple[int, ...]


@lru_cache(maxsize=1024)
def _expansion(table: Tuple[int, ...], arity: int) -> MultilinearPolynomial:
    return MultilinearPolynomial.from_table(list(table), arity, base=1)


def fourier_expand(p: Predicate) -> MultilinearPolynomial:
    """Exact Fourier expansion over 1-based local inputs 1..arity."""
    if p.arity > MAX_PREDICATE_ARITY:
        raise ValueError(f"predicate {p.name}: arity {p.arity} is above {MAX_PREDICATE_ARITY}")
    # copy: the cached polynomial must not be mutated by callers
    return MultilinearPolynomial().add_scaled(_expansion(p.table, p.arity))


def average_weight(inst: BooleanCspInstance) -> Fraction:
    """rho * W: expected weight of a uniformly random assignment."""
    return sum(
        (Fraction(con.weight * con.predicate.ones, 1 << con.predicate.arity) for con in inst.constraints),
        Fraction(0),
    )


def eval_weight(inst: BooleanCspInstance, a: Sequence[int]) -> int:
    if len(a) != inst.num_vars:
        raise ValueError(f"assignment has {len(a)} bits, instance has {inst.num_vars} variables")
    return sum(con.weight for con in inst.constraints if con.satisfied_by(a))


def residual_polynomial(inst: BooleanCspInstance) -> MultilinearPolynomial:
    """r(x) = sum_i w_i * (f_i - constant) on 0-based global variables; r(x) = weight - rho*W."""
    r = MultilinearPolynomial()
    for con in inst.constraints:
        q = fourier_expand(con.predicate).without_constant()
        r.add_scaled(q.renamed({i + 1: v for i, v in enumerate(con.scope)}), con.weight)
    return r


def csp_to_lin2(inst: BooleanCspInstance) -> Lin2System:
    """
    One equation per monomial of r(x) scaled by 2^c, so that for every
    assignment 2^c * (weight - rho*W) = 2 * satisfied - W_lin.
    """
    c = inst.arity_bound
    equations = []
    for mono, coef in residual_polynomial(inst).dyadic_items():
        if coef.log2_denominator > c:
            raise ArithmeticError(f"coefficient {coef} of {mono} is not a multiple of 1/{1 << c}")
        weight = coef.numerator << (c - coef.log2_denominator)
        if weight > 0:
            equations.append(Lin2Equation(mono, 0, weight))
        else:
            equations.append(Lin2Equation(mono, 1, -weight))
    logger.debug("csp with %d constraints became %d equations", len(inst.constraints), len(equations))
    return Lin2System(inst.num_vars, max(2, inst.arity_bound), tuple(equations))


def _check_k(k: int):
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")


def solve_csp_aa(inst: BooleanCspInstance, k: int, guard=None, workers=None) -> Verdict:
    """Decide whether some assignment has weight >= rho*W + k/2^c; weights in CSP units."""
    _check_k(k)
    verdict = lin2_core.solve_aa(csp_to_lin2(inst), k, guard=guard, workers=workers)
    # bit 1 means True (-1) on both sides, so witnesses carry over unchanged
    weight = eval_weight(inst, verdict.witness)
    metrics.record_branch("csp", verdict.branch)
    if isinstance(verdict, Yes):
        return Yes(verdict.witness, weight, verdict.branch)
    return No(weight, verdict.witness, verdict.branch)


def hybrid_k(inst: BooleanCspInstance, eps) -> int:
    eps = Fraction(eps)
    if not 0 < eps <= 1:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    return max(1, ceil(eps * inst.total_weight))


def hybrid_solve(inst: BooleanCspInstance, eps, guard=None, workers=None) -> Union[Exact, Approx]:
    """
    Either an assignment of weight >= rho*W + eps*W/2^(c+1) found in polynomial
    time, or an optimum found by exhaustive search over a kernel with fewer
    than c(c+1)*eps*W/2 variables.
    """
    k = hybrid_k(inst, eps)
    reduced = lin2_core.reduce_system(csp_to_lin2(inst))
    collections = lin2_core.build_collections(reduced)
    j = collections.heaviest_layer(k)
    if j is not None:
        witness = lin2_core.assignment_above_average(reduced, collections, j)
        logger.info("hybrid: layer %d has weight %d >= k=%d, approximate branch", j, collections.layer_weights[j], k)
        metrics.record_branch("hybrid", BRANCH_APPROX)
        return Approx(witness, eval_weight(inst, witness))

    metrics.observe_kernel("hybrid", len(reduced.occurring_variables()))
    try:
        witness, _ = lin2_core.exhaustive_solve(reduced, guard=guard, workers=workers)
    except ResourceGuardError as exc:
        raise ResourceGuardError("hybrid exact branch", exc.count, exc.guard, "raise eps or the guard") from exc
    logger.info("hybrid: all layers below k=%d, solved exactly", k)
    metrics.record_branch("hybrid", BRANCH_EXACT)
    return Exact(witness, eval_weight(inst, witness))


@lru_cache(maxsize=None)
def _clause(arity: int, forbidden: int) -> Predicate:
    table = [1] * (1 << arity)
    table[forbidden] = 0
    return Predicate(f"clause{arity}_{forbidden}", arity, tuple(table))


def lin2_to_csp(system: Lin2System) -> Tuple[BooleanCspInstance, int]:
    """
    Each equation on s variables becomes the 2^(s-1) clauses that each forbid
    one violating assignment, all with the equation's weight. Per assignment,
    CSP weight - average = satisfied - W/2. Returns the instance and the factor
    2^(c-1) that turns a Lin2 parameter into the CSP parameter.
    """
    constraints = []
    for eq in system.equations:
        s = len(eq.variables)
        for point in range(1 << s):
            if (point.bit_count() & 1) != eq.rhs:
                constraints.append(BooleanConstraint(_clause(s, point), eq.variables, eq.weight))
    c = system.arity_bound
    return BooleanCspInstance(system.num_vars, c, tuple(constraints)), 1 << (c - 1)


def kernelize_csp(inst: BooleanCspInstance, k: int) -> Union[YesCertificate, CspKernel]:
    _check_k(k)
    result = lin2_core.kernelize(csp_to_lin2(inst), k)
    if isinstance(result, YesCertificate):
        return result
    kernel_inst, scale = lin2_to_csp(result.system)
    logger.info("csp kernel: %d variables, %d clauses, k=%d",
                kernel_inst.num_vars, len(kernel_inst.constraints), scale * k)
    return CspKernel(kernel_inst, scale * k, result.variables)


def lift_assignment(bits: Sequence[int], variables: Iterable[int], num_vars: int) -> Assignment:
    """Map an assignment of kernel variables back to the original variable range (others 0)."""
    out = [0] * num_vars
    for new, old in enumerate(variables):
        out[old] = bits[new]
    return tuple(out)

