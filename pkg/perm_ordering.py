"""
perm_ordering.py
Permutation CSPs of arity 2 and 3 and the linear-ordering instances they
normalize to: reduction rules, bucket (t-ordering) payoff polynomials, the
Max-6-Lin-2 system F(C), witness recovery and the Above-Average solver.

An ordering is a tuple of variables from first to last. Orderings are
compared against rho*W + k where rho*W = sum of w(e)/|e|!.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import permutations
from math import factorial
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import config
import exact_search
import lin2_core
import metrics
from lin2_core import Lin2Equation, Lin2System
from models import (
    Assignment, BRANCH_CERTIFICATE, BRANCH_HELD_KARP, InstanceError, KernelBoundError, No,
    ORDERING_SCALE, Ordering, Verdict, Yes,
)
from polynomial import MultilinearPolynomial

logger = logging.getLogger(__name__)

# components per bucket vector in the solving pipeline (4 buckets)
PIPELINE_T = 2
MAX_PAYOFF_INPUTS = 12
# Max-6-Lin-2 collection bound c(c+1)/2 with c = 6, and the tighter claimed constants
KERNEL_FACTORS = {"hard21": 21, "soft15": 15, "soft10": 10}


@dataclass(frozen=True)
class PermPredicate:
    """Satisfying patterns as 1-based rank tuples: (1, 3, 2) means v1 < v3 < v2."""
    name: str
    arity: int
    perms: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        perms = tuple(tuple(p) for p in self.perms)
        object.__setattr__(self, "perms", perms)
        if self.arity not in (2, 3):
            raise InstanceError(f"permutation predicate {self.name}: arity {self.arity} unsupported (2 or 3)")
        if not perms:
            raise InstanceError(f"permutation predicate {self.name} has no satisfying permutation")
        ident = tuple(range(1, self.arity + 1))
        for p in perms:
            if tuple(sorted(p)) != ident:
                raise InstanceError(f"permutation predicate {self.name}: {p} is not a permutation of {ident}")
        if len(set(perms)) != len(perms):
            raise InstanceError(f"permutation predicate {self.name} lists a permutation twice")

    @classmethod
    def from_strings(cls, name: str, arity: int, perms: Iterable[str]) -> "PermPredicate":
        try:
            return cls(name, arity, tuple(tuple(int(ch) for ch in p) for p in perms))
        except ValueError as exc:
            if isinstance(exc, InstanceError):
                raise
            raise InstanceError(f"permutation predicate {name}: bad permutation list") from exc

    def pattern_strings(self) -> List[str]:
        return ["".join(str(d) for d in p) for p in self.perms]


@dataclass(frozen=True)
class PermConstraint:
    predicate: PermPredicate
    scope: Tuple[int, ...]
    weight: int

    def __post_init__(self):
        object.__setattr__(self, "scope", tuple(self.scope))
        if len(self.scope) != self.predicate.arity:
            raise InstanceError(f"predicate {self.predicate.name} needs {self.predicate.arity} variables")
        if len(set(self.scope)) != len(self.scope):
            raise InstanceError(f"repeated variable in scope {self.scope}")
        if self.weight < 1:
            raise InstanceError(f"weight must be positive, got {self.weight}")

    def expansion(self) -> List[Tuple[int, ...]]:
        """One ordering tuple per satisfying pattern: (v_{p^-1(1)}, v_{p^-1(2)}, ...)."""
        out = []
        for p in self.predicate.perms:
            by_rank = sorted(range(len(p)), key=lambda i: p[i])
            out.append(tuple(self.scope[i] for i in by_rank))
        return out

    def satisfied_by(self, position: Mapping[int, int]) -> bool:
        ranks = sorted(range(len(self.scope)), key=lambda i: position[self.scope[i]])
        pattern = [0] * len(self.scope)
        for rank, i in enumerate(ranks, start=1):
            pattern[i] = rank
        return tuple(pattern) in self.predicate.perms


@dataclass(frozen=True)
class PermCspInstance:
    num_vars: int
    constraints: Tuple[PermConstraint, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        for con in self.constraints:
            if min(con.scope) < 0 or max(con.scope) >= self.num_vars:
                raise InstanceError(f"scope {con.scope} out of range for {self.num_vars} variables")

    @property
    def arity_bound(self) -> int:
        return max((con.predicate.arity for con in self.constraints), default=2)

    def weight(self, ordering: Sequence[int]) -> int:
        position = positions_of(ordering, self.num_vars)
        return sum(con.weight for con in self.constraints if con.satisfied_by(position))


@dataclass(frozen=True)
class OrderingConstraint:
    """Satisfied when the ordering places the scope strictly left to right."""
    scope: Tuple[int, ...]
    weight: int

    def __post_init__(self):
        object.__setattr__(self, "scope", tuple(self.scope))
        if len(self.scope) not in (2, 3):
            raise InstanceError(f"ordering constraint {self.scope} must have 2 or 3 variables")
        if len(set(self.scope)) != len(self.scope):
            raise InstanceError(f"repeated variable in ordering constraint {self.scope}")
        if self.weight < 1:
            raise InstanceError(f"weight must be positive, got {self.weight}")

    def satisfied_by(self, position: Mapping[int, int]) -> bool:
        return all(position[a] < position[b] for a, b in zip(self.scope, self.scope[1:]))


@dataclass(frozen=True)
class OrderingInstance:
    num_vars: int
    constraints: Tuple[OrderingConstraint, ...] = ()
    # w(phi, original) = w(phi, this) + weight_shift
    weight_shift: int = 0
    irreducible: bool = False
    # origin[i] = variable index of the instance this one was reduced from
    origin: Optional[Tuple[int, ...]] = field(default=None)

    def __post_init__(self):
        merged: Dict[Tuple[int, ...], int] = {}
        for con in self.constraints:
            if min(con.scope) < 0 or max(con.scope) >= self.num_vars:
                raise InstanceError(f"ordering constraint {con.scope} out of range for {self.num_vars} variables")
            merged[con.scope] = merged.get(con.scope, 0) + con.weight
        object.__setattr__(self, "constraints", tuple(OrderingConstraint(s, w) for s, w in merged.items()))
        if self.origin is not None:
            object.__setattr__(self, "origin", tuple(self.origin))
            if len(self.origin) != self.num_vars:
                raise InstanceError(f"origin maps {len(self.origin)} variables, instance has {self.num_vars}")
        if self.irreducible:
            problems = irreducibility_violations(self)
            if problems:
                raise InstanceError(f"instance flagged irreducible but {problems[0]}")

    @property
    def total_weight(self) -> int:
        return sum(con.weight for con in self.constraints)

    @property
    def has_ternary(self) -> bool:
        return any(len(con.scope) == 3 for con in self.constraints)

    def weight(self, ordering: Sequence[int]) -> int:
        position = positions_of(ordering, self.num_vars)
        return sum(con.weight for con in self.constraints if con.satisfied_by(position))

    def excess(self, ordering: Sequence[int]) -> Fraction:
        """w(phi) - rho*W; unchanged by every reduction rule."""
        return self.weight(ordering) - rho_W(self)


@dataclass(frozen=True)
class BucketAssignment:
    """Bucket index in [0, 2^t) per variable; bucket 0 is all +1, component q is worth 2^(t-1-q)."""
    t: int
    positions: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "positions", tuple(self.positions))
        if self.t < 1:
            raise ValueError(f"t must be positive, got {self.t}")
        for p in self.positions:
            if not 0 <= p < 1 << self.t:
                raise ValueError(f"bucket {p} outside 0..{(1 << self.t) - 1}")

    def components(self, v: int) -> Tuple[int, ...]:
        p = self.positions[v]
        return tuple(-1 if (p >> (self.t - 1 - q)) & 1 else 1 for q in range(self.t))

    def point(self) -> Dict[int, int]:
        """+-1 values keyed by the 1-based polynomial index t*v + q + 1."""
        out = {}
        for v in range(len(self.positions)):
            for q, x in enumerate(self.components(v)):
                out[self.t * v + q + 1] = x
        return out

    def to_bits(self) -> Assignment:
        """Lin2 bits: bit t*v + q is 1 exactly when component q of v is -1."""
        bits = []
        for v in range(len(self.positions)):
            bits.extend(1 if x == -1 else 0 for x in self.components(v))
        return tuple(bits)

    @classmethod
    def from_bits(cls, bits: Sequence[int], t: int) -> "BucketAssignment":
        if len(bits) % t:
            raise ValueError(f"{len(bits)} bits do not split into {t}-bit buckets")
        positions = []
        for v in range(len(bits) // t):
            p = 0
            for q in range(t):
                p = (p << 1) | bits[t * v + q]
            positions.append(p)
        return cls(t, tuple(positions))


def positions_of(ordering: Sequence[int], num_vars: int) -> Dict[int, int]:
    if sorted(ordering) != list(range(num_vars)):
        raise ValueError(f"ordering {tuple(ordering)} is not a permutation of {num_vars} variables")
    return {v: i for i, v in enumerate(ordering)}


def from_digraph(num_vertices: int, arcs: Iterable[Tuple[int, int, int]]) -> OrderingInstance:
    """Maximum acyclic subgraph: arc (u, v) of weight w asks u before v."""
    return OrderingInstance(num_vertices, tuple(OrderingConstraint((u, v), w) for u, v, w in arcs))


def perm_to_linear_ordering(inst: PermCspInstance) -> OrderingInstance:
    constraints = []
    for con in inst.constraints:
        for scope in con.expansion():
            constraints.append(OrderingConstraint(scope, con.weight))
    return OrderingInstance(inst.num_vars, tuple(constraints))


def rho_W(inst: OrderingInstance) -> Fraction:
    return sum((Fraction(con.weight, factorial(len(con.scope))) for con in inst.constraints), Fraction(0))


def _reverse_pairs(triple: Tuple[int, int, int]) -> List[Tuple[Tuple[int, ...], Tuple[int, ...]]]:
    out = []
    for middle in triple:
        a, b = (v for v in triple if v != middle)
        out.append(((a, middle, b), (b, middle, a)))
    return out


def missing_absent_pair(present: Iterable[Tuple[int, ...]]) -> List[Tuple[int, ...]]:
    """Sorted triples carrying ternary constraints but no absent reverse pair."""
    present = set(present)
    triples = sorted({tuple(sorted(s)) for s in present if len(s) == 3})
    return [tri for tri in triples
            if not any(e not in present and r not in present for e, r in _reverse_pairs(tri))]


def irreducibility_violations(inst: OrderingInstance) -> List[str]:
    scopes = [con.scope for con in inst.constraints]
    out = []
    used = {v for s in scopes for v in s}
    if len(used) != inst.num_vars:
        out.append(f"{inst.num_vars - len(used)} variables are unused")
    present = set(scopes)
    for a, b in (s for s in scopes if len(s) == 2):
        if a < b and (b, a) in present:
            out.append(f"binary constraints ({a},{b}) and ({b},{a}) cancel")
    for tri in missing_absent_pair(present):
        out.append(f"triple {tri} has no absent reverse pair")
    return out


def _drop_zero(weights: Dict[Tuple[int, ...], int]):
    for scope in [s for s, w in weights.items() if w <= 0]:
        del weights[scope]


def apply_reduction_rules(inst: OrderingInstance) -> OrderingInstance:
    """
    Fixpoint of Redundancy, Merging, Cancellation, Edge Replacement and Cycle
    Replacement. Unused variables are dropped and the rest renumbered; the
    result's origin maps back to the input's variables.
    """
    weights: Dict[Tuple[int, ...], int] = {}
    for con in inst.constraints:
        weights[con.scope] = weights.get(con.scope, 0) + con.weight
    shift = inst.weight_shift

    changed = True
    while changed:
        changed = False
        _drop_zero(weights)

        for a, b in sorted(s for s in weights if len(s) == 2):
            fwd, rev = weights.get((a, b), 0), weights.get((b, a), 0)
            if a < b and fwd and rev:
                m = min(fwd, rev)
                weights[(a, b)], weights[(b, a)] = fwd - m, rev - m
                shift += m
                changed = True
                logger.debug("cancellation on (%d,%d): shift +%d", a, b, m)
        _drop_zero(weights)

        triples = sorted({tuple(sorted(s)) for s in weights if len(s) == 3})
        for tri in triples:
            for e1 in permutations(tri):
                e2, e3 = (e1[1], e1[0], e1[2]), (e1[0], e1[2], e1[1])
                m = min(weights.get(e1, 0), weights.get(e2, 0), weights.get(e3, 0))
                if m:
                    for e in (e1, e2, e3):
                        weights[e] -= m
                    weights[(e1[0], e1[2])] = weights.get((e1[0], e1[2]), 0) + m
                    changed = True
                    logger.debug("edge replacement on %s: +(%d,%d) w=%d", e1, e1[0], e1[2], m)
        _drop_zero(weights)

        triples = sorted({tuple(sorted(s)) for s in weights if len(s) == 3})
        for tri in triples:
            for e1 in permutations(tri):
                e2, e3 = (e1[1], e1[2], e1[0]), (e1[2], e1[0], e1[1])
                m = min(weights.get(e1, 0), weights.get(e2, 0), weights.get(e3, 0))
                if m:
                    for e in (e1, e2, e3):
                        weights[e] -= m
                    for pair in ((e1[0], e1[1]), (e1[1], e1[2]), (e1[2], e1[0])):
                        weights[pair] = weights.get(pair, 0) + m
                    shift -= m
                    changed = True
                    logger.debug("cycle replacement on %s: shift -%d", e1, m)
        _drop_zero(weights)

    used = sorted({v for s in weights for v in s})
    index = {v: i for i, v in enumerate(used)}
    base = inst.origin if inst.origin is not None else tuple(range(inst.num_vars))
    constraints = tuple(
        OrderingConstraint(tuple(index[v] for v in s), w)
        for s, w in sorted(weights.items(), key=lambda kv: (len(kv[0]), kv[0]))
    )
    out = OrderingInstance(len(used), constraints, shift, irreducible=True,
                           origin=tuple(base[v] for v in used))
    logger.info("reduction: %d constraints on %d variables -> %d on %d, shift %d",
                len(inst.constraints), inst.num_vars, len(out.constraints), out.num_vars, shift)
    return out


def _sequence_payoff(keys: Sequence) -> Fraction:
    """P(random refinement orders the tuple left to right) given comparable group keys."""
    if any(a > b for a, b in zip(keys, keys[1:])):
        return Fraction(0)
    den = 1
    for key in set(keys):
        den *= factorial(keys.count(key))
    return Fraction(1, den)


def bucket_payoff(e: OrderingConstraint, buckets: BucketAssignment) -> Fraction:
    return _sequence_payoff([buckets.positions[v] for v in e.scope])


@lru_cache(maxsize=None)
def _payoff_expansion(arity: int, t: int) -> MultilinearPolynomial:
    n = arity * t
    values = []
    for point in range(1 << n):
        keys = []
        for p in range(arity):
            keys.append(sum(1 << (t - 1 - q) for q in range(t) if (point >> (p * t + q)) & 1))
        values.append(_sequence_payoff(keys))
    return MultilinearPolynomial.from_table(values, n, base=1)


def payoff_polynomial(e: OrderingConstraint, t: int) -> MultilinearPolynomial:
    """Fourier expansion of the bucket payoff on local inputs p*t + q + 1."""
    if t < 1:
        raise ValueError(f"t must be positive, got {t}")
    if len(e.scope) * t > MAX_PAYOFF_INPUTS:
        raise ValueError(f"payoff polynomial over {len(e.scope) * t} inputs exceeds {MAX_PAYOFF_INPUTS}")
    return MultilinearPolynomial().add_scaled(_payoff_expansion(len(e.scope), t))


def aggregate_polynomial(inst: OrderingInstance, t: int = PIPELINE_T) -> MultilinearPolynomial:
    """Weighted sum of payoff polynomials on global inputs t*v + q + 1."""
    g = MultilinearPolynomial()
    for con in inst.constraints:
        local = payoff_polynomial(con, t)
        mapping = {p * t + q + 1: t * v + q + 1 for p, v in enumerate(con.scope) for q in range(t)}
        g.add_scaled(local.renamed(mapping), con.weight)
    return g


def representation_check(inst: OrderingInstance) -> List[int]:
    """Variables none of whose inputs appears in a non-constant monomial (t = 2)."""
    g = aggregate_polynomial(inst, PIPELINE_T)
    represented = {(j - 1) // PIPELINE_T for mono, _ in g.items() for j in mono}
    return [v for v in range(inst.num_vars) if v not in represented]


def build_lin2(inst: OrderingInstance) -> Lin2System:
    """
    F(C): each non-constant monomial of the t = 2 aggregate polynomial, scaled
    by 384, becomes an equation on Lin2 variables j - 1. For every bucket
    assignment 384 * (w_t - rho*W) = 2 * satisfied - W_F.
    """
    equations = []
    for mono, coef in aggregate_polynomial(inst, PIPELINE_T).items():
        if not mono:
            continue
        scaled = coef * ORDERING_SCALE
        if scaled.denominator != 1:
            raise ArithmeticError(f"coefficient {coef} of {mono} is not a multiple of 1/{ORDERING_SCALE}")
        weight = int(scaled)
        variables = tuple(j - 1 for j in mono)
        if weight > 0:
            equations.append(Lin2Equation(variables, 0, weight))
        else:
            equations.append(Lin2Equation(variables, 1, -weight))
    return Lin2System(PIPELINE_T * inst.num_vars, 3 * PIPELINE_T, tuple(equations))


def bucket_weight(inst: OrderingInstance, buckets: BucketAssignment) -> Fraction:
    """w_t: expected weight of a uniform refinement of the bucket assignment."""
    return sum((con.weight * bucket_payoff(con, buckets) for con in inst.constraints), Fraction(0))


def ordering_from_buckets(inst: OrderingInstance, buckets: BucketAssignment) -> Ordering:
    """
    Extend the bucket order to a full ordering of weight >= w_t. Inside each
    bucket the next variable is the one with the largest conditional expected
    weight, the rest of the bucket and the later buckets staying random.
    """
    n = inst.num_vars
    if len(buckets.positions) != n:
        raise ValueError(f"bucket assignment covers {len(buckets.positions)} variables, instance has {n}")
    touching: Dict[int, List[OrderingConstraint]] = {v: [] for v in range(n)}
    for con in inst.constraints:
        for v in con.scope:
            touching[v].append(con)

    # placed variables sort before every random group and among themselves by position
    key = {v: (1, buckets.positions[v]) for v in range(n)}
    ordering: List[int] = []
    for bucket in range(1 << buckets.t):
        pending = [v for v in range(n) if buckets.positions[v] == bucket]
        while pending:
            best_v, best_gain = pending[0], None
            for v in pending:
                before = sum(c.weight * _sequence_payoff([key[u] for u in c.scope]) for c in touching[v])
                old = key[v]
                key[v] = (0, len(ordering))
                after = sum(c.weight * _sequence_payoff([key[u] for u in c.scope]) for c in touching[v])
                key[v] = old
                gain = after - before
                if best_gain is None or gain > best_gain:
                    best_v, best_gain = v, gain
            key[best_v] = (0, len(ordering))
            ordering.append(best_v)
            pending.remove(best_v)
    return tuple(ordering)


def lift_ordering(reduced: OrderingInstance, ordering: Sequence[int], num_vars: int) -> Ordering:
    """Map an ordering of a reduced instance back; dropped variables go last in index order."""
    origin = reduced.origin if reduced.origin is not None else tuple(range(reduced.num_vars))
    head = [origin[v] for v in ordering]
    seen = set(head)
    return tuple(head + [v for v in range(num_vars) if v not in seen])


def restrict_ordering(reduced: OrderingInstance, ordering: Sequence[int]) -> Ordering:
    """The reduced instance's view of an ordering of the variables it came from."""
    origin = reduced.origin if reduced.origin is not None else tuple(range(reduced.num_vars))
    index = {old: new for new, old in enumerate(origin)}
    return tuple(index[v] for v in ordering if v in index)


def _kernel_checks(reduced: OrderingInstance, k_f: int):
    n = reduced.num_vars
    checks = [("hard21", n <= KERNEL_FACTORS["hard21"] * k_f)]
    if reduced.has_ternary:
        checks.append(("soft15", n < KERNEL_FACTORS["soft15"] * k_f))
    else:
        checks.append(("soft10", n < KERNEL_FACTORS["soft10"] * k_f))
    for bound, ok in checks:
        metrics.record_kernel_check(bound, ok)
        if not ok and bound != "hard21":
            logger.warning("ordering kernel has %d variables, %s bound is %d",
                           n, bound, KERNEL_FACTORS[bound] * k_f)
    metrics.observe_kernel("ordering", n)
    hard = KERNEL_FACTORS["hard21"] * k_f
    if n > hard:
        logger.error("ordering kernel has %d variables, hard21 bound is %d", n, hard)
        raise KernelBoundError("ordering kernel", n, hard)


def solve_ordering_aa(inst: OrderingInstance, k: int, guard: Optional[int] = None) -> Verdict:
    """Decide whether some ordering has weight >= rho*W + k; weights in original units."""
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    reduced = apply_reduction_rules(inst)
    shift = reduced.weight_shift - inst.weight_shift
    system = lin2_core.reduce_system(build_lin2(reduced))
    k_f = ORDERING_SCALE * k
    collections = lin2_core.build_collections(system)
    j = collections.heaviest_layer(k_f)

    if j is not None:
        bits = lin2_core.assignment_above_average(system, collections, j)
        buckets = BucketAssignment.from_bits(bits, PIPELINE_T)
        ordering = lift_ordering(reduced, ordering_from_buckets(reduced, buckets), inst.num_vars)
        logger.info("F(C) layer %d has weight %d >= %d: bucket certificate",
                    j, collections.layer_weights[j], k_f)
        metrics.record_branch("ordering", BRANCH_CERTIFICATE)
        return Yes(ordering, inst.weight(ordering), BRANCH_CERTIFICATE)

    _kernel_checks(reduced, k_f)
    guard = config.HELD_KARP_GUARD if guard is None else guard
    best, optimum = exact_search.held_karp_ordering(reduced, guard=guard)
    ordering = lift_ordering(reduced, best, inst.num_vars)
    metrics.record_branch("ordering", BRANCH_HELD_KARP)
    logger.info("held-karp on %d variables: optimum %d, threshold rho*W + %d = %s",
                reduced.num_vars, optimum, k, rho_W(reduced) + k)
    if optimum - rho_W(reduced) >= k:
        return Yes(ordering, optimum + shift, BRANCH_HELD_KARP)
    return No(optimum + shift, ordering, BRANCH_HELD_KARP)


def solve_perm_aa(inst: PermCspInstance, k: int, guard: Optional[int] = None) -> Verdict:
    verdict = solve_ordering_aa(perm_to_linear_ordering(inst), k, guard=guard)
    metrics.record_branch("perm", verdict.branch)
    return verdict
