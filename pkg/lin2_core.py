"""
lin2_core.py
Weighted Max-c-Lin-2 Above Average: reduction of degenerate pairs, greedy
independent collections, above-average witnesses by conditional expectation,
exhaustive search on small kernels, and the decision procedure.

A system asks: is there an assignment of weight >= W/2 + k/2?  All such
comparisons are done on doubled integers (2 * weight vs W + k).
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union

import config
import metrics
from models import (
    Assignment, BRANCH_CERTIFICATE, BRANCH_KERNEL, InstanceError, No,
    ResourceGuardError, Verdict, Yes, YesCertificate,
)

logger = logging.getLogger(__name__)

# below this many occurring variables a process pool costs more than it saves
PARALLEL_MIN_VARS = 14


@dataclass(frozen=True)
class Lin2Equation:
    """XOR of `variables` equals `rhs`, with a positive integer weight."""
    variables: Tuple[int, ...]
    rhs: int
    weight: int

    def __post_init__(self):
        vs = tuple(self.variables)
        object.__setattr__(self, "variables", vs)
        if not vs:
            raise InstanceError("equation has no variables")
        if list(vs) != sorted(set(vs)):
            raise InstanceError(f"equation variables {vs} must be sorted and distinct")
        if self.rhs not in (0, 1):
            raise InstanceError(f"rhs must be 0 or 1, got {self.rhs}")
        if self.weight < 1:
            raise InstanceError(f"weight must be positive, got {self.weight}")

    @classmethod
    def of(cls, variables: Iterable[int], rhs: int, weight: int) -> "Lin2Equation":
        vs = list(variables)
        if len(set(vs)) != len(vs):
            raise InstanceError(f"repeated variable in equation {vs}")
        return cls(tuple(sorted(vs)), rhs, weight)

    @property
    def mask(self) -> int:
        m = 0
        for v in self.variables:
            m |= 1 << v
        return m

    def satisfied_by(self, bits: Sequence[int]) -> bool:
        parity = 0
        for v in self.variables:
            parity ^= bits[v]
        return parity == self.rhs


@dataclass(frozen=True)
class Lin2System:
    num_vars: int
    arity_bound: int
    equations: Tuple[Lin2Equation, ...] = ()
    # weight stripped from every assignment by reduction: w(original) = w(this) + offset
    offset: int = 0
    reduced: bool = False

    def __post_init__(self):
        object.__setattr__(self, "equations", tuple(self.equations))
        if self.num_vars < 0:
            raise InstanceError(f"negative variable count {self.num_vars}")
        if self.arity_bound < 2:
            raise InstanceError(f"arity bound must be at least 2, got {self.arity_bound}")
        for eq in self.equations:
            if len(eq.variables) > self.arity_bound:
                raise InstanceError(f"equation {eq.variables} exceeds arity bound {self.arity_bound}")
            if eq.variables[-1] >= self.num_vars:
                raise InstanceError(f"variable {eq.variables[-1]} out of range for {self.num_vars} variables")
        if self.reduced:
            seen = [eq.variables for eq in self.equations]
            if len(set(seen)) != len(seen):
                raise InstanceError("system flagged reduced has two equations on one variable set")

    @property
    def total_weight(self) -> int:
        return sum(eq.weight for eq in self.equations)

    def occurring_variables(self) -> List[int]:
        return sorted({v for eq in self.equations for v in eq.variables})


@dataclass(frozen=True, eq=False)
class IndependentCollections:
    """Greedy layers S_c ... S_1 of equations with pairwise disjoint fresh variables."""
    arity_bound: int
    layers: Dict[int, Tuple[int, ...]]
    fresh_vars: Dict[int, Tuple[Tuple[int, ...], ...]]
    layer_weights: Dict[int, int]

    def covered_above(self, j: int, system: Lin2System) -> Set[int]:
        """var(S_c u ... u S_{j+1})."""
        out: Set[int] = set()
        for layer in range(self.arity_bound, j, -1):
            for idx in self.layers[layer]:
                out.update(system.equations[idx].variables)
        return out

    def heaviest_layer(self, k: int) -> Optional[int]:
        """Largest j with w(S_j) >= k, or None."""
        for j in range(self.arity_bound, 0, -1):
            if self.layer_weights[j] >= k:
                return j
        return None


@dataclass(frozen=True)
class Kernel:
    """Reduced system renumbered to its occurring variables; variables[new] = old index."""
    system: Lin2System
    variables: Tuple[int, ...]


def from_max_cut(num_vertices: int, edges: Iterable[Tuple[int, int, int]]) -> Lin2System:
    """Weighted Max Cut as Max-2-Lin-2: each edge {u, v} of weight w is x_u + x_v = 1."""
    eqs = [Lin2Equation.of((u, v), 1, w) for u, v, w in edges]
    return Lin2System(num_vertices, 2, tuple(eqs))


def reduce_system(system: Lin2System) -> Lin2System:
    """Merge identical equations and cancel complementary pairs."""
    merged: Dict[Tuple[Tuple[int, ...], int], int] = {}
    for eq in system.equations:
        key = (eq.variables, eq.rhs)
        merged[key] = merged.get(key, 0) + eq.weight

    offset = system.offset
    out: List[Lin2Equation] = []
    done: Set[Tuple[int, ...]] = set()
    for (vs, rhs), weight in merged.items():
        if vs in done:
            continue
        done.add(vs)
        other = merged.get((vs, 1 - rhs), 0)
        if not other:
            out.append(Lin2Equation(vs, rhs, weight))
            continue
        # exactly one of the pair holds under any assignment
        offset += min(weight, other)
        if weight > other:
            out.append(Lin2Equation(vs, rhs, weight - other))
        elif other > weight:
            out.append(Lin2Equation(vs, 1 - rhs, other - weight))

    if offset != system.offset:
        logger.debug("reduction stripped %d from every assignment", offset - system.offset)
    return Lin2System(system.num_vars, system.arity_bound, tuple(out), offset, reduced=True)


def build_collections(system: Lin2System) -> IndependentCollections:
    if not system.reduced:
        raise ValueError("build_collections needs a reduced system")
    eqs = system.equations
    used: Set[int] = set()
    placed = [False] * len(eqs)
    layers, fresh, weights = {}, {}, {}

    for j in range(system.arity_bound, 0, -1):
        chosen: List[int] = []
        chosen_fresh: List[Tuple[int, ...]] = []
        taken: Set[int] = set()
        for idx, eq in enumerate(eqs):
            if placed[idx]:
                continue
            fr = tuple(v for v in eq.variables if v not in used)
            if len(fr) != j or taken.intersection(fr):
                continue
            chosen.append(idx)
            chosen_fresh.append(fr)
            taken.update(fr)
            placed[idx] = True
        for idx in chosen:
            used.update(eqs[idx].variables)
        layers[j] = tuple(chosen)
        fresh[j] = tuple(chosen_fresh)
        weights[j] = sum(eqs[idx].weight for idx in chosen)

    logger.debug("layer weights %s", weights)
    return IndependentCollections(system.arity_bound, layers, fresh, weights)


def assignment_above_average(system: Lin2System, collections: IndependentCollections, j: int) -> Assignment:
    """
    Deterministic assignment satisfying all of S_j with weight >= (W - w(S_j))/2 + w(S_j).

    One fresh variable per S_j equation (its highest index) is forced and
    substituted away; free variables are then fixed in increasing order, each
    to the value with the larger conditional expectation. An equation is
    decided exactly when its last free variable is fixed, so the choice only
    weighs the equations whose last free variable is the current one.
    """
    layer = collections.layers.get(j, ())
    if not layer:
        raise ValueError(f"layer {j} is empty")
    eqs = system.equations
    forced: Dict[int, int] = {}
    for idx, fr in zip(layer, collections.fresh_vars[j]):
        forced[max(fr)] = idx
    in_layer = set(layer)

    by_last: Dict[int, List[Tuple[int, int, int]]] = {}
    for idx, eq in enumerate(eqs):
        if idx in in_layer:
            continue
        free_mask, target = 0, eq.rhs
        for v in eq.variables:
            src = forced.get(v)
            if src is None:
                free_mask ^= 1 << v
            else:
                free_mask ^= eqs[src].mask ^ (1 << v)
                target ^= eqs[src].rhs
        if free_mask:
            by_last.setdefault(free_mask.bit_length() - 1, []).append((free_mask, target, eq.weight))

    assigned = 0
    for v in range(system.num_vars):
        if v in forced or v not in by_last:
            continue
        gain = [0, 0]
        for free_mask, target, weight in by_last[v]:
            others = (assigned & free_mask).bit_count() & 1
            gain[others ^ target] += weight
        if gain[1] > gain[0]:
            assigned |= 1 << v

    for f, src in forced.items():
        rest = eqs[src].mask ^ (1 << f)
        if ((assigned & rest).bit_count() & 1) ^ eqs[src].rhs:
            assigned |= 1 << f

    return tuple((assigned >> v) & 1 for v in range(system.num_vars))


def eval_weight(system: Lin2System, a: Sequence[int], original_units: bool = False) -> int:
    if len(a) != system.num_vars:
        raise ValueError(f"assignment has {len(a)} bits, system has {system.num_vars} variables")
    total = sum(eq.weight for eq in system.equations if eq.satisfied_by(a))
    return total + system.offset if original_units else total


def _scan_block(job: Tuple[List[Tuple[int, int, int]], int, int]) -> Tuple[int, int]:
    rows, start, stop = job
    best_mask, best = start, -1
    for mask in range(start, stop):
        w = 0
        for row_mask, rhs, weight in rows:
            if (mask & row_mask).bit_count() & 1 == rhs:
                w += weight
        if w > best:
            best, best_mask = w, mask
    return best_mask, best


def exhaustive_solve(system: Lin2System, guard: Optional[int] = None,
                     workers: Optional[int] = None) -> Tuple[Assignment, int]:
    """Maximum-weight assignment over the occurring variables; lexicographically smallest on ties."""
    guard = config.EXHAUSTIVE_GUARD if guard is None else guard
    workers = config.WORKERS if workers is None else workers
    occurring = system.occurring_variables()
    n = len(occurring)
    if n > guard:
        raise ResourceGuardError("exhaustive search", n, guard)

    # the first occurring variable is the most significant bit, so numeric order is lexicographic
    bit = {v: n - 1 - i for i, v in enumerate(occurring)}
    rows = []
    for eq in system.equations:
        m = 0
        for v in eq.variables:
            m |= 1 << bit[v]
        rows.append((m, eq.rhs, eq.weight))

    space = 1 << n
    if workers > 1 and n >= PARALLEL_MIN_VARS:
        step = -(-space // workers)
        jobs = [(rows, lo, min(lo + step, space)) for lo in range(0, space, step)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_scan_block, jobs))
        best_mask, best = results[0]
        for mask, w in results[1:]:
            if w > best:
                best_mask, best = mask, w
    else:
        best_mask, best = _scan_block((rows, 0, space))

    bits = [0] * system.num_vars
    for v in occurring:
        bits[v] = (best_mask >> bit[v]) & 1
    return tuple(bits), max(best, 0)


def compact_system(system: Lin2System) -> Tuple[Lin2System, Tuple[int, ...]]:
    variables = tuple(system.occurring_variables())
    index = {v: i for i, v in enumerate(variables)}
    eqs = tuple(Lin2Equation(tuple(index[v] for v in eq.variables), eq.rhs, eq.weight)
                for eq in system.equations)
    return Lin2System(len(variables), system.arity_bound, eqs, system.offset, system.reduced), variables


def kernel_bound(arity_bound: int, k: int) -> int:
    """c(c+1)k/2: kernels have strictly fewer occurring variables than this."""
    return arity_bound * (arity_bound + 1) * k // 2


def kernelize(system: Lin2System, k: int) -> Union[YesCertificate, Kernel]:
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    reduced = reduce_system(system)
    collections = build_collections(reduced)
    j = collections.heaviest_layer(k)
    if j is not None:
        logger.info("layer %d has weight %d >= k=%d: certificate", j, collections.layer_weights[j], k)
        return YesCertificate(assignment_above_average(reduced, collections, j))
    kernel, variables = compact_system(reduced)
    metrics.observe_kernel("lin2", kernel.num_vars)
    logger.info("kernel with %d variables (bound %d)", kernel.num_vars, kernel_bound(system.arity_bound, k))
    return Kernel(kernel, variables)


def solve_aa(system: Lin2System, k: int, guard: Optional[int] = None,
             workers: Optional[int] = None) -> Verdict:
    """Decide whether some assignment reaches W/2 + k/2; weights reported in original units."""
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    reduced = reduce_system(system)
    collections = build_collections(reduced)
    total = reduced.total_weight
    j = collections.heaviest_layer(k)

    if j is not None:
        witness = assignment_above_average(reduced, collections, j)
        achieved = eval_weight(reduced, witness)
        logger.info("layer %d weight %d >= k=%d, witness weight %d of %d",
                    j, collections.layer_weights[j], k, achieved, total)
        metrics.record_branch("lin2", BRANCH_CERTIFICATE)
        return Yes(witness, achieved + reduced.offset, BRANCH_CERTIFICATE)

    occurring = len(reduced.occurring_variables())
    metrics.observe_kernel("lin2", occurring)
    logger.info("all layers below k=%d, exhaustive search over %d variables", k, occurring)
    witness, best = exhaustive_solve(reduced, guard=guard, workers=workers)
    metrics.record_branch("lin2", BRANCH_KERNEL)
    if 2 * best >= total + k:
        return Yes(witness, best + reduced.offset, BRANCH_KERNEL)
    return No(best + reduced.offset, witness, BRANCH_KERNEL)


def gf2_rank(rows: List[int]) -> int:
    """Rank over GF(2) of rows given as int bitsets."""
    work = [r for r in rows if r]
    rank = 0
    while work:
        pivot = work.pop()
        if not pivot:
            continue
        rank += 1
        low = pivot & -pivot
        work = [r ^ pivot if r & low else r for r in work]
        work = [r for r in work if r]
    return rank


def is_independent_of_layer(system: Lin2System, collections: IndependentCollections,
                            j: int, index: int) -> bool:
    """Whether appending equation `index` to the S_j rows raises their GF(2) rank."""
    rows = [system.equations[idx].mask for idx in collections.layers.get(j, ())]
    return gf2_rank(rows + [system.equations[index].mask]) == gf2_rank(rows) + 1


def layer_dependence(system: Lin2System, collections: IndependentCollections, j: int) -> List[int]:
    """Indices of equations outside S_j that do NOT raise the rank of S_j (expected empty)."""
    in_layer = set(collections.layers.get(j, ()))
    return [idx for idx in range(len(system.equations))
            if idx not in in_layer and not is_independent_of_layer(system, collections, j, idx)]
