"""
exact_search.py
Ground-truth oracles by full enumeration, independent weight evaluators, and
the O*(2^n) subset dynamic program for exact linear ordering.

Nothing here calls back into the solver modules; the evaluators only read the
public fields of the instance types so they can check solver output.
"""

import logging
from dataclasses import dataclass
from itertools import permutations, product
from typing import List, Optional, Sequence, Tuple

import config
from models import Assignment, Ordering, ResourceGuardError

logger = logging.getLogger(__name__)

ORACLE_BOOLEAN_GUARD = 20
ORACLE_ORDERING_GUARD = 10


def lin2_weight(system, bits: Sequence[int]) -> int:
    """Satisfied weight plus the system's offset (original units)."""
    total = system.offset
    for eq in system.equations:
        if sum(bits[v] for v in eq.variables) % 2 == eq.rhs:
            total += eq.weight
    return total


def csp_weight(inst, bits: Sequence[int]) -> int:
    total = 0
    for con in inst.constraints:
        index = sum(bits[v] << i for i, v in enumerate(con.scope))
        if con.predicate.table[index]:
            total += con.weight
    return total


def ordering_weight(inst, ordering: Sequence[int]) -> int:
    position = {v: i for i, v in enumerate(ordering)}
    total = 0
    for con in inst.constraints:
        places = [position[v] for v in con.scope]
        if places == sorted(places) and len(set(places)) == len(places):
            total += con.weight
    return total


def brute_force_lin2(system) -> Tuple[Assignment, int]:
    """Optimum over the occurring variables, lexicographically smallest on ties."""
    occurring = sorted({v for eq in system.equations for v in eq.variables})
    if len(occurring) > ORACLE_BOOLEAN_GUARD:
        raise ResourceGuardError("lin2 oracle", len(occurring), ORACLE_BOOLEAN_GUARD)
    best_bits, best = None, None
    bits = [0] * system.num_vars
    for values in product((0, 1), repeat=len(occurring)):
        for v, b in zip(occurring, values):
            bits[v] = b
        w = lin2_weight(system, bits)
        if best is None or w > best:
            best_bits, best = tuple(bits), w
    return best_bits, best


def brute_force_csp(inst) -> Tuple[Assignment, int]:
    if inst.num_vars > ORACLE_BOOLEAN_GUARD:
        raise ResourceGuardError("csp oracle", inst.num_vars, ORACLE_BOOLEAN_GUARD)
    best_bits, best = None, None
    for bits in product((0, 1), repeat=inst.num_vars):
        w = csp_weight(inst, bits)
        if best is None or w > best:
            best_bits, best = bits, w
    return best_bits, best


def brute_force_ordering(inst) -> Tuple[Ordering, int]:
    if inst.num_vars > ORACLE_ORDERING_GUARD:
        raise ResourceGuardError("ordering oracle", inst.num_vars, ORACLE_ORDERING_GUARD)
    best_order, best = None, None
    for order in permutations(range(inst.num_vars)):
        w = ordering_weight(inst, order)
        if best is None or w > best:
            best_order, best = order, w
    return best_order, best


@dataclass
class DpTable:
    """best_weight[S] and the variable placed last in an optimal ordering of S, per bitmask S."""
    best_weight: List[int]
    parent_choice: List[int]

    def ordering(self, mask: Optional[int] = None) -> Ordering:
        mask = len(self.best_weight) - 1 if mask is None else mask
        out = []
        while mask:
            v = self.parent_choice[mask]
            out.append(v)
            mask ^= 1 << v
        return tuple(reversed(out))


def _charges(inst):
    """Per variable v: ternary (a, v, c) as (a bit, c bit, w) and binary (a, v) as (a bit, w)."""
    ternary = [[] for _ in range(inst.num_vars)]
    binary = [[] for _ in range(inst.num_vars)]
    for con in inst.constraints:
        if len(con.scope) == 3:
            a, v, c = con.scope
            ternary[v].append((1 << a, 1 << c, con.weight))
        else:
            a, v = con.scope
            binary[v].append((1 << a, con.weight))
    return ternary, binary


def placement_gain(ternary, binary, placed: int, v: int) -> int:
    """f(S, v): weight decided when v is appended right after the set `placed`."""
    gain = 0
    for a_bit, c_bit, w in ternary[v]:
        if placed & a_bit and not placed & c_bit:
            gain += w
    for a_bit, w in binary[v]:
        if placed & a_bit:
            gain += w
    return gain


def partition_charges(inst, ordering: Sequence[int]) -> List[int]:
    """f(pi_{<v}, v) for each position; these sum to the ordering's weight."""
    ternary, binary = _charges(inst)
    placed, out = 0, []
    for v in ordering:
        out.append(placement_gain(ternary, binary, placed, v))
        placed |= 1 << v
    return out


def held_karp_table(inst, guard: Optional[int] = None) -> DpTable:
    guard = config.HELD_KARP_GUARD if guard is None else guard
    n = inst.num_vars
    if n > guard:
        raise ResourceGuardError("held-karp ordering", n, guard)
    ternary, binary = _charges(inst)
    size = 1 << n
    best = [0] * size
    parent = [-1] * size
    # every S minus {v} is numerically below S
    for mask in range(1, size):
        top, choice = None, -1
        rest = mask
        while rest:
            low = rest & -rest
            v = low.bit_length() - 1
            rest ^= low
            prev = mask ^ low
            value = best[prev] + placement_gain(ternary, binary, prev, v)
            if top is None or value > top:
                top, choice = value, v
        best[mask], parent[mask] = top, choice
    logger.debug("held-karp filled %d subsets for %d variables", size, n)
    return DpTable(best, parent)


def held_karp_ordering(inst, guard: Optional[int] = None) -> Tuple[Ordering, int]:
    table = held_karp_table(inst, guard=guard)
    return table.ordering(), table.best_weight[-1]
