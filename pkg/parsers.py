"""
parsers.py
Parsers & serializers for the four instance formats:

    p lin2 <num_vars> <num_equations> <c>     then  <weight> <rhs> <v1> [v2 ...]
    p csp  <num_vars> <num_constraints> <c>   with  pred <name> <arity> <bits>
                                              then  <weight> <name> <v1> ... <v_arity>
    p ord  <num_vars> <num_constraints>       then  <weight> <v1> <v2> [v3]
    p perm <num_vars> <num_constraints> <c>   with  pperm <name> <arity> <perm>,<perm>,...
                                              then  <weight> <name> <v1> ... <v_arity>

Notes:
- Variables are 1-based in files and 0-based in memory.
- `#` starts a comment; blank lines are ignored.
- A lin2 file may carry `o <offset>`, the weight a reduction stripped from every assignment.
- Truth-table bit b is the value at the point whose input i is True when bit i of b is set,
  e.g. `pred or3 3 01111111` is the 3-literal OR clause.
"""

from typing import Dict, Iterator, List, Tuple, Union

from boolean_csp import BooleanConstraint, BooleanCspInstance, Predicate
from lin2_core import Lin2Equation, Lin2System
from models import InstanceError
from perm_ordering import (
    OrderingConstraint, OrderingInstance, PermConstraint, PermCspInstance, PermPredicate,
)

Instance = Union[Lin2System, BooleanCspInstance, OrderingInstance, PermCspInstance]

HEADER_FIELDS = {"lin2": 3, "csp": 3, "ord": 2, "perm": 3}


def _lines(text: str) -> Iterator[Tuple[int, List[str]]]:
    for number, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split("#", 1)[0].split()
        if tokens:
            yield number, tokens


def _int(token: str, what: str, line: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise InstanceError(f"{what} {token!r} is not an integer", line)


def _variables(tokens: List[str], num_vars: int, line: int) -> Tuple[int, ...]:
    out = []
    for tok in tokens:
        v = _int(tok, "variable", line)
        if not 1 <= v <= num_vars:
            raise InstanceError(f"variable {v} out of range 1..{num_vars}", line)
        out.append(v - 1)
    if len(set(out)) != len(out):
        raise InstanceError("repeated variable", line)
    return tuple(out)


def _weight(token: str, line: int) -> int:
    w = _int(token, "weight", line)
    if w < 1:
        raise InstanceError(f"weight must be positive, got {w}", line)
    return w


def _header(text: str, kind: str) -> Tuple[List[int], Iterator[Tuple[int, List[str]]], int]:
    lines = _lines(text)
    try:
        line, tokens = next(lines)
    except StopIteration:
        raise InstanceError(f"empty input, expected 'p {kind}' header")
    fields = HEADER_FIELDS[kind]
    if tokens[:2] != ["p", kind] or len(tokens) != 2 + fields:
        raise InstanceError(f"malformed header, expected 'p {kind}' and {fields} counts", line)
    values = [_int(tok, "header field", line) for tok in tokens[2:]]
    if any(v < 0 for v in values):
        raise InstanceError("negative header field", line)
    return values, lines, line


def _check_count(found: int, expected: int, what: str, line: int):
    if found != expected:
        raise InstanceError(f"header announces {expected} {what}, file has {found}", line)


def detect_kind(text: str) -> str:
    for line, tokens in _lines(text):
        if tokens[0] == "p" and len(tokens) > 1 and tokens[1] in HEADER_FIELDS:
            return tokens[1]
        raise InstanceError("first line must be a 'p <kind> ...' header", line)
    raise InstanceError("empty input")


def parse_lin2(text: str) -> Lin2System:
    (num_vars, count, c), lines, header_line = _header(text, "lin2")
    equations, offset = [], 0
    for line, tokens in lines:
        if tokens[0] == "o":
            if len(tokens) != 2:
                raise InstanceError("offset line must be 'o <integer>'", line)
            offset = _int(tokens[1], "offset", line)
            continue
        if len(tokens) < 3:
            raise InstanceError("equation needs a weight, a rhs and at least one variable", line)
        weight = _weight(tokens[0], line)
        rhs = _int(tokens[1], "rhs", line)
        if rhs not in (0, 1):
            raise InstanceError(f"rhs must be 0 or 1, got {rhs}", line)
        variables = _variables(tokens[2:], num_vars, line)
        if len(variables) > c:
            raise InstanceError(f"equation has {len(variables)} variables, c is {c}", line)
        try:
            equations.append(Lin2Equation.of(variables, rhs, weight))
        except InstanceError as exc:
            raise InstanceError(str(exc), line)
    _check_count(len(equations), count, "equations", header_line)
    try:
        return Lin2System(num_vars, c, tuple(equations), offset)
    except InstanceError as exc:
        raise InstanceError(str(exc), header_line)


def serialize_lin2(system: Lin2System) -> str:
    out = [f"p lin2 {system.num_vars} {len(system.equations)} {system.arity_bound}"]
    if system.offset:
        out.append(f"o {system.offset}")
    for eq in system.equations:
        out.append(" ".join([str(eq.weight), str(eq.rhs)] + [str(v + 1) for v in eq.variables]))
    return "\n".join(out) + "\n"


def parse_csp(text: str) -> BooleanCspInstance:
    (num_vars, count, c), lines, header_line = _header(text, "csp")
    predicates: Dict[str, Predicate] = {}
    constraints = []
    for line, tokens in lines:
        if tokens[0] == "pred":
            if len(tokens) != 4:
                raise InstanceError("predicate line must be 'pred <name> <arity> <bits>'", line)
            name = tokens[1]
            if name in predicates:
                raise InstanceError(f"predicate {name} defined twice", line)
            arity = _int(tokens[2], "arity", line)
            if arity > c:
                raise InstanceError(f"predicate {name} has arity {arity}, c is {c}", line)
            try:
                predicates[name] = Predicate.from_bits(name, arity, tokens[3])
            except InstanceError as exc:
                raise InstanceError(str(exc), line)
            continue
        if len(tokens) < 3:
            raise InstanceError("constraint needs a weight, a predicate and variables", line)
        weight = _weight(tokens[0], line)
        pred = predicates.get(tokens[1])
        if pred is None:
            raise InstanceError(f"unknown predicate {tokens[1]!r}", line)
        scope = _variables(tokens[2:], num_vars, line)
        try:
            constraints.append(BooleanConstraint(pred, scope, weight))
        except InstanceError as exc:
            raise InstanceError(str(exc), line)
    _check_count(len(constraints), count, "constraints", header_line)
    try:
        return BooleanCspInstance(num_vars, c, tuple(constraints))
    except InstanceError as exc:
        raise InstanceError(str(exc), header_line)


def serialize_csp(inst: BooleanCspInstance) -> str:
    out = [f"p csp {inst.num_vars} {len(inst.constraints)} {inst.arity_bound}"]
    for name, pred in inst.predicates().items():
        out.append(f"pred {name} {pred.arity} {''.join(str(b) for b in pred.table)}")
    for con in inst.constraints:
        out.append(" ".join([str(con.weight), con.predicate.name] + [str(v + 1) for v in con.scope]))
    return "\n".join(out) + "\n"


def parse_ordering(text: str) -> OrderingInstance:
    (num_vars, count), lines, header_line = _header(text, "ord")
    constraints = []
    for line, tokens in lines:
        if len(tokens) not in (3, 4):
            raise InstanceError("ordering constraint must be '<weight> <v1> <v2> [v3]'", line)
        weight = _weight(tokens[0], line)
        constraints.append(OrderingConstraint(_variables(tokens[1:], num_vars, line), weight))
    _check_count(len(constraints), count, "constraints", header_line)
    return OrderingInstance(num_vars, tuple(constraints))


def serialize_ordering(inst: OrderingInstance) -> str:
    out = [f"p ord {inst.num_vars} {len(inst.constraints)}"]
    for con in inst.constraints:
        out.append(" ".join([str(con.weight)] + [str(v + 1) for v in con.scope]))
    return "\n".join(out) + "\n"


def parse_perm(text: str) -> PermCspInstance:
    (num_vars, count, c), lines, header_line = _header(text, "perm")
    predicates: Dict[str, PermPredicate] = {}
    constraints = []
    for line, tokens in lines:
        if tokens[0] == "pperm":
            if len(tokens) != 4:
                raise InstanceError("predicate line must be 'pperm <name> <arity> <perm>,<perm>,...'", line)
            name = tokens[1]
            if name in predicates:
                raise InstanceError(f"predicate {name} defined twice", line)
            arity = _int(tokens[2], "arity", line)
            if arity > c:
                raise InstanceError(f"predicate {name} has arity {arity}, c is {c}", line)
            try:
                predicates[name] = PermPredicate.from_strings(name, arity, tokens[3].split(","))
            except InstanceError as exc:
                raise InstanceError(str(exc), line)
            continue
        if len(tokens) < 3:
            raise InstanceError("constraint needs a weight, a predicate and variables", line)
        weight = _weight(tokens[0], line)
        pred = predicates.get(tokens[1])
        if pred is None:
            raise InstanceError(f"unknown predicate {tokens[1]!r}", line)
        scope = _variables(tokens[2:], num_vars, line)
        try:
            constraints.append(PermConstraint(pred, scope, weight))
        except InstanceError as exc:
            raise InstanceError(str(exc), line)
    _check_count(len(constraints), count, "constraints", header_line)
    return PermCspInstance(num_vars, tuple(constraints))


def serialize_perm(inst: PermCspInstance) -> str:
    preds: Dict[str, PermPredicate] = {}
    for con in inst.constraints:
        preds.setdefault(con.predicate.name, con.predicate)
    out = [f"p perm {inst.num_vars} {len(inst.constraints)} {inst.arity_bound}"]
    for name, pred in preds.items():
        out.append(f"pperm {name} {pred.arity} {','.join(pred.pattern_strings())}")
    for con in inst.constraints:
        out.append(" ".join([str(con.weight), con.predicate.name] + [str(v + 1) for v in con.scope]))
    return "\n".join(out) + "\n"


PARSERS = {"lin2": parse_lin2, "csp": parse_csp, "ord": parse_ordering, "perm": parse_perm}
SERIALIZERS = {
    Lin2System: serialize_lin2,
    BooleanCspInstance: serialize_csp,
    OrderingInstance: serialize_ordering,
    PermCspInstance: serialize_perm,
}


def parse_instance(text: str, kind: str = None) -> Instance:
    found = detect_kind(text)
    if kind is not None and found != kind:
        raise InstanceError(f"expected a '{kind}' instance, found '{found}'")
    return PARSERS[found](text)


def serialize_instance(inst: Instance) -> str:
    return SERIALIZERS[type(inst)](inst)
