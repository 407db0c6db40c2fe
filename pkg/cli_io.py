"""
cli_io.py
Command-line entry point: reads an instance file, runs one solver and prints a
key=value report (one field per line, stable order) on stdout.

Exit codes: 0 yes / kernel / exact result, 1 no, 2 input error, 3 resource guard.
"""

import argparse
import logging
import random
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

import boolean_csp
import config
import exact_search
import lin2_core
import metrics
import perm_ordering
from boolean_csp import BooleanCspInstance
from lin2_core import Lin2System
from models import (
    Approx, BRANCH_APPROX, BRANCH_CERTIFICATE, BRANCH_EXACT, BRANCH_HELD_KARP, InstanceError,
    ResourceGuardError, Yes, YesCertificate, fraction_str, parse_fraction,
)
from parsers import parse_instance, serialize_csp, serialize_lin2
from storage import read_text, write_text_atomic

logger = logging.getLogger(__name__)

EXIT_YES, EXIT_NO, EXIT_INPUT, EXIT_GUARD = 0, 1, 2, 3

REPORT_KEYS = (
    "command", "instance", "num_vars", "constraints", "total_weight", "average",
    "k", "eps", "verdict", "branch", "witness", "achieved", "optimum", "threshold",
    "kernel_vars", "kernel_constraints", "kernel_k", "kernel_map", "kernel_file",
    "seed", "elapsed_ms",
)


@dataclass
class RunReport:
    command: str
    instance: str
    fields: Dict[str, object] = field(default_factory=dict)
    exit_code: int = EXIT_YES

    def set(self, **values):
        for key, value in values.items():
            if key not in REPORT_KEYS:
                raise KeyError(f"unknown report key {key}")
            self.fields[key] = value

    def get(self, key: str):
        return self.fields.get(key)

    def lines(self) -> List[str]:
        values = {"command": self.command, "instance": self.instance, **self.fields}
        return [f"{key}={_render(values[key])}" for key in REPORT_KEYS if values.get(key) is not None]

    def render(self) -> str:
        return "\n".join(self.lines()) + "\n"


def _render(value) -> str:
    if isinstance(value, Fraction):
        return fraction_str(value)
    if isinstance(value, (tuple, list)):
        return " ".join(str(v) for v in value)
    return str(value)


def _one_based(ordering: Sequence[int]) -> List[int]:
    return [v + 1 for v in ordering]


def _check_witness(reported: int, recomputed: int):
    if reported != recomputed:
        raise RuntimeError(f"witness re-evaluates to {recomputed}, solver reported {reported}")


def _expect(inst, kind: type, command: str):
    if not isinstance(inst, kind):
        raise InstanceError(f"{command} needs a {kind.__name__} instance, got {type(inst).__name__}")
    return inst


def _digest_lin2(report: RunReport, system: Lin2System):
    total = system.total_weight + 2 * system.offset
    report.set(num_vars=system.num_vars, constraints=len(system.equations),
               total_weight=total, average=Fraction(total, 2))


def _digest_csp(report: RunReport, inst: BooleanCspInstance):
    report.set(num_vars=inst.num_vars, constraints=len(inst.constraints),
               total_weight=inst.total_weight, average=boolean_csp.average_weight(inst))


def _digest_ordering(report: RunReport, inst):
    report.set(num_vars=inst.num_vars, constraints=len(inst.constraints),
               total_weight=inst.total_weight, average=perm_ordering.rho_W(inst))


def _verdict(report: RunReport, verdict, weight_of, witness_view=tuple):
    if isinstance(verdict, Yes):
        _check_witness(verdict.achieved_weight, weight_of(verdict.witness))
        report.set(verdict="yes", achieved=verdict.achieved_weight)
        report.exit_code = EXIT_YES
    else:
        _check_witness(verdict.optimum_weight, weight_of(verdict.witness))
        report.set(verdict="no", optimum=verdict.optimum_weight)
        report.exit_code = EXIT_NO
    report.set(branch=verdict.branch, witness=witness_view(verdict.witness))


def cmd_solve_lin2(args, report: RunReport):
    system = _expect(args.inst, Lin2System, args.command)
    _digest_lin2(report, system)
    verdict = lin2_core.solve_aa(system, args.k, guard=args.guard, workers=args.workers)
    report.set(k=args.k, threshold=report.get("average") + Fraction(args.k, 2))
    _verdict(report, verdict, lambda bits: exact_search.lin2_weight(system, bits))


def cmd_kernelize_lin2(args, report: RunReport):
    system = _expect(args.inst, Lin2System, args.command)
    _digest_lin2(report, system)
    report.set(k=args.k, threshold=report.get("average") + Fraction(args.k, 2))
    result = lin2_core.kernelize(system, args.k)
    if isinstance(result, YesCertificate):
        achieved = exact_search.lin2_weight(system, result.assignment)
        report.set(verdict="yes", branch=BRANCH_CERTIFICATE, witness=result.assignment, achieved=achieved)
        return
    write_text_atomic(args.out, serialize_lin2(result.system))
    report.set(verdict="kernel", kernel_vars=result.system.num_vars,
               kernel_constraints=len(result.system.equations),
               kernel_map=_one_based(result.variables), kernel_file=args.out)


def cmd_solve_csp(args, report: RunReport):
    inst = _expect(args.inst, BooleanCspInstance, args.command)
    _digest_csp(report, inst)
    verdict = boolean_csp.solve_csp_aa(inst, args.k, guard=args.guard, workers=args.workers)
    report.set(k=args.k, threshold=report.get("average") + Fraction(args.k, 1 << inst.arity_bound))
    _verdict(report, verdict, lambda bits: exact_search.csp_weight(inst, bits))


def cmd_hybrid_csp(args, report: RunReport):
    inst = _expect(args.inst, BooleanCspInstance, args.command)
    _digest_csp(report, inst)
    eps = parse_fraction(args.eps)
    result = boolean_csp.hybrid_solve(inst, eps, guard=args.guard, workers=args.workers)
    _check_witness(result.weight, exact_search.csp_weight(inst, result.assignment))
    report.set(eps=eps, k=boolean_csp.hybrid_k(inst, eps), witness=result.assignment)
    if isinstance(result, Approx):
        bound = report.get("average") + eps * inst.total_weight / (1 << (inst.arity_bound + 1))
        report.set(verdict="approx", branch=BRANCH_APPROX, achieved=result.weight, threshold=bound)
    else:
        report.set(verdict="exact", branch=BRANCH_EXACT, optimum=result.weight)


def cmd_kernelize_csp(args, report: RunReport):
    inst = _expect(args.inst, BooleanCspInstance, args.command)
    _digest_csp(report, inst)
    report.set(k=args.k, threshold=report.get("average") + Fraction(args.k, 1 << inst.arity_bound))
    result = boolean_csp.kernelize_csp(inst, args.k)
    if isinstance(result, YesCertificate):
        achieved = exact_search.csp_weight(inst, result.assignment)
        report.set(verdict="yes", branch=BRANCH_CERTIFICATE, witness=result.assignment, achieved=achieved)
        return
    write_text_atomic(args.out, serialize_csp(result.instance))
    report.set(verdict="kernel", kernel_vars=result.instance.num_vars,
               kernel_constraints=len(result.instance.constraints), kernel_k=result.k,
               kernel_map=_one_based(result.variables), kernel_file=args.out)


def cmd_solve_ord(args, report: RunReport):
    inst = _expect(args.inst, perm_ordering.OrderingInstance, args.command)
    _digest_ordering(report, inst)
    verdict = perm_ordering.solve_ordering_aa(inst, args.k, guard=args.guard)
    report.set(k=args.k, threshold=report.get("average") + args.k)
    _verdict(report, verdict, lambda order: exact_search.ordering_weight(inst, order), _one_based)


def cmd_solve_perm(args, report: RunReport):
    inst = _expect(args.inst, perm_ordering.PermCspInstance, args.command)
    ordering_inst = perm_ordering.perm_to_linear_ordering(inst)
    report.set(num_vars=inst.num_vars, constraints=len(inst.constraints),
               total_weight=sum(con.weight for con in inst.constraints),
               average=perm_ordering.rho_W(ordering_inst))
    verdict = perm_ordering.solve_perm_aa(inst, args.k, guard=args.guard)
    report.set(k=args.k, threshold=report.get("average") + args.k)
    _verdict(report, verdict, lambda order: exact_search.ordering_weight(ordering_inst, order), _one_based)


def cmd_exact_ord(args, report: RunReport):
    inst = _expect(args.inst, perm_ordering.OrderingInstance, args.command)
    _digest_ordering(report, inst)
    ordering, optimum = exact_search.held_karp_ordering(inst, guard=args.guard)
    _check_witness(optimum, exact_search.ordering_weight(inst, ordering))
    report.set(verdict="exact", branch=BRANCH_HELD_KARP, witness=_one_based(ordering), optimum=optimum)


def cmd_oracle_lin2(args, report: RunReport):
    system = _expect(args.inst, Lin2System, args.command)
    _digest_lin2(report, system)
    bits, optimum = exact_search.brute_force_lin2(system)
    report.set(verdict="exact", branch="oracle", witness=bits, optimum=optimum)


def cmd_oracle_csp(args, report: RunReport):
    inst = _expect(args.inst, BooleanCspInstance, args.command)
    _digest_csp(report, inst)
    bits, optimum = exact_search.brute_force_csp(inst)
    report.set(verdict="exact", branch="oracle", witness=bits, optimum=optimum)


def cmd_oracle_ord(args, report: RunReport):
    inst = _expect(args.inst, perm_ordering.OrderingInstance, args.command)
    _digest_ordering(report, inst)
    ordering, optimum = exact_search.brute_force_ordering(inst)
    report.set(verdict="exact", branch="oracle", witness=_one_based(ordering), optimum=optimum)


COMMANDS = {
    "solve-lin2": (cmd_solve_lin2, "lin2", "k"),
    "kernelize-lin2": (cmd_kernelize_lin2, "lin2", "kernel"),
    "solve-csp": (cmd_solve_csp, "csp", "k"),
    "hybrid-csp": (cmd_hybrid_csp, "csp", "eps"),
    "kernelize-csp": (cmd_kernelize_csp, "csp", "kernel"),
    "solve-ord": (cmd_solve_ord, "ord", "k"),
    "solve-perm": (cmd_solve_perm, "perm", "k"),
    "exact-ord": (cmd_exact_ord, "ord", None),
    "oracle-lin2": (cmd_oracle_lin2, "lin2", None),
    "oracle-csp": (cmd_oracle_csp, "csp", None),
    "oracle-ord": (cmd_oracle_ord, "ord", None),
}


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="Seed for any randomized fallback (solvers are deterministic)")
    common.add_argument("--guard", type=_positive, default=None, help="Variable ceiling for exhaustive search and Held-Karp")
    common.add_argument("--workers", type=_positive, default=None, help="Worker processes for exhaustive search")
    common.add_argument("--quiet", action="store_true", help="Print no report, exit code only")
    common.add_argument("--verbose", action="store_true", help="Log solver decisions to stderr")
    common.add_argument("--metrics-file", default=config.METRICS_FILE, help="Write Prometheus metrics here after the run")

    ap = argparse.ArgumentParser(prog="aa-solve", description="Above-average CSP solvers")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, (_, kind, mode) in COMMANDS.items():
        sp = sub.add_parser(name, parents=[common], help=f"{name} on a '{kind}' instance")
        sp.add_argument("instance", help="Instance file ('-' for stdin, *.gz accepted)")
        if mode in ("k", "kernel"):
            sp.add_argument("--k", type=_positive, required=True, help="Parameter k")
        if mode == "kernel":
            sp.add_argument("--out", required=True, help="Kernel output file")
        if mode == "eps":
            sp.add_argument("--eps", required=True, help="Rational in (0,1], e.g. 1/4")
    return ap


def execute(args: argparse.Namespace) -> RunReport:
    handler, kind, _ = COMMANDS[args.command]
    random.seed(args.seed)
    start = time.time()
    report = RunReport(args.command, args.instance)
    args.inst = parse_instance(read_text(args.instance), kind)
    handler(args, report)
    report.set(seed=args.seed, elapsed_ms=int((time.time() - start) * 1000))
    return report


def run(argv: Sequence[str]) -> RunReport:
    return execute(build_parser().parse_args(list(argv)))


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(sys.argv[1:] if argv is None else list(argv))
    logging.basicConfig(
        level=logging.INFO if args.verbose else config.LOG_LEVEL,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        report = execute(args)
    except ResourceGuardError as exc:
        print(f"error={exc}", file=sys.stderr)
        return EXIT_GUARD
    except (InstanceError, ValueError, OSError) as exc:
        print(f"error={exc}", file=sys.stderr)
        return EXIT_INPUT
    finally:
        if args.metrics_file:
            metrics.write_metrics(args.metrics_file)
    if not args.quiet:
        sys.stdout.write(report.render())
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
