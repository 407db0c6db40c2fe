"""
metrics.py
Prometheus counters for solver branches and kernel sizes, plus the summary of
the ordering kernel-size checks. Nothing is served over HTTP; the registry can
be dumped to a text file for node-exporter style collection.
"""

from typing import Dict

from prometheus_client import CollectorRegistry, Counter, Histogram, write_to_textfile

REGISTRY = CollectorRegistry()

SOLVER_RUNS = Counter(
    "aa_solver_runs", "Solver runs by branch taken", ["solver", "branch"], registry=REGISTRY
)
KERNEL_VARIABLES = Histogram(
    "aa_kernel_variables", "Occurring variables on kernel branches", ["solver"],
    buckets=(1, 2, 4, 8, 12, 16, 20, 24, 30, 40, 60, 100, 250),
    registry=REGISTRY,
)
ORDERING_KERNEL_CHECKS = Counter(
    "aa_ordering_kernel_checks", "Ordering No-branch kernel size checks", ["bound", "outcome"],
    registry=REGISTRY,
)

BOUNDS = ("hard21", "soft15", "soft10")


def record_branch(solver: str, branch: str):
    SOLVER_RUNS.labels(solver=solver, branch=branch).inc()


def observe_kernel(solver: str, num_vars: int):
    KERNEL_VARIABLES.labels(solver=solver).observe(num_vars)


def record_kernel_check(bound: str, ok: bool):
    ORDERING_KERNEL_CHECKS.labels(bound=bound, outcome="ok" if ok else "violated").inc()


def kernel_summary() -> Dict[str, int]:
    """Counts of ordering kernel checks, keyed '<bound>.<outcome>'."""
    out = {}
    for bound in BOUNDS:
        for outcome in ("ok", "violated"):
            value = REGISTRY.get_sample_value(
                "aa_ordering_kernel_checks_total", {"bound": bound, "outcome": outcome}
            )
            out[f"{bound}.{outcome}"] = int(value or 0)
    return out


def branch_count(solver: str, branch: str) -> int:
    value = REGISTRY.get_sample_value("aa_solver_runs_total", {"solver": solver, "branch": branch})
    return int(value or 0)


def write_metrics(path: str):
    write_to_textfile(path, REGISTRY)
