import csv
import logging

from errors import ConfigError
from verify.checks import (
    MUTATIONS,
    check_edges,
    check_equivariance,
    check_gradients,
    check_igso3,
    check_kernel_equivalence,
    check_reductions,
    check_rigid,
    check_roundtrips,
)
from verify.memory import check_memory

logger = logging.getLogger(__name__)

CHECKS = {
    "equivariance": check_equivariance,
    "gradients": check_gradients,
    "kernel": check_kernel_equivalence,
    "igso3": check_igso3,
    "reductions": check_reductions,
    "rigid": check_rigid,
    "edges": check_edges,
    "roundtrips": check_roundtrips,
    "memory": check_memory,
}

REPORT_COLUMNS = ("name", "status", "value", "tolerance", "seed", "ms")


def select_checks(only=None):
    names = list(CHECKS) if not only else list(only)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise ConfigError(f"unknown check {unknown[0]!r}. Use one of: {', '.join(CHECKS)}")
    return names


def run_suite(config, seed=0, only=None, inject=None, on_report=None):
    """Run the selected checks in order; ``inject`` names a mutation from MUTATIONS."""
    names = select_checks(only)
    if inject is not None and inject not in MUTATIONS:
        raise ConfigError(f"unknown mutation {inject!r}. Use one of: {', '.join(MUTATIONS)}")
    target = MUTATIONS[inject][0] if inject else None
    reports = []
    for name in names:
        logger.info("running check %s", name)
        result = CHECKS[name](config, seed=seed, mutation=inject if name == target else None)
        reports.append(result)
        if on_report is not None:
            on_report(result)
    return reports


def write_report(target, reports):
    """Write the report CSV to a path or an open text stream."""
    if hasattr(target, "write"):
        _write_rows(target, reports)
        return
    with open(target, "w", newline="") as fh:
        _write_rows(fh, reports)


def _write_rows(fh, reports):
    writer = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in reports:
        writer.writerow(r.to_row())


def summary(reports):
    lines = [f"{r.status.upper():4} {r.name:<13} value={r.value:.3e} tol={r.tolerance:.1e} "
             f"{r.runtime_ms:8.1f} ms  {r.detail}" for r in reports]
    failed = [r for r in reports if not r.passed]
    lines.append(f"{len(reports) - len(failed)}/{len(reports)} checks passed"
                 + (f"; failed: {', '.join(r.name for r in failed)} (seed {failed[0].seed})" if failed else ""))
    return "\n".join(lines)
