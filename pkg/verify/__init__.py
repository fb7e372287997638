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
    random_graph,
)
from verify.memory import MemoryRow, check_memory, measure_attention_memory
from verify.suite import CHECKS, run_suite, summary, write_report

__all__ = [
    "CHECKS", "MUTATIONS", "MemoryRow", "check_edges", "check_equivariance", "check_gradients",
    "check_igso3", "check_kernel_equivalence", "check_memory", "check_reductions", "check_rigid",
    "check_roundtrips", "measure_attention_memory", "random_graph", "run_suite", "summary",
    "write_report",
]
