import io

import pytest

from errors import ConfigError
from verify import (
    CHECKS,
    MUTATIONS,
    check_edges,
    check_memory,
    check_roundtrips,
    measure_attention_memory,
    run_suite,
    summary,
    write_report,
)
from verify.memory import memory_table
from verify.suite import REPORT_COLUMNS, select_checks


def test_every_mutation_targets_a_check():
    assert {target for target, _ in MUTATIONS.values()} <= set(CHECKS)


def test_edge_fixtures(tiny_config):
    report = check_edges(tiny_config)
    assert report.passed and report.value == 0.0
    caught = check_edges(tiny_config, mutation="edge-threshold")
    assert not caught.passed
    assert "1.0 A -> 2" in caught.detail


def test_round_trips(tiny_config):
    assert check_roundtrips(tiny_config).passed
    caught = check_roundtrips(tiny_config, mutation="xyz-low-precision")
    assert not caught.passed and "xyz deviation" in caught.detail


def test_memory_growth(tiny_config):
    rows = measure_attention_memory((64, 256), tiny_config.model)
    assert rows[1].naive_bytes == 16 * rows[0].naive_bytes
    assert rows[1].tiled_bytes == 4 * rows[0].tiled_bytes
    assert memory_table(rows).splitlines()[0].split() == ["N", "naive", "bytes", "tiled", "bytes"]
    assert check_memory(tiny_config, sizes=(64, 256)).passed
    assert not check_memory(tiny_config, sizes=(64, 256), mutation="naive-tiles").passed
    with pytest.raises(ValueError, match="ascending"):
        measure_attention_memory((256, 64), tiny_config.model)


def test_memory_counts_every_scratch_buffer(tiny_config):
    model = tiny_config.model
    n, tile, f64 = 64, 16, 8
    row = measure_attention_memory((n,), model, tile=tile)[0]
    # distances, R and the bias, then scores, logits and weights per head
    assert row.naive_bytes == f64 * n * n * (3 + 3 * model.S)
    # running max, sum and value accumulator, then one tile of displacements,
    # bias, scores, logits and weights
    running = f64 * n * (2 * model.S + 4 * model.h)
    per_tile = f64 * n * tile * (3 + 1 + 3 * model.S)
    assert row.tiled_bytes == running + per_tile


def test_run_suite_selection_and_report(tiny_config):
    seen = []
    reports = run_suite(tiny_config, seed=3, only=["edges", "rigid"], on_report=seen.append)
    assert [r.name for r in reports] == ["edges", "rigid"]
    assert seen == reports
    assert all(r.seed == 3 for r in reports)

    buffer = io.StringIO()
    write_report(buffer, reports)
    lines = buffer.getvalue().splitlines()
    assert lines[0] == ",".join(REPORT_COLUMNS)
    assert [line.split(",")[:2] for line in lines[1:]] == [["edges", "pass"], ["rigid", "pass"]]
    assert summary(reports).splitlines()[-1] == "2/2 checks passed"


def test_injected_mutation_only_reaches_its_check(tiny_config, tmp_path):
    reports = run_suite(tiny_config, only=["edges", "rigid"], inject="inertia-sign")
    assert [r.passed for r in reports] == [True, False]
    assert summary(reports).splitlines()[-1] == "1/2 checks passed; failed: rigid (seed 0)"
    path = tmp_path / "report.csv"
    write_report(path, reports)
    assert path.read_text().splitlines()[2].startswith("rigid,fail,")


def test_unknown_names(tiny_config):
    assert select_checks() == list(CHECKS)
    with pytest.raises(ConfigError, match="unknown check 'speed'"):
        select_checks(["speed"])
    with pytest.raises(ConfigError, match="unknown mutation"):
        run_suite(tiny_config, only=["edges"], inject="flip-everything")
