import numpy as np
import pytest

from feod.bench import (
    CSV_COLUMNS,
    GRID,
    BenchConfig,
    BenchRecord,
    count_ops,
    parse_csv,
    ratio,
    report,
    run_bench,
)
from feod.qfunction import PLaplacianParams


@pytest.fixture(scope="module")
def records():
    return run_bench(BenchConfig(n=2, runs=2))


def test_grid_complete(records):
    assert len(records) == 3 * len(GRID)
    for r in records:
        assert r.time_per_element_s > 0
        assert r.mesh_elements == 48 and r.runs == 2
        assert (r.tape_peak_nodes > 0) == (r.mode == "reverse")


def test_empty_report():
    assert report([]) == ",".join(CSV_COLUMNS) + "\n"


def test_csv_round_trip(records):
    text = report(records, "csv")
    assert text.splitlines()[0] == "order,strategy,mode,time_per_element_s,ops_per_element,tape_peak_nodes,runs,mesh_elements"
    assert parse_csv(text) == records
    with pytest.raises(ValueError):
        parse_csv("a,b\n1,2\n")


def test_table_layout(records):
    table = report(records, "table")
    assert "K_e in R^4x4" in table and "K_e in R^10x10" in table and "K_e in R^20x20" in table
    assert table.count("ref KFLOP") == 3
    assert "overhead vs HND" in table
    with pytest.raises(ValueError):
        report(records, "xml")


def test_trends(records):
    r = [ratio(records, o) for o in (1, 2, 3)]
    assert r[0] >= 2 and r[2] >= 5 and r[0] < r[1] < r[2]
    for o in (1, 2, 3):
        hnd = ratio(records, o, ("hnd", "none"), ("res", "forward"))
        assert hnd <= 1.0
    for o in (2, 3):
        assert ratio(records, o, ("elm", "reverse"), ("res", "reverse"), "tape_peak_nodes") > 1


def test_counting_deterministic():
    prm = PLaplacianParams()
    assert count_ops(2, "elm", "forward", prm) == count_ops(2, "elm", "forward", prm)
    # counts are per element: independent of how many elements are batched
    assert count_ops(1, "res", "forward", prm, n=1) == count_ops(1, "res", "forward", prm, n=2)


def test_config_validation():
    with pytest.raises(ValueError):
        BenchConfig(n=0).validate()
    with pytest.raises(ValueError):
        BenchConfig(orders=(4,)).validate()
    with pytest.raises(ValueError):
        BenchConfig(combos=(("elm", "none"),)).validate()
    with pytest.raises(ValueError):
        BenchConfig(n=64).validate()
    BenchConfig().validate()


def test_threaded_run():
    recs = run_bench(BenchConfig(n=2, runs=1, orders=(1,), combos=(("res", "forward"),), threads=2,
                                 chunk=8))
    assert len(recs) == 1 and recs[0].time_per_element_s > 0
