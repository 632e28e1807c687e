import numpy as np
import pytest

from rotlab.experiments import (
    ExelGrid,
    calibration_threshold,
    counterexample_row,
    exel_case,
    exel_suite,
    gap_calibration,
    parallel_map,
    run_exel_case,
)
from rotlab.reps import RationalPhase, rational_pair_rep


def test_parallel_matches_serial():
    grid = ExelGrid(cases=12, seed=3)
    serial = exel_suite(grid, workers=1)
    threaded = exel_suite(grid, workers=4)
    assert serial == threaded
    assert parallel_map(lambda x: x * x, list(range(10)), workers=3) == [x * x for x in range(10)]


def test_unperturbed_cases_are_exact():
    grid = ExelGrid(cases=40, seed=1)
    for i in range(0, 40, grid.zero_every):
        c = run_exel_case(grid, i)
        assert c.noise == 0 and c.status == "ok"
        assert c.lhs == pytest.approx(c.p / c.q, abs=1e-12)
        assert c.rhs == pytest.approx(c.p / c.q, abs=1e-12)


def test_exel_case_skips_meaningless_pairs():
    assert exel_case(np.eye(2), -np.eye(2), 0.5).status == "skipped_defect"
    u1, u2 = rational_pair_rep(RationalPhase(1, 2))
    assert exel_case(u1, u2, 0.0).status in ("skipped_branch_gap", "skipped_defect")


def test_gap_calibration_small():
    samples = gap_calibration([RationalPhase(1, 3)], noises=[1e-4, 1e-2, 1.0], trials=2)
    assert len(samples) == 6
    thr = calibration_threshold(samples)
    assert all(s.idempotency < 0.25 for s in samples if s.defect <= thr)


def test_counterexample_row_n2():
    row = counterexample_row(2)
    assert row.bott_index_triple == 1
    assert row.comm_12 == pytest.approx(2.0)
    assert row.status in ("ok", "exel_gap_violation", "no_spectral_gap")
