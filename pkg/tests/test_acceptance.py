"""Acceptance criteria 1-9, each at its stated tolerance.

Every test prints one ``ACCEPTANCE <n>: PASS|FAIL`` line (visible under
``pytest -v`` as well as ``-s``) before asserting.
"""

import time

import numpy as np
import pytest
from scipy.stats import spearmanr

from rotlab.experiments import (
    ExelGrid,
    calibration_threshold,
    counterexample_sweep,
    exel_suite,
    gap_calibration,
    parallel_map,
    perturb,
)
from rotlab.linalg import dagger, haar_unitary
from rotlab.obstruction import RieffelParams, exel_lhs, obstruction_report, rieffel_identity_residuals, rieffel_projection
from rotlab.reps import PhaseMatrix, RationalPhase, clock_matrix, nondegeneracy_check, rational_pair_rep, shift_matrix
from rotlab.search import SearchConfig, plant_instance, repair, trial_seed

from test_search import gradient_rel_error


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} - {detail}")
        assert ok, detail
    return emit


def test_criterion_1_exel_trace_formula(verdict):
    t0 = time.perf_counter()
    cases = exel_suite(ExelGrid(cases=200, q_min=2, q_max=12, mult_max=4, noise_max=1e-2, seed=0))
    elapsed = time.perf_counter() - t0
    checked = [c for c in cases if c.status in ("ok", "failed")]
    worst_diff = max(c.abs_diff for c in checked)
    worst_quant = max(c.quantization_residue for c in checked)
    ok = (len(cases) >= 200 and all(c.status == "ok" for c in checked)
          and worst_diff <= 1e-6 and worst_quant <= 1e-6 and elapsed < 60)
    verdict(1, ok, f"{len(checked)}/{len(cases)} cases checked, max |lhs-rhs| {worst_diff:.2e}, "
                   f"max quantization residue {worst_quant:.2e}, {elapsed:.1f}s")


def test_criterion_2_trace_of_rieffel_projection(verdict):
    worst, bad = 0.0, []
    for p, q in [(1, 2), (1, 3), (2, 5), (3, 7)]:
        for m in (1, 2, 3):
            u1, u2 = rational_pair_rep(RationalPhase(p, q), m)
            # u2 u1 = e^{2πiθ} u1 u2, so (u, v) = (u2, u1)
            lhs = exel_lhs(u2, u1, p / q)
            rank = rieffel_projection(u1, u2, RieffelParams(p / q)).rank
            worst = max(worst, abs(lhs - p / q))
            if rank != p * m:
                bad.append((p, q, m, rank))
    verdict(2, worst <= 1e-10 and not bad, f"max |lhs - p/q| {worst:.1e}, rank mismatches {bad}")


def test_criterion_3_rieffel_identities(verdict):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(50):
        theta = float(rng.uniform(0.01, 0.99))
        eps = float(rng.uniform(0.01, 1.0)) * min(theta, 1 - theta)
        worst = max(worst, *rieffel_identity_residuals(RieffelParams(theta, eps), n_grid=10_000))
    verdict(3, worst <= 1e-12, f"max violation {worst:.1e} over 50 (theta, eps) on a 1e4 grid")


# pinned reading of "monotonically within sampling noise" (see the notes):
# Spearman rank correlation of (defect, ‖e²−e‖) ≥ 0.9 below the threshold, no noise-level
# median above 1.5× the next larger level's median, smallest-noise median ≤ 1e-4
GAP_RHO_MIN = 0.9
GAP_MEDIAN_SLACK = 1.5
GAP_FLOOR = 1e-4


def test_criterion_4_gap_at_half(verdict):
    lines, ok = [], True
    for th in [RationalPhase(1, 2), RationalPhase(1, 3), RationalPhase(2, 5), RationalPhase(3, 7), RationalPhase(1, 5)]:
        samples = gap_calibration([th])
        thr = calibration_threshold(samples)
        below = [s for s in samples if s.defect <= thr]
        bound_holds = thr > 0 and all(s.idempotency < 0.25 for s in below)
        levels = sorted({s.noise for s in below})
        med = [np.median([s.idempotency for s in below if s.noise == n]) for n in levels]
        rho = spearmanr([s.defect for s in below], [s.idempotency for s in below])[0]
        ratio = max(med[i] / med[i + 1] for i in range(len(med) - 1))
        this = bound_holds and rho >= GAP_RHO_MIN and ratio <= GAP_MEDIAN_SLACK and med[0] <= GAP_FLOOR
        ok &= this
        lines.append(f"{th}: threshold {thr:.2f}, rho {rho:.3f}, median ratio {ratio:.2f}, floor {med[0]:.1e}")
    verdict(4, ok, "; ".join(lines))


def test_criterion_5_spin_triple_counterexample(verdict):
    t0 = time.perf_counter()
    rows = counterexample_sweep(2, 50)
    elapsed = time.perf_counter() - t0
    gapped = [r for r in rows if r.bott_index_triple is not None]
    index_ok = len(gapped) == len(rows) and all(r.bott_index_triple == 1 for r in gapped)
    exel_vals = [abs(x) for r in rows if r.n >= 8 for x in (r.exel_12, r.exel_13, r.exel_23)]
    exel_ok = all(x is not None for x in exel_vals) and max(exel_vals) <= 1e-8
    comm_ok = all(max(r.comm_12, r.comm_13, r.comm_23) <= 2 / (r.n - 1) + 1e-12 for r in rows)
    verdict(5, index_ok and exel_ok and comm_ok and elapsed < 120,
            f"indices {sorted({r.bott_index_triple for r in rows})} on {len(gapped)}/{len(rows)} gapped n, "
            f"max pairwise exel (n>=8) {max(exel_vals):.1e}, commutator bound holds: {comm_ok}, {elapsed:.1f}s")


def _planted_trial(index):
    Theta = PhaseMatrix.rational(3, ["1/2", "1/3", "1/5"])
    tuple_, _ = plant_instance(Theta, 1, 1e-3, seed=trial_seed(0, index))
    res = repair(Theta, tuple_, SearchConfig(seed=index))
    return res.converged and res.final_defect <= 1e-10 and res.distance_moved <= 1e-2, res.distance_moved


def test_criterion_6_planted_repair(verdict):
    t0 = time.perf_counter()
    results = parallel_map(_planted_trial, list(range(100)))
    elapsed = time.perf_counter() - t0
    wins = sum(ok for ok, _ in results)
    verdict(6, wins >= 90 and elapsed < 600,
            f"{wins}/100 converged to defect <= 1e-10 with distance <= 1e-2 "
            f"(max distance {max(d for _, d in results):.2e}), {elapsed:.1f}s")


def test_criterion_7_necessity(verdict):
    zero = PhaseMatrix.rational(2, [0])
    worst_resid, violations = 0.0, []
    for q in range(4, 13):
        pair = [shift_matrix(q), clock_matrix(q)]
        rep = obstruction_report(zero, pair)
        worst_resid = max(worst_resid, abs(rep.pairs[0].trace_condition_residual - 1 / q))
        starts = [pair]
        for s in range(3):
            rng = np.random.default_rng([q, s])
            W = haar_unitary(q, rng)
            starts.append([perturb(W @ V @ dagger(W), 1e-2, rng) for V in pair])
        for start in starts:
            res = repair(zero, start, SearchConfig(mu=1.0))
            if res.converged and res.distance_moved < 0.05:
                violations.append((q, res.distance_moved))
    verdict(7, worst_resid <= 1e-10 and not violations,
            f"max |residual - 1/q| {worst_resid:.1e} for q=4..12, close repairs found: {violations}")


def test_criterion_8_gradient(verdict):
    errors = [gradient_rel_error(1000 + i) for i in range(20)]
    verdict(8, max(errors) <= 1e-6, f"max relative error {max(errors):.1e} over 20 instances")


def test_criterion_9_nondegeneracy(verdict):
    rational = PhaseMatrix.rational(3, ["1/2", "1/3", "1/5"])
    irrational = PhaseMatrix.from_exact(3, ["1", "sqrt2", "sqrt3"], [[0, 1, 0], [0, 0, 1], ["1/2", 0, 0]])
    repeated = PhaseMatrix.from_exact(3, ["1", "sqrt2"], [[0, 1]] * 3)
    got = [nondegeneracy_check(t) for t in (rational, irrational, repeated)]
    labels = [g.label for g in got]
    dims = [g.q_dimension for g in got]
    verdict(9, labels == ["degenerate", "nondegenerate", "degenerate"] and dims == [1, 3, 2],
            f"labels {labels}, rational ranks {dims}")
