"""Batch sweeps behind the CLI: Exel-formula suite, gap calibration and the
spin-triple counterexample sweep."""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .errors import GapAtHalfViolation, GapViolation, NoSpectralGap
from .linalg import dagger, expm_skew, haar_unitary, op_norm, random_skew_hermitian
from .obstruction import RieffelParams, exel_lhs, exel_rhs, rieffel_element
from .reps import RationalPhase, rational_pair_rep
from .search import (
    TRIPLE_PAIRS,
    bott_index_triple,
    trial_seed,
    unitaries_from_selfadjoint,
    voiculescu_triple,
)

log = logging.getLogger(__name__)

EXEL_TOL = 1e-6


def max_workers() -> int:
    env = os.environ.get("ROTLAB_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def parallel_map(fn: Callable, items: Sequence, workers: int | None = None) -> list:
    """Ordered map; results are collected by the caller's thread only."""
    workers = workers or max_workers()
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def perturb(U: np.ndarray, noise: float, rng: np.random.Generator) -> np.ndarray:
    if noise == 0:
        return U.copy()
    return U @ expm_skew(random_skew_hermitian(U.shape[0], noise, rng))


# ---------------------------------------------------------------------------
# Exel trace formula suite


@dataclass
class ExelCase:
    case: int
    p: int
    q: int
    multiplicity: int
    noise: float
    dim: int
    defect: float
    lhs: float | None
    rhs: float | None
    abs_diff: float | None
    quantization_residue: float | None
    status: str

    @property
    def passed(self) -> bool:
        return self.status == "ok"


EXEL_COLUMNS = list(ExelCase.__dataclass_fields__)


def exel_case(u, v, theta: float, tol: Tolerances = DEFAULT_TOL, **info) -> ExelCase:
    """Compare both sides of the trace formula on a pair with u v ≈ e^{2πiθ} v u."""
    N = u.shape[0]
    d = op_norm(u @ v - np.exp(2j * np.pi * theta) * (v @ u))
    base = dict(case=info.get("case", -1), p=info.get("p", -1), q=info.get("q", -1),
                multiplicity=info.get("multiplicity", -1), noise=info.get("noise", float("nan")),
                dim=N, defect=d)
    if d >= 2 - 1e-9:
        return ExelCase(**base, lhs=None, rhs=None, abs_diff=None, quantization_residue=None,
                        status="skipped_defect")
    try:
        rhs = exel_rhs(u, v, theta, tol)
    except GapViolation:
        return ExelCase(**base, lhs=None, rhs=None, abs_diff=None, quantization_residue=None,
                        status="skipped_branch_gap")
    resid = abs(N * rhs - round(N * rhs))
    try:
        lhs = exel_lhs(u, v, theta, tol)
    except GapAtHalfViolation:
        return ExelCase(**base, lhs=None, rhs=rhs, abs_diff=None, quantization_residue=resid,
                        status="skipped_gap_at_half")
    diff = abs(lhs - rhs)
    status = "ok" if diff <= EXEL_TOL and resid <= EXEL_TOL else "failed"
    return ExelCase(**base, lhs=lhs, rhs=rhs, abs_diff=diff, quantization_residue=resid, status=status)


@dataclass(frozen=True)
class ExelGrid:
    cases: int = 200
    q_min: int = 2
    q_max: int = 12
    mult_max: int = 4
    noise_max: float = 1e-2
    seed: int = 0
    # every zero_every-th case is unperturbed
    zero_every: int = 10


def _random_coprime(q: int, rng: np.random.Generator) -> int:
    choices = [p for p in range(1, q) if math.gcd(p, q) == 1]
    return int(rng.choice(choices))


def run_exel_case(grid: ExelGrid, index: int, tol: Tolerances = DEFAULT_TOL) -> ExelCase:
    rng = np.random.default_rng(trial_seed(grid.seed, index))
    q = int(rng.integers(grid.q_min, grid.q_max + 1))
    p = _random_coprime(q, rng)
    m = int(rng.integers(1, grid.mult_max + 1))
    noise = 0.0 if grid.zero_every and index % grid.zero_every == 0 else float(rng.uniform(0, grid.noise_max))
    u1, u2 = rational_pair_rep(RationalPhase(p, q), m)
    W = haar_unitary(q * m, rng)
    u1 = perturb(W @ u1 @ dagger(W), noise, rng)
    u2 = perturb(W @ u2 @ dagger(W), noise, rng)
    # u2 u1 = e^{2πiθ} u1 u2, so (u, v) = (u2, u1)
    return exel_case(u2, u1, p / q, tol, case=index, p=p, q=q, multiplicity=m, noise=noise)


def exel_suite(grid: ExelGrid = ExelGrid(), tol: Tolerances = DEFAULT_TOL, workers: int | None = None) -> list[ExelCase]:
    results = parallel_map(lambda i: run_exel_case(grid, i, tol), list(range(grid.cases)), workers)
    for r in results:
        if r.status.startswith("skipped"):
            log.info("exel case %d skipped: %s", r.case, r.status)
    return results


# ---------------------------------------------------------------------------
# gap-at-1/2 calibration


@dataclass
class GapSample:
    theta: float
    noise: float
    trial: int
    defect: float
    idempotency: float


GAP_COLUMNS = list(GapSample.__dataclass_fields__)


def gap_calibration(
    thetas: Iterable[RationalPhase],
    noises: Sequence[float] = tuple(np.logspace(-5, 0, 21)),
    trials: int = 4,
    multiplicity: int = 2,
    seed: int = 0,
    tol: Tolerances = DEFAULT_TOL,
) -> list[GapSample]:
    """Sample (defect, ‖e² − e‖) for perturbed exact pairs at several noise levels."""
    out = []
    for t_index, th in enumerate(thetas):
        u1, u2 = rational_pair_rep(th, multiplicity)
        params = RieffelParams(th.value)
        for n_index, noise in enumerate(noises):
            for trial in range(trials):
                rng = np.random.default_rng([seed, t_index, n_index, trial])
                a = perturb(u1, float(noise), rng)
                b = perturb(u2, float(noise), rng)
                d = op_norm(b @ a - np.exp(2j * np.pi * th.value) * (a @ b))
                e = rieffel_element(a, b, params, tol)
                out.append(GapSample(th.value, float(noise), trial, d, op_norm(e @ e - e)))
    return out


def calibration_threshold(samples: Sequence[GapSample]) -> float:
    """Largest sampled defect below which every sample keeps ‖e² − e‖ < 1/4."""
    ordered = sorted(samples, key=lambda s: s.defect)
    best = 0.0
    for s in ordered:
        if s.idempotency >= 0.25:
            break
        best = s.defect
    return best


# ---------------------------------------------------------------------------
# counterexample sweep


@dataclass
class CounterexampleRow:
    n: int
    comm_12: float
    comm_13: float
    comm_23: float
    comm_bound: float
    udefect_12: float
    udefect_13: float
    udefect_23: float
    exel_12: float | None
    exel_13: float | None
    exel_23: float | None
    bott_index_triple: int | None
    spectral_gap: float | None
    status: str


COUNTEREXAMPLE_COLUMNS = list(CounterexampleRow.__dataclass_fields__)


def counterexample_row(n: int, tol: Tolerances = DEFAULT_TOL) -> CounterexampleRow:
    H = voiculescu_triple(n)
    U = unitaries_from_selfadjoint(*H, tol=tol)
    comms = [op_norm(H[j] @ H[k] - H[k] @ H[j]) for j, k in TRIPLE_PAIRS]
    udef = [op_norm(U[k] @ U[j] - U[j] @ U[k]) for j, k in TRIPLE_PAIRS]
    try:
        cert = bott_index_triple(*H, tol=tol)
    except NoSpectralGap:
        exel = []
        for j, k in TRIPLE_PAIRS:
            try:
                exel.append(exel_rhs(U[j], U[k], 0.0, tol))
            except GapViolation:
                exel.append(None)
        return CounterexampleRow(n, *comms, 2 / (n - 1), *udef, *exel, None, None, "no_spectral_gap")
    status = "ok" if all(x is not None for x in cert.pairwise_exel) else "exel_gap_violation"
    return CounterexampleRow(n, *comms, 2 / (n - 1), *udef, *cert.pairwise_exel,
                             cert.bott_index_triple, cert.spectral_gap, status)


def counterexample_sweep(n_min: int = 2, n_max: int = 50, tol: Tolerances = DEFAULT_TOL,
                         workers: int | None = None) -> list[CounterexampleRow]:
    if n_min < 2 or n_max < n_min:
        raise ValueError(f"invalid n range {n_min}..{n_max}")
    return parallel_map(lambda n: counterexample_row(n, tol), list(range(n_min, n_max + 1)), workers)


def as_rows(records) -> list[dict]:
    return [asdict(r) for r in records]
