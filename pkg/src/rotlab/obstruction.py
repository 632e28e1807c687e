"""Obstruction invariants for almost rotation-commuting unitaries.

Orientation conventions (checked numerically, see tests/test_obstruction.py):

* ``rieffel_element(u, v)`` = g(u)v* + f(u) + v g(u) is an exact projection
  when v u = e^{2πiθ} u v.  For a tuple this is the pair (v_j, v_k), j < k.
* ``exel_rhs(u, v)`` = (1/2πi) τ(log_θ(u v u* v*)) is read on a pair with
  u v ≈ e^{2πiθ} v u, i.e. (u, v) = (v_k, v_j).  ``exel_lhs(u, v)`` uses the
  same orientation and so evaluates the Rieffel projection on (v, u).
* ``bott_element_theta0(u, v)`` takes functions of v twisted by u, so that its
  index equals N·exel_rhs(u, v, 0).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .errors import (
    DimensionMismatch,
    GapAtHalfViolation,
    GapViolation,
    NoGap,
    ParamViolation,
    RotlabError,
)
from .linalg import (
    HERMITIAN,
    UNITARY,
    check_tuple,
    check_unitary,
    dagger,
    eig_normal,
    func_calc,
    normalized_trace,
    op_norm,
)
from .reps import PhaseMatrix, canonical_trace

TWO_PI = 2 * np.pi


def _phase(theta: float) -> complex:
    return complex(np.exp(2j * np.pi * theta))


def _turns(z: np.ndarray) -> np.ndarray:
    """Angle of points on the circle in turns, in [0, 1)."""
    return np.mod(np.angle(z) / TWO_PI, 1.0)


def _check_branch(theta: float) -> float:
    theta = float(theta)
    if not 0.0 <= theta < 1.0:
        raise ValueError(f"branch angle must lie in [0, 1), got {theta}")
    return theta


# ---------------------------------------------------------------------------
# defect and branch selection


class Defect(NamedTuple):
    max: float
    per_pair: dict


def defect(Theta: PhaseMatrix, tuple_, tol: Tolerances = DEFAULT_TOL) -> Defect:
    """‖v_k v_j − e^{2πiθ_jk} v_j v_k‖ for every j < k, and their maximum."""
    mats = check_tuple(tuple_, Theta.n, tol)
    per_pair = {}
    for j, k in Theta.pairs():
        vj, vk = mats[j], mats[k]
        per_pair[j, k] = op_norm(vk @ vj - _phase(Theta[j, k]) * (vj @ vk))
    return Defect(max(per_pair.values(), default=0.0), per_pair)


def defect_to_turns(delta: float) -> float:
    """Half-width (in turns) of the arc holding sp(W) when ‖W − e^{2πiθ}‖ ≤ delta."""
    if delta >= 2:
        return 0.5
    return math.asin(max(delta, 0.0) / 2) / math.pi


class CommonGap(NamedTuple):
    theta: float
    margin: float  # distance (in turns) from the cut to the nearest arc


def common_gap_from_phases(phases: Sequence[float], delta: float) -> CommonGap:
    """Branch angle whose cut e^{(2πθ+π)i} is the midpoint of the largest free arc.

    Each phase θ contributes the closed arc [θ − δ', θ + δ'] (turns), where δ'
    is ``delta`` (an operator-norm defect) converted by :func:`defect_to_turns`.
    """
    if not len(phases):
        raise ValueError("need at least one phase")
    half = defect_to_turns(delta)
    centers = sorted(float(p) % 1.0 for p in phases)
    best_len, best_mid = -1.0, None
    for i, c in enumerate(centers):
        nxt = centers[(i + 1) % len(centers)] + (1.0 if i == len(centers) - 1 else 0.0)
        gap = (nxt - c) - 2 * half
        if gap > best_len:
            best_len, best_mid = gap, (c + nxt) / 2
    if best_len <= 0:
        raise NoGap(f"arcs of half-width {half:.4f} turns cover the circle")
    theta = (best_mid - 0.5) % 1.0
    if theta >= 1.0:
        theta = 0.0
    return CommonGap(theta, best_len / 2)


def common_gap_theta(Theta: PhaseMatrix, delta: float) -> CommonGap:
    return common_gap_from_phases([Theta[j, k] for j, k in Theta.pairs()], delta)


# ---------------------------------------------------------------------------
# logarithms and the right-hand side of the trace formula


def log_branch(U, branch: float, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """log_θ(U): eigen-angles placed in (2πθ − π, 2πθ + π), cut at 2πθ + π.

    Raises GapViolation when some eigenvalue lies within ``gap_tol`` radians
    of the cut.
    """
    branch = _check_branch(branch)
    U = check_unitary(U, tol)
    dec = eig_normal(U, UNITARY, tol)
    center = TWO_PI * branch
    offset = np.angle(dec.eigenvalues * np.exp(-1j * center))
    dist_to_cut = np.pi - np.abs(offset)
    if dist_to_cut.size and dist_to_cut.min() < tol.gap_tol:
        raise GapViolation(
            f"eigenvalue within {dist_to_cut.min():.2e} rad of the cut of log_{branch:g}"
        )
    V = dec.eigenvectors
    X = (V * (1j * (center + offset))) @ dagger(V)
    return (X - dagger(X)) / 2


def multiplicative_commutator(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return u @ v @ dagger(u) @ dagger(v)


def exel_rhs(u, v, branch: float, tol: Tolerances = DEFAULT_TOL) -> float:
    """(1/2πi) τ(log_θ(u v u* v*))."""
    u = check_unitary(u, tol)
    v = check_unitary(v, tol)
    if u.shape != v.shape:
        raise DimensionMismatch("u and v differ in dimension")
    X = log_branch(multiplicative_commutator(u, v), branch, tol)
    val = normalized_trace(X) / (2j * np.pi)
    if abs(val.imag) > tol.imag_tol:
        raise RotlabError(f"trace of the logarithm has imaginary residue {val.imag:.2e}")
    return float(val.real)


# ---------------------------------------------------------------------------
# Rieffel functions, elements and projections


@dataclass(frozen=True)
class RieffelParams:
    """θ in (0, 1) and ramp width ε with 0 < ε ≤ θ and θ + ε ≤ 1.

    ε defaults to min(θ, 1 − θ, 1/4).
    """

    theta: float
    epsilon: float | None = None

    def __post_init__(self):
        th = float(self.theta)
        if not 0.0 < th < 1.0:
            raise ParamViolation(f"theta must lie in (0, 1), got {th}")
        eps = self.epsilon
        if eps is None:
            eps = min(th, 1.0 - th, 0.25)
        eps = float(eps)
        if not (0.0 < eps <= th and th + eps <= 1.0 + 1e-15):
            raise ParamViolation(f"need 0 < eps <= theta and theta + eps <= 1 (theta={th}, eps={eps})")
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "epsilon", eps)

    def f_turns(self, t):
        th, eps = self.theta, self.epsilon
        t = np.mod(np.asarray(t, dtype=float), 1.0)
        out = np.zeros_like(t)
        up = t <= eps
        flat = (t > eps) & (t <= th)
        down = (t > th) & (t <= th + eps)
        out[up] = t[up] / eps
        out[flat] = 1.0
        out[down] = (th + eps - t[down]) / eps
        return out

    def g_turns(self, t):
        th, eps = self.theta, self.epsilon
        t = np.mod(np.asarray(t, dtype=float), 1.0)
        f = self.f_turns(t)
        out = np.zeros_like(t)
        band = (t >= th) & (t <= th + eps)
        out[band] = np.sqrt(np.clip(f[band] * (1.0 - f[band]), 0.0, None))
        return out


def rieffel_functions(params: RieffelParams) -> tuple[Callable, Callable]:
    """The pair (f, g) as functions of points z on the unit circle."""
    return (lambda z: params.f_turns(_turns(z))), (lambda z: params.g_turns(_turns(z)))


def rieffel_identity_residuals(params: RieffelParams, n_grid: int = 10_000) -> tuple[float, float, float]:
    """Max pointwise violation of the three identities making e^θ a projection.

    With the ramps above, the identities hold with the shifts oriented as

        (1) g(t) g(t − θ) = 0
        (2) g(t) [f(t) + f(t − θ)] = g(t)
        (3) f(t) = f(t)² + g(t)² + g(t + θ)²

    which is the orientation matching a pair with v u = e^{2πiθ} u v.
    """
    t = np.linspace(0.0, 1.0, n_grid, endpoint=False)
    th = params.theta
    f, g = params.f_turns, params.g_turns
    r1 = np.max(np.abs(g(t) * g(t - th)))
    r2 = np.max(np.abs(g(t) * (f(t) + f(t - th)) - g(t)))
    r3 = np.max(np.abs(f(t) ** 2 + g(t) ** 2 + g(t + th) ** 2 - f(t)))
    return float(r1), float(r2), float(r3)


def rieffel_element(u, v, params: RieffelParams, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """e^θ(u, v) = g(u) v* + f(u) + v g(u); Hermitian for any unitaries."""
    u = check_unitary(u, tol)
    v = check_unitary(v, tol)
    if u.shape != v.shape:
        raise DimensionMismatch("u and v differ in dimension")
    dec = eig_normal(u, UNITARY, tol)
    f, g = rieffel_functions(params)
    F = func_calc(u, UNITARY, f, tol, decomposition=dec)
    G = func_calc(u, UNITARY, g, tol, decomposition=dec)
    e = G @ dagger(v) + F + v @ G
    return (e + dagger(e)) / 2


class SpectralProjection(NamedTuple):
    projection: np.ndarray
    rank: int
    margin: float  # min |λ − 1/2| over the spectrum of the almost-projection
    idempotency: float  # ‖e² − e‖


def projection_above_half(e: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> SpectralProjection:
    """χ_{(1/2, ∞)}(e) for a Hermitian almost-projection e with ‖e² − e‖ < 1/4."""
    idem = op_norm(e @ e - e)
    if not idem < 0.25:
        raise GapAtHalfViolation(f"‖e² − e‖ = {idem:.4f} is not below 1/4")
    dec = eig_normal(e, HERMITIAN, tol)
    lam = dec.eigenvalues.real
    margin = float(np.min(np.abs(lam - 0.5))) if lam.size else math.inf
    if margin < tol.gap_tol:
        raise GapAtHalfViolation(f"eigenvalue within {margin:.2e} of 1/2")
    above = lam > 0.5
    V = dec.eigenvectors[:, above]
    P = V @ dagger(V)
    return SpectralProjection((P + dagger(P)) / 2, int(above.sum()), margin, idem)


def rieffel_projection(u, v, params: RieffelParams, tol: Tolerances = DEFAULT_TOL) -> SpectralProjection:
    """R^θ(u, v): spectral projection of e^θ(u, v) above 1/2."""
    return projection_above_half(rieffel_element(u, v, params, tol), tol)


# ---------------------------------------------------------------------------
# theta = 0: the Bott element


def _wrap_turns(t):
    return np.mod(np.asarray(t, dtype=float) + 0.5, 1.0) - 0.5


def bott_functions() -> tuple[Callable, Callable, Callable]:
    """Tent f peaked at angle 0 and bumps g (upper half), h (lower half).

    f² + g² + h² = f and g h = 0 pointwise, which makes the block matrix in
    :func:`bott_element_theta0` a projection for commuting arguments.
    """

    def f(z):
        return 1.0 - 2.0 * np.abs(_wrap_turns(_turns(z)))

    def bump(z, upper):
        w = _wrap_turns(_turns(z))
        fz = 1.0 - 2.0 * np.abs(w)
        side = (w >= 0) if upper else (w < 0)
        return np.where(side, np.sqrt(np.clip(fz * (1.0 - fz), 0.0, None)), 0.0)

    return f, (lambda z: bump(z, True)), (lambda z: bump(z, False))


class BottElement(NamedTuple):
    matrix: np.ndarray
    projection_rank: int
    index: int
    margin: float
    idempotency: float


def bott_element_theta0(u, v, tol: Tolerances = DEFAULT_TOL) -> BottElement:
    """Bott almost-projection of an almost commuting pair and its integer index.

        e = [[ f(v),          g(v) + h(v) u ],
             [ g(v) + u* h(v), 1 − f(v)     ]]

    index = rank χ_{(1/2,∞)}(e) − N, which agrees with N·exel_rhs(u, v, 0).
    """
    u = check_unitary(u, tol)
    v = check_unitary(v, tol)
    if u.shape != v.shape:
        raise DimensionMismatch("u and v differ in dimension")
    N = u.shape[0]
    dec = eig_normal(v, UNITARY, tol)
    f, g, h = bott_functions()
    F, G, H = (func_calc(v, UNITARY, fn, tol, decomposition=dec) for fn in (f, g, h))
    off = G + H @ u
    e = np.block([[F, off], [dagger(off), np.eye(N) - F]])
    e = (e + dagger(e)) / 2
    sp = projection_above_half(e, tol)
    return BottElement(e, sp.rank, sp.rank - N, sp.margin, sp.idempotency)


# ---------------------------------------------------------------------------
# left-hand side of the trace formula


def exel_lhs(u, v, theta, tol: Tolerances = DEFAULT_TOL) -> float:
    """τ of the K_0 class attached to the pair (u, v) with u v ≈ e^{2πiθ} v u.

    ``theta`` is a RieffelParams or a float; θ = 0 uses the Bott element.
    """
    if isinstance(theta, RieffelParams):
        params = theta
    else:
        theta = float(theta)
        if theta == 0.0:
            b = bott_element_theta0(u, v, tol)
            return b.index / np.asarray(u).shape[0]
        params = RieffelParams(theta)
    sp = rieffel_projection(v, u, params, tol)
    return sp.rank / np.asarray(u).shape[0]


# ---------------------------------------------------------------------------
# the full report


def monomial_deviation(Theta: PhaseMatrix, tuple_, n_max: int) -> float:
    """max over |l_j| ≤ n_max of |τ(v_1^{l_1} ... v_n^{l_n}) − τ_Θ(u^l)|."""
    mats = [np.asarray(v, dtype=complex) for v in tuple_]
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    N = mats[0].shape[0]
    powers = []
    for v in mats:
        table = {0: np.eye(N, dtype=complex)}
        vd = dagger(v)
        for l in range(1, n_max + 1):
            table[l] = table[l - 1] @ v
            table[-l] = table[-l + 1] @ vd
        powers.append(table)
    worst = 0.0
    rng = range(-n_max, n_max + 1)
    def walk(level, acc, exps):
        nonlocal worst
        if level == len(mats) - 1:
            last = powers[level]
            for l in rng:
                # τ(acc @ last[l]) without forming the product
                val = np.vdot(dagger(acc), last[l]) / N
                dev = abs(val - canonical_trace(Theta, exps + [l]))
                worst = max(worst, dev)
            return
        for l in rng:
            walk(level + 1, acc @ powers[level][l], exps + [l])

    walk(0, np.eye(N, dtype=complex), [])
    return float(worst)


OBSTRUCTED = "obstructed"
UNOBSTRUCTED = "unobstructed"
INDETERMINATE = "indeterminate"


@dataclass
class PairReport:
    j: int
    k: int
    theta: float
    defect: float
    branch_theta: float | None
    common_branch_theta: float | None
    exel_rhs: float | None
    exel_rhs_common: float | None
    exel_lhs: float | None
    rieffel_rank: int | None
    bott_index: int | None
    trace_condition_residual: float | None
    flags: list = field(default_factory=list)

    @property
    def well_defined(self) -> bool:
        return self.exel_rhs is not None


@dataclass
class ObstructionReport:
    n: int
    dim: int
    defect_max: float
    pairs: list
    monomial_deviation: float
    n_monomial: int
    delta_cert: float
    verdict: str

    def pair(self, j: int, k: int) -> PairReport:
        for p in self.pairs:
            if (p.j, p.k) == (j, k):
                return p
        raise KeyError((j, k))

    def to_dict(self) -> dict:
        return asdict(self)


CSV_COLUMNS = [
    "j", "k", "theta", "defect", "branch_theta", "common_branch_theta",
    "exel_rhs", "exel_rhs_common", "exel_lhs", "rieffel_rank", "bott_index",
    "trace_condition_residual", "flags", "defect_max", "monomial_deviation",
    "n_monomial", "delta_cert", "verdict",
]


def report_csv_rows(report: ObstructionReport) -> list[dict]:
    rows = []
    for p in report.pairs:
        row = {c: getattr(p, c) for c in CSV_COLUMNS[:12]}
        row["flags"] = ";".join(p.flags)
        row.update(
            defect_max=report.defect_max,
            monomial_deviation=report.monomial_deviation,
            n_monomial=report.n_monomial,
            delta_cert=report.delta_cert,
            verdict=report.verdict,
        )
        rows.append(row)
    return rows


def _pair_report(Theta, mats, j, k, d_jk, common, tol) -> PairReport:
    theta = Theta[j, k]
    vj, vk = mats[j], mats[k]
    rep = PairReport(j, k, theta, d_jk, None, common.theta if common else None,
                     None, None, None, None, None, None)
    # own branch first: its cut is antipodal to e^{2πiθ_jk}, so it is usable whenever d < 2
    for branch, label in ((theta, "own"), (common.theta if common else None, "common")):
        if branch is None:
            continue
        try:
            val = exel_rhs(vk, vj, branch, tol)
        except GapViolation:
            rep.flags.append(f"gap_violation_{label}_branch")
            continue
        if label == "own":
            rep.branch_theta, rep.exel_rhs = branch, val
        else:
            rep.exel_rhs_common = val
            if rep.exel_rhs is None:
                rep.branch_theta, rep.exel_rhs = branch, val
    if rep.exel_rhs is not None:
        if rep.branch_theta == theta:
            rep.trace_condition_residual = abs(rep.exel_rhs - theta)
        else:
            # common branch values may sit one turn away from θ_jk
            diff = rep.exel_rhs - theta
            rep.trace_condition_residual = abs(diff - round(diff))
    try:
        if theta == 0.0:
            b = bott_element_theta0(vk, vj, tol)
            rep.bott_index = b.index
            rep.exel_lhs = b.index / vj.shape[0]
        else:
            sp = rieffel_projection(vj, vk, RieffelParams(theta), tol)
            rep.rieffel_rank = sp.rank
            rep.exel_lhs = sp.rank / vj.shape[0]
    except GapAtHalfViolation:
        rep.flags.append("no_gap_at_half")
    return rep


def obstruction_report(
    Theta: PhaseMatrix,
    tuple_,
    n_monomial: int = 3,
    delta_cert: float = 1e-6,
    tol: Tolerances = DEFAULT_TOL,
) -> ObstructionReport:
    """Evaluate the three stability conditions on a tuple of unitaries.

    Verdict: ``obstructed`` if some pair with a well-defined logarithm has
    trace-condition residual above ``delta_cert``; otherwise ``indeterminate``
    if some pair's logarithm is undefined; otherwise ``unobstructed`` when the
    monomial trace deviation is also within ``delta_cert``.
    """
    mats = check_tuple(tuple_, Theta.n, tol)
    d = defect(Theta, mats, tol)
    try:
        common = common_gap_theta(Theta, d.max)
    except NoGap:
        common = None
    pairs = [_pair_report(Theta, mats, j, k, d.per_pair[j, k], common, tol) for j, k in Theta.pairs()]
    mono = monomial_deviation(Theta, mats, n_monomial)

    if any(p.well_defined and p.trace_condition_residual > delta_cert for p in pairs):
        verdict = OBSTRUCTED
    elif any(not p.well_defined for p in pairs):
        verdict = INDETERMINATE
    elif mono <= delta_cert:
        verdict = UNOBSTRUCTED
    else:
        verdict = INDETERMINATE
    return ObstructionReport(
        n=Theta.n,
        dim=mats[0].shape[0],
        defect_max=d.max,
        pairs=pairs,
        monomial_deviation=mono,
        n_monomial=n_monomial,
        delta_cert=delta_cert,
        verdict=verdict,
    )
