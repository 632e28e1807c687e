"""Constructive repair of almost rotation-commuting tuples, planted instances,
and the spin-triple counterexample with its integer certificate."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, lsqr

from .config import DEFAULT_TOL, Tolerances
from .errors import (
    DimensionMismatch,
    Diverged,
    GapViolation,
    NormTooLarge,
    NoSpectralGap,
)
from .linalg import (
    HERMITIAN,
    check_tuple,
    dagger,
    expm_skew,
    func_calc,
    haar_unitary,
    op_norm,
    random_skew_hermitian,
    unitarity_residual,
)
from .obstruction import defect, exel_rhs
from .reps import PhaseMatrix, rational_rep

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SearchConfig:
    mu: float = 1.0
    max_iters: int = 5000
    step_init: float = 1.0
    armijo_c: float = 1e-4
    defect_target: float = 1e-10
    seed: int = 0
    # the penalty weight used at iteration k is mu * mu_decay**k
    mu_decay: float = 0.5

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("mu must be nonnegative")
        if not self.defect_target > 0:
            raise ValueError("defect_target must be positive")
        if not self.step_init > 0:
            raise ValueError("step_init must be positive")
        if not 0 < self.armijo_c < 1:
            raise ValueError("armijo_c must lie in (0, 1)")
        if not 0 <= self.mu_decay <= 1:
            raise ValueError("mu_decay must lie in [0, 1]")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")


@dataclass
class SearchResult:
    repaired: list
    final_defect: float
    distance_moved: float
    iterations: int
    converged: bool
    objective_trace: list = field(default_factory=list)
    status: str = ""

    def to_dict(self, include_matrices: bool = False) -> dict:
        out = asdict(self)
        out.pop("repaired")
        if include_matrices:
            from .io import matrix_to_json

            out["repaired"] = [matrix_to_json(U) for U in self.repaired]
        return out


# ---------------------------------------------------------------------------
# objective and gradient


def _phases(Theta: PhaseMatrix) -> dict:
    return {(j, k): complex(np.exp(2j * np.pi * Theta[j, k])) for j, k in Theta.pairs()}


def objective(Theta: PhaseMatrix, tuple_, anchor, mu: float) -> float:
    """Σ_{j<k} ‖v_k v_j − e^{2πiθ_jk} v_j v_k‖_F² + mu Σ_j ‖v_j − a_j‖_F²."""
    total = 0.0
    for (j, k), c in _phases(Theta).items():
        R = tuple_[k] @ tuple_[j] - c * (tuple_[j] @ tuple_[k])
        total += float(np.vdot(R, R).real)
    if mu:
        for V, A in zip(tuple_, anchor):
            D = V - A
            total += mu * float(np.vdot(D, D).real)
    return total


def euclidean_gradient(Theta: PhaseMatrix, tuple_, anchor, mu: float) -> list[np.ndarray]:
    grads = [np.zeros_like(V) for V in tuple_]
    for (j, k), c in _phases(Theta).items():
        vj, vk = tuple_[j], tuple_[k]
        R = vk @ vj - c * (vj @ vk)
        cc = np.conj(c)
        grads[j] += 2 * (dagger(vk) @ R - cc * (R @ dagger(vk)))
        grads[k] += 2 * (R @ dagger(vj) - cc * (dagger(vj) @ R))
    if mu:
        for g, V, A in zip(grads, tuple_, anchor):
            g += 2 * mu * (V - A)
    return grads


def _skew(X: np.ndarray) -> np.ndarray:
    return (X - dagger(X)) / 2


def riemannian_gradient(Theta: PhaseMatrix, tuple_, anchor, mu: float) -> list[np.ndarray]:
    """Gradient of the objective on the product of unitary groups.

    Each entry is U_j Ω_j with Ω_j = skew(U_j* G_j), the projection of the
    Euclidean gradient G_j onto the tangent space at U_j (real inner product
    Re tr(X* Y)).
    """
    tuple_ = [np.asarray(V, dtype=complex) for V in tuple_]
    anchor = [np.asarray(A, dtype=complex) for A in anchor]
    if len(tuple_) != Theta.n or len(anchor) != Theta.n:
        raise DimensionMismatch("tuple, anchor and phase matrix disagree in length")
    if len({V.shape for V in tuple_ + anchor}) != 1:
        raise DimensionMismatch("all matrices must share one square shape")
    G = euclidean_gradient(Theta, tuple_, anchor, mu)
    return [V @ _skew(dagger(V) @ g) for V, g in zip(tuple_, G)]


def cayley(A: np.ndarray) -> np.ndarray:
    """(I − A/2)^{-1} (I + A/2); unitary for skew-Hermitian A."""
    I = np.eye(A.shape[0])
    return np.linalg.solve(I - A / 2, I + A / 2)


def _polar_unitary(V: np.ndarray) -> np.ndarray:
    W, _, Zh = np.linalg.svd(V)
    return W @ Zh


def _relation_jacobian(Theta: PhaseMatrix, tuple_, mu: float) -> LinearOperator:
    """Linearization of the residual vector at ``tuple_`` along V_j ↦ V_j(I + Ω_j).

    Domain: n stacked complex N×N matrices as real vectors (only the
    skew-Hermitian part acts).  Range: the relation residuals followed by
    the √mu-weighted anchor residuals, again as real vectors.
    """
    V = tuple_
    n, N = len(V), V[0].shape[0]
    phases = list(_phases(Theta).items())
    blocks = len(phases) + (n if mu else 0)
    rm = np.sqrt(mu)

    def unpack(x, count):
        z = x[: count * N * N] + 1j * x[count * N * N:]
        return z.reshape(count, N, N)

    def pack(z):
        z = z.reshape(-1)
        return np.concatenate([z.real, z.imag])

    def matvec(x):
        om = [_skew(X) for X in unpack(np.asarray(x).ravel(), n)]
        out = []
        for (j, k), c in phases:
            vj, vk = V[j], V[k]
            out.append(vk @ om[k] @ vj + vk @ vj @ om[j] - c * (vj @ om[j] @ vk + vj @ vk @ om[k]))
        if mu:
            out.extend(rm * (Vj @ O) for Vj, O in zip(V, om))
        return pack(np.array(out))

    def rmatvec(y):
        M = unpack(np.asarray(y).ravel(), blocks)
        g = [np.zeros((N, N), dtype=complex) for _ in range(n)]
        for b, ((j, k), c) in enumerate(phases):
            vj, vk, R = V[j], V[k], M[b]
            cc = np.conj(c)
            g[j] += dagger(vk @ vj) @ R - cc * dagger(vj) @ R @ dagger(vk)
            g[k] += dagger(vk) @ R @ dagger(vj) - cc * dagger(vj @ vk) @ R
        if mu:
            for j in range(n):
                g[j] += rm * dagger(V[j]) @ M[len(phases) + j]
        return pack(np.array([_skew(G) for G in g]))

    size_in, size_out = 2 * n * N * N, 2 * blocks * N * N
    return LinearOperator((size_out, size_in), matvec=matvec, rmatvec=rmatvec, dtype=float)


def _residual_vector(Theta: PhaseMatrix, tuple_, anchor, mu: float) -> np.ndarray:
    out = [tuple_[k] @ tuple_[j] - c * (tuple_[j] @ tuple_[k]) for (j, k), c in _phases(Theta).items()]
    if mu:
        out.extend(np.sqrt(mu) * (V - A) for V, A in zip(tuple_, anchor))
    z = np.array(out).reshape(-1)
    return np.concatenate([z.real, z.imag])


def gauss_newton_trial(Theta: PhaseMatrix, tuple_, anchor, mu: float, damping: float) -> list[np.ndarray]:
    """One damped Gauss-Newton (Levenberg-Marquardt) step, retracted to unitaries."""
    n, N = len(tuple_), tuple_[0].shape[0]
    A = _relation_jacobian(Theta, tuple_, mu)
    r = _residual_vector(Theta, tuple_, anchor, mu)
    x = lsqr(A, -r, damp=damping, atol=1e-14, btol=1e-14, iter_lim=50 * n * N)[0]
    z = (x[: n * N * N] + 1j * x[n * N * N:]).reshape(n, N, N)
    return [U @ cayley(_skew(O)) for U, O in zip(tuple_, z)]


# ---------------------------------------------------------------------------
# repair

# stop when the objective fell by less than STALL_RTOL (relative) over STALL_WINDOW steps
STALL_WINDOW = 200
STALL_RTOL = 1e-9
# switch from first-order descent to Gauss-Newton polishing when the objective
# fell by less than POLISH_RTOL (relative) over POLISH_WINDOW steps
POLISH_WINDOW = 25
POLISH_RTOL = 0.5


def repair(
    Theta: PhaseMatrix,
    tuple_,
    cfg: SearchConfig = SearchConfig(),
    tol: Tolerances = DEFAULT_TOL,
    raise_on_failure: bool = False,
) -> SearchResult:
    """Riemannian steepest descent with Cayley retraction and Armijo backtracking.

    The distance penalty weight decays geometrically (``mu_decay``) so the
    iterates can reach an exact solution instead of the penalized compromise.
    Since the weight never increases, the recorded objective values are
    non-increasing.
    """
    anchor = check_tuple(tuple_, Theta.n, tol)
    if defect(Theta, anchor, tol).max >= 2:
        raise ValueError("defect must be below 2 for the repair problem to make sense")
    V = [A.copy() for A in anchor]
    mu = cfg.mu
    J = objective(Theta, V, anchor, mu)
    trace = [J]
    step = cfg.step_init
    status = "max_iters"
    it = 0
    d = defect(Theta, V, tol).max
    converged = d <= cfg.defect_target

    prev_omegas = prev_dirs = None
    polishing = False
    damping = 1e-3
    while not converged and it < cfg.max_iters:
        if polishing:
            accepted = False
            for _ in range(12):
                trial = gauss_newton_trial(Theta, V, anchor, mu, damping)
                if max(unitarity_residual(U) for U in trial) > 1e-13:
                    trial = [_polar_unitary(U) for U in trial]
                Jt = objective(Theta, trial, anchor, mu)
                if Jt < J:
                    accepted = True
                    damping = max(damping / 3, 1e-12)
                    break
                damping *= 10
            if not accepted:
                status = "stagnated"
                break
        else:
            grad = riemannian_gradient(Theta, V, anchor, mu)
            omegas = [_skew(dagger(U) @ g) for U, g in zip(V, grad)]
            gnorm2 = float(sum(np.vdot(O, O).real for O in omegas))
            if gnorm2 == 0.0:
                status = "stationary"
                break
            # Polak-Ribiere+ directions in Lie-algebra coordinates, restarted
            # whenever the result is not a descent direction
            dirs = omegas
            if prev_omegas is not None:
                num = sum(np.vdot(O, O - P).real for O, P in zip(omegas, prev_omegas))
                den = sum(np.vdot(P, P).real for P in prev_omegas)
                beta = max(0.0, num / den) if den > 0 else 0.0
                if beta > 0:
                    cand = [O + beta * D for O, D in zip(omegas, prev_dirs)]
                    if sum(np.vdot(O, D).real for O, D in zip(omegas, cand)) > 0:
                        dirs = cand
            slope = float(sum(np.vdot(O, D).real for O, D in zip(omegas, dirs)))
            t = step
            accepted = False
            while t > 1e-18:
                trial = [U @ cayley(-t * D) for U, D in zip(V, dirs)]
                if (it + 1) % 50 == 0 and max(unitarity_residual(U) for U in trial) > 1e-13:
                    trial = [_polar_unitary(U) for U in trial]
                Jt = objective(Theta, trial, anchor, mu)
                if Jt <= J - cfg.armijo_c * t * slope:
                    accepted = True
                    break
                t /= 2
            prev_omegas, prev_dirs = omegas, dirs
            if not accepted:
                # first-order line search exhausted; let Gauss-Newton try
                polishing = True
                continue
            step = min(2 * t, 1e3)
        V = trial
        it += 1
        mu = mu * cfg.mu_decay
        J = objective(Theta, V, anchor, mu)
        trace.append(J)
        d = defect(Theta, V, tol).max
        converged = d <= cfg.defect_target
        if converged:
            break
        if not polishing and it >= POLISH_WINDOW:
            old = trace[-1 - POLISH_WINDOW]
            if old - J <= POLISH_RTOL * old:
                polishing = True
        if it >= STALL_WINDOW:
            old = trace[-1 - STALL_WINDOW]
            if old - J <= STALL_RTOL * old:
                status = "stagnated"
                break

    d = defect(Theta, V, tol).max
    converged = d <= cfg.defect_target
    if converged:
        status = "converged"
    moved = max(op_norm(U - A) for U, A in zip(V, anchor))
    result = SearchResult(V, d, moved, it, converged, trace, status)
    log.debug("repair: %s after %d iterations, defect %.3e, moved %.3e", status, it, d, moved)
    if raise_on_failure and not converged:
        raise Diverged(f"repair stopped ({status}) with defect {d:.3e}", result)
    return result


# ---------------------------------------------------------------------------
# planted instances


def plant_instance(
    Theta: PhaseMatrix,
    multiplicity: int = 1,
    noise: float = 1e-3,
    seed: int | np.random.SeedSequence | None = 0,
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Exact representation conjugated by a Haar unitary, then perturbed.

    Returns (tuple, ground_truth); tuple_j = ground_truth_j · exp(X_j) with X_j
    skew-Hermitian of operator norm ``noise``.
    """
    if noise < 0:
        raise ValueError("noise must be nonnegative")
    rng = np.random.default_rng(seed)
    rep = rational_rep(Theta, multiplicity)
    dim = rep[0].shape[0]
    W = haar_unitary(dim, rng)
    truth = [W @ v @ dagger(W) for v in rep]
    if noise == 0:
        return [v.copy() for v in truth], truth
    tuple_ = [v @ expm_skew(random_skew_hermitian(dim, noise, rng)) for v in truth]
    return tuple_, truth


def trial_seed(seed: int, index: int) -> np.random.SeedSequence:
    """Per-trial RNG stream, identical whether trials run serially or in parallel."""
    return np.random.SeedSequence([int(seed), int(index)])


# ---------------------------------------------------------------------------
# the spin-triple counterexample

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def spin_operators(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """S_x, S_y, S_z in the n-dimensional (spin (n−1)/2) representation."""
    if n < 1:
        raise ValueError("n must be positive")
    s = (n - 1) / 2
    m = s - np.arange(n)  # s, s-1, ..., -s
    sp = np.sqrt(s * (s + 1) - m[1:] * (m[1:] + 1))
    Sp = np.diag(sp, 1).astype(complex)
    Sm = dagger(Sp)
    return (Sp + Sm) / 2, (Sp - Sm) / 2j, np.diag(m).astype(complex)


def voiculescu_triple(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Normalized spin operators H_k = S_k / s, s = (n − 1)/2.

    ‖H_k‖ = 1 and ‖[H_j, H_k]‖ = 1/s, so the triple is asymptotically
    commuting yet carries Bott index 1 for every n.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    s = (n - 1) / 2
    return tuple(S / s for S in spin_operators(n))


def unitaries_from_selfadjoint(*H, tol: Tolerances = DEFAULT_TOL) -> list[np.ndarray]:
    """U_j = exp(πi H_j / 2)."""
    out = []
    for h in H:
        h = np.asarray(h, dtype=complex)
        if op_norm(h) > 1 + 1e-12:
            raise NormTooLarge(f"‖H‖ = {op_norm(h):.6f} exceeds 1")
        out.append(func_calc(h, HERMITIAN, lambda x: np.exp(0.5j * np.pi * x), tol))
    return out


@dataclass
class TripleCertificate:
    bott_index_triple: int
    pairwise_exel: list
    commutator_norms: list
    spectral_gap: float

    def to_dict(self) -> dict:
        return asdict(self)


TRIPLE_PAIRS = ((0, 1), (0, 2), (1, 2))


def bott_index_triple(H1, H2, H3, tol: Tolerances = DEFAULT_TOL) -> TripleCertificate:
    """Half-signature defect of B = H1⊗σ1 + H2⊗σ2 + H3⊗σ3.

    Index = n − #(negative eigenvalues of B).  Pairwise Exel values are those
    of U_j = exp(πi H_j/2) at branch 0; a pair whose commutator touches the cut
    reports None.
    """
    Hs = [np.asarray(h, dtype=complex) for h in (H1, H2, H3)]
    n = Hs[0].shape[0]
    if any(h.shape != (n, n) for h in Hs):
        raise DimensionMismatch("the three matrices must share one square shape")
    B = sum(np.kron(h, s) for h, s in zip(Hs, PAULI))
    lam = np.linalg.eigvalsh((B + dagger(B)) / 2)
    gap = float(np.min(np.abs(lam)))
    if gap < tol.gap_tol:
        raise NoSpectralGap(f"B has an eigenvalue within {gap:.2e} of 0")
    index = n - int(np.sum(lam < 0))
    comms = [op_norm(Hs[j] @ Hs[k] - Hs[k] @ Hs[j]) for j, k in TRIPLE_PAIRS]
    exel = []
    if all(op_norm(h) <= 1 + 1e-12 for h in Hs):
        U = unitaries_from_selfadjoint(*Hs, tol=tol)
        for j, k in TRIPLE_PAIRS:
            try:
                exel.append(exel_rhs(U[j], U[k], 0.0, tol))
            except GapViolation:
                exel.append(None)
    else:
        exel = [None, None, None]
    return TripleCertificate(index, exel, comms, gap)


def simultaneous_conjugate(mats, W: np.ndarray) -> list[np.ndarray]:
    return [W @ m @ dagger(W) for m in mats]


__all__ = [
    "SearchConfig",
    "SearchResult",
    "TripleCertificate",
    "bott_index_triple",
    "cayley",
    "objective",
    "plant_instance",
    "repair",
    "riemannian_gradient",
    "spin_operators",
    "trial_seed",
    "unitaries_from_selfadjoint",
    "voiculescu_triple",
]
