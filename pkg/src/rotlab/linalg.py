"""Dense complex linear algebra: spectral decompositions of normal matrices,
functional calculus, operator norms and normalized traces."""

from __future__ import annotations

from typing import Callable, NamedTuple, Sequence

import numpy as np
import scipy.linalg

from .config import DEFAULT_TOL, Tolerances
from .errors import (
    DimensionMismatch,
    DomainViolation,
    NoConvergence,
    NotNormal,
    NotSquare,
    NotUnitary,
)

HERMITIAN = "hermitian"
UNITARY = "unitary"
_KINDS = (HERMITIAN, UNITARY)


class SpectralDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.conj().T


def as_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def _square(A) -> np.ndarray:
    A = as_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise NotSquare(f"matrix of shape {A.shape} is not square")
    return A


def dagger(A: np.ndarray) -> np.ndarray:
    return A.conj().T


def op_norm(A) -> float:
    """Largest singular value."""
    A = as_matrix(A)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def normalized_trace(A) -> complex:
    A = _square(A)
    return complex(np.trace(A) / A.shape[0])


def unitarity_residual(U) -> float:
    U = _square(U)
    return op_norm(dagger(U) @ U - np.eye(U.shape[0]))


def check_unitary(U, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Return ``U`` as a complex array, raising NotUnitary if ‖U*U − I‖ > unitarity_tol."""
    U = _square(U)
    res = unitarity_residual(U)
    if res > tol.unitarity_tol:
        raise NotUnitary(f"‖U*U − I‖ = {res:.3e} exceeds {tol.unitarity_tol:.1e}")
    return U


def check_tuple(tuple_, n: int | None = None, tol: Tolerances = DEFAULT_TOL) -> list[np.ndarray]:
    mats = [check_unitary(U, tol) for U in tuple_]
    if n is not None and len(mats) != n:
        raise DimensionMismatch(f"tuple has {len(mats)} unitaries, expected {n}")
    dims = {U.shape[0] for U in mats}
    if len(dims) > 1:
        raise DimensionMismatch(f"unitaries have different dimensions {sorted(dims)}")
    return mats


def eig_normal(A, kind: str, tol: Tolerances = DEFAULT_TOL) -> SpectralDecomposition:
    """Spectral decomposition of a Hermitian or unitary matrix.

    Hermitian eigenvalues come back real and ascending.  Unitary eigenvalues
    are sorted by principal argument in (−π, π].  Unitary input goes through
    the complex Schur form, whose triangular factor is diagonal for a normal
    matrix; the unitary Schur vectors are then the eigenvectors even when
    eigenvalues are degenerate.
    """
    if kind not in _KINDS:
        raise ValueError(f"kind must be one of {_KINDS}, got {kind!r}")
    A = _square(A)
    n = A.shape[0]
    scale = max(op_norm(A), 1.0)
    try:
        if kind == HERMITIAN:
            skew = op_norm(A - dagger(A))
            if skew > tol.normal_tol * scale:
                raise NotNormal(f"‖A − A*‖ = {skew:.3e}: not Hermitian")
            w, V = np.linalg.eigh((A + dagger(A)) / 2)
            order = np.argsort(w, kind="stable")
            w = w[order].astype(complex)
            V = V[:, order]
        else:
            res = op_norm(dagger(A) @ A - np.eye(n))
            if res > tol.normal_tol:
                raise NotNormal(f"‖A*A − I‖ = {res:.3e}: not unitary")
            T, V = scipy.linalg.schur(A, output="complex")
            w = np.diag(T).copy()
            # project onto the circle; the residual check below still guards accuracy
            w = w / np.abs(w)
            ang = np.angle(w)
            ang[ang <= -np.pi] = np.pi
            order = np.argsort(ang, kind="stable")
            w = w[order]
            V = V[:, order]
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise NoConvergence(str(exc)) from exc

    dec = SpectralDecomposition(w, V)
    resid = op_norm(dec.reconstruct() - A)
    if resid > tol.eig_tol * scale:
        raise NotNormal(f"reconstruction residual {resid:.3e} exceeds eig_tol")
    return dec


def func_calc(
    A,
    kind: str,
    f: Callable[[np.ndarray], np.ndarray],
    tol: Tolerances = DEFAULT_TOL,
    decomposition: SpectralDecomposition | None = None,
) -> np.ndarray:
    """Return V diag(f(λ)) V*.

    ``f`` is applied to the whole eigenvalue array at once (real for Hermitian
    input, unit-modulus complex for unitary input).  A non-finite value, or a
    DomainViolation raised by ``f`` itself, signals an eigenvalue outside the
    domain of ``f``.
    """
    dec = decomposition if decomposition is not None else eig_normal(A, kind, tol)
    lam = dec.eigenvalues.real if kind == HERMITIAN else dec.eigenvalues
    values = np.asarray(f(lam))
    if values.shape != lam.shape:
        values = np.broadcast_to(values, lam.shape)
    if not np.all(np.isfinite(values)):
        raise DomainViolation("function undefined at some eigenvalue")
    V = dec.eigenvectors
    out = (V * values) @ dagger(V)
    if np.isrealobj(values) or np.all(np.imag(values) == 0):
        out = (out + dagger(out)) / 2
    return out


def commutator(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B - B @ A


def kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for M in mats:
        out = np.kron(out, M)
    return out


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix."""
    Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def random_skew_hermitian(n: int, norm: float, rng: np.random.Generator) -> np.ndarray:
    """Gaussian skew-Hermitian matrix rescaled to operator norm ``norm``."""
    G = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    X = (G - dagger(G)) / 2
    nx = op_norm(X)
    if norm == 0 or nx == 0:
        return np.zeros((n, n), dtype=complex)
    return X * (norm / nx)


def expm_skew(X: np.ndarray) -> np.ndarray:
    """exp(X) for skew-Hermitian X, through the Hermitian matrix −iX."""
    w, V = np.linalg.eigh(-1j * X)
    w = w.real
    return (V * np.exp(1j * w)) @ dagger(V)
