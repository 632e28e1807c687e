"""Exact finite-dimensional representations of rational rotation algebras.

Convention used everywhere: for j < k the generators satisfy

    u_k u_j = exp(2πi θ_jk) u_j u_k,

so with u_1 = shift and u_2 = clock^p the pair relation reads
clock^p · shift = exp(2πi p/q) · shift · clock^p.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import (
    InvalidPhaseMatrix,
    LengthMismatch,
    MissingExactData,
    NotRational,
)
from .linalg import kron_all


@dataclass(frozen=True)
class RationalPhase:
    p: int
    q: int

    def __post_init__(self):
        if self.q < 1:
            raise ValueError(f"denominator must be positive, got {self.q}")
        if not 0 <= self.p < self.q:
            raise ValueError(f"need 0 <= p < q, got p={self.p}, q={self.q}")
        if math.gcd(self.p, self.q) != 1:
            raise ValueError(f"{self.p}/{self.q} is not in lowest terms")

    @classmethod
    def from_fraction(cls, x) -> "RationalPhase":
        x = Fraction(x) % 1
        return cls(x.numerator, x.denominator)

    @classmethod
    def parse(cls, text: str) -> "RationalPhase":
        return cls.from_fraction(Fraction(text.strip()))

    @property
    def value(self) -> float:
        return self.p / self.q

    def as_fraction(self) -> Fraction:
        return Fraction(self.p, self.q)

    def __str__(self):
        return f"{self.p}/{self.q}"


def _basis_value(label) -> float:
    if isinstance(label, (int, float)):
        return float(label)
    import sympy

    text = re.sub(r"(?:sqrt|√)\s*(\d+(?:\.\d+)?)", r"sqrt(\1)", str(label))
    try:
        expr = sympy.sympify(text)
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise InvalidPhaseMatrix(f"cannot evaluate basis element {label!r}") from exc
    try:
        return float(expr)
    except TypeError as exc:
        raise InvalidPhaseMatrix(f"basis element {label!r} is not a real number") from exc


def _circle_dist(a: float, b: float) -> float:
    d = (a - b) % 1.0
    return min(d, 1.0 - d)


@dataclass(frozen=True)
class ExactPhases:
    """Entries of a phase matrix as rational vectors over a real basis.

    ``basis[0]`` is the constant 1; the remaining basis elements are assumed
    linearly independent over the rationals.  ``coeffs[j][k]`` is the
    coefficient vector of theta[j][k].
    """

    basis: tuple
    coeffs: tuple  # n x n x B tuple of Fractions

    def __post_init__(self):
        if not self.basis or _basis_value(self.basis[0]) != 1.0:
            raise InvalidPhaseMatrix("basis element 0 must be the constant 1")

    def value(self, j: int, k: int) -> float:
        vals = self.basis_values
        return float(sum(float(c) * v for c, v in zip(self.coeffs[j][k], vals)))

    @property
    def basis_values(self) -> list[float]:
        return [_basis_value(b) for b in self.basis]

    def rational(self, j: int, k: int) -> Fraction | None:
        vec = self.coeffs[j][k]
        if any(c != 0 for c in vec[1:]):
            return None
        return Fraction(vec[0]) % 1


def _fraction(c) -> Fraction:
    """A coefficient given as a number, a string like "1/3", or a [num, den] pair."""
    if isinstance(c, (list, tuple)):
        if len(c) != 2:
            raise InvalidPhaseMatrix(f"coefficient {c!r} is not a [num, den] pair")
        return Fraction(int(c[0]), int(c[1]))
    return Fraction(c)


class PhaseMatrix:
    """Skew-symmetric phase data Θ with entries in [0, 1).

    Skew symmetry is understood on phases: theta[k][j] = (1 − theta[j][k]) mod 1.
    """

    def __init__(self, theta, exact: ExactPhases | None = None, atol: float = 1e-12):
        theta = np.array(theta, dtype=float)
        if theta.ndim != 2 or theta.shape[0] != theta.shape[1] or theta.shape[0] < 2:
            raise InvalidPhaseMatrix(f"theta must be n x n with n >= 2, got {theta.shape}")
        n = theta.shape[0]
        if np.any(theta < 0) or np.any(theta >= 1):
            raise InvalidPhaseMatrix("entries must lie in [0, 1)")
        for j in range(n):
            if theta[j, j] != 0:
                raise InvalidPhaseMatrix(f"diagonal entry theta[{j}][{j}] is nonzero")
            for k in range(j + 1, n):
                if _circle_dist(theta[k, j], -theta[j, k]) > atol:
                    raise InvalidPhaseMatrix(f"theta[{k}][{j}] is not (1 - theta[{j}][{k}]) mod 1")
        if exact is not None:
            if len(exact.coeffs) != n or any(len(row) != n for row in exact.coeffs):
                raise InvalidPhaseMatrix("exact coefficient array has the wrong shape")
            nb = len(exact.basis)
            for j in range(n):
                for k in range(n):
                    if len(exact.coeffs[j][k]) != nb:
                        raise InvalidPhaseMatrix("coefficient vector length differs from basis size")
                    if _circle_dist(exact.value(j, k), theta[j, k]) > atol:
                        raise InvalidPhaseMatrix(
                            f"exact data for theta[{j}][{k}] evaluates to {exact.value(j, k)!r}, "
                            f"not {theta[j, k]!r}"
                        )
        self.theta = theta
        self.theta.setflags(write=False)
        self.exact = exact

    @property
    def n(self) -> int:
        return self.theta.shape[0]

    def __getitem__(self, jk) -> float:
        return float(self.theta[jk])

    def pairs(self):
        return [(j, k) for j in range(self.n) for k in range(j + 1, self.n)]

    def __repr__(self):
        return f"PhaseMatrix(n={self.n}, upper={[self.theta[j, k] for j, k in self.pairs()]})"

    # constructors -------------------------------------------------------------

    @classmethod
    def from_upper(cls, n: int, upper: Sequence[float]) -> "PhaseMatrix":
        """Build from the upper-triangle entries listed row by row."""
        theta = np.zeros((n, n))
        pairs = [(j, k) for j in range(n) for k in range(j + 1, n)]
        if len(upper) != len(pairs):
            raise InvalidPhaseMatrix(f"need {len(pairs)} upper entries for n={n}, got {len(upper)}")
        for (j, k), t in zip(pairs, upper):
            t = float(t) % 1.0
            theta[j, k] = t
            theta[k, j] = (1.0 - t) % 1.0
        return cls(theta)

    @classmethod
    def rational(cls, n: int, upper: Sequence) -> "PhaseMatrix":
        """Exact rational phases, e.g. ``PhaseMatrix.rational(3, ["1/2", "1/3", "1/5"])``."""
        fracs = [Fraction(x) % 1 for x in upper]
        return cls.from_exact(n, ["1"], [[f] for f in fracs])

    @classmethod
    def from_exact(cls, n: int, basis: Sequence, upper_coeffs: Sequence[Sequence]) -> "PhaseMatrix":
        """Exact phases over ``basis``; ``upper_coeffs`` lists one coefficient vector per j<k.

        The float entries are the basis combinations reduced mod 1; the lower
        triangle is filled with 1 − (upper vector) so it stays exact.
        """
        nb = len(basis)
        pairs = [(j, k) for j in range(n) for k in range(j + 1, n)]
        if len(upper_coeffs) != len(pairs):
            raise InvalidPhaseMatrix(f"need {len(pairs)} coefficient vectors, got {len(upper_coeffs)}")
        zero = tuple(Fraction(0) for _ in range(nb))
        coeffs = [[zero for _ in range(n)] for _ in range(n)]
        for (j, k), vec in zip(pairs, upper_coeffs):
            vec = tuple(_fraction(c) for c in vec)
            if len(vec) != nb:
                raise InvalidPhaseMatrix("coefficient vector length differs from basis size")
            coeffs[j][k] = vec
            coeffs[k][j] = (Fraction(1) - vec[0],) + tuple(-c for c in vec[1:])
        exact = ExactPhases(tuple(basis), tuple(tuple(row) for row in coeffs))
        theta = np.zeros((n, n))
        for j in range(n):
            for k in range(n):
                if j != k:
                    theta[j, k] = exact.value(j, k) % 1.0
                    if theta[j, k] >= 1.0:
                        theta[j, k] = 0.0
        # rational entries: use the exactly rounded value of the reduced fraction
        for j in range(n):
            for k in range(n):
                r = exact.rational(j, k) if j != k else None
                if r is not None:
                    theta[j, k] = float(r)
        return cls(theta, exact)

    def rational_entries(self) -> dict[tuple[int, int], RationalPhase]:
        """Upper-triangle entries as reduced fractions; NotRational otherwise."""
        if self.exact is None:
            raise NotRational("phase matrix has no exact data; pass rationals explicitly")
        out = {}
        for j, k in self.pairs():
            r = self.exact.rational(j, k)
            if r is None:
                raise NotRational(f"theta[{j}][{k}] is not rational over the declared basis")
            out[j, k] = RationalPhase.from_fraction(r)
        return out

    def is_rational(self) -> bool:
        try:
            self.rational_entries()
        except NotRational:
            return False
        return True

    # serialization ------------------------------------------------------------

    def to_json(self) -> dict:
        out = {"n": self.n, "theta": self.theta.tolist()}
        if self.exact is not None:
            out["exact"] = {
                "basis": [str(b) for b in self.exact.basis],
                "coeffs": [
                    [[[c.numerator, c.denominator] for c in vec] for vec in row]
                    for row in self.exact.coeffs
                ],
            }
        return out

    @classmethod
    def from_json(cls, data: dict) -> "PhaseMatrix":
        theta = data["theta"]
        if len(theta) != data.get("n", len(theta)):
            raise InvalidPhaseMatrix("field n disagrees with theta")
        exact = None
        if data.get("exact") is not None:
            ex = data["exact"]
            coeffs = tuple(
                tuple(tuple(Fraction(int(num), int(den)) for num, den in vec) for vec in row)
                for row in ex["coeffs"]
            )
            exact = ExactPhases(tuple(ex["basis"]), coeffs)
        return cls(theta, exact)


# representations ------------------------------------------------------------


def clock_matrix(q: int, p: int = 1) -> np.ndarray:
    """diag(ω^{0·p}, ω^{1·p}, ..., ω^{(q−1)p}) with ω = exp(2πi/q)."""
    if q < 1:
        raise ValueError("q must be positive")
    j = np.arange(q)
    # reduce the exponent first so the phases are exact roots of unity
    return np.diag(np.exp(2j * np.pi * ((j * p) % q) / q))


def shift_matrix(q: int) -> np.ndarray:
    """Cyclic shift S e_j = e_{j+1 mod q}."""
    if q < 1:
        raise ValueError("q must be positive")
    return np.roll(np.eye(q, dtype=complex), 1, axis=0)


def rational_pair_rep(theta: RationalPhase, multiplicity: int = 1) -> list[np.ndarray]:
    """(shift ⊗ I_m, clock^p ⊗ I_m) satisfying u_2 u_1 = e^{2πip/q} u_1 u_2."""
    if multiplicity < 1:
        raise ValueError("multiplicity must be positive")
    I = np.eye(multiplicity)
    u1 = np.kron(shift_matrix(theta.q), I)
    u2 = np.kron(clock_matrix(theta.q, theta.p), I)
    return [u1, u2]


def rational_torus3_rep(Theta: PhaseMatrix, multiplicity: int = 1) -> list[np.ndarray]:
    """Tensor representation of a rational 3-dimensional noncommutative torus.

    With θ_12 = p12/a, θ_13 = p13/b, θ_23 = p23/c:

        v1 = S_a ⊗ S_b ⊗ I_c
        v2 = Z_a^{p12} ⊗ I_b ⊗ S_c
        v3 = I_a ⊗ Z_b^{p13} ⊗ Z_c^{p23}

    each tensored with I_multiplicity.  Dimension a·b·c·multiplicity.
    """
    if Theta.n != 3:
        raise ValueError(f"need a 3 x 3 phase matrix, got n={Theta.n}")
    if multiplicity < 1:
        raise ValueError("multiplicity must be positive")
    r = Theta.rational_entries()
    t12, t13, t23 = r[0, 1], r[0, 2], r[1, 2]
    a, b, c = t12.q, t13.q, t23.q
    Ia, Ib, Ic, Im = (np.eye(d, dtype=complex) for d in (a, b, c, multiplicity))
    v1 = kron_all([shift_matrix(a), shift_matrix(b), Ic, Im])
    v2 = kron_all([clock_matrix(a, t12.p), Ib, shift_matrix(c), Im])
    v3 = kron_all([Ia, clock_matrix(b, t13.p), clock_matrix(c, t23.p), Im])
    return [v1, v2, v3]


def rational_rep(Theta: PhaseMatrix, multiplicity: int = 1) -> list[np.ndarray]:
    """Dispatch to the pair (n=2) or 3-torus (n=3) construction."""
    if Theta.n == 2:
        return rational_pair_rep(Theta.rational_entries()[0, 1], multiplicity)
    if Theta.n == 3:
        return rational_torus3_rep(Theta, multiplicity)
    raise NotImplementedError(f"no exact representation builder for n={Theta.n}")


def canonical_trace(Theta: PhaseMatrix, exponents: Sequence[int]) -> complex:
    """Canonical trace of the monomial u_1^{l_1} ... u_n^{l_n}: 1 for the unit, else 0."""
    exponents = list(exponents)
    if len(exponents) != Theta.n:
        raise LengthMismatch(f"{len(exponents)} exponents for n={Theta.n}")
    return 1.0 + 0j if all(int(l) == 0 for l in exponents) else 0j


# non-degeneracy -------------------------------------------------------------


def rational_rank(rows: Sequence[Sequence]) -> int:
    """Rank of a rational matrix by fraction-exact Gaussian elimination."""
    M = [[Fraction(x) for x in row] for row in rows]
    if not M:
        return 0
    ncols = len(M[0])
    rank = 0
    for col in range(ncols):
        pivot = next((r for r in range(rank, len(M)) if M[r][col] != 0), None)
        if pivot is None:
            continue
        M[rank], M[pivot] = M[pivot], M[rank]
        pv = M[rank][col]
        for r in range(len(M)):
            if r != rank and M[r][col] != 0:
                factor = M[r][col] / pv
                M[r] = [x - factor * y for x, y in zip(M[r], M[rank])]
        rank += 1
        if rank == len(M):
            break
    return rank


@dataclass(frozen=True)
class NondegeneracyResult:
    nondegenerate: bool
    q_dimension: int

    @property
    def label(self) -> str:
        return "nondegenerate" if self.nondegenerate else "degenerate"


def nondegeneracy_check(Theta: PhaseMatrix) -> NondegeneracyResult:
    """A 3 x 3 Θ is nondegenerate iff dim_Q span{1, θ12, θ13, θ23} >= 3."""
    if Theta.n != 3:
        raise ValueError("the rank criterion applies to n = 3")
    if Theta.exact is None:
        raise MissingExactData("non-degeneracy needs exact coefficient data")
    nb = len(Theta.exact.basis)
    one = [Fraction(1)] + [Fraction(0)] * (nb - 1)
    rows = [one] + [list(Theta.exact.coeffs[j][k]) for j, k in ((0, 1), (0, 2), (1, 2))]
    rank = rational_rank(rows)
    return NondegeneracyResult(rank >= 3, rank)
