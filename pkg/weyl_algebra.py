"""
Weyl words, the Heisenberg-group BCH identity and Gram-matrix positivity.

A Weyl word is a finite linear combination of symbols ``e^f`` indexed by real
phase vectors, multiplied with the cocycle ``e^f e^g = e^{-i s(f,g)/2} e^{f+g}``
and with involution ``(c e^f)* = conj(c) e^{-f}``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy.linalg import expm

from majorant import ExtendedQuadraticForm
from settings import active_tolerances
from symplectic_core import Basis, VectorLike, as_vector, metric, operator_norm, symplectic_form

logger = logging.getLogger(__name__)

Key = tuple[int, ...]


class WeylWord:
    """Immutable finite sum ``sum_k c_k e^{f_k}`` over real PQ vectors ``f_k``."""

    def __init__(self, n: int, terms: Iterable[tuple[VectorLike, complex]] = ()) -> None:
        if n < 1:
            raise ValueError(f"Number of modes must be positive, got {n}")
        self._n = n
        self._terms: dict[Key, tuple[np.ndarray, complex]] = {}
        for vector, coefficient in terms:
            vector = np.asarray(as_vector(vector, Basis.PQ), dtype=float)
            self._accumulate(vector, complex(coefficient))
        self._terms = {key: term for key, term in self._terms.items() if term[1] != 0}

    def _accumulate(self, vector: np.ndarray, coefficient: complex) -> None:
        if vector.size != 2 * self._n:
            raise ValueError(f"Vector of length {vector.size} in a {self._n}-mode word")
        key = self.key(vector)
        if key in self._terms:
            stored, previous = self._terms[key]
            self._terms[key] = (stored, previous + coefficient)
        else:
            self._terms[key] = (vector.copy(), coefficient)

    @staticmethod
    def key(vector: np.ndarray) -> Key:
        quantum = active_tolerances().key
        return tuple(int(v) for v in np.rint(np.asarray(vector, dtype=float) / quantum))

    @classmethod
    def symbol(cls, f: VectorLike, coefficient: complex = 1.0) -> WeylWord:
        vector = np.asarray(as_vector(f, Basis.PQ), dtype=float)
        return cls(vector.size // 2, [(vector, coefficient)])

    @classmethod
    def unit(cls, n: int) -> WeylWord:
        return cls(n, [(np.zeros(2 * n), 1.0)])

    @property
    def n(self) -> int:
        return self._n

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[tuple[np.ndarray, complex]]:
        for key in sorted(self._terms):
            yield self._terms[key]

    def coefficient(self, f: VectorLike) -> complex:
        term = self._terms.get(self.key(np.asarray(as_vector(f), dtype=float)))
        return term[1] if term else 0j

    def __add__(self, other: WeylWord) -> WeylWord:
        self._check_compatible(other)
        return WeylWord(self._n, list(self) + list(other))

    def __sub__(self, other: WeylWord) -> WeylWord:
        return self + other.scale(-1.0)

    def scale(self, factor: complex) -> WeylWord:
        return WeylWord(self._n, [(v, factor * c) for v, c in self])

    def __mul__(self, other: WeylWord) -> WeylWord:
        return weyl_mul(self, other)

    def star(self) -> WeylWord:
        return weyl_star(self)

    def allclose(self, other: WeylWord, atol: float | None = None) -> bool:
        self._check_compatible(other)
        atol = active_tolerances().res if atol is None else atol
        difference = self - other
        return all(abs(c) <= atol for _, c in difference)

    def _check_compatible(self, other: WeylWord) -> None:
        if other.n != self._n:
            raise ValueError(f"Dimension mismatch: {self._n}-mode vs {other.n}-mode word")

    def __repr__(self) -> str:
        inner = ", ".join(f"{c:.4g}*e^{np.array2string(v, precision=4)}" for v, c in self)
        return f"WeylWord({inner or '0'})"


def weyl_mul(w1: WeylWord, w2: WeylWord) -> WeylWord:
    """Bilinear extension of ``e^f e^g = e^{-i s(f,g)/2} e^{f+g}``."""
    w1._check_compatible(w2)
    terms = []
    for f, a in w1:
        for g, b in w2:
            terms.append((f + g, a * b * np.exp(-0.5j * symplectic_form(f, g))))
    return WeylWord(w1.n, terms)


def weyl_star(w: WeylWord) -> WeylWord:
    return WeylWord(w.n, [(-f, np.conj(c)) for f, c in w])


@dataclass(frozen=True)
class HeisenbergTriple:
    """Strictly upper-triangular 3x3 matrix with ``a`` at (1,2), ``b`` at (2,3), ``c`` at (1,3)."""

    a: float
    b: float
    c: float = 0.0

    def matrix(self) -> np.ndarray:
        return np.array([[0.0, self.a, self.c], [0.0, 0.0, self.b], [0.0, 0.0, 0.0]])

    @property
    def norm(self) -> float:
        return operator_norm(self.matrix())


def bch_check(A: HeisenbergTriple, B: HeisenbergTriple, t: float) -> float:
    """``||e^{t(A+B)} - e^{tA} e^{tB} e^{-t^2/2 [A,B]}||`` in the 3x3 representation."""
    a, b = A.matrix(), B.matrix()
    commutator = a @ b - b @ a
    lhs = expm(t * (a + b))
    rhs = expm(t * a) @ expm(t * b) @ expm(-0.5 * t**2 * commutator)
    return operator_norm(lhs - rhs)


def gram_matrix(q: ExtendedQuadraticForm, points: Sequence[VectorLike]) -> np.ndarray:
    """``A_jk = e^{i s(f_j, f_k)/2} e^{-q(f_k - f_j)/4}``, the state on ``(e^{f_j})* e^{f_k}``."""
    if q.basis is not Basis.PQ:
        q = q.to_basis(Basis.PQ)
    vectors = [np.asarray(as_vector(p, Basis.PQ)) for p in points]
    for vector in vectors:
        if vector.size != q.dim:
            raise ValueError(f"Point of length {vector.size} for a form of dimension {q.dim}")
    size = len(vectors)
    gram = np.empty((size, size), dtype=complex)
    for j in range(size):
        for k in range(j, size):
            value = float(q.evaluate(vectors[k] - vectors[j]))
            damping = 0.0 if np.isinf(value) else np.exp(-value / 4)
            entry = np.exp(0.5j * symplectic_form(vectors[j], vectors[k])) * damping
            gram[j, k] = entry
            gram[k, j] = np.conj(entry)
    return gram


def min_gram_eigenvalue(gram: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(gram)[0])


def random_points(
    rng: np.random.Generator, n: int, count: int, scale: float = 1.0
) -> list[np.ndarray]:
    return [scale * rng.standard_normal(2 * n) for _ in range(count)]


@dataclass(frozen=True)
class Witness:
    """Point set whose Gram matrix has a negative eigenvalue."""

    f: np.ndarray
    g: np.ndarray
    points: list[np.ndarray]
    coefficients: np.ndarray
    min_eigenvalue: float
    violation: float


def _violation(q: ExtendedQuadraticForm, f: np.ndarray, g: np.ndarray) -> float:
    bound = q.evaluate(f) + q.evaluate(g)
    if bound.is_infinite:
        return -np.inf
    return 2.0 * abs(symplectic_form(f, g)) - float(bound)


def _deterministic_pair(q: ExtendedQuadraticForm) -> tuple[np.ndarray, np.ndarray] | None:
    """Real and imaginary parts of the most negative direction of ``Qd + i D^T J D``."""
    if q.domain_dim < 2:
        return None
    D = np.real(q.domain)
    J = metric(Basis.PQ, q.n)
    pencil = np.real(q.operator) + 1j * (D.T @ J @ D)
    values, vectors = np.linalg.eigh(pencil)
    y = D @ vectors[:, 0]
    return np.real(y), np.imag(y)


def find_witness(
    q: ExtendedQuadraticForm,
    rng: np.random.Generator,
    n_pairs: int = 1000,
    scales: Sequence[float] = tuple(2.0**k for k in range(-6, 4)),
) -> Witness | None:
    """Search for a point set exposing a form that is not a majorant.

    Random pairs are tried first; the pair from the extremal eigenvector of the
    form against the symplectic matrix is added as a deterministic candidate.
    The best pair ``(f, g)`` is turned into the points ``{0, l f, l g}`` with
    coefficients ``(-1 - i, 1, i)`` and the scale ``l`` is scanned.
    """
    if q.basis is not Basis.PQ:
        q = q.to_basis(Basis.PQ)
    candidates = [(rng.standard_normal(q.dim), rng.standard_normal(q.dim)) for _ in range(n_pairs)]
    if q.domain_dim:
        D = np.real(q.domain)
        candidates += [
            (D @ rng.standard_normal(q.domain_dim), D @ rng.standard_normal(q.domain_dim))
            for _ in range(n_pairs)
        ]
    pair = _deterministic_pair(q)
    if pair is not None:
        candidates.append(pair)

    best, best_violation = None, 0.0
    for f, g in candidates:
        violation = _violation(q, f, g)
        if violation > best_violation:
            best, best_violation = (f, g), violation
    if best is None:
        logger.info("No pair violates the majorant bound")
        return None

    f, g = best
    if symplectic_form(f, g) < 0:
        g = -g
    coefficients = np.array([-1 - 1j, 1.0, 1j])
    found: Witness | None = None
    for scale in scales:
        points = [np.zeros(q.dim), scale * f, scale * g]
        gram = gram_matrix(q, points)
        smallest = min_gram_eigenvalue(gram)
        if smallest < -active_tolerances().res * operator_norm(gram):
            if found is None or smallest < found.min_eigenvalue:
                found = Witness(f, g, points, coefficients, smallest, best_violation)
    if found is None:
        logger.warning(f"Pair violates the bound by {best_violation:.3e} but no scale exposed it")
    return found
