"""
Symplectic core for quadratic Bose Hamiltonians.

Phase-space vectors live either in real ``(p, q)`` coordinates or in complex
creation/annihilation ``(u+, u-)`` coordinates. This module builds the linear
generators and propagators of a quadratic Hamiltonian in both, moves objects
between them with the unitary ``U = (1/sqrt 2) [[iI, I], [-iI, I]]`` and
evaluates the symplectic form ``s`` and the indefinite product ``<,>``.

Example::

    h = QuadHamiltonianPQ(M=[[1.0]], L=[[0.0]], K=[[4.0]])
    V = propagator(generator_pq(h), 0.5)   # V.matrix is 2x2, det 1
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from functools import singledispatch
from typing import Union

import numpy as np
from scipy.linalg import expm

from settings import active_tolerances

logger = logging.getLogger(__name__)


class Basis(str, Enum):
    PQ = "pq"
    AA = "aa"


class InvariantViolation(ValueError):
    """Input rejected because a structural invariant does not hold."""

    def __init__(self, invariant: str, detail: str = "") -> None:
        self.invariant = invariant
        message = f"invariant violated: {invariant}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)


def operator_norm(matrix: np.ndarray) -> float:
    matrix = np.asarray(matrix)
    if matrix.size == 0:
        return 0.0
    if matrix.ndim == 1:
        return float(np.linalg.norm(matrix))
    return float(np.linalg.norm(matrix, 2))


def _frozen(array: np.ndarray) -> np.ndarray:
    out = np.array(array, copy=True)
    out.setflags(write=False)
    return out


def real_if_close(array: np.ndarray, rel_tol: float | None = None) -> np.ndarray:
    """Drop an imaginary part that is negligible relative to the array scale."""
    array = np.asarray(array)
    if not np.iscomplexobj(array):
        return array
    tol = active_tolerances().res if rel_tol is None else rel_tol
    scale = 1.0 + float(np.max(np.abs(array), initial=0.0))
    if float(np.max(np.abs(array.imag), initial=0.0)) <= tol * scale:
        return np.ascontiguousarray(array.real)
    return array


def _square_blocks(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    n = matrix.shape[0] // 2
    return matrix[:n, :n], matrix[:n, n:], matrix[n:, :n], matrix[n:, n:]


def _check_even_square(matrix: np.ndarray, what: str) -> np.ndarray:
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] % 2:
        raise ValueError(f"{what} must be a square matrix of even size, got shape {matrix.shape}")
    return matrix


@dataclass(frozen=True, eq=False)
class PhaseVector:
    """Coefficient vector ``x_p + x_q`` (PQ) or ``u+ + u-`` (AA) with its basis tag."""

    basis: Basis
    entries: np.ndarray

    def __post_init__(self) -> None:
        basis = Basis(self.basis)
        entries = np.asarray(self.entries)
        if entries.ndim != 1 or entries.size == 0 or entries.size % 2:
            raise ValueError(
                f"Phase vector needs a positive even length, got shape {entries.shape}"
            )
        if basis is Basis.AA or np.iscomplexobj(entries):
            entries = entries.astype(complex)
        else:
            entries = entries.astype(float)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "entries", _frozen(entries))

    @classmethod
    def pq(cls, x_p: object, x_q: object) -> PhaseVector:
        return cls(Basis.PQ, np.concatenate([np.atleast_1d(x_p), np.atleast_1d(x_q)]))

    @property
    def n(self) -> int:
        return self.entries.size // 2

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.entries)

    def __array__(self, dtype: object = None, copy: object = None) -> np.ndarray:
        return np.asarray(self.entries, dtype=dtype)

    def __repr__(self) -> str:
        return f"PhaseVector({self.basis.value}, {np.array2string(self.entries, precision=6)})"


VectorLike = Union[PhaseVector, np.ndarray, list, tuple]


def as_vector(x: VectorLike, basis: Basis | None = None) -> np.ndarray:
    """Plain array view of ``x``; a PhaseVector must carry ``basis`` when one is given."""
    if isinstance(x, PhaseVector):
        if basis is not None and x.basis is not Basis(basis):
            raise ValueError(f"Expected a {Basis(basis).value} vector, got {x.basis.value}")
        return np.asarray(x.entries)
    array = np.asarray(x)
    if array.ndim != 1:
        raise ValueError(f"Expected a one-dimensional vector, got shape {array.shape}")
    return array


def _require(invariant: str, residual: float, scale: float, tol: float) -> None:
    if residual > tol * (1.0 + scale):
        raise InvariantViolation(invariant, f"residual {residual:.3e}")


@dataclass(frozen=True, eq=False)
class QuadHamiltonianPQ:
    """``h = 1/2 sum (M PP - L (PQ + QP) + K QQ)`` with real N x N coefficients."""

    M: np.ndarray
    L: np.ndarray
    K: np.ndarray

    def __post_init__(self) -> None:
        tol = active_tolerances().sym
        blocks = {}
        for name in ("M", "L", "K"):
            value = np.atleast_2d(np.asarray(getattr(self, name)))
            if np.iscomplexobj(value):
                imaginary = float(np.max(np.abs(value.imag)))
                _require(f"{name} real", imaginary, operator_norm(value), tol)
                value = value.real
            blocks[name] = value.astype(float)
        n = blocks["M"].shape[0]
        for name, value in blocks.items():
            if value.shape != (n, n):
                raise ValueError(f"{name} must be {n}x{n}, got shape {value.shape}")
        for name in ("M", "K"):
            value = blocks[name]
            _require(f"{name} symmetric", operator_norm(value - value.T), operator_norm(value), tol)
        for name, value in blocks.items():
            object.__setattr__(self, name, _frozen(value))

    @property
    def n(self) -> int:
        return self.M.shape[0]


@dataclass(frozen=True, eq=False)
class QuadHamiltonianAA:
    """``h = sum S_kl a*_k a_l + 1/2 sum (T_kl a*_k a*_l + conj(T_kl) a_k a_l)``."""

    S: np.ndarray
    T: np.ndarray

    def __post_init__(self) -> None:
        tol = active_tolerances().sym
        S = np.atleast_2d(np.asarray(self.S, dtype=complex))
        T = np.atleast_2d(np.asarray(self.T, dtype=complex))
        n = S.shape[0]
        if S.shape != (n, n) or T.shape != (n, n):
            raise ValueError(f"S and T must both be {n}x{n}, got {S.shape} and {T.shape}")
        _require("S hermitian", operator_norm(S - S.conj().T), operator_norm(S), tol)
        _require("T symmetric", operator_norm(T - T.T), operator_norm(T), tol)
        object.__setattr__(self, "S", _frozen(S))
        object.__setattr__(self, "T", _frozen(T))

    @property
    def n(self) -> int:
        return self.S.shape[0]


QuadHamiltonian = Union[QuadHamiltonianPQ, QuadHamiltonianAA]


@dataclass(frozen=True, eq=False)
class Generator:
    basis: Basis
    matrix: np.ndarray

    def __post_init__(self) -> None:
        basis = Basis(self.basis)
        matrix = _check_even_square(self.matrix, "Generator")
        matrix = real_if_close(matrix) if basis is Basis.PQ else matrix.astype(complex)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "matrix", _frozen(matrix))

    @classmethod
    def from_blocks(
        cls, basis: Basis, A: np.ndarray, B: np.ndarray, C: np.ndarray, D: np.ndarray
    ) -> Generator:
        return cls(basis, np.block([[A, B], [C, D]]))

    @property
    def n(self) -> int:
        return self.matrix.shape[0] // 2

    @property
    def blocks(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return _square_blocks(self.matrix)


@dataclass(frozen=True, eq=False)
class Propagator:
    basis: Basis
    matrix: np.ndarray
    t: float = 0.0

    def __post_init__(self) -> None:
        basis = Basis(self.basis)
        matrix = _check_even_square(self.matrix, "Propagator")
        matrix = real_if_close(matrix) if basis is Basis.PQ else matrix.astype(complex)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "matrix", _frozen(matrix))

    @classmethod
    def identity(cls, basis: Basis, n: int) -> Propagator:
        return cls(basis, np.eye(2 * n), 0.0)

    @property
    def n(self) -> int:
        return self.matrix.shape[0] // 2

    @property
    def blocks(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return _square_blocks(self.matrix)

    def inverse(self) -> Propagator:
        if np.linalg.matrix_rank(self.matrix) < self.matrix.shape[0]:
            raise ValueError("Propagator is singular")
        return Propagator(self.basis, np.linalg.inv(self.matrix), -self.t)


@dataclass(frozen=True, eq=False)
class MetricJ:
    """Fundamental symmetry: ``J_pq = [[0, -I], [I, 0]]`` or ``J_aa = diag(I, -I)``."""

    basis: Basis
    matrix: np.ndarray

    @classmethod
    def for_basis(cls, basis: Basis, n: int) -> MetricJ:
        basis = Basis(basis)
        eye, zero = np.eye(n), np.zeros((n, n))
        if basis is Basis.PQ:
            matrix = np.block([[zero, -eye], [eye, zero]])
        else:
            matrix = np.block([[eye, zero], [zero, -eye]])
        return cls(basis, _frozen(matrix))

    @property
    def adjoint(self) -> np.ndarray:
        """``J*``: equals ``-J`` for PQ and ``J`` for AA."""
        return self.matrix.conj().T


def metric(basis: Basis, n: int) -> np.ndarray:
    return MetricJ.for_basis(basis, n).matrix


def basis_unitary(n: int) -> np.ndarray:
    """``U`` taking PQ coefficient vectors to AA coefficient vectors."""
    eye = np.eye(n)
    return np.block([[1j * eye, eye], [-1j * eye, eye]]) / np.sqrt(2.0)


def generator_pq(h: QuadHamiltonianPQ) -> Generator:
    return Generator(Basis.PQ, np.block([[h.L, h.M], [-h.K, -h.L.T]]))


def generator_aa(h: QuadHamiltonianAA) -> Generator:
    return Generator(Basis.AA, np.block([[h.S, h.T], [-h.T.conj(), -h.S.conj()]]))


def generator(h: QuadHamiltonian) -> Generator:
    if isinstance(h, QuadHamiltonianPQ):
        return generator_pq(h)
    if isinstance(h, QuadHamiltonianAA):
        return generator_aa(h)
    raise TypeError(f"Not a quadratic Hamiltonian: {type(h).__name__}")


def hamiltonian_to_aa(h: QuadHamiltonianPQ) -> QuadHamiltonianAA:
    """Coefficients of the same Hamiltonian in creation/annihilation form."""
    S = (h.M + h.K) / 2 + 1j * (h.L.T - h.L) / 2
    T = (h.M - h.K) / 2 + 1j * (h.L + h.L.T) / 2
    return QuadHamiltonianAA(S=S, T=T)


def hamiltonian_to_pq(h: QuadHamiltonianAA) -> QuadHamiltonianPQ:
    M = h.S.real + h.T.real
    K = h.S.real - h.T.real
    L = h.T.imag - h.S.imag
    return QuadHamiltonianPQ(M=M, L=L, K=K)


def _target(source: Basis, target: Basis | str) -> Basis:
    target = Basis(target)
    if target is source:
        raise ValueError(f"Object is already in the {target.value} basis")
    return target


def transform_operator(matrix: np.ndarray, source: Basis, target: Basis | str) -> np.ndarray:
    """Similarity ``U X U^-1`` (PQ to AA) or its inverse for a plain operator."""
    target = _target(Basis(source), target)
    U = basis_unitary(np.asarray(matrix).shape[0] // 2)
    if target is Basis.AA:
        return U @ matrix @ U.conj().T
    return real_if_close(U.conj().T @ matrix @ U)


@singledispatch
def change_basis(obj: object, target: Basis | str) -> object:
    """Express a phase vector, generator or propagator in the other basis."""
    raise TypeError(f"Cannot change the basis of {type(obj).__name__}")


@change_basis.register(PhaseVector)
def _(obj: PhaseVector, target: Basis | str) -> PhaseVector:
    target = _target(obj.basis, target)
    U = basis_unitary(obj.n)
    if target is Basis.AA:
        return PhaseVector(target, U @ obj.entries)
    return PhaseVector(target, real_if_close(U.conj().T @ obj.entries))


@change_basis.register(Generator)
def _(obj: Generator, target: Basis | str) -> Generator:
    target = _target(obj.basis, target)
    if target is Basis.AA:
        return Generator(target, -1j * transform_operator(obj.matrix, Basis.PQ, Basis.AA))
    return Generator(target, transform_operator(1j * obj.matrix, Basis.AA, Basis.PQ))


@change_basis.register(Propagator)
def _(obj: Propagator, target: Basis | str) -> Propagator:
    target = _target(obj.basis, target)
    return Propagator(target, transform_operator(obj.matrix, obj.basis, target), obj.t)


def propagator(G: Generator, t: float) -> Propagator:
    """``exp(tG)`` in the PQ basis, ``exp(itG)`` in the AA basis."""
    exponent = t * G.matrix if G.basis is Basis.PQ else 1j * t * G.matrix
    return Propagator(G.basis, expm(exponent), float(t))


def symplectic_form(f: VectorLike, g: VectorLike) -> complex | float:
    """``s(f, g) = (f, J_pq g)`` with the plain bilinear product."""
    x, y = as_vector(f, Basis.PQ), as_vector(g, Basis.PQ)
    if x.shape != y.shape:
        raise ValueError(f"Dimension mismatch: {x.shape} vs {y.shape}")
    value = x @ (metric(Basis.PQ, x.size // 2) @ y)
    return float(value) if not np.iscomplexobj(value) else complex(value)


def indefinite_product(u_left: VectorLike, u_right: VectorLike) -> complex:
    """``<u', u> = (u', J_aa u)``, conjugate-linear in the first slot."""
    x, y = as_vector(u_left, Basis.AA), as_vector(u_right, Basis.AA)
    if x.shape != y.shape:
        raise ValueError(f"Dimension mismatch: {x.shape} vs {y.shape}")
    return complex(np.vdot(x, metric(Basis.AA, x.size // 2) @ y))


def is_cross_matrix(matrix: np.ndarray) -> bool:
    """True for ``[[Phi, Psi], [conj(Psi), conj(Phi)]]`` within tolerance."""
    matrix = _check_even_square(matrix, "Cross-matrix candidate")
    phi, psi, lower_left, lower_right = _square_blocks(matrix)
    scale = active_tolerances().res * (1.0 + operator_norm(matrix))
    return (
        operator_norm(lower_right - phi.conj()) <= scale
        and operator_norm(lower_left - psi.conj()) <= scale
    )


def structure_residual(V: Propagator) -> float:
    """``||V^T J V - J||`` (PQ) or ``||V* J V - J||`` (AA)."""
    J = metric(V.basis, V.n)
    left = V.matrix.T if V.basis is Basis.PQ else V.matrix.conj().T
    return operator_norm(left @ J @ V.matrix - J)


def preserves_structure(V: Propagator) -> bool:
    """Symplectic (PQ) or J-unitary (AA) within ``tau_res * (1 + ||V||^2)``."""
    scale = 1.0 + operator_norm(V.matrix) ** 2
    return structure_residual(V) <= active_tolerances().res * scale


def is_symplectic(V: Propagator) -> bool:
    if V.basis is not Basis.PQ:
        raise ValueError("Symplecticity is tested on PQ propagators")
    return preserves_structure(V)


def is_j_unitary(V: Propagator) -> bool:
    if V.basis is not Basis.AA:
        raise ValueError("J-unitarity is tested on AA propagators")
    return preserves_structure(V)


def regular_structure_residuals(n: int) -> dict[str, float]:
    """Residuals of the fundamental-symmetry identities for both bases."""
    J_pq, J_aa = metric(Basis.PQ, n), metric(Basis.AA, n)
    U = basis_unitary(n)
    eye = np.eye(2 * n)
    return {
        "J_pq^2 = -I": operator_norm(J_pq @ J_pq + eye),
        "J_aa^2 = I": operator_norm(J_aa @ J_aa - eye),
        "J_pq unitary": operator_norm(J_pq.T @ J_pq - eye),
        "U unitary": operator_norm(U.conj().T @ U - eye),
        "U* J_aa U = i J_pq": operator_norm(U.conj().T @ J_aa @ U - 1j * J_pq),
    }
