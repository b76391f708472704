"""
Extended-valued quadratic forms and their majorant / minimality predicates.

A form ``q`` takes the value ``inf`` outside a subspace (its domain) and is a
finite non-negative quadratic form on it. Forms are stored as an orthonormal
domain basis ``D`` together with the operator ``Qd`` acting in that basis;
the contraction ``R = D (I + Qd)^-1 D*`` with ``0 <= R <= I`` is derived on
demand and carries the same information.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np
from scipy.linalg import eigh, orth

from settings import active_tolerances
from symplectic_core import (
    Basis,
    InvariantViolation,
    PhaseVector,
    Propagator,
    VectorLike,
    as_vector,
    basis_unitary,
    change_basis,
    metric,
    operator_norm,
    real_if_close,
    symplectic_form,
    transform_operator,
)

logger = logging.getLogger(__name__)


class ExtendedReal(float):
    """Extended real number with ``0 * inf = 0`` and ``inf + inf = inf``."""

    def __new__(cls, value: float = 0.0) -> ExtendedReal:
        value = float(value)
        if math.isnan(value):
            raise ValueError("ExtendedReal cannot be NaN")
        return super().__new__(cls, value)

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self)

    def __mul__(self, other: float) -> ExtendedReal:
        other = float(other)
        if (float(self) == 0.0 and math.isinf(other)) or (other == 0.0 and math.isinf(self)):
            return ExtendedReal(0.0)
        return ExtendedReal(float(self) * other)

    __rmul__ = __mul__

    def __add__(self, other: float) -> ExtendedReal:
        return ExtendedReal(float(self) + float(other))

    __radd__ = __add__

    def __repr__(self) -> str:
        return "inf" if self.is_infinite else f"ExtendedReal({float(self)!r})"


INFINITY = ExtendedReal(math.inf)


def _hermitize(matrix: np.ndarray) -> np.ndarray:
    return (matrix + matrix.conj().T) / 2


class ExtendedQuadraticForm:
    """``q(f) = (D* f)* Qd (D* f)`` for ``f`` in ``span(D)``, ``inf`` otherwise."""

    def __init__(
        self,
        basis: Basis | str,
        domain: np.ndarray,
        operator: np.ndarray,
        *,
        r_matrix: np.ndarray | None = None,
    ) -> None:
        self.basis = Basis(basis)
        domain = np.asarray(domain)
        if domain.ndim != 2 or domain.shape[0] == 0 or domain.shape[0] % 2:
            raise ValueError(f"Domain basis must be a 2N x k matrix, got shape {domain.shape}")
        k = domain.shape[1]
        operator = _hermitize(np.asarray(operator).reshape(k, k))
        if k:
            tol = active_tolerances().res * (1.0 + operator_norm(operator))
            values, vectors = eigh(operator)
            if values[0] < -tol:
                raise InvariantViolation("form non-negative", f"eigenvalue {values[0]:.3e}")
            operator = (vectors * np.clip(values, 0.0, None)) @ vectors.conj().T
        self._domain = np.array(real_if_close(domain))
        self._operator = np.array(real_if_close(operator))
        self._domain.setflags(write=False)
        self._operator.setflags(write=False)
        if r_matrix is not None:
            self.__dict__["r"] = np.asarray(r_matrix)

    @classmethod
    def from_r(cls, R: np.ndarray, basis: Basis | str = Basis.PQ) -> ExtendedQuadraticForm:
        """Form with contraction ``R``: ``Q = R^-1 - I`` on ``Ran R``."""
        tols = active_tolerances()
        R = np.atleast_2d(np.asarray(R))
        scale = 1.0 + operator_norm(R)
        if operator_norm(R - R.conj().T) > tols.res * scale:
            raise InvariantViolation("R self-adjoint")
        R = _hermitize(R)
        values, vectors = eigh(R)
        if values[0] < -tols.res or values[-1] > 1.0 + tols.res:
            raise InvariantViolation(
                "0 <= R <= I", f"spectrum [{values[0]:.3e}, {values[-1]:.3e}]"
            )
        keep = values > tols.ker
        r_kept = np.clip(values[keep], tols.ker, 1.0)
        domain = vectors[:, keep]
        operator = np.diag(1.0 / r_kept - 1.0)
        return cls(basis, domain, operator, r_matrix=real_if_close(R))

    @classmethod
    def from_domain(
        cls, basis: Basis | str, vectors: np.ndarray, operator: np.ndarray
    ) -> ExtendedQuadraticForm:
        """Form whose value at ``sum c_i v_i`` is ``c* operator c`` for arbitrary ``v_i``."""
        vectors = np.atleast_2d(np.asarray(vectors))
        k = vectors.shape[1]
        if k == 0:
            return cls(basis, vectors, np.zeros((0, 0)))
        q_factor, r_factor = np.linalg.qr(vectors)
        if np.linalg.matrix_rank(r_factor) < k:
            raise ValueError("Domain vectors must be linearly independent")
        r_inv = np.linalg.inv(r_factor)
        return cls(basis, q_factor, r_inv.conj().T @ np.asarray(operator).reshape(k, k) @ r_inv)

    @classmethod
    def from_matrix(cls, Q: np.ndarray, basis: Basis | str = Basis.PQ) -> ExtendedQuadraticForm:
        """Everywhere-finite form ``q(f) = f* Q f``."""
        Q = np.atleast_2d(np.asarray(Q))
        return cls(basis, np.eye(Q.shape[0]), Q)

    @classmethod
    def trivial(cls, n: int, basis: Basis | str = Basis.PQ) -> ExtendedQuadraticForm:
        """``q = inf`` away from the origin."""
        return cls(basis, np.zeros((2 * n, 0)), np.zeros((0, 0)))

    @property
    def dim(self) -> int:
        return self._domain.shape[0]

    @property
    def n(self) -> int:
        return self.dim // 2

    @property
    def domain(self) -> np.ndarray:
        return self._domain

    @property
    def operator(self) -> np.ndarray:
        return self._operator

    @property
    def domain_dim(self) -> int:
        return self._domain.shape[1]

    @property
    def is_regular(self) -> bool:
        return self.domain_dim == self.dim

    @cached_property
    def r(self) -> np.ndarray:
        k = self.domain_dim
        if k == 0:
            return np.zeros((self.dim, self.dim))
        middle = np.linalg.inv(np.eye(k) + self._operator)
        return real_if_close(_hermitize(self._domain @ middle @ self._domain.conj().T))

    @cached_property
    def full_matrix(self) -> np.ndarray:
        """``D Qd D*``: the finite part extended by zero off the domain."""
        return real_if_close(self._domain @ self._operator @ self._domain.conj().T)

    def evaluate(self, f: VectorLike) -> ExtendedReal:
        if isinstance(f, PhaseVector) and f.basis is not self.basis:
            f = change_basis(f, self.basis)
        x = as_vector(f)
        if x.size != self.dim:
            raise ValueError(f"Vector of length {x.size} does not match form dimension {self.dim}")
        norm = float(np.linalg.norm(x))
        if norm == 0.0:
            return ExtendedReal(0.0)
        if not np.isfinite(norm):
            return INFINITY
        coords = self._domain.conj().T @ x
        outside = x - self._domain @ coords
        if float(np.linalg.norm(outside)) > active_tolerances().ker * norm:
            return INFINITY
        value = float(np.real(np.vdot(coords, self._operator @ coords)))
        return ExtendedReal(max(value, 0.0))

    __call__ = evaluate

    def to_basis(self, target: Basis | str) -> ExtendedQuadraticForm:
        target = Basis(target)
        if target is self.basis:
            return self
        U = basis_unitary(self.n)
        domain = U @ self._domain if target is Basis.AA else U.conj().T @ self._domain
        return ExtendedQuadraticForm(target, domain, self._operator)

    def pullback(self, V: np.ndarray | Propagator) -> ExtendedQuadraticForm:
        """Form ``f -> q(V f)``."""
        if isinstance(V, Propagator):
            V = V.matrix if V.basis is self.basis else change_basis(V, self.basis).matrix
        V = np.asarray(V)
        if V.shape != (self.dim, self.dim):
            raise ValueError(f"Operator shape {V.shape} does not match form dimension {self.dim}")
        if self.domain_dim == 0:
            return ExtendedQuadraticForm.trivial(self.n, self.basis)
        preimage = np.linalg.solve(V, self._domain)
        new_domain = orth(preimage)
        coupling = self._domain.conj().T @ V @ new_domain
        return ExtendedQuadraticForm(
            self.basis, new_domain, coupling.conj().T @ self._operator @ coupling
        )

    def same_as(self, other: ExtendedQuadraticForm, tol: float | None = None) -> bool:
        if other.basis is not self.basis:
            other = other.to_basis(self.basis)
        tol = active_tolerances().res if tol is None else tol
        return operator_norm(self.r - other.r) <= tol * (1.0 + operator_norm(self.r))

    def __repr__(self) -> str:
        return (
            f"ExtendedQuadraticForm(basis={self.basis.value}, n={self.n}, "
            f"domain_dim={self.domain_dim})"
        )


def eval_form(q: ExtendedQuadraticForm, f: VectorLike) -> ExtendedReal:
    return q.evaluate(f)


@dataclass(frozen=True, eq=False)
class AngularOperator:
    """Contraction ``K`` whose graph ``{x + Kx}`` is a maximal positive subspace."""

    K: np.ndarray

    def __post_init__(self) -> None:
        K = np.atleast_2d(np.asarray(self.K, dtype=complex))
        if K.shape[0] != K.shape[1]:
            raise ValueError(f"Angular operator must be square, got shape {K.shape}")
        norm = operator_norm(K)
        if norm > 1.0 + active_tolerances().res:
            raise InvariantViolation("||K|| <= 1", f"norm {norm:.12g}")
        K.setflags(write=False)
        object.__setattr__(self, "K", K)

    @property
    def n(self) -> int:
        return self.K.shape[0]

    @property
    def norm(self) -> float:
        return operator_norm(self.K)

    @property
    def is_regular(self) -> bool:
        return self.norm < 1.0 - active_tolerances().res

    @property
    def is_real_symmetric(self) -> bool:
        return reality_check(self.K)

    def graph_basis(self) -> np.ndarray:
        return np.vstack([np.eye(self.n), self.K])

    def positivity_margin(self) -> float:
        return positivity_margin(self.K)


AngularLike = Union[AngularOperator, np.ndarray, complex, float]


def _angular_matrix(K: AngularLike) -> np.ndarray:
    if isinstance(K, AngularOperator):
        return K.K
    return AngularOperator(K).K


def r_from_k(K: AngularLike, basis: Basis | str = Basis.PQ) -> ExtendedQuadraticForm:
    """Minimal majorant whose positive subspace is the graph of ``K``."""
    K = _angular_matrix(K)
    basis = Basis(basis)
    eye = np.eye(K.shape[0])
    K_adj = K.conj().T
    if basis is Basis.AA:
        R = np.block([[eye, K_adj], [K, eye]]) / 2
    else:
        off = 1j * K - 1j * K_adj
        R = np.block([[2 * eye - K - K_adj, off], [off, 2 * eye + K + K_adj]]) / 4
    return ExtendedQuadraticForm.from_r(real_if_close(R), basis)


def k_from_r(q: ExtendedQuadraticForm) -> np.ndarray:
    """Angular operator of a minimal majorant, ``K = 2 * (R_aa)_21``."""
    R_aa = q.r if q.basis is Basis.AA else transform_operator(q.r, Basis.PQ, Basis.AA)
    n = q.n
    K = 2 * R_aa[n:, :n]
    reconstructed = r_from_k(K, Basis.AA).r
    if operator_norm(reconstructed - R_aa) > active_tolerances().res:
        raise InvariantViolation("R has angular block form")
    return K


def positivity_margin(K: AngularLike) -> float:
    """Largest ``g`` with ``<x, x> >= g ||x||^2`` on the graph of ``K``."""
    sigma = operator_norm(_angular_matrix(K))
    return (1.0 - sigma**2) / (1.0 + sigma**2)


def majorant_defect(q: ExtendedQuadraticForm) -> np.ndarray:
    """``I - R - J* R J`` in the form's basis."""
    J = metric(q.basis, q.n)
    R = q.r
    return _hermitize(np.eye(q.dim) - R - J.conj().T @ R @ J)


def is_majorant(q: ExtendedQuadraticForm) -> bool:
    smallest = float(np.linalg.eigvalsh(majorant_defect(q))[0])
    return smallest >= -active_tolerances().res * (1.0 + operator_norm(q.r))


def minimality_residual(q: ExtendedQuadraticForm) -> float:
    return operator_norm(majorant_defect(q))


def is_minimal(q: ExtendedQuadraticForm) -> bool:
    return minimality_residual(q) <= active_tolerances().res


def _pq_form(q: ExtendedQuadraticForm) -> ExtendedQuadraticForm:
    return q if q.basis is Basis.PQ else q.to_basis(Basis.PQ)


def dominates_s(q: ExtendedQuadraticForm, f: VectorLike, g: VectorLike) -> bool:
    """``2 |s(f, g)| <= q(f) + q(g)``."""
    q = _pq_form(q)
    bound = q.evaluate(f) + q.evaluate(g)
    if bound.is_infinite:
        return True
    lhs = 2.0 * abs(symplectic_form(f, g))
    return lhs <= float(bound) + active_tolerances().res * (1.0 + lhs + float(bound))


def _aligned(
    q: ExtendedQuadraticForm, V: np.ndarray | Propagator
) -> tuple[ExtendedQuadraticForm, np.ndarray]:
    if isinstance(V, Propagator):
        q = q.to_basis(V.basis)
        V = V.matrix
    V = np.asarray(V)
    if V.shape != (q.dim, q.dim):
        raise ValueError(f"Operator shape {V.shape} does not match form dimension {q.dim}")
    if np.linalg.matrix_rank(V) < V.shape[0]:
        raise ValueError("Invariance test needs an invertible operator")
    return q, V


def _r_identity_residual(R: np.ndarray, V: np.ndarray, V_adj_inv: np.ndarray) -> float:
    eye = np.eye(R.shape[0])
    return operator_norm((eye - R) @ V @ R - R @ V_adj_inv @ (eye - R))


def invariance_residual(q: ExtendedQuadraticForm, V: np.ndarray | Propagator) -> float:
    """``||(I - R) V R - R V*^-1 (I - R)||``."""
    q, V = _aligned(q, V)
    return _r_identity_residual(q.r, V, np.linalg.inv(V.conj().T))


def is_invariant(q: ExtendedQuadraticForm, V: np.ndarray | Propagator) -> bool:
    q, V = _aligned(q, V)
    scale = 1.0 + operator_norm(V) ** 2
    return invariance_residual(q, V) <= active_tolerances().res * scale


def invariance_conditions(
    q: ExtendedQuadraticForm, V: np.ndarray | Propagator
) -> dict[str, bool]:
    """The four equivalent invariance conditions, evaluated independently."""
    q, V = _aligned(q, V)
    V_inv = np.linalg.inv(V)
    tol = active_tolerances().res * (1.0 + operator_norm(V) ** 2 + operator_norm(V_inv) ** 2)
    return {
        "pullback": q.pullback(V).same_as(q, tol),
        "inverse_pullback": q.pullback(V_inv).same_as(q, tol),
        "r_identity": _r_identity_residual(q.r, V, np.linalg.inv(V.conj().T)) <= tol,
        "inverse_r_identity": _r_identity_residual(q.r, V_inv, V.conj().T) <= tol,
    }


def reality_check(K: AngularLike) -> bool:
    """``K^T = K``, i.e. ``K* = conj(K)``."""
    K = np.atleast_2d(np.asarray(K.K if isinstance(K, AngularOperator) else K))
    return operator_norm(K - K.T) <= active_tolerances().res * (1.0 + operator_norm(K))


def _conjugation_residual(q: ExtendedQuadraticForm) -> float:
    """``||R - C R C||`` for the basis-appropriate conjugation ``C``."""
    R = q.r
    if q.basis is Basis.PQ:
        return operator_norm(R - R.conj())
    n = q.n
    swap = np.block([[np.zeros((n, n)), np.eye(n)], [np.eye(n), np.zeros((n, n))]])
    return operator_norm(R - swap @ R.conj() @ swap)


def complexify(q: ExtendedQuadraticForm) -> ExtendedQuadraticForm:
    """``q_C(f + ig) = q(f) + q(g)``, expressed on the complex AA coordinates."""
    if q.basis is not Basis.PQ or _conjugation_residual(q) > active_tolerances().res:
        raise InvariantViolation("real form", "complexify expects a real PQ form")
    return q.to_basis(Basis.AA)


def realify(q: ExtendedQuadraticForm) -> ExtendedQuadraticForm:
    """Real PQ form whose complexification is ``q``."""
    residual = _conjugation_residual(q)
    if residual > active_tolerances().res:
        raise InvariantViolation("R = CRC", f"residual {residual:.3e}")
    R = q.r if q.basis is Basis.PQ else transform_operator(q.r, Basis.AA, Basis.PQ)
    return ExtendedQuadraticForm.from_r(np.real(R), Basis.PQ)


def describe_form(q: ExtendedQuadraticForm, precision: int = 6) -> dict[str, object]:
    """Symbolic description of a one-mode form in ``x_p, x_q``."""
    q = _pq_form(q)
    if q.n != 1:
        return {"kind": "general", "domain_dim": q.domain_dim, "text": f"rank-{q.domain_dim} form"}

    def fmt(value: float) -> str:
        return f"{value:.{precision}g}"

    if q.domain_dim == 0:
        return {"kind": "trivial", "support": "x_p = 0, x_q = 0", "text": "q = inf off the origin"}
    if q.domain_dim == 2:
        Q = np.real(q.full_matrix)
        coefficients = {"x_p^2": Q[0, 0], "x_p x_q": 2 * Q[0, 1], "x_q^2": Q[1, 1]}
        text = " + ".join(f"{fmt(v)}*{k}" for k, v in coefficients.items() if abs(v) > 1e-14)
        return {"kind": "regular", "coefficients": coefficients, "text": f"q = {text or '0'}"}

    d = np.real(q.domain[:, 0])
    weight = float(np.real(q.operator[0, 0]))
    if abs(d[0]) > active_tolerances().ker:
        slope = -d[1] / d[0]
        support = f"{fmt(slope)}*x_p + x_q = 0" if abs(slope) > 1e-14 else "x_q = 0"
        on_support = f"{fmt(weight / d[0] ** 2)}*x_p^2"
    else:
        support = "x_p = 0"
        on_support = f"{fmt(weight / d[1] ** 2)}*x_q^2"
    return {
        "kind": "line",
        "support": support,
        "on_support": on_support,
        "text": f"q = {on_support} on {support}, inf elsewhere",
    }
