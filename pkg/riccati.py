"""
Graph-invariance (angular operator) equation.

Writing a generator or propagator in the AA basis as ``[[A, B], [C, D]]``, the
graph ``{x + Kx}`` is invariant exactly when

    C + D K = K (A + B K).

``solve_scalar`` handles one mode in closed form. ``solve_spectral`` enumerates
N-dimensional invariant subspaces assembled from eigenvalue clusters of a
reordered complex Schur form and keeps those that are graphs of a contraction.
"""

from __future__ import annotations

import cmath
import itertools
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterator, Sequence

import numpy as np
from scipy.linalg import eigvals, null_space, schur

from majorant import AngularOperator, reality_check
from settings import active_settings, active_tolerances
from symplectic_core import Basis, Generator, Propagator, change_basis, operator_norm

logger = logging.getLogger(__name__)


class ProblemMode(str, Enum):
    GENERATOR = "generator"
    PROPAGATOR = "propagator"


@dataclass(frozen=True, eq=False)
class RiccatiProblem:
    """Operand in the AA basis together with its origin."""

    operand: np.ndarray
    mode: ProblemMode = ProblemMode.GENERATOR

    def __post_init__(self) -> None:
        operand = np.asarray(self.operand, dtype=complex)
        if operand.ndim != 2 or operand.shape[0] != operand.shape[1] or operand.shape[0] % 2:
            raise ValueError(f"Operand must be square of even size, got shape {operand.shape}")
        operand.setflags(write=False)
        object.__setattr__(self, "operand", operand)
        object.__setattr__(self, "mode", ProblemMode(self.mode))

    @classmethod
    def from_generator(cls, G: Generator) -> RiccatiProblem:
        G_aa = G if G.basis is Basis.AA else change_basis(G, Basis.AA)
        return cls(G_aa.matrix, ProblemMode.GENERATOR)

    @classmethod
    def from_propagator(cls, V: Propagator) -> RiccatiProblem:
        V_aa = V if V.basis is Basis.AA else change_basis(V, Basis.AA)
        return cls(V_aa.matrix, ProblemMode.PROPAGATOR)

    @property
    def n(self) -> int:
        return self.operand.shape[0] // 2

    @property
    def blocks(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        n = self.n
        M = self.operand
        return M[:n, :n], M[:n, n:], M[n:, :n], M[n:, n:]

    @property
    def norm(self) -> float:
        return operator_norm(self.operand)


@dataclass(frozen=True, eq=False)
class AngularSolution:
    K: np.ndarray
    residual: float
    on_unit_sphere: bool
    real_symmetric: bool
    unique: bool = False

    @property
    def norm(self) -> float:
        return operator_norm(self.K)

    @property
    def angular(self) -> AngularOperator:
        return AngularOperator(self.K)


@dataclass(frozen=True)
class SolutionSet:
    solutions: list[AngularSolution] = field(default_factory=list)
    continuum: bool = False
    incomplete: bool = False

    def __len__(self) -> int:
        return len(self.solutions)

    def __iter__(self) -> Iterator[AngularSolution]:
        return iter(self.solutions)

    def __getitem__(self, index: int) -> AngularSolution:
        return self.solutions[index]

    @property
    def unique(self) -> bool:
        return len(self.solutions) == 1 and not (self.continuum or self.incomplete)

    @property
    def matrices(self) -> list[np.ndarray]:
        return [s.K for s in self.solutions]


def residual(P: RiccatiProblem, K: np.ndarray | complex) -> float:
    """Frobenius norm of ``C + D K - K A - K B K``."""
    A, B, C, D = P.blocks
    K = np.atleast_2d(np.asarray(K, dtype=complex))
    if K.shape != A.shape:
        raise ValueError(f"K has shape {K.shape}, expected {A.shape}")
    return float(np.linalg.norm(C + D @ K - K @ A - K @ B @ K))


def graph_projector(K: np.ndarray | complex) -> np.ndarray:
    """Projection ``[[I, 0], [K, 0]]`` onto the graph of ``K``."""
    K = np.atleast_2d(np.asarray(K, dtype=complex))
    n = K.shape[0]
    zero = np.zeros((n, n))
    return np.block([[np.eye(n), zero], [K, zero]])


def graph_invariance_residual(V: Propagator | np.ndarray, K: np.ndarray | complex) -> float:
    """``||V P - P V P||`` for the graph projector ``P`` (AA basis)."""
    if isinstance(V, Propagator):
        V = (V if V.basis is Basis.AA else change_basis(V, Basis.AA)).matrix
    projector = graph_projector(K)
    return operator_norm(V @ projector - projector @ V @ projector)


def _canonical_key(K: np.ndarray) -> tuple[float, ...]:
    flat = np.asarray(K).ravel()
    return tuple(itertools.chain.from_iterable((round(z.real, 8), round(z.imag, 8)) for z in flat))


def _finalize(
    P: RiccatiProblem,
    candidates: Sequence[np.ndarray],
    *,
    continuum: bool = False,
    incomplete: bool = False,
) -> SolutionSet:
    tols = active_tolerances()
    bound = tols.res * (1.0 + P.norm**2)
    kept: list[np.ndarray] = []
    for K in candidates:
        K = np.atleast_2d(np.asarray(K, dtype=complex))
        if operator_norm(K) > 1.0 + tols.res:
            continue
        r = residual(P, K)
        if r > bound:
            logger.warning(f"Discarding candidate with residual {r:.3e} above {bound:.3e}")
            continue
        if any(
            operator_norm(K - other) <= tols.dedup * (1.0 + operator_norm(other)) for other in kept
        ):
            continue
        kept.append(K)
    kept.sort(key=_canonical_key)
    solutions = [
        AngularSolution(
            K=K,
            residual=residual(P, K),
            on_unit_sphere=abs(operator_norm(K) - 1.0) <= tols.res,
            real_symmetric=reality_check(K),
        )
        for K in kept
    ]
    result = SolutionSet(solutions, continuum=continuum, incomplete=incomplete)
    if result.unique:
        result = SolutionSet([replace(solutions[0], unique=True)])
    logger.info(
        f"Found {len(result)} angular operator(s)"
        + (" [continuum]" if continuum else "")
        + (" [incomplete]" if incomplete else "")
    )
    return result


def _scalar_roots(a2: complex, a1: complex, a0: complex) -> tuple[list[complex], bool]:
    """Roots of ``a2 K^2 + a1 K + a0``; second value flags an identically zero equation."""
    tol = active_tolerances().sym
    scale = max(abs(a2), abs(a1), abs(a0))
    if scale == 0.0:
        return [], True
    small = tol * scale
    if abs(a2) <= small:
        if abs(a1) <= small:
            return [], abs(a0) <= small
        return [-a0 / a1], False
    disc = a1 * a1 - 4 * a2 * a0
    if abs(disc) <= tol * max(abs(a1) ** 2, abs(4 * a2 * a0)):
        return [-a1 / (2 * a2)], False
    root = cmath.sqrt(disc)
    if (a1.conjugate() * root).real < 0:
        root = -root
    pivot = -(a1 + root) / 2
    return [pivot / a2, a0 / pivot], False


def solve_scalar(P: RiccatiProblem) -> SolutionSet:
    """All ``|K| <= 1`` roots of ``-B K^2 + (D - A) K + C = 0`` for one mode."""
    if P.n != 1:
        raise ValueError(f"solve_scalar needs a one-mode problem, got N={P.n}")
    A, B, C, D = (complex(block[0, 0]) for block in P.blocks)
    roots, identically_zero = _scalar_roots(-B, D - A, C)
    if identically_zero:
        logger.info("Scalar equation vanishes identically: every |K| <= 1 solves it")
        return SolutionSet([], continuum=True)
    return _finalize(P, [np.array([[root]]) for root in roots])


@dataclass(frozen=True, eq=False)
class EigenCluster:
    """Eigenvalues of the operand closer than the merge tolerance."""

    center: complex
    members: tuple[complex, ...]
    geometric: int

    @property
    def size(self) -> int:
        return len(self.members)


def eigen_clusters(M: np.ndarray, tol: float | None = None) -> list[EigenCluster]:
    """Single-linkage clusters of the spectrum of ``M``, ordered canonically."""
    M = np.asarray(M, dtype=complex)
    tol = active_tolerances().cluster * (1.0 + operator_norm(M)) if tol is None else tol
    values = sorted(eigvals(M), key=lambda z: (z.real, z.imag))
    parent = list(range(len(values)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in itertools.combinations(range(len(values)), 2):
        if abs(values[i] - values[j]) <= tol:
            parent[find(i)] = find(j)
    groups: dict[int, list[complex]] = {}
    for i, value in enumerate(values):
        groups.setdefault(find(i), []).append(complex(value))

    clusters = []
    for members in groups.values():
        center = complex(np.mean(members))
        shifted = M - center * np.eye(M.shape[0])
        geometric = null_space(shifted, rcond=active_tolerances().cluster).shape[1]
        clusters.append(EigenCluster(center, tuple(members), max(1, min(geometric, len(members)))))
    clusters.sort(key=lambda c: (round(c.center.real, 8), round(c.center.imag, 8)))
    return clusters


def _nearest(value: complex, clusters: Sequence[EigenCluster]) -> int:
    return min(range(len(clusters)), key=lambda i: abs(value - clusters[i].center))


def selected_subspace(
    M: np.ndarray, clusters: Sequence[EigenCluster], selected: set[int]
) -> np.ndarray | None:
    """Orthonormal basis of the invariant subspace of the selected clusters (reordered Schur)."""
    expected = sum(clusters[i].size for i in selected)
    if expected == 0:
        return np.zeros((M.shape[0], 0), dtype=complex)
    _, Z, sdim = schur(
        np.asarray(M, dtype=complex),
        output="complex",
        sort=lambda value: _nearest(value, clusters) in selected,
    )
    if sdim != expected:
        logger.warning(f"Schur reordering selected {sdim} eigenvalues, expected {expected}")
        return None
    return Z[:, :sdim]


def _chain_subspace(M: np.ndarray, cluster: EigenCluster, dim: int) -> np.ndarray | None:
    """Generalized kernel ``ker (M - c)^j`` of dimension ``dim``, if one exists."""
    shifted = np.asarray(M, dtype=complex) - cluster.center * np.eye(M.shape[0])
    power = np.eye(M.shape[0], dtype=complex)
    for _ in range(cluster.size):
        power = power @ shifted
        kernel = null_space(power, rcond=active_tolerances().cluster)
        if kernel.shape[1] == dim:
            return kernel
        if kernel.shape[1] > dim:
            return None
    return None


def solve_spectral(P: RiccatiProblem, n_max: int | None = None) -> SolutionSet:
    """Angular operators from cluster-wise invariant subspaces of the operand."""
    n_max = active_settings().n_max if n_max is None else n_max
    n = P.n
    if n > n_max:
        raise ValueError(f"Spectral enumeration refused for N={n} > N_max={n_max}")
    tols = active_tolerances()
    M = P.operand
    clusters = eigen_clusters(M)
    continuum = operator_norm(M - np.trace(M) / M.shape[0] * np.eye(M.shape[0])) <= tols.res * (
        1.0 + P.norm
    )
    incomplete = False
    schur_cache: dict[frozenset[int], np.ndarray | None] = {}
    candidates: list[np.ndarray] = []

    for counts in itertools.product(*(range(c.size + 1) for c in clusters)):
        if sum(counts) != n:
            continue
        full = frozenset(i for i, m in enumerate(counts) if m == clusters[i].size and m > 0)
        partial = [(i, m) for i, m in enumerate(counts) if 0 < m < clusters[i].size]
        if any(clusters[i].geometric > 1 for i, _ in partial):
            incomplete = True
        if full not in schur_cache:
            schur_cache[full] = selected_subspace(M, clusters, set(full))
        pieces = [schur_cache[full]]
        for i, m in partial:
            pieces.append(_chain_subspace(M, clusters[i], m))
        if any(piece is None for piece in pieces):
            incomplete = True
            logger.debug(f"No canonical subspace for cluster counts {counts}")
            continue
        basis = np.hstack(pieces)
        if np.linalg.svd(basis, compute_uv=False)[-1] < tols.ker**0.5:
            logger.debug(f"Degenerate subspace for cluster counts {counts}")
            continue
        basis, _ = np.linalg.qr(basis)
        upper, lower = basis[:n], basis[n:]
        if np.linalg.cond(upper) > 1.0 / tols.ker:
            logger.debug(f"Subspace for counts {counts} is not a graph over the positive part")
            continue
        candidates.append(np.linalg.solve(upper.T, lower.T).T)

    if incomplete:
        logger.warning("Degenerate clusters admit invariant subspaces that were not enumerated")
    return _finalize(P, candidates, continuum=continuum, incomplete=incomplete)


def solve(P: RiccatiProblem) -> SolutionSet:
    return solve_scalar(P) if P.n == 1 else solve_spectral(P)
