"""
Quadratic states ``w(e^f) = exp(-q(f)/4)`` and their dynamics.

Besides evaluation and pullback along Bogoliubov transformations, this module
classifies pointwise long-time limits of evolved states by probing the
characteristic functional along a doubling time schedule.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.linalg import expm, orth

from majorant import ExtendedQuadraticForm, is_majorant, is_minimal, r_from_k, realify
from riccati import eigen_clusters, selected_subspace
from settings import active_settings, active_tolerances
from symplectic_core import (
    Basis,
    Generator,
    InvariantViolation,
    Propagator,
    VectorLike,
    change_basis,
    operator_norm,
    real_if_close,
)
from weyl_algebra import Witness, find_witness, gram_matrix, min_gram_eigenvalue

logger = logging.getLogger(__name__)


class QuadraticState:
    """State with characteristic functional ``exp(-q(f)/4)`` for a real majorant ``q``."""

    def __init__(self, q: ExtendedQuadraticForm, *, validate: bool = True) -> None:
        if q.basis is not Basis.PQ or np.iscomplexobj(q.r):
            q = realify(q)
        if validate and not is_majorant(q):
            raise InvariantViolation("state form is a majorant")
        self._q = q

    @property
    def q(self) -> ExtendedQuadraticForm:
        return self._q

    @property
    def n(self) -> int:
        return self._q.n

    @property
    def is_pure(self) -> bool:
        return is_minimal(self._q)

    @property
    def is_regular(self) -> bool:
        return self._q.is_regular

    def char_fn(self, f: VectorLike) -> float:
        value = self._q.evaluate(f)
        return 0.0 if value.is_infinite else float(np.exp(-float(value) / 4))

    __call__ = char_fn

    def __repr__(self) -> str:
        return f"QuadraticState(n={self.n}, domain_dim={self._q.domain_dim})"


def char_fn(state: QuadraticState, f: VectorLike) -> float:
    return state.char_fn(f)


def fock_state(n: int) -> QuadraticState:
    """``q(f) = ||f||^2``."""
    if n < 1:
        raise ValueError(f"Number of modes must be positive, got {n}")
    return QuadraticState(ExtendedQuadraticForm.from_matrix(np.eye(2 * n)))


def trivial_state(n: int) -> QuadraticState:
    """``w(e^f) = 1`` at ``f = 0`` and ``0`` elsewhere."""
    if n < 1:
        raise ValueError(f"Number of modes must be positive, got {n}")
    return QuadraticState(ExtendedQuadraticForm.trivial(n))


def _pq_matrix(V: Propagator | np.ndarray) -> np.ndarray:
    if isinstance(V, Propagator):
        V = (V if V.basis is Basis.PQ else change_basis(V, Basis.PQ)).matrix
    V = real_if_close(np.asarray(V))
    if np.iscomplexobj(V):
        raise ValueError("Pullback needs a real transformation in the PQ basis")
    return V


def pullback(state: QuadraticState, V: Propagator | np.ndarray) -> QuadraticState:
    """State ``f -> w(e^{Vf})``."""
    return QuadraticState(state.q.pullback(_pq_matrix(V)), validate=False)


def random_regular_state(
    rng: np.random.Generator, n: int = 1, k_max: float = 0.9
) -> QuadraticState:
    """Pure regular state from a random symmetric angular operator with ``||K|| <= k_max``."""
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    K = (Z + Z.T) / 2
    K *= rng.uniform(0.0, k_max) / max(operator_norm(K), 1e-300)
    return QuadraticState(r_from_k(K, Basis.PQ))


def epsilon_family_state(epsilon: float, b: float = 0.0) -> QuadraticState:
    """One-mode state with ``q(x) = x_p^2 / epsilon + (b + epsilon) x_q^2``."""
    if epsilon <= 0 or b < 0:
        raise ValueError(f"Need epsilon > 0 and b >= 0, got epsilon={epsilon}, b={b}")
    return QuadraticState(ExtendedQuadraticForm.from_matrix(np.diag([1.0 / epsilon, b + epsilon])))


def epsilon_limit_state(b: float = 0.0) -> QuadraticState:
    """Limit of ``epsilon_family_state`` as ``epsilon -> 0``: ``b x_q^2`` on ``x_p = 0``."""
    if b < 0:
        raise ValueError(f"Need b >= 0, got {b}")
    return QuadraticState(ExtendedQuadraticForm(Basis.PQ, np.array([[0.0], [1.0]]), [[b]]))


class SpectralFlow:
    """``exp(tG) f`` evaluated separately on each spectral cluster of ``G``."""

    def __init__(self, G: Generator) -> None:
        G_pq = G if G.basis is Basis.PQ else change_basis(G, Basis.PQ)
        self._matrix = np.asarray(G_pq.matrix)
        clusters = eigen_clusters(self._matrix)
        bases = [selected_subspace(self._matrix, clusters, {i}) for i in range(len(clusters))]
        self._bases: list[np.ndarray] | None = None
        if all(b is not None for b in bases):
            stacked = np.hstack(bases)
            if np.linalg.cond(stacked) < 1.0 / active_tolerances().ker:
                self._bases = bases
                self._stacked = stacked
                self._blocks = [b.conj().T @ self._matrix @ b for b in bases]
        if self._bases is None:
            logger.warning("Spectral splitting unavailable, evolving with the full exponential")
        self.clusters = clusters

    @property
    def directions(self) -> list[np.ndarray]:
        """Real and imaginary parts of the cluster basis vectors, normalized."""
        if self._bases is None:
            return []
        found = []
        for basis in self._bases:
            for column in basis.T:
                for part in (np.real(column), np.imag(column)):
                    norm = np.linalg.norm(part)
                    if norm > 1e-8:
                        found.append(part / norm)
        return found

    def evolve(self, f: np.ndarray, t: float) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            if self._bases is None:
                return np.real(expm(t * self._matrix) @ f)
            coefficients = np.linalg.solve(self._stacked, f)
            snap = active_tolerances().ker * np.linalg.norm(f)
            out = np.zeros(f.size, dtype=complex)
            offset = 0
            for basis, block in zip(self._bases, self._blocks):
                k = basis.shape[1]
                y = coefficients[offset : offset + k]
                offset += k
                if np.linalg.norm(basis @ y) <= snap:
                    continue
                out = out + basis @ (expm(t * block) @ y)
        return np.real(out)


class ProbeClass(str, Enum):
    CONVERGES = "converges"
    DECAYS = "decays"
    UNRESOLVED = "unresolved"


@dataclass(frozen=True, eq=False)
class ProbeRecord:
    vector: np.ndarray
    times: list[float]
    values: list[float]
    classification: ProbeClass

    @property
    def limit(self) -> float | None:
        if self.classification is ProbeClass.CONVERGES:
            return self.values[-1]
        if self.classification is ProbeClass.DECAYS:
            return 0.0
        return None

    def tail(self, size: int = 5) -> list[float]:
        return self.values[-size:]


@dataclass(frozen=True, eq=False)
class LimitReport:
    direction: int
    probes: list[ProbeRecord] = field(default_factory=list)
    state: QuadraticState | None = None
    reason: str = ""

    @property
    def no_limit(self) -> bool:
        return self.state is None


def _follow(
    state: QuadraticState, flow: SpectralFlow, f: np.ndarray, times: list[float]
) -> tuple[list[float], list[float], ProbeClass]:
    schedule = active_settings().limits
    seen: list[float] = []
    values: list[float] = []
    for t in times:
        seen.append(t)
        values.append(state.char_fn(flow.evolve(f, t)))
        window = values[-schedule.window :]
        if len(window) < schedule.window:
            continue
        if max(window) < schedule.decay_floor:
            return seen, values, ProbeClass.DECAYS
        spread = max(window) - min(window)
        if min(window) >= schedule.decay_floor and spread <= schedule.converge_tol:
            return seen, values, ProbeClass.CONVERGES
    return seen, values, ProbeClass.UNRESOLVED


def track_probe(
    state: QuadraticState, flow: SpectralFlow, f: np.ndarray, direction: int
) -> ProbeRecord:
    """Follow ``w(e^{V_t f})`` along both doubling grids until it settles.

    A probe only settles when the two grids agree: periodic flows whose period
    divides every ``2**k`` look constant on one grid but not on the other.
    """
    schedule = active_settings().limits
    runs = [_follow(state, flow, f, times) for times in schedule.grids(direction)]
    times, values, classification = runs[0]
    for _, other_values, other_class in runs[1:]:
        if other_class is not classification:
            classification = ProbeClass.UNRESOLVED
        elif (
            classification is ProbeClass.CONVERGES
            and abs(other_values[-1] - values[-1]) > schedule.grid_agreement
        ):
            classification = ProbeClass.UNRESOLVED
    return ProbeRecord(np.asarray(f), times, values, classification)


def _probe_set(flow: SpectralFlow, dim: int, rng: np.random.Generator) -> list[np.ndarray]:
    probes = list(np.eye(dim))
    probes += flow.directions
    for _ in range(active_settings().limits.random_probes):
        v = rng.standard_normal(dim)
        probes.append(v / np.linalg.norm(v))
    return probes


def _limit_form_value(record: ProbeRecord) -> float:
    return -4.0 * np.log(record.values[-1])


def time_limit(
    state: QuadraticState,
    G: Generator,
    direction: int,
    rng: np.random.Generator | None = None,
) -> LimitReport:
    """Pointwise limit of ``f -> w(e^{V_t f})`` as ``t -> direction * inf``."""
    if direction not in (1, -1):
        raise ValueError(f"direction must be +1 or -1, got {direction}")
    if state.n > active_settings().n_max:
        raise ValueError(f"Limit classification refused for N={state.n}")
    rng = np.random.default_rng(0) if rng is None else rng
    flow = SpectralFlow(G)
    dim = 2 * state.n
    records = [track_probe(state, flow, f, direction) for f in _probe_set(flow, dim, rng)]

    def no_limit(reason: str) -> LimitReport:
        logger.info(f"No limit for t -> {direction:+d} inf: {reason}")
        return LimitReport(direction, records, None, reason)

    unresolved = [r for r in records if r.classification is ProbeClass.UNRESOLVED]
    if unresolved:
        return no_limit(f"{len(unresolved)} probe(s) neither converge nor decay")

    converging = [r for r in records if r.classification is ProbeClass.CONVERGES]
    if not converging:
        logger.info(f"All probes decay for t -> {direction:+d} inf")
        return LimitReport(direction, records, trivial_state(state.n))

    domain = orth(np.column_stack([r.vector for r in converging]), rcond=1e-8)
    for record in records:
        if record.classification is ProbeClass.DECAYS:
            outside = record.vector - domain @ (domain.T @ record.vector)
            if np.linalg.norm(outside) <= 1e-8 * np.linalg.norm(record.vector):
                return no_limit("a probe inside the converging span decays")

    k = domain.shape[1]
    diagonal = []
    for i in range(k):
        record = track_probe(state, flow, domain[:, i], direction)
        if record.classification is not ProbeClass.CONVERGES:
            return no_limit("converging directions do not form a subspace")
        diagonal.append(_limit_form_value(record))
    operator = np.diag(diagonal)
    for i in range(k):
        for j in range(i + 1, k):
            record = track_probe(state, flow, domain[:, i] + domain[:, j], direction)
            if record.classification is not ProbeClass.CONVERGES:
                return no_limit("converging directions do not form a subspace")
            operator[i, j] = operator[j, i] = (
                _limit_form_value(record) - diagonal[i] - diagonal[j]
            ) / 2

    for record in converging:
        c = domain.T @ record.vector
        predicted = float(c @ operator @ c)
        measured = _limit_form_value(record)
        if abs(predicted - measured) > 1e-6 * (1.0 + abs(measured)):
            return no_limit("limit functional is not Gaussian on its support")
    try:
        form = ExtendedQuadraticForm(Basis.PQ, domain, operator)
    except InvariantViolation:
        return no_limit("limit functional has a negative quadratic part")
    if not is_majorant(form):
        return no_limit("limit functional is not positive definite")
    logger.info(f"Limit for t -> {direction:+d} inf has a {k}-dimensional support")
    return LimitReport(direction, records, QuadraticState(form, validate=False))


@dataclass(frozen=True, eq=False)
class PositivityReport:
    trials: int
    min_eigenvalue: float
    worst_ratio: float
    passed: bool
    violating_points: list[np.ndarray] | None = None
    witness: Witness | None = None


def positivity_suite(
    target: QuadraticState | ExtendedQuadraticForm,
    trials: int,
    rng: np.random.Generator,
) -> PositivityReport:
    """Sample Gram matrices of random point sets (sizes 2 to 6) and track the least eigenvalue."""
    q = target.q if isinstance(target, QuadraticState) else target
    if q.basis is not Basis.PQ:
        q = q.to_basis(Basis.PQ)
    tol = active_tolerances().res
    domain = np.real(q.domain)
    min_eigenvalue, worst_ratio, violating = np.inf, np.inf, None
    for trial in range(trials):
        size = int(rng.integers(2, 7))
        scale = float(rng.uniform(0.2, 3.0))
        if q.domain_dim and trial % 2:
            points = [scale * domain @ rng.standard_normal(q.domain_dim) for _ in range(size)]
        else:
            points = [scale * rng.standard_normal(q.dim) for _ in range(size)]
        gram = gram_matrix(q, points)
        smallest = min_gram_eigenvalue(gram)
        ratio = smallest / max(operator_norm(gram), 1e-300)
        min_eigenvalue = min(min_eigenvalue, smallest)
        if ratio < worst_ratio:
            worst_ratio = ratio
            if ratio < -tol:
                violating = points
    passed = worst_ratio >= -tol
    witness = None
    if not is_majorant(q):
        witness = find_witness(q, rng)
        if witness is not None:
            passed = False
            min_eigenvalue = min(min_eigenvalue, witness.min_eigenvalue)
    return PositivityReport(
        trials=trials,
        min_eigenvalue=float(min_eigenvalue),
        worst_ratio=float(worst_ratio),
        passed=passed,
        violating_points=violating,
        witness=witness,
    )
