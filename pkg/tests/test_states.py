from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.linalg import expm

from majorant import ExtendedQuadraticForm, r_from_k
from states import (
    ProbeClass,
    QuadraticState,
    SpectralFlow,
    char_fn,
    epsilon_family_state,
    epsilon_limit_state,
    fock_state,
    positivity_suite,
    pullback,
    random_regular_state,
    time_limit,
    trivial_state,
)
from symplectic_core import (
    Generator,
    InvariantViolation,
    QuadHamiltonianPQ,
    generator_pq,
    propagator,
)


def _generator(M: float, L: float, K: float) -> Generator:
    return generator_pq(QuadHamiltonianPQ(M=[[M]], L=[[L]], K=[[K]]))


def test_fock_and_trivial_functionals() -> None:
    fock = fock_state(1)
    assert fock.is_pure
    assert fock.is_regular
    assert char_fn(fock, [1.0, 2.0]) == pytest.approx(np.exp(-5.0 / 4))
    trivial = trivial_state(2)
    assert trivial(np.zeros(4)) == 1.0
    assert trivial([0.0, 0.1, 0.0, 0.0]) == 0.0
    assert not trivial.is_pure
    with pytest.raises(ValueError):
        fock_state(0)


def test_non_majorant_state_is_rejected() -> None:
    with pytest.raises(InvariantViolation):
        QuadraticState(ExtendedQuadraticForm.from_matrix(0.2 * np.eye(2)))


def test_pullback_of_fock_state() -> None:
    V = propagator(_generator(1.0, 0.0, 4.0), 0.9)
    evolved = pullback(fock_state(1), V)
    f = np.array([0.4, -1.1])
    assert evolved(f) == pytest.approx(np.exp(-np.sum((V.matrix @ f) ** 2) / 4))


def test_epsilon_family_converges_pointwise() -> None:
    limit = epsilon_limit_state(b=0.5)
    for f in ([0.0, 1.3], [0.2, 0.0], [1.0, 1.0]):
        values = [epsilon_family_state(eps, b=0.5)(f) for eps in (1e-2, 1e-4, 1e-6)]
        assert values[-1] == pytest.approx(limit(f), abs=1e-5)
    assert not limit.is_regular
    with pytest.raises(ValueError):
        epsilon_family_state(0.0)
    with pytest.raises(ValueError):
        epsilon_limit_state(-1.0)


def test_random_regular_state_is_pure(rng: np.random.Generator) -> None:
    for n in (1, 2):
        state = random_regular_state(rng, n)
        assert state.is_pure
        assert state.is_regular


def test_spectral_flow_matches_exponential(rng: np.random.Generator) -> None:
    G = generator_pq(
        QuadHamiltonianPQ(M=[[1.0, 0.3], [0.3, 0.2]], L=[[0.1, 0.0], [0.5, -0.2]], K=np.eye(2))
    )
    flow = SpectralFlow(G)
    for t in (-2.0, 0.5, 3.0):
        f = rng.standard_normal(4)
        assert_allclose(flow.evolve(f, t), expm(t * G.matrix) @ f, atol=1e-9)


def test_dilation_limits() -> None:
    G = _generator(0.0, -1.0, 0.0)
    forward = time_limit(fock_state(1), G, 1)
    backward = time_limit(fock_state(1), G, -1)
    assert forward.state is not None and backward.state is not None
    assert_allclose(forward.state.q.r, r_from_k(-1.0).r, atol=1e-6)
    assert_allclose(backward.state.q.r, r_from_k(1.0).r, atol=1e-6)
    assert forward.state.is_pure


def test_free_evolution_limit_is_mixed() -> None:
    report = time_limit(fock_state(1), _generator(1.0, 0.0, 0.0), 1)
    assert not report.no_limit
    assert_allclose(report.state.q.r, [[0.5, 0.0], [0.0, 0.0]], atol=1e-6)
    assert not report.state.is_pure


def test_rotating_state_has_no_limit() -> None:
    report = time_limit(fock_state(1), _generator(1.0, 0.0, 4.0), 1)
    assert report.no_limit
    assert report.reason
    assert any(p.classification is ProbeClass.UNRESOLVED for p in report.probes)


@pytest.mark.parametrize("omega0", [np.pi, 2 * np.pi])
def test_rotation_commensurate_with_doubling_has_no_limit(omega0: float) -> None:
    # V_t = +-I at every t = 2**k, so only the stretched grid sees the rotation.
    G = _generator(1.0, 0.0, omega0**2)
    assert_allclose(np.abs(propagator(G, 4.0).matrix), np.eye(2), atol=1e-9)
    report = time_limit(fock_state(1), G, 1)
    assert report.no_limit
    assert "neither converge nor decay" in report.reason


def test_trivial_state_is_its_own_limit() -> None:
    report = time_limit(trivial_state(1), _generator(1.0, 0.0, 4.0), -1)
    assert report.state is not None
    assert report.state.q.domain_dim == 0


def test_limit_direction_is_validated() -> None:
    with pytest.raises(ValueError):
        time_limit(fock_state(1), _generator(1.0, 0.0, 0.0), 0)


def test_positivity_suite(rng: np.random.Generator) -> None:
    passed = positivity_suite(fock_state(1), 50, rng)
    assert passed.passed
    assert passed.witness is None
    failed = positivity_suite(ExtendedQuadraticForm.from_matrix(0.2 * np.eye(2)), 20, rng)
    assert not failed.passed
    assert failed.witness is not None
    assert failed.min_eigenvalue < 0
