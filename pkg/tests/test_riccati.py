from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose

from riccati import (
    ProblemMode,
    RiccatiProblem,
    eigen_clusters,
    graph_invariance_residual,
    graph_projector,
    residual,
    solve,
    solve_scalar,
    solve_spectral,
)
from symplectic_core import QuadHamiltonianPQ, generator_pq, propagator


def _problem(M, L, K) -> RiccatiProblem:
    return RiccatiProblem.from_generator(generator_pq(QuadHamiltonianPQ(M=M, L=L, K=K)))


def _k_values(solutions) -> list[complex]:
    return sorted((complex(s.K[0, 0]) for s in solutions), key=lambda z: (z.real, z.imag))


def test_oscillator_has_unique_solution() -> None:
    solutions = solve(_problem([[1.0]], [[0.0]], [[4.0]]))
    assert solutions.unique
    assert solutions[0].unique
    assert solutions[0].K[0, 0] == pytest.approx(1.0 / 3.0)
    assert solutions[0].real_symmetric
    assert not solutions[0].on_unit_sphere


def test_free_evolution_double_root() -> None:
    solutions = solve(_problem([[1.0]], [[0.0]], [[0.0]]))
    assert len(solutions) == 1
    assert solutions[0].K[0, 0] == pytest.approx(-1.0)
    assert solutions[0].on_unit_sphere


def test_dilation_has_two_solutions() -> None:
    P = _problem([[0.0]], [[-1.0]], [[0.0]])
    assert_allclose(P.operand, [[0.0, -1j], [-1j, 0.0]], atol=1e-14)
    solutions = solve(P)
    assert not solutions.unique
    assert_allclose(_k_values(solutions), [-1.0, 1.0], atol=1e-12)


def test_repulsive_oscillator_unit_circle_pair() -> None:
    w = 2.0
    solutions = solve(_problem([[1.0]], [[0.0]], [[-(w**2)]]))
    expected = [-(1 - 1j * w) / (1 + 1j * w), -(1 + 1j * w) / (1 - 1j * w)]
    assert len(solutions) == 2
    for value in expected:
        assert min(abs(value - k) for k in _k_values(solutions)) < 1e-12
    assert all(s.on_unit_sphere for s in solutions)


def test_vanishing_scalar_equation_is_a_continuum() -> None:
    solutions = solve_scalar(RiccatiProblem(np.zeros((2, 2))))
    assert solutions.continuum
    assert len(solutions) == 0
    assert not solutions.unique


def test_scalar_solver_needs_one_mode() -> None:
    with pytest.raises(ValueError):
        solve_scalar(RiccatiProblem(np.zeros((4, 4))))
    with pytest.raises(ValueError):
        RiccatiProblem(np.zeros((3, 3)))


def test_spectral_solver_agrees_with_scalar(rng: np.random.Generator) -> None:
    for _ in range(20):
        M, L, K = rng.standard_normal(3)
        P = _problem([[M]], [[L]], [[K]])
        scalar, spectral = solve_scalar(P), solve_spectral(P)
        if scalar.continuum:
            continue
        assert len(scalar) == len(spectral)
        for a, b in zip(_k_values(scalar), _k_values(spectral)):
            assert abs(a - b) < 1e-6


def test_decoupled_two_mode_oscillator() -> None:
    P = _problem(np.eye(2), np.zeros((2, 2)), np.diag([4.0, 9.0]))
    solutions = solve(P)
    assert solutions.unique
    assert_allclose(solutions[0].K, np.diag([1.0 / 3.0, 0.5]), atol=1e-10)
    assert residual(P, solutions[0].K) < 1e-10


def test_propagator_problem_matches_generator() -> None:
    G = generator_pq(QuadHamiltonianPQ(M=[[1.0]], L=[[0.0]], K=[[4.0]]))
    V = propagator(G, 0.7)
    P = RiccatiProblem.from_propagator(V)
    assert P.mode is ProblemMode.PROPAGATOR
    solutions = solve(P)
    assert len(solutions) == 1
    assert solutions[0].K[0, 0] == pytest.approx(1.0 / 3.0)
    assert graph_invariance_residual(V, solutions[0].K) < 1e-10
    assert graph_invariance_residual(V, 0.0) > 1e-3


def test_graph_projector_is_idempotent() -> None:
    P = graph_projector(np.array([[0.2, 0.1j], [0.1j, -0.4]]))
    assert_allclose(P @ P, P)


def test_enumeration_refused_above_n_max() -> None:
    with pytest.raises(ValueError):
        solve_spectral(RiccatiProblem(np.zeros((8, 8))), n_max=3)


def test_eigen_clusters_merge_repeated_values() -> None:
    clusters = eigen_clusters(np.diag([1.0, 1.0, -2.0, 3.0]))
    assert [c.size for c in clusters] == [1, 2, 1]
    assert clusters[1].geometric == 2


def test_degenerate_clusters_flag_incomplete() -> None:
    swap = np.array([[0.0, 1.0], [1.0, 0.0]])
    omega, delta = 0.1, 0.3
    operand = np.block([[omega * np.eye(2), -delta * swap], [delta * swap, -omega * np.eye(2)]])
    solutions = solve_spectral(RiccatiProblem(operand))
    assert solutions.incomplete
    assert len(solutions) >= 2


def test_direct_sum_of_oscillator_and_dilation() -> None:
    P = _problem(np.diag([1.0, 0.0]), np.diag([0.0, -1.0]), np.diag([4.0, 0.0]))
    solutions = solve_spectral(P)
    assert len(solutions) == 2
    assert not solutions.continuum
    assert not solutions.incomplete
    found = sorted(solutions.matrices, key=lambda K: K[1, 1].real)
    assert_allclose(found[0], np.diag([1.0 / 3.0, -1.0]), atol=1e-9)
    assert_allclose(found[1], np.diag([1.0 / 3.0, 1.0]), atol=1e-9)
    assert all(residual(P, K) < 1e-9 for K in found)
