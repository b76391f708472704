from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis.strategies import floats, sampled_from

from momentum_mode import (
    DispersionGrid,
    ModeRecord,
    Region,
    anti_diagonal_solutions,
    classify_grid,
    cross_check_mode,
    k0_direct_form,
    k0_of_mode,
    mode_block_generator,
    mode_residual,
)
from symplectic_core import InvariantViolation
from worked_examples import pairing_grid

omegas = floats(min_value=-5.0, max_value=5.0, allow_nan=False)
gaps = floats(min_value=0.01, max_value=5.0, allow_nan=False)
branches = sampled_from([1, -1])


@given(omegas, gaps, branches)
@settings(max_examples=200, deadline=None)
def test_k0_solves_mode_equation(omega: float, delta: float, epsilon: int) -> None:
    solution = k0_of_mode(omega, delta, epsilon)
    assert solution.residual <= 1e-12 * (1.0 + abs(omega) + abs(delta))
    if solution.region is Region.HYPERBOLIC:
        assert abs(abs(solution.k0) - 1.0) <= 1e-12
    else:
        assert solution.region is Region.ELLIPTIC
        assert abs(solution.k0) <= 1.0 + 1e-12
        assert solution.k0.imag == 0.0


@given(omegas, gaps, branches)
@settings(max_examples=200, deadline=None)
def test_direct_form_agrees(omega: float, delta: float, epsilon: int) -> None:
    transformed = k0_of_mode(omega, delta, epsilon).k0
    direct = k0_direct_form(omega, delta, epsilon)
    assert abs(transformed - direct) <= 1e-9


def test_degenerate_modes() -> None:
    zero = k0_of_mode(0.0, 0.0)
    assert zero.region is Region.ZERO
    assert zero.free
    assert k0_direct_form(0.0, 0.0) is None
    trivial = k0_of_mode(1.5, 0.0)
    assert trivial.region is Region.TRIVIAL
    assert trivial.k0 == 0
    assert k0_direct_form(1.5, 0.0) == 0


def test_boundary_belongs_to_elliptic_region() -> None:
    solution = k0_of_mode(0.3, 0.3)
    assert solution.region is Region.ELLIPTIC
    assert solution.k0 == pytest.approx(1.0)


def test_branch_selects_conjugate_root() -> None:
    plus, minus = k0_of_mode(0.1, 0.3, 1), k0_of_mode(0.1, 0.3, -1)
    assert plus.k0 == pytest.approx(minus.k0.conjugate())
    assert plus.k0.imag < 0
    with pytest.raises(ValueError):
        k0_of_mode(0.1, 0.3, 0)


def test_mode_residual_sign_convention() -> None:
    assert mode_residual(1.0, 0.5, 0.5) == pytest.approx(abs(-0.5 + 1.0 - 0.125))
    root = k0_of_mode(1.0, 0.5).k0
    assert 0.5 * root**2 - 2.0 * root + 0.5 == pytest.approx(0.0, abs=1e-14)


def test_grid_must_be_symmetric() -> None:
    with pytest.raises(InvariantViolation):
        DispersionGrid((ModeRecord(0.1, 0.01, 0.3), ModeRecord(0.2, 0.04, 0.3)))
    with pytest.raises(InvariantViolation):
        DispersionGrid((ModeRecord(-0.1, 0.01, 0.3), ModeRecord(0.1, 0.02, 0.3)))
    with pytest.raises(InvariantViolation):
        DispersionGrid((ModeRecord(-0.1, 0.01, 0.3), ModeRecord(0.1, 0.01, 0.2)))
    with pytest.raises(ValueError):
        DispersionGrid((ModeRecord(0.1, 0.01, 0.3), ModeRecord(0.1, 0.01, 0.3)))
    with pytest.raises(ValueError):
        DispersionGrid(())


def test_grid_from_callables_is_sorted() -> None:
    grid = DispersionGrid.from_values([0.2, -0.2, 0.0], dispersion=abs, gap=lambda p: 0.1)
    assert [r.p for r in grid.records] == [-0.2, 0.0, 0.2]
    assert len(grid) == 3
    assert [(a.p, b.p) for a, b in grid.pairs()] == [(0.0, 0.0), (0.2, -0.2)]


def test_pairing_grid_classification() -> None:
    grid = pairing_grid()
    assert len(grid) == 40
    classification = classify_grid(grid)
    assert classification.summary == {"zero": 0, "trivial": 0, "elliptic": 20, "hyperbolic": 20}
    assert classification.two_per_mode
    assert not classification.continuum_of_states
    frame = classification.to_frame()
    assert list(frame.columns) == [
        "p", "omega", "delta", "region", "k0_re", "k0_im", "abs_k0", "epsilon", "residual"
    ]
    assert frame["residual"].max() < 1e-12


def test_epsilon_override() -> None:
    grid = pairing_grid(n_pairs=2)
    default = classify_grid(grid)
    flipped = classify_grid(grid, -1)
    for a, b in zip(default.modes, flipped.modes):
        assert a.k0 == pytest.approx(b.k0.conjugate())
    mixed = classify_grid(grid, {0.05: -1})
    assert [m.epsilon for m in mixed.modes] == [1, 1, -1, 1]


def test_zero_mode_makes_a_continuum() -> None:
    grid = DispersionGrid((ModeRecord(-1.0, 0.0, 0.0), ModeRecord(1.0, 0.0, 0.0)))
    classification = classify_grid(grid)
    assert classification.continuum_of_states
    assert all(m.free for m in classification.modes)


def test_block_generator_shapes() -> None:
    assert mode_block_generator(ModeRecord(0.0, 0.5, 0.2)).n == 1
    G = mode_block_generator((0.5, 0.2), p=0.3)
    assert G.n == 2
    assert np.allclose(G.matrix[:2, 2:], [[0.0, -0.2], [-0.2, 0.0]])


@pytest.mark.parametrize("omega, delta", [(0.01, 0.3), (0.36, 0.3), (-0.8, 0.3), (0.2, 0.0)])
def test_closed_form_matches_spectral_solver(omega: float, delta: float) -> None:
    assert cross_check_mode(omega, delta) < 1e-9


def test_hyperbolic_block_has_two_anti_diagonal_solutions() -> None:
    found = anti_diagonal_solutions(0.1, 0.3)
    assert len(found) == 2
    assert all(math.isclose(abs(k), 1.0, abs_tol=1e-9) for k in found)
