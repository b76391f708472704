from __future__ import annotations

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from majorant import (
    INFINITY,
    AngularOperator,
    ExtendedQuadraticForm,
    ExtendedReal,
    complexify,
    describe_form,
    dominates_s,
    eval_form,
    invariance_conditions,
    invariance_residual,
    is_invariant,
    is_majorant,
    is_minimal,
    k_from_r,
    positivity_margin,
    r_from_k,
    realify,
    reality_check,
)
from symplectic_core import (
    Basis,
    InvariantViolation,
    QuadHamiltonianPQ,
    generator_pq,
    indefinite_product,
    propagator,
)


def _oscillator_propagator(omega: float, t: float = 0.7):
    h = QuadHamiltonianPQ(M=[[1.0]], L=[[0.0]], K=[[omega**2]])
    return propagator(generator_pq(h), t)


def test_extended_real_arithmetic() -> None:
    assert ExtendedReal(0.0) * math.inf == 0.0
    assert INFINITY + INFINITY == math.inf
    assert INFINITY.is_infinite
    with pytest.raises(ValueError):
        ExtendedReal(math.nan)


def test_fock_form_from_zero_angular_operator() -> None:
    q = r_from_k(0.0)
    assert_allclose(q.r, 0.5 * np.eye(2))
    assert q.is_regular
    assert eval_form(q, [1.0, 2.0]) == pytest.approx(5.0)
    assert is_minimal(q)


def test_trivial_form_values() -> None:
    q = ExtendedQuadraticForm.trivial(2)
    assert q(np.zeros(4)) == 0.0
    assert q([0.0, 1e-3, 0.0, 0.0]).is_infinite
    assert is_majorant(q)
    assert not is_minimal(q)


def test_line_form_evaluation() -> None:
    q = r_from_k(-1.0)
    assert_allclose(q.r, [[1.0, 0.0], [0.0, 0.0]], atol=1e-12)
    assert q.domain_dim == 1
    assert q([2.0, 0.0]) == pytest.approx(0.0)
    assert q([2.0, 0.1]).is_infinite


def test_angular_operator_round_trip(rng: np.random.Generator) -> None:
    for _ in range(20):
        K = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        K *= 0.9 / np.linalg.norm(K, 2)
        for basis in (Basis.PQ, Basis.AA):
            assert_allclose(k_from_r(r_from_k(K, basis)), K, atol=1e-9)
            assert is_minimal(r_from_k(K, basis))


def test_angular_operator_bound_and_margin() -> None:
    with pytest.raises(InvariantViolation):
        AngularOperator(np.array([[1.5]]))
    assert positivity_margin(0.0) == pytest.approx(1.0)
    assert positivity_margin(0.5) == pytest.approx(0.6)
    assert positivity_margin(1.0) == pytest.approx(0.0)
    assert AngularOperator(np.array([[0.3]])).is_regular
    assert not AngularOperator(np.array([[1.0]])).is_regular


@pytest.mark.parametrize("sigma", [0.0, 0.5, 0.8, 1.0])
def test_graph_of_contraction_is_positive(rng: np.random.Generator, sigma: float) -> None:
    for _ in range(20):
        K = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        K *= sigma / np.linalg.norm(K, 2)
        x = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        u = np.concatenate([x, K @ x])
        value = indefinite_product(u, u)
        assert value.imag == pytest.approx(0.0, abs=1e-12)
        norm_x, norm_kx = np.linalg.norm(x), np.linalg.norm(K @ x)
        assert value.real == pytest.approx(norm_x**2 - norm_kx**2)
        assert value.real >= positivity_margin(K) * np.vdot(u, u).real - 1e-12


def test_unit_singular_value_leaves_the_domain() -> None:
    regular = r_from_k(np.diag([0.9, 0.5]))
    assert regular.is_regular
    assert regular.domain_dim == 4

    q = r_from_k(np.diag([1.0, 0.5]))
    assert not q.is_regular
    assert q.domain_dim == 3
    assert r_from_k(np.diag([1.0, 0.5]), Basis.AA).domain_dim == 3
    basis = np.eye(4)
    assert eval_form(q, basis[0]).is_infinite
    for f in basis[1:]:
        assert not eval_form(q, f).is_infinite
    assert eval_form(q, basis[0] + basis[1]).is_infinite


def test_invalid_contraction_is_rejected() -> None:
    with pytest.raises(InvariantViolation):
        ExtendedQuadraticForm.from_r(np.diag([1.5, 0.2]))
    with pytest.raises(InvariantViolation):
        ExtendedQuadraticForm.from_r(np.array([[0.5, 0.4], [0.0, 0.5]]))
    with pytest.raises(InvariantViolation):
        ExtendedQuadraticForm.from_matrix(np.diag([1.0, -1.0]))


def test_majorant_and_minimality_predicates() -> None:
    assert is_majorant(ExtendedQuadraticForm.from_matrix(2 * np.eye(2)))
    assert not is_minimal(ExtendedQuadraticForm.from_matrix(2 * np.eye(2)))
    assert not is_majorant(ExtendedQuadraticForm.from_matrix(0.2 * np.eye(2)))
    assert is_minimal(ExtendedQuadraticForm.from_matrix(np.diag([4.0, 0.25])))


def test_domination_of_symplectic_form() -> None:
    fock = r_from_k(0.0)
    weak = ExtendedQuadraticForm.from_matrix(0.2 * np.eye(2))
    assert dominates_s(fock, [1.0, 0.0], [0.0, 1.0])
    assert not dominates_s(weak, [1.0, 0.0], [0.0, 1.0])
    assert dominates_s(ExtendedQuadraticForm.trivial(1), [1.0, 0.0], [0.0, 1.0])


def test_oscillator_invariant_form() -> None:
    V = _oscillator_propagator(2.0)
    q = r_from_k(1.0 / 3.0)
    assert_allclose(q.r, np.diag([1.0 / 3.0, 2.0 / 3.0]), atol=1e-12)
    assert is_invariant(q, V)
    assert invariance_residual(q, V) < 1e-10
    assert all(invariance_conditions(q, V).values())
    fock = r_from_k(0.0)
    assert not is_invariant(fock, V)
    assert not any(invariance_conditions(fock, V).values())
    assert is_invariant(fock, _oscillator_propagator(1.0))


def test_invariance_needs_invertible_operator() -> None:
    with pytest.raises(ValueError):
        is_invariant(r_from_k(0.0), np.zeros((2, 2)))


def test_pullback_of_regular_form() -> None:
    V = _oscillator_propagator(2.0, 0.4).matrix
    pulled = r_from_k(0.0).pullback(V)
    assert_allclose(pulled.full_matrix, V.T @ V, atol=1e-12)


def test_pullback_of_line_form() -> None:
    q = r_from_k(-1.0)
    V = np.array([[0.0, 1.0], [-1.0, 0.0]])
    pulled = q.pullback(V)
    assert pulled([0.0, 1.0]) == pytest.approx(0.0)
    assert pulled([1.0, 0.0]).is_infinite


def test_complexify_and_realify() -> None:
    q = r_from_k(0.25)
    q_c = complexify(q)
    assert q_c.basis is Basis.AA
    assert realify(q_c).same_as(q)
    with pytest.raises(InvariantViolation):
        complexify(q_c)
    skew = r_from_k(np.array([[0.0, 0.5], [0.0, 0.0]]), Basis.AA)
    assert not reality_check(np.array([[0.0, 0.5], [0.0, 0.0]]))
    with pytest.raises(InvariantViolation):
        realify(skew)


def test_describe_form_variants() -> None:
    regular = describe_form(r_from_k(1.0 / 3.0))
    assert regular["kind"] == "regular"
    assert regular["coefficients"]["x_p^2"] == pytest.approx(2.0)
    assert regular["coefficients"]["x_q^2"] == pytest.approx(0.5)
    line = describe_form(r_from_k(-1.0))
    assert line["kind"] == "line"
    assert line["support"] == "x_q = 0"
    assert describe_form(ExtendedQuadraticForm.trivial(1))["kind"] == "trivial"
    assert describe_form(ExtendedQuadraticForm.trivial(2))["kind"] == "general"
