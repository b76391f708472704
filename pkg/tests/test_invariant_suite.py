from __future__ import annotations

import numpy as np
import pytest

from invariant_suite import (
    PROPERTIES,
    PropertyResult,
    check_gram_positivity,
    check_invariance_equivalence,
    check_modes,
    check_solver_agreement,
    random_hamiltonian,
    run_suite,
    suite_frame,
)
from settings import CheckBudget
from symplectic_core import generator_pq, operator_norm

SMALL = CheckBudget(
    seed=11,
    generators=6,
    angular_operators=6,
    invariance_pairs=9,
    gram_sets=16,
    bch_triples=6,
    trivial_propagators=6,
    mode_pairs=6,
    random_states=2,
)


def test_random_hamiltonian_is_normalized(rng: np.random.Generator) -> None:
    for n in (1, 2, 3):
        h = random_hamiltonian(rng, n, with_l=False)
        assert not np.any(h.L)
        assert operator_norm(generator_pq(h).matrix) <= 1.0 + 1e-12


@pytest.mark.parametrize(
    "prop",
    [check_invariance_equivalence, check_gram_positivity, check_solver_agreement, check_modes],
)
def test_single_properties_pass(prop) -> None:
    result = prop(np.random.default_rng(5), SMALL)
    assert isinstance(result, PropertyResult)
    assert result.passed, result


def test_full_suite_with_small_budget() -> None:
    results = run_suite(SMALL, progress=False)
    assert len(results) == len(PROPERTIES)
    assert all(r.passed for r in results), [r for r in results if not r.passed]
    frame = suite_frame(results)
    assert list(frame.columns) == ["property", "status", "worst", "trials", "detail"]
    assert set(frame["status"]) == {"pass"}


def test_suite_is_reproducible() -> None:
    subset = [check_modes, check_invariance_equivalence]
    first = run_suite(SMALL, seed=3, properties=subset, progress=False)
    second = run_suite(SMALL, seed=3, properties=subset, progress=False)
    assert first == second


def test_failing_property_is_reported() -> None:
    def broken(rng: np.random.Generator, budget: CheckBudget) -> PropertyResult:
        return PropertyResult("broken", False, 3.0, 1)

    results = run_suite(SMALL, properties=[broken], progress=False)
    assert not results[0].passed
    assert suite_frame(results)["status"].tolist() == ["FAIL"]
