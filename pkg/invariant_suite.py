"""
Randomized property suite run by ``cli check``.

Every property draws its own seeded generator, runs the configured number of
trials and reports the worst residual relative to its tolerance (``worst <= 1``
passes) or, for yes/no properties, the number of disagreements.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
import pandas as pd
from tqdm import tqdm

from majorant import (
    ExtendedQuadraticForm,
    invariance_conditions,
    k_from_r,
    minimality_residual,
    positivity_margin,
    r_from_k,
)
from momentum_mode import Region, cross_check_mode, k0_direct_form, k0_of_mode, mode_residual
from riccati import (
    RiccatiProblem,
    graph_invariance_residual,
    residual,
    solve_scalar,
    solve_spectral,
)
from settings import CheckBudget, active_settings, active_tolerances
from states import (
    epsilon_family_state,
    epsilon_limit_state,
    fock_state,
    pullback,
    positivity_suite,
    random_regular_state,
    trivial_state,
)
from symplectic_core import (
    Basis,
    Generator,
    PhaseVector,
    QuadHamiltonianAA,
    QuadHamiltonianPQ,
    change_basis,
    generator_aa,
    generator_pq,
    hamiltonian_to_aa,
    hamiltonian_to_pq,
    indefinite_product,
    is_cross_matrix,
    metric,
    operator_norm,
    propagator,
    regular_structure_residuals,
    structure_residual,
    symplectic_form,
    transform_operator,
)
from weyl_algebra import HeisenbergTriple, WeylWord, bch_check, find_witness
from worked_examples import run_example, set_deviation

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PropertyResult:
    name: str
    passed: bool
    worst: float
    trials: int
    detail: str = ""


def _ratio_result(name: str, ratios: list[float], detail: str = "") -> PropertyResult:
    worst = max(ratios, default=0.0)
    return PropertyResult(name, bool(worst <= 1.0), float(worst), len(ratios), detail)


def _count_result(name: str, failures: int, trials: int, detail: str = "") -> PropertyResult:
    return PropertyResult(name, failures == 0, float(failures), trials, detail)


def _symmetric(rng: np.random.Generator, n: int) -> np.ndarray:
    A = rng.standard_normal((n, n))
    return (A + A.T) / 2


def random_hamiltonian(
    rng: np.random.Generator, n: int, *, with_l: bool = True
) -> QuadHamiltonianPQ:
    """Random PQ Hamiltonian whose generator has norm at most one."""
    M, K = _symmetric(rng, n), _symmetric(rng, n)
    L = rng.standard_normal((n, n)) if with_l else np.zeros((n, n))
    h = QuadHamiltonianPQ(M=M, L=L, K=K)
    scale = max(1.0, operator_norm(generator_pq(h).matrix))
    return QuadHamiltonianPQ(M=M / scale, L=L / scale, K=K / scale)


def random_generator(rng: np.random.Generator, n: int | None = None) -> Generator:
    return generator_pq(random_hamiltonian(rng, int(rng.integers(1, 4)) if n is None else n))


def check_group_law(rng: np.random.Generator, budget: CheckBudget) -> PropertyResult:
    """``V(t) V(s) = V(t + s)`` in both bases, and both bases describe the same map."""
    tol = active_tolerances().res
    ratios = []
    for _ in range(budget.generators):
        G = random_generator(rng)
        G_aa = change_basis(G, Basis.AA)
        t, s = rng.uniform(-2.0, 2.0, size=2)
        bound = tol * np.exp(abs(t) + abs(s))
        for H in (G, G_aa):
            product = propagator(H, t).matrix @ propagator(H, s).matrix
            ratios.append(operator_norm(product - propagator(H, t + s).matrix) / bound)
        across = change_basis(propagator(G, t), Basis.AA).matrix - propagator(G_aa, t).matrix
        ratios.append(operator_norm(across) / bound)
    return _ratio_result("propagator group law", ratios)


def check_structure(rng: np.random.Generator, budget: CheckBudget) -> PropertyResult:
    """Propagators are symplectic (PQ), J-unitary cross matrices (AA)."""
    tol = active_tolerances().res
    ratios, not_cross = [], 0
    for _ in range(budget.generators):
        G = random_generator(rng)
        V = propagator(G, rng.uniform(-3.0, 3.0))
        V_aa = change_basis(V, Basis.AA)
        for W in (V, V_aa):
            ratios.append(structure_residual(W) / (tol * (1.0 + operator_norm(W.matrix) ** 2)))
        not_cross += not is_cross_matrix(V_aa.matrix)
    result = _ratio_result("symplecticity", ratios, f"{not_cross} non-cross AA propagators")
    return replace(result, passed=result.passed and not not_cross)


def check_basis_round_trip(rng: np.random.Generator, budget: CheckBudget) -> PropertyResult:
    tol = active_tolerances().res
    ratios = []
    for _ in range(budget.generators):
        n = int(rng.integers(1, 4))
        v = PhaseVector(Basis.PQ, rng.standard_normal(2 * n))
        back = change_basis(change_basis(v, Basis.AA), Basis.PQ)
        error = np.linalg.norm(back.entries - v.entries)
        ratios.append(error / (tol * (1 + np.linalg.norm(v.entries))))
        G = random_generator(rng, n)
        G_back = change_basis(change_basis(G, Basis.AA), Basis.PQ)
        error = operator_norm(G_back.matrix - G.matrix)
        ratios.append(error / (tol * (1 + operator_norm(G.matrix))))
        V = propagator(G, rng.uniform(-2.0, 2.0))
        V_back = change_basis(change_basis(V, Basis.AA), Basis.PQ)
        error = operator_norm(V_back.matrix - V.matrix)
        ratios.append(error / (tol * (1 + operator_norm(V.matrix))))
    return _ratio_result("basis round trip", ratios)


def check_form_correspondence(rng: np.random.Generator, budget: CheckBudget) -> PropertyResult:
    """``<Uf, Ug> = i s(f, g)`` for real ``f, g``."""
    tol = active_tolerances().res
    ratios = []
    for _ in range(budget.generators):
        n = int(rng.integers(1, 4))
        f, g = rng.standard_normal(2 * n), rng.standard_normal(2 * n)
        u_f = change_basis(PhaseVector(Basis.PQ, f), Basis.AA)
        u_g = change_basis(PhaseVector(Basis.PQ, g), Basis.AA)
        value = indefinite_product(u_f, u_g)
        scale = tol * (1 + np.linalg.norm(f) * np.linalg.norm(g))
        ratios.append(abs(value - 1j * symplectic_form(f, g)) / scale)
    return _ratio_result("indefinite product vs symplectic form", ratios)


def check_hamiltonian_bases(rng: np.random.Generator, budget: CheckBudget) -> PropertyResult:
    """Coefficient transform agrees with the generator transform; ``J G`` is hermitian in AA."""
    tol = active_tolerances().res
    ratios = []
    for _ in range(budget.generators):
        n = int(rng.integers(1, 4))
        h = random_hamiltonian(rng, n)
        h_aa = hamiltonian_to_aa(h)
        G_aa = generator_aa(h_aa)
        expected = change_basis(generator_pq(h), Basis.AA)
        ratios.append(operator_norm(G_aa.matrix - expected.matrix) / tol)
        h_back = hamiltonian_to_pq(h_aa)
        error = max(operator_norm(getattr(h_back, k) - getattr(h, k)) for k in "MLK")
        ratios.append(error / tol)
        S = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        T = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        H = generator_aa(QuadHamiltonianAA(S=S + S.conj().T, T=T + T.T))
        JG = metric(Basis.AA, n) @ H.matrix
        ratios.append(operator_norm(JG - JG.conj().T) / (tol * (1 + operator_norm(JG))))
    return _ratio_result("hamiltonian coefficient bases", ratios)


def _random_word(rng: np.random.Generator, n: int, terms: int = 2) -> WeylWord:
    # Dyadic entries, so sums stay exact under reassociation.
    return WeylWord(
        n,
        [
            (rng.integers(-8, 9, size=2 * n) / 4.0, complex(*rng.standard_normal(2)))
            for _ in range(terms)
        ],
    )


def check_weyl_algebra(rng: np.random.Generator, budget: CheckBudget) -> PropertyResult:
    failures = 0
    for _ in range(budget.generators):
        n = int(rng.integers(1, 3))
        a, b, c = (_random_word(rng, n) for _ in range(3))
        checks = [
            ((a * b) * c).allclose(a * (b * c)),
            a.star().star().allclose(a),
            (a * b).star().allclose(b.star() * a.star()),
            (WeylWord.unit(n) * a).allclose(a),
        ]
        failures += not all(checks)
    return _count_result("weyl algebra axioms", failures, budget.generators)


def check_bch(rng: np.random.Generator, budget: CheckBudget) -> PropertyResult:
    ratios = []
    for _ in range(budget.bch_triples):
        A = HeisenbergTriple(*rng.uniform(-1.0, 1.0, size=3))
        B = HeisenbergTriple(*rng.uniform(-1.0, 1.0, size=3))
        t = float(rng.uniform(-5.0, 5.0))
        scale = np.exp(abs(t) * (A.norm + B.norm))
        ratios.append(bch_check(A, B, t) / (1e-12 * scale))
    return _ratio_result("heisenberg BCH identity", ratios)


def _random_angular(rng: np.random.Generator, n: int, on_sphere: bool) -> np.ndarray:
    K = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    target = 1.0 if on_sphere else rng.uniform(0.0, 1.0)
    return K * target / operator_norm(K)


def check_minimality(rng: np.random.Generator, budget: CheckBudget) -> PropertyResult:
    """Graph majorants of contractions are minimal; both bases describe one form."""
    tol = active_tolerances().res
    ratios, margin_errors = [], 0
    for i in range(budget.angular_operators):
        n = int(rng.integers(1, 4))
        K = _random_angular(rng, n, on_sphere=(i % 4 == 0))
        q_pq, q_aa = r_from_k(K, Basis.PQ), r_from_k(K, Basis.AA)
        ratios.append(minimality_residual(q_pq) / 1e-10)
        ratios.append(minimality_residual(q_aa) / 1e-10)
        across = transform_operator(q_aa.r, Basis.AA, Basis.PQ) - q_pq.r
        ratios.append(operator_norm(across) / tol)
        ratios.append(operator_norm(k_from_r(q_pq) - K) / tol)
        regular = operator_norm(K) < 1.0 - 1e-9
        margin_errors += (positivity_margin(K) > 1e-9) != regular
    detail = f"{margin_errors} margin mismatches"
    result = _ratio_result("graph majorants are minimal", ratios, detail)
    return replace(result, passed=result.passed and not margin_errors)


def _invariant_pair(rng: np.random.Generator, case: int):
    """``(form, propagator)`` pairs; every third is invariant by construction."""
    n = int(rng.integers(1, 3))
    t = float(rng.uniform(-2.0, 2.0))
    if case == 0:
        q = random_regular_state(rng, n).q
        G = Generator(Basis.PQ, metric(Basis.PQ, n) @ np.real(q.full_matrix))
        return q, propagator(G, t)
    if case == 1:
        q = random_regular_state(rng, n).q
        return q, propagator(random_generator(rng, n), float(rng.uniform(0.5, 2.0)))
    flavour = int(rng.integers(0, 3))
    if flavour == 0:
        return ExtendedQuadraticForm.trivial(n), propagator(random_generator(rng, n), t)
    dilation = Generator(Basis.PQ, np.diag([-1.0, 1.0]))
    q = r_from_k(float(rng.choice([-1.0, 1.0])))
    if flavour == 1:
        return q, propagator(dilation, t)
    rotation = Generator(Basis.PQ, np.array([[0.0, 1.0], [-1.0, 0.0]]))
    return q, propagator(rotation, float(rng.uniform(0.3, 1.2)))


def check_invariance_equivalence(rng: np.random.Generator, budget: CheckBudget) -> PropertyResult:
    """The four invariance conditions agree."""
    disagreements, invariant = 0, 0
    for i in range(budget.invariance_pairs):
        q, V = _invariant_pair(rng, i % 3)
        verdicts = invariance_conditions(q, V)
        if len(set(verdicts.values())) != 1:
            disagreements += 1
            logger.warning(f"Invariance conditions disagree: {verdicts}")
        invariant += all(verdicts.values())
    return _count_result(
        "invariance conditions agree",
        disagreements,
        budget.invariance_pairs,
        f"{invariant} invariant pairs",
    )


def _majorant_states(rng: np.random.Generator) -> list:
    return [
        fock_state(1),
        fock_state(2),
        random_regular_state(rng, 1),
        random_regular_state(rng, 2),
        trivial_state(1),
        epsilon_limit_state(0.5),
        ExtendedQuadraticForm(Basis.PQ, np.array([[1.0], [0.0]]), [[1.0]]),
        r_from_k(1.0),
    ]


def _broken_forms() -> list[ExtendedQuadraticForm]:
    return [
        ExtendedQuadraticForm.from_matrix(0.5 * np.eye(2)),
        ExtendedQuadraticForm.from_matrix(np.zeros((2, 2))),
        ExtendedQuadraticForm.from_matrix(np.diag([0.3, 1.0])),
        ExtendedQuadraticForm.from_matrix(0.2 * np.eye(4)),
    ]


def check_gram_positivity(rng: np.random.Generator, budget: CheckBudget) -> PropertyResult:
    """Gram matrices of majorant states are PSD; broken forms yield a witness."""
    targets = _majorant_states(rng)
    per_target = max(1, budget.gram_sets // len(targets))
    ratios, failures = [], 0
    for target in targets:
        report = positivity_suite(target, per_target, rng)
        ratios.append(max(0.0, -report.worst_ratio) / active_tolerances().res)
        failures += not report.passed
    missing = sum(find_witness(q, rng) is None for q in _broken_forms())
    detail = f"{failures} failing states, {missing} broken forms without witness"
    result = _ratio_result("gram positivity", ratios, detail)
    return replace(result, passed=result.passed and not failures and not missing)


def check_trivial_invariance(rng: np.random.Generator, budget: CheckBudget) -> PropertyResult:
    failures = 0
    for _ in range(budget.trivial_propagators):
        n = int(rng.integers(1, 3))
        V = propagator(random_generator(rng, n), float(rng.uniform(-2.0, 2.0)))
        state = pullback(trivial_state(n), V)
        values = (state.char_fn(np.zeros(2 * n)), state.char_fn(rng.standard_normal(2 * n)))
        conditions = invariance_conditions(ExtendedQuadraticForm.trivial(n), V)
        failures += values != (1.0, 0.0) or not all(conditions.values())
    return _count_result("trivial state invariance", failures, budget.trivial_propagators)


def check_solver_agreement(rng: np.random.Generator, budget: CheckBudget) -> PropertyResult:
    """Scalar and spectral solvers agree; solutions also solve the propagator problem."""
    tol = active_tolerances().res
    ratios, closure_failures = [], 0
    for i in range(budget.generators):
        n = 1 if i % 2 == 0 else 2
        h = random_hamiltonian(rng, n, with_l=(i % 4 != 1))
        G_aa = change_basis(generator_pq(h), Basis.AA)
        P = RiccatiProblem.from_generator(G_aa)
        spectral = solve_spectral(P)
        if n == 1:
            scalar = solve_scalar(P)
            ratios.append(set_deviation(scalar.matrices, spectral.matrices) / 1e-8)
        t = float(rng.uniform(-2.0, 2.0))
        V_aa = propagator(G_aa, t)
        P_V = RiccatiProblem.from_propagator(V_aa)
        bound = tol * (1.0 + operator_norm(V_aa.matrix) ** 2)
        for K in spectral.matrices:
            ratios.append(residual(P_V, K) / bound)
            ratios.append(graph_invariance_residual(V_aa, K) / bound)
        if not np.any(h.L) and not spectral.incomplete:
            conjugates = [K.conj() for K in spectral.matrices]
            closure_failures += set_deviation(conjugates, spectral.matrices) > 1e-8
    detail = f"{closure_failures} conjugation failures"
    result = _ratio_result("riccati solvers agree", ratios, detail)
    return replace(result, passed=result.passed and not closure_failures)


def check_examples(rng: np.random.Generator, budget: CheckBudget) -> PropertyResult:
    """Every worked-system report is within its tolerances."""
    frequencies = (0.5, 1.0, 2.0)
    runs = [(1, w) for w in frequencies] + [(2, None), (3, None)]
    runs += [(4, w) for w in frequencies] + [(5, None)]
    failed = []
    for n, omega0 in runs:
        report = run_example(
            n, omega0, random_states=budget.random_states, seed=int(rng.integers(2**31))
        )
        if not report["passed"]:
            failed.append(f"{n}@{omega0}")
    detail = f"failed: {', '.join(failed)}" if failed else ""
    return _count_result("worked systems", len(failed), len(runs), detail)


def check_modes(rng: np.random.Generator, budget: CheckBudget) -> PropertyResult:
    """Closed-form mode solutions: bounds, both displays, and the spectral solver."""
    ratios = []
    for _ in range(budget.mode_pairs):
        while True:
            omega, delta = rng.uniform(-3.0, 3.0, size=2)
            if abs(delta) > 1e-2 and abs(omega**2 - delta**2) > 1e-2:
                break
        epsilon = int(rng.choice([-1, 1]))
        mode = k0_of_mode(omega, delta, epsilon)
        scale = 1e-12 * (1.0 + abs(omega) + abs(delta)) ** 2
        ratios.append(mode_residual(omega, delta, mode.k0) / scale)
        ratios.append(abs(mode.k0 - k0_direct_form(omega, delta, epsilon)) / scale)
        if mode.region is Region.HYPERBOLIC:
            ratios.append(abs(abs(mode.k0) - 1.0) / 1e-12)
        else:
            ratios.append(max(0.0, abs(mode.k0) - 1.0) / 1e-12)
        ratios.append(cross_check_mode(omega, delta) / 1e-9)
    return _ratio_result("momentum modes", ratios)


def check_regular_structure(rng: np.random.Generator, budget: CheckBudget) -> PropertyResult:
    ratios = []
    for n in range(1, 4):
        ratios.extend(value / 1e-12 for value in regular_structure_residuals(n).values())
    return _ratio_result("fundamental symmetry identities", ratios)


def check_epsilon_limit(rng: np.random.Generator, budget: CheckBudget) -> PropertyResult:
    """Regular states ``x_p^2 / e + (b + e) x_q^2`` converge pointwise to the non-regular limit."""
    failures = 0
    for _ in range(budget.random_states):
        b = float(rng.uniform(0.0, 2.0))
        limit = epsilon_limit_state(b)
        for f in ([0.0, float(rng.standard_normal())], rng.standard_normal(2)):
            value = epsilon_family_state(1e-12, b).char_fn(f)
            failures += abs(value - limit.char_fn(f)) > 1e-9
    return _count_result("epsilon family limit", failures, 2 * budget.random_states)


Property = Callable[[np.random.Generator, CheckBudget], PropertyResult]

PROPERTIES: list[Property] = [
    check_group_law,
    check_structure,
    check_basis_round_trip,
    check_form_correspondence,
    check_hamiltonian_bases,
    check_weyl_algebra,
    check_bch,
    check_minimality,
    check_invariance_equivalence,
    check_gram_positivity,
    check_trivial_invariance,
    check_solver_agreement,
    check_regular_structure,
    check_epsilon_limit,
    check_modes,
    check_examples,
]


def run_suite(
    budget: CheckBudget | None = None,
    seed: int | None = None,
    *,
    properties: list[Property] | None = None,
    progress: bool = True,
) -> list[PropertyResult]:
    """Run the property suite; each property gets a generator seeded from ``(seed, index)``."""
    budget = active_settings().check if budget is None else budget
    seed = budget.seed if seed is None else seed
    results = []
    selected = properties or PROPERTIES
    for index, prop in enumerate(tqdm(selected, desc="invariant suite", disable=not progress)):
        rng = np.random.default_rng([seed, index])
        result = prop(rng, budget)
        level = logging.INFO if result.passed else logging.WARNING
        status = "pass" if result.passed else "FAIL"
        logger.log(level, f"{result.name}: {status} (worst {result.worst:.3e})")
        results.append(result)
    return results


def suite_frame(results: list[PropertyResult]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "property": r.name,
                "status": "pass" if r.passed else "FAIL",
                "worst": r.worst,
                "trials": r.trials,
                "detail": r.detail,
            }
            for r in results
        ]
    )
