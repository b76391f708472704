from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose

from worked_examples import (
    check,
    dilation,
    modes_report,
    oscillator,
    oscillator_ground_state,
    pairing_grid,
    repulsive_oscillator,
    run_example,
    set_deviation,
    solve_report,
)


def _failed(report: dict) -> list[str]:
    return [c["quantity"] for c in report["checks"] if not c["passed"]]


@pytest.mark.parametrize("omega0", [2.0, 1.0, 0.5, np.pi, 2 * np.pi])
def test_oscillator_example(omega0: float) -> None:
    report = run_example(1, omega0, samples=10, seed=3)
    assert report["passed"], _failed(report)
    assert report["flags"]["unique"]
    assert report["solutions"][0]["K"][0, 0] == pytest.approx(-(1 - omega0) / (1 + omega0))


def test_free_evolution_example() -> None:
    report = run_example(2, seed=3)
    assert report["passed"], _failed(report)
    assert report["solutions"][0]["q"]["support"] == "x_q = 0"


def test_dilation_example() -> None:
    report = run_example(3, random_states=3, seed=3)
    assert report["passed"], _failed(report)
    assert report["flags"]["count"] == 2
    assert report["random_state_limits"]["matched"] == 3


def test_repulsive_oscillator_example() -> None:
    report = run_example(4, 2.0, random_states=3, seed=3)
    assert report["passed"], _failed(report)
    forward = next(entry for entry in report["pairing"] if entry["branch"] == "+1")
    assert forward["matches_printed"] == "R_{-1}"
    assert forward["support"] == "2*x_p + x_q = 0"
    assert forward["limit_of"] == "t -> +inf"


def test_pairing_example() -> None:
    report = run_example(5)
    assert report["passed"], _failed(report)
    assert report["summary"]["hyperbolic"] == 20
    assert report["summary"]["two_per_mode"]


def test_examples_reject_bad_parameters() -> None:
    with pytest.raises(ValueError):
        run_example(6)
    with pytest.raises(ValueError):
        oscillator(0.0)
    with pytest.raises(ValueError):
        repulsive_oscillator(-1.0)
    with pytest.raises(ValueError):
        pairing_grid(n_pairs=0)


def test_oscillator_ground_state() -> None:
    state = oscillator_ground_state(2.0)
    assert state.is_pure
    assert_allclose(state.q.r, np.diag([1.0 / 3.0, 2.0 / 3.0]), atol=1e-12)


def test_check_records() -> None:
    record = check("K", 1.0 / 3.0 + 1e-12, 1.0 / 3.0)
    assert record["passed"]
    assert record["deviation"] == pytest.approx(1e-12)
    assert not check("flag", False, True)["passed"]
    assert check("support", "x_q = 0", "x_q = 0")["passed"]
    assert set_deviation([1.0, -1.0], [-1.0, 1.0]) == 0.0
    assert set_deviation([1.0], [1.0, -1.0]) == float("inf")


def test_solve_report_for_dilation() -> None:
    report = solve_report(dilation(), t_sample=0.5)
    assert report["modes"] == 1
    assert report["flags"]["count"] == 2
    assert not report["flags"]["unique"]
    assert all(entry["invariance_residual"] < 1e-9 for entry in report["solutions"])


def test_modes_report() -> None:
    report = modes_report(pairing_grid(n_pairs=3))
    assert len(report["modes"]) == 6
    assert report["summary"]["max_cross_check_deviation"] < 1e-9
