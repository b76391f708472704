"""
Momentum-space pairing model in the Bogoliubov approximation.

Each pair of momenta ``(p, -p)`` carries the block generator
``[[w I, -D J0], [D J0, -w I]]`` with ``J0`` swapping ``p`` and ``-p``. Its
invariant pure states are graphs of ``K = k0 J0`` where ``k0`` solves
``D k0^2 - 2 w k0 + D = 0`` with ``|k0| <= 1``.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Mapping

import numpy as np
import pandas as pd

from riccati import RiccatiProblem, solve_spectral
from settings import active_tolerances
from symplectic_core import Generator, InvariantViolation, QuadHamiltonianAA, generator_aa

logger = logging.getLogger(__name__)


class Region(str, Enum):
    ZERO = "zero"
    TRIVIAL = "trivial"
    ELLIPTIC = "elliptic"
    HYPERBOLIC = "hyperbolic"


@dataclass(frozen=True)
class ModeRecord:
    p: float
    omega: float
    delta: float
    epsilon: int = 1


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= active_tolerances().sym * (1.0 + max(abs(a), abs(b)))


@dataclass(frozen=True)
class DispersionGrid:
    """Finite momentum grid, closed under ``p -> -p``, ordered by ``p``."""

    records: tuple[ModeRecord, ...]

    def __post_init__(self) -> None:
        records = tuple(sorted(self.records, key=lambda r: r.p))
        if not records:
            raise ValueError("Dispersion grid is empty")
        for left, right in zip(records, records[1:]):
            if _close(left.p, right.p):
                raise ValueError(f"Momentum {left.p} appears twice")
        for record in records:
            if record.epsilon not in (1, -1):
                raise ValueError(f"epsilon must be +1 or -1 at p={record.p}")
            partner = self._find(records, -record.p)
            if partner is None:
                raise InvariantViolation(
                    "grid closed under p -> -p", f"no partner for p={record.p}"
                )
            if not _close(partner.omega, record.omega):
                raise InvariantViolation("omega even", f"omega({record.p}) != omega({-record.p})")
            if not _close(partner.delta, record.delta):
                raise InvariantViolation("delta even", f"delta({record.p}) != delta({-record.p})")
        object.__setattr__(self, "records", records)

    @staticmethod
    def _find(records: Iterable[ModeRecord], p: float) -> ModeRecord | None:
        for record in records:
            if _close(record.p, p):
                return record
        return None

    @classmethod
    def from_values(
        cls,
        momenta: Iterable[float],
        omega: Mapping[float, float] | None = None,
        delta: Mapping[float, float] | None = None,
        *,
        dispersion: Callable[[float], float] | None = None,
        gap: Callable[[float], float] | None = None,
        epsilon: int = 1,
    ) -> DispersionGrid:
        """Grid from explicit tables or from callables ``dispersion(p)``, ``gap(p)``."""
        records = []
        for p in momenta:
            w = dispersion(p) if dispersion is not None else omega[p]
            d = gap(p) if gap is not None else delta[p]
            records.append(ModeRecord(float(p), float(w), float(d), epsilon))
        return cls(tuple(records))

    def __len__(self) -> int:
        return len(self.records)

    def pairs(self) -> list[tuple[ModeRecord, ModeRecord]]:
        """``(p, -p)`` pairs with ``p >= 0``; ``p = 0`` is paired with itself."""
        return [
            (record, self._find(self.records, -record.p))
            for record in self.records
            if record.p >= 0 or _close(record.p, 0.0)
        ]


@dataclass(frozen=True)
class ModeSolution:
    p: float
    omega: float
    delta: float
    region: Region
    k0: complex | None
    epsilon: int = 1
    residual: float = 0.0

    @property
    def free(self) -> bool:
        return self.k0 is None


def _is_zero(value: float) -> bool:
    return abs(value) <= active_tolerances().sym


def mode_residual(omega: float, delta: float, k0: complex) -> float:
    """``|-D + 2 w k0 - D k0^2|``."""
    return abs(-delta + 2 * omega * k0 - delta * k0 * k0)


def k0_of_mode(omega: float, delta: float, epsilon: int = 1, p: float = 0.0) -> ModeSolution:
    if epsilon not in (1, -1):
        raise ValueError(f"epsilon must be +1 or -1, got {epsilon}")
    if _is_zero(omega) and _is_zero(delta):
        return ModeSolution(p, omega, delta, Region.ZERO, None, epsilon)
    if _is_zero(delta):
        return ModeSolution(p, omega, delta, Region.TRIVIAL, 0j, epsilon)
    if omega * omega >= delta * delta:
        k0 = complex(delta / (omega + math.copysign(1.0, omega) * math.sqrt(omega**2 - delta**2)))
        region = Region.ELLIPTIC
    else:
        k0 = delta / (omega + 1j * epsilon * math.sqrt(delta**2 - omega**2))
        region = Region.HYPERBOLIC
    return ModeSolution(p, omega, delta, region, k0, epsilon, mode_residual(omega, delta, k0))


def k0_direct_form(omega: float, delta: float, epsilon: int = 1) -> complex | None:
    """Untransformed roots.

    Elliptic ``(w - sgn(w) sqrt(w^2 - D^2)) / D``, hyperbolic ``(w - i e sqrt(D^2 - w^2)) / D``.
    """
    if _is_zero(omega) and _is_zero(delta):
        return None
    if _is_zero(delta):
        return 0j
    if omega * omega >= delta * delta:
        return complex((omega - math.copysign(1.0, omega) * math.sqrt(omega**2 - delta**2)) / delta)
    return (omega - 1j * epsilon * cmath.sqrt(delta**2 - omega**2)) / delta


@dataclass(frozen=True)
class GridClassification:
    modes: list[ModeSolution]
    summary: dict[str, int] = field(default_factory=dict)
    continuum_of_states: bool = False
    two_per_mode: bool = False

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for mode in self.modes:
            k0 = mode.k0
            rows.append(
                {
                    "p": mode.p,
                    "omega": mode.omega,
                    "delta": mode.delta,
                    "region": mode.region.value,
                    "k0_re": None if k0 is None else k0.real,
                    "k0_im": None if k0 is None else k0.imag,
                    "abs_k0": None if k0 is None else abs(k0),
                    "epsilon": mode.epsilon,
                    "residual": mode.residual,
                }
            )
        return pd.DataFrame(rows)


def classify_grid(
    grid: DispersionGrid, epsilon: int | Mapping[float, int] | None = None
) -> GridClassification:
    """Per-mode solutions; ``epsilon`` overrides the per-record hyperbolic branch."""
    modes = []
    for record in grid.records:
        if epsilon is None:
            branch = record.epsilon
        elif isinstance(epsilon, Mapping):
            branch = int(epsilon.get(record.p, record.epsilon))
        else:
            branch = int(epsilon)
        modes.append(k0_of_mode(record.omega, record.delta, branch, record.p))
    summary = {region.value: sum(m.region is region for m in modes) for region in Region}
    result = GridClassification(
        modes=modes,
        summary=summary,
        continuum_of_states=summary[Region.ZERO.value] > 0,
        two_per_mode=summary[Region.HYPERBOLIC.value] > 0,
    )
    logger.info(f"Classified {len(modes)} modes: {summary}")
    return result


def mode_block_generator(
    record: ModeRecord | tuple[float, float], p: float | None = None
) -> Generator:
    """AA generator of the ``(p, -p)`` pair; a single mode for ``p = 0``."""
    if isinstance(record, ModeRecord):
        omega, delta, p = record.omega, record.delta, record.p
    else:
        omega, delta = record
    if p is not None and _close(p, 0.0):
        return generator_aa(QuadHamiltonianAA(S=[[omega]], T=[[-delta]]))
    swap = np.array([[0.0, 1.0], [1.0, 0.0]])
    return generator_aa(QuadHamiltonianAA(S=omega * np.eye(2), T=-delta * swap))


def _expected_k0(omega: float, delta: float) -> list[complex]:
    solution = k0_of_mode(omega, delta)
    if solution.region is Region.HYPERBOLIC:
        return [solution.k0, k0_of_mode(omega, delta, -1).k0]
    return [] if solution.k0 is None else [solution.k0]


def anti_diagonal_solutions(omega: float, delta: float) -> list[complex]:
    """``k0`` values of the anti-diagonal symmetric solutions found by the spectral solver."""
    solutions = solve_spectral(RiccatiProblem.from_generator(mode_block_generator((omega, delta))))
    found = []
    for solution in solutions:
        K = solution.K
        if abs(K[0, 0]) <= 1e-9 and abs(K[1, 1]) <= 1e-9 and abs(K[0, 1] - K[1, 0]) <= 1e-9:
            found.append(complex(K[0, 1]))
    return found


def cross_check_mode(omega: float, delta: float) -> float:
    """Distance between the closed-form ``k0`` branches and the solver's anti-diagonal solutions."""
    expected = _expected_k0(omega, delta)
    if not expected:
        return 0.0
    found = anti_diagonal_solutions(omega, delta)
    if len(found) != len(expected):
        logger.warning(
            f"omega={omega}, delta={delta}: expected {len(expected)} branch(es), "
            f"solver found {len(found)}"
        )
        return math.inf
    deviation = 0.0
    for value in expected:
        deviation = max(deviation, min(abs(value - other) for other in found))
    for value in found:
        deviation = max(deviation, min(abs(value - other) for other in expected))
    return deviation
