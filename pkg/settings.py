"""
Configuration for the quadratic-state solver.

Values come from ``solver_config.yml`` (or the file named by ``QUADSTATE_CONFIG``)
and may be adjusted through environment variables:

    QUADSTATE_CONFIG      path to an alternative YAML file
    QUADSTATE_TOL_SCALE   multiplies every tolerance (exploratory runs)
    QUADSTATE_SEED        default seed for randomized checks
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import yaml

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path(__file__).with_name("solver_config.yml")


@dataclass(frozen=True)
class Tolerances:
    sym: float = 1e-12
    res: float = 1e-9
    ker: float = 1e-10
    key: float = 1e-12
    cluster: float = 1e-6
    dedup: float = 1e-8

    def scaled(self, factor: float) -> Tolerances:
        return Tolerances(**{f.name: getattr(self, f.name) * factor for f in fields(self)})


@dataclass(frozen=True)
class LimitSchedule:
    max_doubling: int = 20
    window: int = 5
    converge_tol: float = 1e-9
    decay_floor: float = 1e-12
    random_probes: int = 4
    offset: float = 1.0 + 1.0 / math.sqrt(5.0)
    grid_agreement: float = 1e-7

    def times(self, direction: int, scale: float = 1.0) -> list[float]:
        """Doubling schedule ``direction * scale * 2**k`` for ``k = 0..max_doubling``."""
        if direction not in (1, -1):
            raise ValueError(f"direction must be +1 or -1, got {direction}")
        return [float(direction * scale * 2**k) for k in range(self.max_doubling + 1)]

    def grids(self, direction: int) -> list[list[float]]:
        """The doubling schedule and a copy stretched by the irrational ``offset``."""
        if abs(self.offset - round(self.offset)) < 1e-6:
            raise ValueError(f"limits.offset must not be an integer, got {self.offset}")
        return [self.times(direction), self.times(direction, self.offset)]


@dataclass(frozen=True)
class CheckBudget:
    seed: int = 20240607
    generators: int = 200
    angular_operators: int = 200
    invariance_pairs: int = 100
    gram_sets: int = 500
    bch_triples: int = 100
    trivial_propagators: int = 100
    mode_pairs: int = 100
    random_states: int = 50

    def scaled(self, fraction: float) -> CheckBudget:
        """Shrink trial counts (never below one) for quick runs."""
        counts = {
            f.name: max(1, int(round(getattr(self, f.name) * fraction)))
            for f in fields(self)
            if f.name != "seed"
        }
        return replace(self, **counts)


@dataclass(frozen=True)
class Settings:
    base_tolerances: Tolerances = field(default_factory=Tolerances)
    tolerance_scale: float = 1.0
    n_max: int = 6
    limits: LimitSchedule = field(default_factory=LimitSchedule)
    check: CheckBudget = field(default_factory=CheckBudget)
    omega0: float = 2.0
    t_max: float = 10.0

    @property
    def tolerances(self) -> Tolerances:
        return self.base_tolerances.scaled(self.tolerance_scale)

    def strict(self) -> Settings:
        """Copy whose tolerance scale never exceeds one."""
        if self.tolerance_scale > 1.0:
            logger.warning(
                f"Ignoring tolerance scale {self.tolerance_scale:g}: checks never loosen tolerances"
            )
            return replace(self, tolerance_scale=1.0)
        return self


def _section(raw: dict[str, Any], name: str) -> dict[str, Any]:
    value = raw.get(name) or {}
    if not isinstance(value, dict):
        raise ValueError(f"Config section '{name}' must be a mapping")
    return value


def load_settings(path: str | Path | None = None) -> Settings:
    """Load settings from YAML and apply environment overrides.

    Args:
        path: Config file; defaults to ``QUADSTATE_CONFIG`` or the bundled file.

    Returns:
        Settings instance.

    Raises:
        FileNotFoundError: If an explicitly requested config file does not exist.
    """
    config_path = Path(path or os.getenv("QUADSTATE_CONFIG", DEFAULT_CONFIG_PATH))
    if not config_path.is_file():
        if path is not None or os.getenv("QUADSTATE_CONFIG"):
            raise FileNotFoundError(f"Config file not found: {config_path}")
        logger.info("No solver config found, using built-in defaults")
        raw: dict[str, Any] = {}
    else:
        with open(config_path, "r", encoding="utf-8") as handle:
            raw = yaml.safe_load(handle) or {}

    check = CheckBudget(**_section(raw, "check"))
    seed_override = os.getenv("QUADSTATE_SEED")
    if seed_override is not None:
        check = replace(check, seed=int(seed_override))

    examples = _section(raw, "examples")
    settings = Settings(
        base_tolerances=Tolerances(**_section(raw, "tolerances")),
        tolerance_scale=float(os.getenv("QUADSTATE_TOL_SCALE", "1.0")),
        n_max=int(_section(raw, "solver").get("n_max", 6)),
        limits=LimitSchedule(**_section(raw, "limits")),
        check=check,
        omega0=float(examples.get("omega0", 2.0)),
        t_max=float(examples.get("t_max", 10.0)),
    )
    if settings.tolerance_scale <= 0:
        raise ValueError(f"QUADSTATE_TOL_SCALE must be positive, got {settings.tolerance_scale}")
    if settings.tolerance_scale != 1.0:
        logger.info(f"Tolerance scale set to {settings.tolerance_scale:g}")
    return settings


_active: Settings | None = None


def active_settings() -> Settings:
    global _active
    if _active is None:
        _active = load_settings()
    return _active


def active_tolerances() -> Tolerances:
    return active_settings().tolerances


def configure(settings: Settings | None) -> None:
    """Install process-wide settings; ``None`` reloads from disk on next access."""
    global _active
    _active = settings
