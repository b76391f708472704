#!/usr/bin/env python3
"""
Command-line front end.

    python cli.py example 1 --omega0 2
    python cli.py solve --input inputs/oscillator.json --format json
    python cli.py evolve --input inputs/dilation_aa.yml --t-max 4
    python cli.py limit --input inputs/dilation_aa.yml --direction both
    python cli.py modes --input inputs/pairing_grid.json
    python cli.py check --seed 7

Exit status: 0 on success, 1 when ``check`` or an example reports a failure,
2 for rejected input.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, fields, replace
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np
import pandas as pd

from hamiltonian_io import SCHEMA_VERSION, DocumentError, dump_json, load_grid, load_hamiltonian
from invariant_suite import run_suite, suite_frame
from settings import Settings, configure, load_settings
from states import QuadraticState, SpectralFlow, fock_state, time_limit, trivial_state
from symplectic_core import InvariantViolation, generator
from worked_examples import describe_limit, modes_report, pairing_grid, run_example, solve_report

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    input: Path | None = None
    output_format: str = "table"
    example: int | None = None
    omega0: float | None = None
    t_max: float | None = None
    t_sample: float = 0.7
    trials: int | None = None
    seed: int | None = None
    direction: str = "both"
    state: str = "fock"
    epsilon: int | None = None

    @classmethod
    def from_namespace(cls, args: argparse.Namespace) -> RunConfig:
        names = {f.name for f in fields(cls)}
        values = {k: v for k, v in vars(args).items() if k in names and v is not None}
        if values.get("input") is not None:
            values["input"] = Path(values["input"])
        return cls(**values)


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--format", dest="output_format", choices=("table", "json"), default="table"
    )
    common.add_argument("--seed", type=int, help="seed for randomized quantities")
    common.add_argument("--config", type=Path, help="alternative solver_config.yml")
    common.add_argument("--log-level", default="WARNING", help="logging level (stderr)")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(
        description="Invariant quadratic states of quadratic Bose Hamiltonians."
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    example = sub.add_parser("example", parents=[common], help="run a worked system (1-5)")
    example.add_argument("example", type=int, choices=range(1, 6))
    example.add_argument("--omega0", type=float, help="frequency for systems 1 and 4")
    example.add_argument("--t-max", type=float, help="upper bound of sampled times")
    example.add_argument("--input", help="grid document for system 5")

    for name, text in (
        ("solve", "invariant pure states of a Hamiltonian document"),
        ("evolve", "characteristic functional of an evolved state"),
        ("limit", "long-time limits of an evolved state"),
    ):
        command = sub.add_parser(name, parents=[common], help=text)
        command.add_argument("--input", required=True, help="Hamiltonian document (YAML or JSON)")
        command.add_argument(
            "--t-sample", type=float, default=0.7, help="time of the reported propagator"
        )
        if name != "solve":
            command.add_argument("--state", choices=("fock", "trivial"), default="fock")
        if name == "evolve":
            command.add_argument("--t-max", type=float, help="last sampled time")
        if name == "limit":
            command.add_argument("--direction", choices=("+1", "-1", "both"), default="both")

    modes = sub.add_parser("modes", parents=[common], help="classify a momentum grid")
    modes.add_argument("--input", help="grid document; defaults to the built-in pairing grid")
    modes.add_argument(
        "--epsilon", type=int, choices=(1, -1), help="override the hyperbolic branch"
    )

    check = sub.add_parser("check", parents=[common], help="run the invariant suite")
    check.add_argument("--trials", type=int, help="trial count for every property")
    return parser


def _initial_state(name: str, n: int) -> QuadraticState:
    return fock_state(n) if name == "fock" else trivial_state(n)


def cmd_example(config: RunConfig, settings: Settings) -> tuple[dict[str, Any], int]:
    grid = load_grid(config.input) if config.input is not None else None
    report = run_example(
        config.example, config.omega0, t_max=config.t_max, seed=config.seed, grid=grid
    )
    return report, 0 if report["passed"] else 1


def cmd_solve(config: RunConfig, settings: Settings) -> tuple[dict[str, Any], int]:
    report = solve_report(load_hamiltonian(config.input), config.t_sample)
    return {"input": str(config.input), **report}, 0


def cmd_evolve(config: RunConfig, settings: Settings) -> tuple[dict[str, Any], int]:
    h = load_hamiltonian(config.input)
    flow = SpectralFlow(generator(h))
    state = _initial_state(config.state, h.n)
    t_max = settings.t_max if config.t_max is None else config.t_max
    times = np.linspace(0.0, t_max, 11)
    probes = [
        {"f": f, "values": [state.char_fn(flow.evolve(f, t)) for t in times]}
        for f in np.eye(2 * h.n)
    ]
    report = {
        "schema": SCHEMA_VERSION,
        "input": str(config.input),
        "state": config.state,
        "times": times,
        "probes": probes,
    }
    return report, 0


def cmd_limit(config: RunConfig, settings: Settings) -> tuple[dict[str, Any], int]:
    h = load_hamiltonian(config.input)
    G = generator(h)
    state = _initial_state(config.state, h.n)
    directions = (1, -1) if config.direction == "both" else (int(config.direction),)
    rng = np.random.default_rng(settings.check.seed if config.seed is None else config.seed)
    limits = [describe_limit(time_limit(state, G, d, rng)) for d in directions]
    report = {
        "schema": SCHEMA_VERSION,
        "input": str(config.input),
        "state": config.state,
        "limits": limits,
    }
    return report, 0


def cmd_modes(config: RunConfig, settings: Settings) -> tuple[dict[str, Any], int]:
    grid = load_grid(config.input) if config.input is not None else pairing_grid()
    return modes_report(grid, config.epsilon), 0


def cmd_check(config: RunConfig, settings: Settings) -> tuple[dict[str, Any], int]:
    budget = settings.check
    if config.trials is not None:
        if config.trials < 1:
            raise ValueError(f"--trials must be positive, got {config.trials}")
        counts = {f.name: config.trials for f in fields(budget) if f.name != "seed"}
        budget = replace(budget, **counts)
    results = run_suite(budget, config.seed, progress=config.output_format == "table")
    failed = [r.name for r in results if not r.passed]
    report = {
        "schema": SCHEMA_VERSION,
        "seed": budget.seed if config.seed is None else config.seed,
        "properties": results,
        "passed": not failed,
    }
    return report, 1 if failed else 0


COMMANDS: dict[str, Callable[[RunConfig, Settings], tuple[dict[str, Any], int]]] = {
    "example": cmd_example,
    "solve": cmd_solve,
    "evolve": cmd_evolve,
    "limit": cmd_limit,
    "modes": cmd_modes,
    "check": cmd_check,
}


def _cell(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, np.ndarray):
        return np.array2string(value, precision=6, suppress_small=True, separator=", ")
    if isinstance(value, complex):
        return f"{value.real:.6g}{value.imag:+.6g}j"
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, (list, tuple)) and value and isinstance(value[0], dict):
        return f"{len(value)} entries"
    if isinstance(value, dict):
        return value.get("text", ", ".join(f"{k}={_cell(v)}" for k, v in value.items()))
    return value


def _rows(items: Sequence[Any]) -> pd.DataFrame:
    rows = [vars(item) if not isinstance(item, dict) else item for item in items]
    return pd.DataFrame([{k: _cell(v) for k, v in row.items()} for row in rows])


def render_table(report: dict[str, Any]) -> str:
    """Human-readable rendering: scalars as ``key: value``, record lists as tables."""
    lines: list[str] = []
    for key, value in report.items():
        if isinstance(value, (list, tuple)) and value and (
            isinstance(value[0], dict) or hasattr(value[0], "__dataclass_fields__")
        ):
            lines += ["", f"[{key}]", _rows(value).to_string(index=False)]
        elif isinstance(value, dict):
            lines += ["", f"[{key}]"]
            lines += [f"  {k}: {_cell(v)}" for k, v in value.items()]
        else:
            lines.append(f"{key}: {_cell(value)}")
    return "\n".join(lines).strip() + "\n"


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
        format=LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )
    config = RunConfig.from_namespace(args)
    try:
        settings = load_settings(args.config)
        if config.subcommand == "check":
            settings = settings.strict()
        configure(settings)
        report, status = COMMANDS[config.subcommand](config, settings)
    except (InvariantViolation, DocumentError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    finally:
        configure(None)

    if config.output_format == "json":
        sys.stdout.write(dump_json(report) + "\n")
    elif config.subcommand == "check":
        sys.stdout.write(suite_frame(report["properties"]).to_string(index=False) + "\n")
        sys.stdout.write(f"\n{'all properties pass' if report['passed'] else 'FAILURES'}\n")
    else:
        sys.stdout.write(render_table(report))
    return status


if __name__ == "__main__":
    sys.exit(main())
