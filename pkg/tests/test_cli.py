from __future__ import annotations

import json
from pathlib import Path

import pytest

from cli import RunConfig, build_parser, main, render_table


def _json(capsys: pytest.CaptureFixture[str], argv: list[str]) -> tuple[int, dict]:
    status = main(argv + ["--format", "json"])
    return status, json.loads(capsys.readouterr().out)


def test_parser_builds_run_config() -> None:
    args = build_parser().parse_args(["limit", "--input", "h.yml", "--direction", "-1"])
    config = RunConfig.from_namespace(args)
    assert config.subcommand == "limit"
    assert config.input == Path("h.yml")
    assert config.direction == "-1"
    assert config.state == "fock"


def test_example_command(capsys: pytest.CaptureFixture[str]) -> None:
    status, report = _json(capsys, ["example", "1", "--omega0", "2"])
    assert status == 0
    assert report["schema"] == 1
    assert report["passed"]
    assert report["solutions"][0]["K"] == [[pytest.approx(1.0 / 3.0)]]


def test_solve_command(capsys: pytest.CaptureFixture[str], inputs_dir: Path) -> None:
    status, report = _json(capsys, ["solve", "--input", str(inputs_dir / "dilation_aa.yml")])
    assert status == 0
    assert report["flags"]["count"] == 2
    assert report["input"].endswith("dilation_aa.yml")


def test_json_output_is_deterministic(
    capsys: pytest.CaptureFixture[str], inputs_dir: Path
) -> None:
    argv = ["solve", "--input", str(inputs_dir / "oscillator.json"), "--format", "json"]
    main(argv)
    first = capsys.readouterr().out
    main(argv)
    assert capsys.readouterr().out == first


def test_limit_command(capsys: pytest.CaptureFixture[str], inputs_dir: Path) -> None:
    status, report = _json(
        capsys, ["limit", "--input", str(inputs_dir / "dilation_aa.yml"), "--seed", "1"]
    )
    assert status == 0
    assert [entry["direction"] for entry in report["limits"]] == [1, -1]
    assert not any(entry["no_limit"] for entry in report["limits"])


def test_evolve_command(capsys: pytest.CaptureFixture[str], inputs_dir: Path) -> None:
    status, report = _json(
        capsys, ["evolve", "--input", str(inputs_dir / "oscillator.json"), "--t-max", "2"]
    )
    assert status == 0
    assert len(report["times"]) == 11
    assert report["probes"][0]["values"][0] == pytest.approx(0.7788007830714049)


def test_modes_command(capsys: pytest.CaptureFixture[str], inputs_dir: Path) -> None:
    status, report = _json(capsys, ["modes", "--input", str(inputs_dir / "pairing_grid.json")])
    assert status == 0
    assert report["summary"]["elliptic"] == 2
    assert report["summary"]["hyperbolic"] == 4
    status, report = _json(capsys, ["modes", "--epsilon", "-1"])
    assert status == 0
    assert all(row["epsilon"] == -1 for row in report["modes"])


def test_table_output(capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["example", "3"]) == 0
    out = capsys.readouterr().out
    assert "title: dilation" in out
    assert "[checks]" in out


def test_check_command_with_small_trials(capsys: pytest.CaptureFixture[str]) -> None:
    status, report = _json(capsys, ["check", "--trials", "2", "--seed", "5"])
    assert status == 0
    assert report["passed"]
    assert report["seed"] == 5
    assert all(item["passed"] for item in report["properties"])


def test_rejected_inputs_exit_with_two(
    capsys: pytest.CaptureFixture[str], tmp_path: Path
) -> None:
    corrupted = tmp_path / "broken.yml"
    corrupted.write_text("basis: pq\nM: [[1.0, 2.0], [0.0, 1.0]]\n", encoding="utf-8")
    assert main(["solve", "--input", str(corrupted)]) == 2
    assert "invariant violated" in capsys.readouterr().err
    mismatched = tmp_path / "mismatched.yml"
    mismatched.write_text("basis: pq\nn: 3\nM: [[1.0]]\nK: [[1.0]]\n", encoding="utf-8")
    assert main(["solve", "--input", str(mismatched)]) == 2
    assert "'n' declares 3" in capsys.readouterr().err
    assert main(["solve", "--input", str(tmp_path / "absent.yml")]) == 2
    assert main(["check", "--trials", "0"]) == 2


def test_render_table_sections() -> None:
    text = render_table({"title": "x", "flags": {"unique": True}, "rows": [{"a": 1.5}]})
    assert "title: x" in text
    assert "[flags]" in text
    assert "unique: True" in text
    assert "[rows]" in text
