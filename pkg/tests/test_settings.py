from __future__ import annotations

from pathlib import Path

import pytest

from settings import LimitSchedule, active_tolerances, configure, load_settings


def test_bundled_config_matches_defaults() -> None:
    settings = load_settings()
    assert settings.tolerances.sym == pytest.approx(1e-12)
    assert settings.tolerances.res == pytest.approx(1e-9)
    assert settings.tolerances.cluster == pytest.approx(1e-6)
    assert settings.n_max == 6
    assert settings.check.gram_sets == 500
    assert settings.omega0 == 2.0


def test_tolerance_scale_from_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("QUADSTATE_TOL_SCALE", "10")
    settings = load_settings()
    assert settings.tolerances.res == pytest.approx(1e-8)
    assert settings.strict().tolerances.res == pytest.approx(1e-9)


def test_non_positive_scale_is_rejected(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("QUADSTATE_TOL_SCALE", "0")
    with pytest.raises(ValueError):
        load_settings()


def test_seed_override(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("QUADSTATE_SEED", "7")
    assert load_settings().check.seed == 7


def test_missing_explicit_config(tmp_path: Path) -> None:
    with pytest.raises(FileNotFoundError):
        load_settings(tmp_path / "absent.yml")


def test_partial_config_file(tmp_path: Path) -> None:
    path = tmp_path / "solver.yml"
    path.write_text("tolerances:\n  res: 1.0e-7\nsolver:\n  n_max: 3\n", encoding="utf-8")
    settings = load_settings(path)
    assert settings.tolerances.res == pytest.approx(1e-7)
    assert settings.tolerances.sym == pytest.approx(1e-12)
    assert settings.n_max == 3


def test_configure_installs_active_settings(tmp_path: Path) -> None:
    path = tmp_path / "solver.yml"
    path.write_text("tolerances:\n  res: 1.0e-6\n", encoding="utf-8")
    configure(load_settings(path))
    assert active_tolerances().res == pytest.approx(1e-6)
    configure(None)
    assert active_tolerances().res == pytest.approx(1e-9)


def test_doubling_schedule() -> None:
    times = LimitSchedule(max_doubling=3).times(-1)
    assert times == [-1.0, -2.0, -4.0, -8.0]
    with pytest.raises(ValueError):
        LimitSchedule().times(0)


def test_second_grid_is_stretched() -> None:
    schedule = LimitSchedule(max_doubling=2)
    plain, stretched = schedule.grids(1)
    assert plain == [1.0, 2.0, 4.0]
    assert stretched == pytest.approx([schedule.offset * t for t in plain])
    with pytest.raises(ValueError):
        LimitSchedule(offset=2.0).grids(1)


def test_bundled_config_sets_second_grid() -> None:
    limits = load_settings().limits
    assert limits.offset == pytest.approx(LimitSchedule().offset)
    assert limits.grid_agreement == pytest.approx(1e-7)
