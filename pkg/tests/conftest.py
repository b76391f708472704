from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from settings import configure

INPUTS = Path(__file__).resolve().parent.parent / "inputs"


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch: pytest.MonkeyPatch):
    for name in ("QUADSTATE_CONFIG", "QUADSTATE_TOL_SCALE", "QUADSTATE_SEED"):
        monkeypatch.delenv(name, raising=False)
    configure(None)
    yield
    configure(None)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def inputs_dir() -> Path:
    return INPUTS
