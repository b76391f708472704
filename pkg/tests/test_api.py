from __future__ import annotations

from pathlib import Path

import pytest
from fastapi.testclient import TestClient

import api_utils
from api import app
from api_utils import allowed_origins

client = TestClient(app)


def test_health() -> None:
    response = client.get("/health")
    assert response.status_code == 200
    body = response.json()
    assert body["status"] == "healthy"
    assert body["schema"] == 1


def test_example_endpoint() -> None:
    response = client.get("/api/v1/examples/4", params={"omega0": 2.0, "random_states": 1})
    assert response.status_code == 200
    body = response.json()
    assert body["passed"]
    assert body["flags"]["count"] == 2


def test_example_number_is_validated() -> None:
    assert client.get("/api/v1/examples/9").status_code == 422
    assert client.get("/api/v1/examples/1", params={"omega0": -1}).status_code == 422


def test_solve_upload(inputs_dir: Path) -> None:
    payload = (inputs_dir / "oscillator.json").read_bytes()
    response = client.post(
        "/api/v1/solve", files={"file": ("oscillator.json", payload, "application/json")}
    )
    assert response.status_code == 200
    body = response.json()
    assert body["flags"]["unique"]
    assert body["solutions"][0]["K"][0][0] == pytest.approx(1.0 / 3.0)


def test_modes_upload(inputs_dir: Path) -> None:
    payload = (inputs_dir / "pairing_grid.json").read_bytes()
    response = client.post(
        "/api/v1/modes", files={"file": ("grid.json", payload, "application/json")}
    )
    assert response.status_code == 200
    assert response.json()["summary"]["hyperbolic"] == 4


def test_upload_validation(monkeypatch: pytest.MonkeyPatch) -> None:
    asymmetric = b"basis: pq\nM: [[1.0, 2.0], [0.0, 1.0]]\n"
    response = client.post("/api/v1/solve", files={"file": ("h.yml", asymmetric, "text/yaml")})
    assert response.status_code == 422
    response = client.post("/api/v1/solve", files={"file": ("h.png", b"\x89PNG", "image/png")})
    assert response.status_code == 415
    response = client.post("/api/v1/solve", files={"file": ("h.yml", b"", "text/yaml")})
    assert response.status_code == 400
    response = client.post("/api/v1/solve", files={"file": ("h.yml", b"- a\n- b\n", "text/yaml")})
    assert response.status_code == 400
    monkeypatch.setattr(api_utils, "MAX_UPLOAD_BYTES", 8)
    response = client.post(
        "/api/v1/solve", files={"file": ("h.yml", b"basis: pq\nM: 1.0\n", "text/yaml")}
    )
    assert response.status_code == 413


def test_wildcard_cors_with_credentials_is_rejected(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("ALLOWED_ORIGINS", "*")
    monkeypatch.setenv("ALLOW_CREDENTIALS", "true")
    with pytest.raises(RuntimeError):
        allowed_origins()


def test_origins_from_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("ALLOWED_ORIGINS", "https://a.example, https://b.example ,")
    monkeypatch.delenv("ALLOW_CREDENTIALS", raising=False)
    assert allowed_origins() == ["https://a.example", "https://b.example"]
