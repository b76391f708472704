from __future__ import annotations

import json
import os
from typing import Any, Mapping

from fastapi import HTTPException, UploadFile

from hamiltonian_io import DocumentError, dump_json, parse_document
from symplectic_core import InvariantViolation

ALLOWED_DOCUMENT_TYPES = {
    "application/json",
    "application/yaml",
    "application/x-yaml",
    "text/yaml",
    "text/x-yaml",
    "text/plain",
    "application/octet-stream",
}
MAX_UPLOAD_BYTES = int(os.getenv("MAX_UPLOAD_BYTES", str(256 * 1024)))


def allowed_origins() -> list[str]:
    default_origins = "http://localhost:8000,http://127.0.0.1:8000"
    configured = os.getenv("ALLOWED_ORIGINS", default_origins)
    origins = [value.strip() for value in configured.split(",") if value.strip()]
    if "*" in origins and allow_credentials():
        raise RuntimeError("Wildcard CORS cannot be combined with credentials")
    return origins


def allow_credentials() -> bool:
    return os.getenv("ALLOW_CREDENTIALS", "false").lower() == "true"


async def read_validated_document(file: UploadFile) -> dict[str, Any]:
    """Uploaded YAML/JSON document as a mapping, within the upload limit."""
    if file.content_type not in ALLOWED_DOCUMENT_TYPES:
        raise HTTPException(status_code=415, detail="Only JSON or YAML documents are accepted")
    payload = await file.read(MAX_UPLOAD_BYTES + 1)
    if len(payload) > MAX_UPLOAD_BYTES:
        raise HTTPException(status_code=413, detail="Document exceeds the upload limit")
    if not payload:
        raise HTTPException(status_code=400, detail="Uploaded document is empty")
    try:
        text = payload.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise HTTPException(status_code=400, detail="Document is not UTF-8 text") from exc
    try:
        return parse_document(text, file.filename or "upload")
    except DocumentError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


def http_error(exc: Exception) -> HTTPException:
    """422 for inputs that parse but break an invariant, 400 otherwise."""
    if isinstance(exc, (InvariantViolation, DocumentError)):
        return HTTPException(status_code=422, detail=str(exc))
    return HTTPException(status_code=400, detail=str(exc))


def json_report(report: Mapping[str, Any]) -> dict[str, Any]:
    """Report encoded exactly as the CLI writes it (schema 1)."""
    return json.loads(dump_json(report))
