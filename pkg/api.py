from __future__ import annotations

import logging
from typing import Annotated, Any

from fastapi import FastAPI, File, Path as PathParam, Query, UploadFile
from fastapi.concurrency import run_in_threadpool
from fastapi.middleware.cors import CORSMiddleware

from api_utils import (
    allow_credentials,
    allowed_origins,
    http_error,
    json_report,
    read_validated_document,
)
from hamiltonian_io import SCHEMA_VERSION, parse_grid, parse_hamiltonian
from settings import active_settings
from worked_examples import modes_report, run_example, solve_report

logger = logging.getLogger(__name__)

VERSION = "1.0.0"

app = FastAPI(
    title="Quadratic State Solver",
    version=VERSION,
    description="Invariant quadratic states of quadratic Bose Hamiltonians.",
)
app.add_middleware(
    CORSMiddleware,
    allow_origins=allowed_origins(),
    allow_credentials=allow_credentials(),
    allow_methods=["GET", "POST"],
    allow_headers=["Content-Type"],
)


@app.get("/health", tags=["system"])
def health() -> dict[str, object]:
    settings = active_settings()
    return {
        "status": "healthy",
        "version": VERSION,
        "schema": SCHEMA_VERSION,
        "tolerance_scale": settings.tolerance_scale,
        "n_max": settings.n_max,
    }


@app.get("/api/v1/examples/{n}", tags=["examples"])
async def example(
    n: Annotated[int, PathParam(ge=1, le=5)],
    omega0: Annotated[float | None, Query(gt=0, le=100)] = None,
    random_states: Annotated[int, Query(ge=0, le=200)] = 10,
) -> dict[str, Any]:
    try:
        report = await run_in_threadpool(
            run_example, n, omega0, random_states=random_states
        )
    except ValueError as exc:
        raise http_error(exc) from exc
    return json_report(report)


@app.post("/api/v1/solve", tags=["solver"])
async def solve_document(
    file: UploadFile = File(...),
    t_sample: Annotated[float, Query(ge=-50, le=50)] = 0.7,
) -> dict[str, Any]:
    doc = await read_validated_document(file)
    try:
        report = await run_in_threadpool(
            lambda: solve_report(parse_hamiltonian(doc), t_sample)
        )
    except ValueError as exc:
        logger.info(f"Rejected Hamiltonian document: {exc}")
        raise http_error(exc) from exc
    return json_report(report)


@app.post("/api/v1/modes", tags=["solver"])
async def classify_modes(file: UploadFile = File(...)) -> dict[str, Any]:
    doc = await read_validated_document(file)
    try:
        report = await run_in_threadpool(lambda: modes_report(parse_grid(doc)))
    except ValueError as exc:
        logger.info(f"Rejected grid document: {exc}")
        raise http_error(exc) from exc
    return json_report(report)
