"""
Reading Hamiltonian and dispersion-grid documents, writing reports.

Documents are YAML or JSON mappings (JSON is read through the YAML parser).
A Hamiltonian document names its basis and the coefficient blocks. The mode
count ``n`` is optional; when given it must match the N x N blocks::

    basis: pq          # M, L, K (real)
    n: 1
    M: [[1.0]]
    L: [[0.0]]
    K: [[4.0]]

    basis: aa          # S hermitian, T symmetric; complex entries as [re, im]
    n: 1
    S: [[2.5]]
    T: [[[-1.5, 0.0]]]

A grid document lists momentum records and an optional global branch::

    epsilon: 1
    modes:
      - {p: -0.1, omega: 0.01, delta: 0.25}
      - {p: 0.1, omega: 0.01, delta: 0.25, epsilon: -1}

Reports are encoded with ``schema: 1``: complex numbers become ``[re, im]`` and
infinite values the string ``"inf"``.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, is_dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

from momentum_mode import DispersionGrid, ModeRecord
from symplectic_core import (
    Basis,
    QuadHamiltonian,
    QuadHamiltonianAA,
    QuadHamiltonianPQ,
)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


class DocumentError(ValueError):
    """Malformed Hamiltonian or grid document."""


def _number(value: Any, field: str) -> complex:
    if isinstance(value, bool):
        raise DocumentError(f"Field '{field}': booleans are not numbers")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, str) and value.strip().lower() in ("inf", "+inf", "-inf"):
        return complex(float(value))
    if isinstance(value, (list, tuple)) and len(value) == 2:
        re, im = value
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in (re, im)):
            return complex(re, im)
    raise DocumentError(f"Field '{field}': expected a number or [re, im], got {value!r}")


def parse_matrix(value: Any, field: str, *, allow_complex: bool = True) -> np.ndarray:
    """Square matrix from nested lists; a bare number is read as a 1x1 matrix."""
    if value is None:
        raise DocumentError(f"Missing field '{field}'")
    if not isinstance(value, (list, tuple)):
        value = [[value]]
    rows = []
    for i, row in enumerate(value):
        if not isinstance(row, (list, tuple)):
            raise DocumentError(f"Field '{field}': row {i} is not a list")
        rows.append([_number(entry, f"{field}[{i}]") for entry in row])
    if not rows or any(len(row) != len(rows) for row in rows):
        raise DocumentError(f"Field '{field}' must be a non-empty square matrix")
    matrix = np.array(rows, dtype=complex)
    if not np.all(np.isfinite(matrix)):
        raise DocumentError(f"Field '{field}' has non-finite entries")
    if not np.any(matrix.imag):
        return matrix.real.copy()
    if not allow_complex:
        raise DocumentError(f"Field '{field}' must be real in the pq basis")
    return matrix


def _zeros_like(reference: np.ndarray) -> np.ndarray:
    return np.zeros_like(reference, dtype=float)


def parse_hamiltonian(doc: Mapping[str, Any]) -> QuadHamiltonian:
    """Hamiltonian from a parsed document; omitted blocks default to zero.

    Raises:
        DocumentError: For missing fields, wrong shapes, an unknown basis or an
            ``n`` that disagrees with the block size.
        InvariantViolation: If the coefficients break symmetry or hermiticity.
    """
    if not isinstance(doc, Mapping):
        raise DocumentError("Hamiltonian document must be a mapping")
    schema = doc.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise DocumentError(f"Unsupported schema version {schema!r}")
    try:
        basis = Basis(str(doc.get("basis", "pq")).lower())
    except ValueError as exc:
        raise DocumentError(f"Unknown basis {doc.get('basis')!r}; use 'pq' or 'aa'") from exc

    if basis is Basis.PQ:
        present = {k: parse_matrix(doc[k], k, allow_complex=False) for k in "MLK" if k in doc}
        if not present:
            raise DocumentError("A pq document needs at least one of M, L, K")
        reference = next(iter(present.values()))
        blocks = {k: present.get(k, _zeros_like(reference)) for k in "MLK"}
        _same_shape(blocks)
        return _check_modes(doc, QuadHamiltonianPQ(**blocks))

    present = {k: parse_matrix(doc[k], k) for k in "ST" if k in doc}
    if not present:
        raise DocumentError("An aa document needs at least one of S, T")
    reference = next(iter(present.values()))
    blocks = {k: present.get(k, _zeros_like(reference)) for k in "ST"}
    _same_shape(blocks)
    return _check_modes(doc, QuadHamiltonianAA(**blocks))


def _check_modes(doc: Mapping[str, Any], h: QuadHamiltonian) -> QuadHamiltonian:
    if "n" not in doc:
        return h
    declared = doc["n"]
    if isinstance(declared, bool) or not isinstance(declared, int) or declared < 1:
        raise DocumentError(f"Field 'n' must be a positive integer, got {declared!r}")
    if declared != h.n:
        raise DocumentError(
            f"Field 'n' declares {declared} mode(s) but the coefficient blocks are {h.n}x{h.n}"
        )
    return h


def _same_shape(blocks: Mapping[str, np.ndarray]) -> None:
    shapes = {name: block.shape for name, block in blocks.items()}
    if len(set(shapes.values())) != 1:
        raise DocumentError(f"Coefficient blocks differ in shape: {shapes}")


def load_document(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Input file not found: {path}")
    return parse_document(path.read_text(encoding="utf-8"), str(path))


def parse_document(text: str | bytes, source: str = "<document>") -> dict[str, Any]:
    """Mapping from YAML or JSON text."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise DocumentError(f"{source}: not valid YAML/JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise DocumentError(f"{source}: top level must be a mapping")
    logger.debug(f"Loaded document {source} with keys {sorted(doc)}")
    return doc


def load_hamiltonian(path: str | Path) -> QuadHamiltonian:
    return parse_hamiltonian(load_document(path))


def parse_grid(doc: Mapping[str, Any]) -> DispersionGrid:
    if not isinstance(doc, Mapping):
        raise DocumentError("Grid document must be a mapping")
    modes = doc.get("modes")
    if not isinstance(modes, list) or not modes:
        raise DocumentError("Grid document needs a non-empty 'modes' list")
    default_epsilon = doc.get("epsilon", 1)
    records = []
    for i, entry in enumerate(modes):
        if not isinstance(entry, Mapping):
            raise DocumentError(f"modes[{i}] must be a mapping")
        missing = [key for key in ("p", "omega", "delta") if key not in entry]
        if missing:
            raise DocumentError(f"modes[{i}] is missing {', '.join(missing)}")
        epsilon = entry.get("epsilon", default_epsilon)
        if epsilon not in (1, -1):
            raise DocumentError(f"modes[{i}].epsilon must be +1 or -1, got {epsilon!r}")
        values = {}
        for key in ("p", "omega", "delta"):
            value = _number(entry[key], f"modes[{i}].{key}")
            if value.imag or not math.isfinite(value.real):
                raise DocumentError(f"modes[{i}].{key} must be a finite real number")
            values[key] = value.real
        records.append(ModeRecord(values["p"], values["omega"], values["delta"], int(epsilon)))
    return DispersionGrid(tuple(records))


def load_grid(path: str | Path) -> DispersionGrid:
    return parse_grid(load_document(path))


def hamiltonian_document(h: QuadHamiltonian) -> dict[str, Any]:
    """Document that ``parse_hamiltonian`` reads back to ``h``."""
    if isinstance(h, QuadHamiltonianPQ):
        body = {"basis": Basis.PQ.value, "n": h.n, "M": h.M, "L": h.L, "K": h.K}
    else:
        body = {"basis": Basis.AA.value, "n": h.n, "S": h.S, "T": h.T}
    return to_jsonable({"schema": SCHEMA_VERSION, **body})


def _real(value: float) -> Any:
    value = float(value)
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if math.isnan(value):
        return "nan"
    return value + 0.0


def _complex(value: complex) -> list[Any]:
    return [_real(value.real), _real(value.imag)]


def _array(array: np.ndarray) -> Any:
    if np.iscomplexobj(array) and np.any(array.imag):
        encode = _complex
    else:
        array = np.real(array)
        encode = _real
    if array.ndim == 0:
        return encode(array.item())

    def nested(values: Any) -> Any:
        return [nested(x) for x in values] if isinstance(values, list) else encode(values)

    return nested(array.tolist())


def to_jsonable(obj: Any) -> Any:
    """Recursively convert report values to JSON-compatible data."""
    if isinstance(obj, Enum):
        return obj.value
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, np.ndarray):
        return _array(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return _real(float(obj))
    if isinstance(obj, (np.complexfloating, complex)):
        return _complex(complex(obj))
    if is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable(asdict(obj))
    if isinstance(obj, Mapping):
        return {str(key): to_jsonable(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(x) for x in obj]
    raise TypeError(f"Cannot encode {type(obj).__name__} as JSON")


def dump_json(report: Mapping[str, Any]) -> str:
    """Deterministic JSON text (sorted keys, fixed indentation)."""
    payload = dict(report)
    payload.setdefault("schema", SCHEMA_VERSION)
    return json.dumps(to_jsonable(payload), indent=2, sort_keys=True, allow_nan=False)
