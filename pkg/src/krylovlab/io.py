"""Fixture files and table serialization (CSV and JSON)."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .tensor import HermitianOperator, HilbertStructure, StateVector

SCHEMA_VERSION = 1
FIXTURE_SCHEMA = "krylovlab/fixture"
TRAJECTORY_SCHEMA = "krylovlab/trajectory"
CHECK_SCHEMA = "krylovlab/check-report"
SWEEP_SCHEMA = "krylovlab/sweep"


class FixtureError(ValueError):
    pass


def _split(a: np.ndarray) -> dict:
    return {"re": np.real(a).tolist(), "im": np.imag(a).tolist()}


def _join(d: dict) -> np.ndarray:
    return np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)


def fixture_dict(H: HermitianOperator, psi0: StateVector, source: dict | None = None) -> dict:
    out = {
        "schema": FIXTURE_SCHEMA,
        "version": SCHEMA_VERSION,
        "party_dims": list(H.structure.party_dims),
        "hamiltonian": _split(H.matrix),
        "state": _split(psi0.amplitudes),
    }
    if source is not None:
        out["source"] = source
    return out


def dump_fixture(path, H: HermitianOperator, psi0: StateVector, source: dict | None = None) -> None:
    Path(path).write_text(json.dumps(fixture_dict(H, psi0, source), indent=1) + "\n", encoding="utf-8")


def parse_fixture(data: dict) -> tuple[HermitianOperator, StateVector]:
    if data.get("schema") != FIXTURE_SCHEMA:
        raise FixtureError(f"not a fixture document (schema = {data.get('schema')!r})")
    if data.get("version") != SCHEMA_VERSION:
        raise FixtureError(f"unsupported fixture version {data.get('version')!r}")
    structure = HilbertStructure(tuple(data["party_dims"]))
    return HermitianOperator(_join(data["hamiltonian"]), structure), StateVector(_join(data["state"]), structure)


def load_fixture(path) -> tuple[HermitianOperator, StateVector]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FixtureError(f"cannot read fixture {path}: {exc}") from None
    return parse_fixture(data)


def _cell(x: Any) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))  # shortest round-trip representation
    return str(x)


def _json_value(x: Any):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return None if not math.isfinite(x) else x
    if isinstance(x, dict):
        return {k: _json_value(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_json_value(v) for v in x]
    return x


def table_to_csv(columns: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(x) for x in row])
    return buf.getvalue()


def to_json(document: dict) -> str:
    return json.dumps(_json_value(document), indent=1, allow_nan=False) + "\n"
