"""Run configuration: JSON file plus command-line overrides (flags > file > defaults)."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .krylov import DEFAULT_N_POINTS

KNOWN_CHECKS = ("prop1", "prop2", "prop3", "prop4", "short-time")
FORMATS = ("csv", "json")

DEFAULTS: dict[str, Any] = {
    "model": {"kind": "gue", "params": {"dims": [2, 2]}},
    "time": {"t_max": 10.0, "n_points": DEFAULT_N_POINTS},
    "cut": None,
    "gm": {"kind": "product", "restarts": 32, "tol": 1e-12},
    "checks": [],
    "output": {"format": "csv", "path": None},
    "seed": 0,
    "instances": 1,
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    model: dict | str
    time: dict
    cut: list[int] | None
    gm: dict
    checks: list[str]
    output: dict
    seed: int
    instances: int = 1
    base_dir: Path = field(default=Path("."), compare=False)

    def times(self) -> np.ndarray:
        if "times" in self.time:
            return np.asarray(self.time["times"], dtype=float)
        return np.linspace(0.0, float(self.time["t_max"]), int(self.time["n_points"]))

    def fixture_path(self) -> Path | None:
        ref = self.model if isinstance(self.model, str) else self.model.get("fixture")
        if ref is None:
            return None
        path = Path(ref)
        return path if path.is_absolute() else self.base_dir / path

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "time": self.time,
            "cut": self.cut,
            "gm": self.gm,
            "checks": self.checks,
            "output": self.output,
            "seed": self.seed,
            "instances": self.instances,
        }


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict) and key != "model":
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def validate(raw: dict, base_dir: Path = Path(".")) -> RunConfig:
    unknown = set(raw) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    model = raw["model"]
    if isinstance(model, dict) and "fixture" not in model:
        if "kind" not in model:
            raise ConfigError("model needs a 'kind' or a 'fixture' path")
        model = dict(model)
        if "seed" in model:
            raise ConfigError("set the seed at top level, not inside 'model'")
    elif not isinstance(model, (dict, str)):
        raise ConfigError("model must be an object or a fixture path")

    time = dict(raw["time"])
    if "times" in time:
        times = time["times"]
        if not isinstance(times, list) or len(times) < 1:
            raise ConfigError("time.times must be a nonempty list")
        time = {"times": [float(t) for t in times]}
    else:
        try:
            t_max, n_points = float(time["t_max"]), int(time["n_points"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"time needs numeric t_max and n_points: {exc}") from None
        if not t_max > 0:
            raise ConfigError("t_max must be positive")
        if n_points < 2:
            raise ConfigError("n_points must be at least 2")
        time = {"t_max": t_max, "n_points": n_points}

    checks = raw["checks"]
    if isinstance(checks, str):
        checks = [c for c in checks.split(",") if c]
    bad = [c for c in checks if c not in KNOWN_CHECKS]
    if bad:
        raise ConfigError(f"unknown checks {bad}; known: {list(KNOWN_CHECKS)}")

    output = dict(raw["output"])
    if output.get("format") not in FORMATS:
        raise ConfigError(f"output.format must be one of {FORMATS}")

    gm = dict(raw["gm"])
    if gm.get("kind") not in ("product", "ggm"):
        raise ConfigError("gm.kind must be 'product' or 'ggm'")
    if int(gm.get("restarts", 1)) < 1:
        raise ConfigError("gm.restarts must be positive")

    cut = raw["cut"]
    if cut is not None and not (isinstance(cut, list) and all(isinstance(p, int) for p in cut)):
        raise ConfigError("cut must be a list of party indices")
    instances = int(raw["instances"])
    if instances < 1:
        raise ConfigError("instances must be positive")
    try:
        seed = int(raw["seed"])
    except (TypeError, ValueError):
        raise ConfigError("seed must be an integer") from None
    return RunConfig(model, time, cut, gm, list(checks), output, seed, instances, base_dir)


def load_config(path: str | None, overrides: dict | None = None) -> RunConfig:
    raw: dict = {}
    base_dir = Path(".")
    if path:
        p = Path(path)
        try:
            raw = json.loads(p.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        base_dir = p.parent
    merged = _merge(DEFAULTS, raw)
    merged = _merge(merged, overrides or {})
    return validate(merged, base_dir)


def set_path(raw: dict, dotted: str, value) -> dict:
    """Return a copy of ``raw`` with the numeric field at ``dotted`` replaced.

    Path segments index dicts by key and lists by integer position, e.g.
    ``model.params.energies.1``.
    """
    out = copy.deepcopy(raw)
    parts = dotted.split(".")
    node = out
    for part in parts[:-1]:
        node = node[int(part)] if isinstance(node, list) else node.setdefault(part, {})
    last = parts[-1]
    if isinstance(node, list):
        current = node[int(last)]
    else:
        current = node.get(last)
    if current is not None and not isinstance(current, (int, float)):
        raise ConfigError(f"sweep axis {dotted!r} does not name a numeric field")
    if isinstance(node, list):
        node[int(last)] = value
    else:
        node[last] = value
    return out
