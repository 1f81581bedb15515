"""Scenario files: one JSON document describing models, histories and commands.

Layout::

    {
      "layout": {"k": 1} | {"n": 1},
      "model": {"G_inf": ..., "terms": [{"tau": ..., "C": ...}], "require_symmetric": false},
      "surface_model": {... same keys ..., "normal": [0, 0, 1]},
      "histories": {"H": {"grid": [...], "values": [[...], ...]} | {"constant": [...]}},
      "processes": {"K": {"duration": 2.0, "grid": [...], "values": [...], "terminal": [...]}},
      "seed": 7,
      "tolerances": {"tol_cont": 1e-12, "tol_rw": 1e-7},
      "commands": {"eval": {...}, "distance": {...}, ...}
    }

Every name a command refers to must resolve; errors carry a JSON path.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .errors import ConfigError
from .history import History, Process
from .kernels import MaterialModel, model_from_dict
from .statespace import layout_from_dict

__all__ = ["Scenario", "load_scenario", "parse_scenario"]


@dataclass
class Scenario:
    layout: object
    model: MaterialModel | None
    surface_model: MaterialModel | None
    histories: dict
    processes: dict
    seed: int | None
    tolerances: dict
    commands: dict
    sha256: str = ""
    raw: dict = field(default_factory=dict, repr=False)

    def history(self, name: str, path: str) -> History:
        if not isinstance(name, str) or name not in self.histories:
            raise ConfigError(f"unknown history '{name}'", path=path)
        return self.histories[name]

    def process(self, name: str, path: str) -> Process:
        if not isinstance(name, str) or name not in self.processes:
            raise ConfigError(f"unknown process '{name}'", path=path)
        return self.processes[name]

    def command(self, name: str) -> dict:
        block = self.commands.get(name, {})
        if not isinstance(block, dict):
            raise ConfigError(f"command block '{name}' must be an object", path=f"commands.{name}")
        return block

    def require_model(self, surface: bool = False) -> MaterialModel:
        m = self.surface_model if surface else self.model
        if m is None:
            key = "surface_model" if surface else "model"
            raise ConfigError(f"scenario has no {key}", path=key)
        return m

    def require_seed(self, path: str) -> int:
        if self.seed is None:
            raise ConfigError("randomized commands need a seed (scenario 'seed' or --seed)", path=path)
        return self.seed


def _history(spec, n: int, path: str) -> History:
    if not isinstance(spec, dict):
        raise ConfigError("history must be an object", path=path)
    try:
        if "constant" in spec:
            return History.from_dict(spec)
        if "grid" not in spec or "values" not in spec:
            raise ConfigError("history needs 'grid' and 'values' (or 'constant')", path=path)
        h = History.from_dict(spec, dim=n)
    except ConfigError as exc:
        raise ConfigError(str(exc), path=f"{path}.{exc.path}" if exc.path else path) from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), path=path) from exc
    return h


def _process(spec, path: str) -> Process:
    if not isinstance(spec, dict) or "duration" not in spec:
        raise ConfigError("process needs 'duration', 'grid' and 'values'", path=path)
    try:
        return Process.from_dict(spec)
    except ConfigError as exc:
        raise ConfigError(str(exc), path=f"{path}.{exc.path}" if exc.path else path) from exc
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(str(exc), path=path) from exc


def parse_scenario(raw: dict, sha256: str = "") -> Scenario:
    """Validate and build a :class:`Scenario` from its decoded JSON."""
    if not isinstance(raw, dict):
        raise ConfigError("scenario must be a JSON object", path="$")
    if "layout" not in raw:
        raise ConfigError("scenario needs a layout", path="layout")
    layout = layout_from_dict(raw["layout"])
    model = model_from_dict(raw["model"], layout, path="model") if "model" in raw else None
    smodel = (
        model_from_dict(raw["surface_model"], layout, surface=True, path="surface_model")
        if "surface_model" in raw
        else None
    )
    hist_raw = raw.get("histories", {})
    if not isinstance(hist_raw, dict):
        raise ConfigError("histories must be an object", path="histories")
    histories = {}
    for name, spec in hist_raw.items():
        h = _history(spec, layout.n, f"histories.{name}")
        if h.dim != layout.n:
            raise ConfigError(f"history has dimension {h.dim}, layout needs {layout.n}", path=f"histories.{name}")
        histories[name] = h
    proc_raw = raw.get("processes", {})
    processes = {name: _process(spec, f"processes.{name}") for name, spec in proc_raw.items()}
    seed = raw.get("seed")
    if seed is not None and (not isinstance(seed, int) or seed < 0):
        raise ConfigError("seed must be a non-negative integer", path="seed")
    tolerances = raw.get("tolerances", {})
    commands = raw.get("commands", {})
    if not isinstance(commands, dict):
        raise ConfigError("commands must be an object", path="commands")
    return Scenario(layout, model, smodel, histories, processes, seed, tolerances, commands, sha256, raw)


def load_scenario(path) -> Scenario:
    """Read, hash and parse a scenario file."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario: {exc.strerror}", path=str(path)) from exc
    digest = hashlib.sha256(data).hexdigest()
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc.msg}", path=f"$:line {exc.lineno}:col {exc.colno}") from exc
    return parse_scenario(raw, digest)
