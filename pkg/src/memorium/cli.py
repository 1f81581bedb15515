"""Command-line front end: ``memorium <command> --scenario S --out DIR``.

Every command reads one scenario file, validates it in full, computes, and
writes CSV files whose first line is ``# scenario_sha256=<hex>`` followed by
a header row.  Files are written to a temporary name and renamed, so a
failing run leaves no partial output.  Errors go to stderr as one JSON
object ``{"error", "message", "path", "exit_code"}``.

Exit codes: 0 ok, 2 configuration, 3 numerical, 4 internal consistency.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys

import numpy as np

from .balance import manufactured_bulk, manufactured_surface, refinement_study
from .constitutive import respond, respond_after
from .energy import KINDS, FreeEnergyFunctional, evaluate, graffi_delta
from .errors import ConfigError, MemoriumError, PreconditionError
from .history import History
from .metric import MetricConfig, distance
from .relaxed import RelaxationProblem, relaxed_work
from .scenario import Scenario, load_scenario
from .surface import SurfaceFrame
from .verify import run_verify
from .work import work, work_over, work_surface

__all__ = ["main", "run", "COMMANDS"]

log = logging.getLogger("memorium")


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return str(x)


class _Outputs:
    """Collects CSV tables and commits them atomically at the end."""

    def __init__(self, out_dir: str, sha: str):
        self.out_dir = out_dir
        self.sha = sha
        self.tables: dict[str, str] = {}

    def table(self, name: str, header, rows) -> None:
        buf = io.StringIO()
        buf.write(f"# scenario_sha256={self.sha}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
        self.tables[name] = buf.getvalue()

    def commit(self) -> list[str]:
        os.makedirs(self.out_dir, exist_ok=True)
        paths = []
        for name, text in self.tables.items():
            final = os.path.join(self.out_dir, name)
            tmp = final + ".tmp"
            with open(tmp, "w", newline="") as fh:
                fh.write(text)
            os.replace(tmp, final)
            paths.append(final)
        return paths


def _opt(block: dict, key: str, kind, default, path: str):
    val = block.get(key, default)
    if val is None:
        return None
    try:
        if kind is bool:
            if not isinstance(val, bool):
                raise TypeError
            return val
        return kind(val)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"'{key}' must be {kind.__name__}", path=f"{path}.{key}") from exc


def _pair(sc: Scenario, block: dict, path: str) -> tuple[History, History]:
    pair = block.get("pair")
    if not isinstance(pair, list) or len(pair) != 2:
        raise ConfigError("'pair' must list two history names", path=f"{path}.pair")
    return sc.history(pair[0], f"{path}.pair[0]"), sc.history(pair[1], f"{path}.pair[1]")


def _metric_cfg(block: dict, path: str) -> MetricConfig:
    spec = block.get("metric", {})
    if not isinstance(spec, dict):
        raise ConfigError("'metric' must be an object", path=f"{path}.metric")
    allowed = {"t_grid", "n_points", "lo", "hi", "sup_tail_bound"}
    extra = set(spec) - allowed
    if extra:
        raise ConfigError(f"unknown metric keys {sorted(extra)}", path=f"{path}.metric")
    return MetricConfig(**spec)


def cmd_eval(sc: Scenario, out: _Outputs, seed) -> None:
    block = sc.command("eval")
    surface = _opt(block, "surface", bool, False, "commands.eval")
    M = sc.require_model(surface)
    H = sc.history(block.get("history", "H"), "commands.eval.history")
    if "process" in block:
        K = sc.process(block["process"], "commands.eval.process")
        s = _opt(block, "s", float, 0.0, "commands.eval")
        Y = respond_after(M, K, H, s)
    else:
        Y = respond(M, H)
    out.table("eval.csv", ["component_name", "value"], Y.components())


def cmd_distance(sc: Scenario, out: _Outputs, seed) -> None:
    block = sc.command("distance")
    surface = _opt(block, "surface", bool, False, "commands.distance")
    M = sc.require_model(surface)
    H1, H2 = _pair(sc, block, "commands.distance")
    d = distance(M, H1, H2, _metric_cfg(block, "commands.distance"))
    out.table("distance.csv", ["value", "uncertainty", "argmax_t"], [(d.value, d.uncertainty, d.argmax_t)])


def _work_rows(rep) -> list:
    rows = [("total", rep.value)]
    rows += [(k, v) for k, v in rep.breakdown.items()]
    rows.append(("quadrature_error_bound", rep.quadrature_error_bound))
    return rows


def cmd_work(sc: Scenario, out: _Outputs, seed) -> None:
    block = sc.command("work")
    M = sc.require_model()
    H = sc.history(block.get("history", "H"), "commands.work.history")
    if "process" in block:
        K = sc.process(block["process"], "commands.work.process")
        rep = work_over(M, K, H)
    else:
        rep = work(M, H)
    out.table("work.csv", ["quantity", "value"], _work_rows(rep))


_RELAX_KEYS = {
    "free_nodes": int,
    "replay_depth": float,
    "free_duration": float,
    "growth": float,
    "tol_rw": float,
    "max_levels": int,
    "tol_psd": float,
    "allow_indefinite": bool,
}


def _relax_options(block: dict, path: str, tolerances: dict) -> dict:
    opts = {}
    if "tol_rw" in tolerances:
        opts["tol_rw"] = _opt(tolerances, "tol_rw", float, None, "tolerances")
    for key, kind in _RELAX_KEYS.items():
        if key in block:
            opts[key] = _opt(block, key, kind, None, path)
    return opts


def cmd_relax(sc: Scenario, out: _Outputs, seed) -> None:
    path = "commands.relax"
    block = sc.command("relax")
    M = sc.require_model()
    src = sc.history(block.get("source"), f"{path}.source")
    tgt = sc.history(block.get("target"), f"{path}.target")
    P = RelaxationProblem(M, src, tgt, **_relax_options(block, path, sc.tolerances))
    r = relaxed_work(P)
    out.table(
        "relax.csv",
        ["value", "residual", "levels", "converged", "singular"],
        [(r.value, r.residual, len(r.trace), r.converged, r.singular)],
    )
    out.table("relax_trace.csv", ["level", "replay_depth", "free_duration", "value", "residual"], r.trace)


def cmd_energy(sc: Scenario, out: _Outputs, seed) -> None:
    path = "commands.energy"
    block = sc.command("energy")
    M = sc.require_model()
    kind = block.get("kind", "quadratic_graffi")
    if kind not in KINDS:
        raise ConfigError(f"unknown free energy kind '{kind}'", path=f"{path}.kind")
    source = sc.history(block["source"], f"{path}.source") if "source" in block else None
    psi = FreeEnergyFunctional(kind, M, source, _relax_options(block.get("relax", {}), f"{path}.relax", sc.tolerances))
    names = block.get("histories", sorted(sc.histories))
    if not isinstance(names, list):
        raise ConfigError("'histories' must be a list of names", path=f"{path}.histories")
    rows = []
    for i, name in enumerate(names):
        H = sc.history(name, f"{path}.histories[{i}]")
        delta = graffi_delta(M, H) if kind == "quadratic_graffi" else ""
        rows.append((name, evaluate(psi, H), delta))
    out.table("energy.csv", ["history", "value", "history_rate"], rows)


def cmd_verify(sc: Scenario, out: _Outputs, seed) -> None:
    path = "commands.verify"
    block = sc.command("verify")
    M = sc.require_model()
    seed = seed if seed is not None else sc.require_seed(path)
    cases = _opt(block, "cases", int, 8, path)
    if cases < 1:
        raise ConfigError("cases must be >= 1", path=f"{path}.cases")
    rows = run_verify(M, seed, cases, block.get("suites"))
    out.table(
        "verify.csv",
        ["check", "status", "lhs", "rhs", "slack", "cases", "certified"],
        [(r.check, r.status, r.lhs, r.rhs, r.slack, r.cases, r.certified) for r in rows],
    )


def _int_list(block, key, default, path, minimum=5):
    val = block.get(key, default)
    if not isinstance(val, list) or not val or not all(isinstance(v, int) and v >= minimum for v in val):
        raise ConfigError(f"'{key}' must be a list of integers >= {minimum}", path=f"{path}.{key}")
    return tuple(val)


def cmd_balance(sc: Scenario, out: _Outputs, seed) -> None:
    path = "commands.balance"
    block = sc.command("balance")
    k = sc.layout.k if hasattr(sc.layout, "k") else 1
    A = np.asarray(block.get("A", np.eye(k, 3).tolist()), dtype=float)
    if A.size != 3 * k:
        raise ConfigError(f"'A' must be a {k}x3 matrix", path=f"{path}.A")
    field_seed = seed if seed is not None else (sc.seed if sc.seed is not None else 0)
    normal = np.asarray(block.get("normal", [0.0, 0.0, 1.0]), dtype=float)
    if normal.shape != (3,) or not np.linalg.norm(normal) > 0:
        raise ConfigError("'normal' must be a nonzero 3-vector", path=f"{path}.normal")
    frame = SurfaceFrame.from_vector(normal)
    bulk_sizes = _int_list(block, "sizes", [17, 33, 65], path)
    surf_sizes = _int_list(block, "surface_sizes", [17, 33, 65], path)
    rows = []
    for prefix, level, sizes in (
        ("bulk", manufactured_bulk(k, A, field_seed), bulk_sizes),
        ("surface", manufactured_surface(k, A, frame, field_seed), surf_sizes),
    ):
        study = refinement_study(level, sizes)
        for eq, errs in study["errors"].items():
            orders = [""] + study["orders"][eq]
            for size, err, order in zip(sizes, errs, orders):
                rows.append((f"{prefix}.{eq}", size, err, order))
    out.table("balance.csv", ["equation", "size", "residual", "order"], rows)


def _trace_history(sc: Scenario, spec, path: str) -> History:
    if isinstance(spec, str):
        return sc.history(spec, path)
    if isinstance(spec, dict):
        try:
            return History.from_dict(spec)
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(str(exc), path=path) from exc
    raise ConfigError("trace must be a history name or an inline history", path=path)


def cmd_surface(sc: Scenario, out: _Outputs, seed) -> None:
    path = "commands.surface"
    block = sc.command("surface")
    SM = sc.require_model(surface=True)
    HH = sc.history(block.get("history", "HH"), f"{path}.history")
    rows = [(f"response.{name}", v) for name, v in respond(SM, HH).components()]
    traces = block.get("traces")
    if traces is not None:
        if not isinstance(traces, dict) or not {"H_plus", "H_minus"} <= set(traces):
            raise ConfigError("traces need H_plus and H_minus", path=f"{path}.traces")
        hist = {k: _trace_history(sc, v, f"{path}.traces.{k}") for k, v in traces.items()}
        rep = work_surface(SM, sc.require_model(), HH, hist)
        rows += [(f"work.{q}", v) for q, v in _work_rows(rep)]
    else:
        rows += [(f"reduced_work.{q}", v) for q, v in _work_rows(work(SM, HH))]
    if "pair" in block:
        H1, H2 = _pair(sc, block, path)
        d = distance(SM, H1, H2, _metric_cfg(block, path))
        rows += [("distance.value", d.value), ("distance.uncertainty", d.uncertainty)]
    if block.get("energy", False):
        try:
            phi = FreeEnergyFunctional("quadratic_graffi", SM)
        except PreconditionError as exc:
            raise ConfigError(str(exc), path=f"{path}.energy") from exc
        rows.append(("energy.quadratic_graffi", evaluate(phi, HH)))
    out.table("surface.csv", ["quantity", "value"], rows)


COMMANDS = {
    "eval": cmd_eval,
    "distance": cmd_distance,
    "work": cmd_work,
    "relax": cmd_relax,
    "energy": cmd_energy,
    "verify": cmd_verify,
    "balance": cmd_balance,
    "surface": cmd_surface,
}


def run(command: str, scenario_path: str, out_dir: str, seed: int | None = None) -> list[str]:
    """Run one command; returns the written paths.  Raises :class:`MemoriumError`."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command '{command}'", path="command")
    sc = load_scenario(scenario_path)
    out = _Outputs(out_dir, sc.sha256)
    log.info("running %s on %s", command, scenario_path)
    COMMANDS[command](sc, out, seed)
    return out.commit()


def _error_json(kind: str, message: str, path, code: int) -> str:
    return json.dumps({"error": kind, "message": message, "path": path, "exit_code": code}, sort_keys=True)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="memorium", description="Materials with fading memory: scenario runner")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--scenario", required=True, help="scenario JSON file")
    p.add_argument("--out", required=True, help="output directory for CSV files")
    p.add_argument("--seed", type=int, default=None, help="seed for randomized commands (overrides the scenario)")
    p.add_argument("--threads", type=int, default=None, help="BLAS thread count")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=os.environ.get("MEMORIUM_LOG", "WARNING").upper(), stream=sys.stderr)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print(_error_json("ConfigError", "seed must be an unsigned 64-bit integer", "--seed", 2), file=sys.stderr)
        return 2
    try:
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("threads must be >= 1", path="--threads")
            from threadpoolctl import threadpool_limits

            with threadpool_limits(limits=args.threads):
                run(args.command, args.scenario, args.out, args.seed)
        else:
            run(args.command, args.scenario, args.out, args.seed)
    except MemoriumError as exc:
        print(_error_json(type(exc).__name__, str(exc), getattr(exc, "path", None), exc.exit_code), file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # anything unplanned is an internal failure
        log.debug("internal error", exc_info=True)
        print(_error_json(type(exc).__name__, str(exc), None, 4), file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
