"""Command-line front end.

    krylovlab evolve   --config run.json [--tmax T --npoints N --seed S --out PATH --format csv|json]
    krylovlab check    --config run.json --checks prop1,prop2 [...]
    krylovlab sweep    --config run.json --vary model.params.energies.1 --values 0.5 1 2 [--mode check]
    krylovlab fixtures dump --config run.json --out fixture.json
    krylovlab fixtures load fixture.json

Exit codes: 0 success, 1 bound violations (check/sweep), 2 bad configuration or
incompatible structure, 3 numerical invariant breach.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import bounds
from .config import DEFAULTS, KNOWN_CHECKS, ConfigError, RunConfig, _merge, load_config, set_path, validate
from .io import (
    CHECK_SCHEMA,
    SCHEMA_VERSION,
    SWEEP_SCHEMA,
    TRAJECTORY_SCHEMA,
    FixtureError,
    dump_fixture,
    load_fixture,
    table_to_csv,
    to_json,
)
from .krylov import KrylovMismatchError, amplitudes_full_space, build_krylov
from .measures import entropy_of_spectrum
from .models import EnsembleSpec, derive_seed
from .tensor import StructureError, ValidationError

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
GRAM_TOL = 1e-10
COMPARISON_TOL = {"prop3": 1e-10, "prop4": 1e-8}
SHORT_TIME_TOL = 1e-3

CHECK_COLUMNS = ["check", "instance", "t", "lhs", "rhs", "rhs_lower", "slack", "condition"]
SUMMARY_COLUMNS = ["check", "instances", "points", "violations", "min_slack", "max_abs_deviation", "note"]


class NumericalError(RuntimeError):
    pass


class IncompatibleError(ValueError):
    pass


def instance(config: RunConfig, index: int = 0):
    """(H, psi0, seed) for instance ``index``; single-instance runs use the master seed."""
    path = config.fixture_path()
    if path is not None:
        H, psi0 = load_fixture(path)
        return H, psi0, None
    seed = config.seed if config.instances == 1 else derive_seed(config.seed, index)
    spec = EnsembleSpec(config.model["kind"], dict(config.model.get("params", {})), seed)
    H, psi0 = spec.generate()
    return H, psi0, seed


# --- evolve -----------------------------------------------------------------------------------


def run_evolve(config: RunConfig) -> dict:
    H, psi0, seed = instance(config)
    times = config.times()
    basis = build_krylov(H, psi0)
    if basis.gram_deviation() > GRAM_TOL:
        raise NumericalError(f"Krylov basis lost orthonormality ({basis.gram_deviation():.3e})")
    try:
        traj = amplitudes_full_space(basis, H, psi0, times)
    except KrylovMismatchError as exc:
        raise NumericalError(str(exc)) from None
    K, ipr = traj.spread, traj.ipr
    if np.any(K < -1e-12) or np.any(K > basis.dim_k - 1 + 1e-10):
        raise NumericalError("spread complexity left [0, d_K - 1]")

    columns = ["t", "K", "IPR"]
    blocks = [times[:, None], K[:, None], ipr[:, None]]
    if config.cut is not None:
        try:
            cut = bounds._resolve_cut(psi0.structure, config.cut)
        except StructureError as exc:
            raise ConfigError(str(exc)) from None
        psi_t = traj.phi @ basis.vectors.T
        columns.append("S_A")
        blocks.append(entropy_of_spectrum(bounds._reduced_spectra(psi_t, psi0.structure, cut))[:, None])
    for n in range(basis.dim_k):
        columns += [f"p_{n}", f"phi_re_{n}", f"phi_im_{n}"]
    p = traj.probabilities
    blocks.append(np.stack([p, traj.phi.real, traj.phi.imag], axis=2).reshape(len(times), -1))
    rows = np.hstack(blocks).tolist()
    return {
        "schema": TRAJECTORY_SCHEMA,
        "version": SCHEMA_VERSION,
        "config": config.to_dict(),
        "instance_seed": seed,
        "dim_k": basis.dim_k,
        "lanczos": {"a": basis.a_coeffs.tolist(), "b": basis.b_coeffs.tolist()},
        "columns": columns,
        "rows": rows,
    }


# --- check ------------------------------------------------------------------------------------


def _require_compatible(check: str, H, psi0, config: RunConfig) -> None:
    structure = psi0.structure
    if check == "prop1":
        try:
            bounds._resolve_cut(structure, config.cut)
        except StructureError as exc:
            raise IncompatibleError(f"prop1: {exc}") from None
    elif check == "prop2" and structure.n_parties < 3:
        raise IncompatibleError("prop2 needs at least three parties")
    elif check == "prop3" and H.dim != 2:
        raise IncompatibleError("prop3 needs a two-level system")
    elif check == "prop4" and H.dim != 3:
        raise IncompatibleError("prop4 needs a three-level system")


def _bound_rows(report: bounds.BoundReport, index: int) -> list[list]:
    lower = report.rhs_lower if report.rhs_lower is not None else [None] * report.times.size
    return [
        [report.name, index, t, l, r, lo, s, bool(f)]
        for t, l, r, lo, s, f in zip(report.times, report.lhs, report.rhs, lower, report.slack, report.condition_flags)
    ]


def _run_single_check(check: str, H, psi0, config: RunConfig, index: int) -> tuple[list[list], dict]:
    times = config.times()
    if check == "prop1":
        rep = bounds.check_entropy_spread_bound(H, psi0, config.cut, times)
        return _bound_rows(rep, index), {"violations": rep.violations, "min_slack": rep.min_slack}
    if check == "prop2":
        gm = dict(config.gm)
        gm.setdefault("seed", derive_seed(config.seed, 10_000 + index))
        rep = bounds.check_ipr_gm_bounds(H, psi0, times, gm)
        remark = bounds.upper_bound_tighter_than_trivial(rep)
        return _bound_rows(rep, index), {
            "violations": rep.violations + (0 if remark else 1),
            "min_slack": rep.min_slack,
            "note": f"measure={rep.extras['measure']}; flagged={int(rep.condition_flags.sum())}",
        }
    if check in ("prop3", "prop4"):
        tol = COMPARISON_TOL[check]
        if check == "prop3":
            rep = bounds.compare_qubit_closed_form(H, psi0, times, tol)
            note = ""
        else:
            rep = bounds.compare_qutrit_closed_form(H, psi0, times, tol)
            note = f"sign_convention={rep.extras['sign_convention']}"
            inputs = bounds.QutritClosedFormInputs.from_operator(H, psi0)
            try:
                resolved, _ = bounds.resolve_omega_sign(inputs, times)
                note += f"; oracle_selected={resolved}"
            except ValidationError:
                note += "; oracle_selected=n/a"
        rows = [
            [check, index, t, a, b, None, -d, True]
            for t, a, b, d in zip(rep.times, rep.pipeline, rep.closed_form, rep.deviation)
        ]
        return rows, {"violations": rep.violations, "max_abs_deviation": rep.max_abs_deviation, "note": note}
    if check == "short-time":
        rep = bounds.short_time_check(H, psi0)
        flag = not rep.trivial
        violation = int(flag and not rep.relative_deviation < SHORT_TIME_TOL)
        rows = [[check, index, None, rep.alpha, rep.b1_squared, None, -rep.relative_deviation, flag]]
        return rows, {"violations": violation, "min_slack": -rep.relative_deviation, "note": "trivial" if rep.trivial else ""}
    raise ConfigError(f"unknown check {check!r}")


def run_check(config: RunConfig) -> dict:
    if not config.checks:
        raise ConfigError("no checks requested; use --checks")
    rows: list[list] = []
    summary = {c: {"check": c, "instances": 0, "points": 0, "violations": 0, "min_slack": None,
                   "max_abs_deviation": None, "note": ""} for c in config.checks}
    for index in range(config.instances):
        H, psi0, _ = instance(config, index)
        for check in config.checks:
            _require_compatible(check, H, psi0, config)
        for check in config.checks:
            check_rows, info = _run_single_check(check, H, psi0, config, index)
            rows += check_rows
            entry = summary[check]
            entry["instances"] += 1
            entry["points"] += len(check_rows)
            entry["violations"] += info["violations"]
            for key, pick in (("min_slack", min), ("max_abs_deviation", max)):
                if key in info and np.isfinite(info[key]):
                    entry[key] = info[key] if entry[key] is None else pick(entry[key], info[key])
            if info.get("note") and not entry["note"]:
                entry["note"] = info["note"]
    return {
        "schema": CHECK_SCHEMA,
        "version": SCHEMA_VERSION,
        "config": config.to_dict(),
        "columns": CHECK_COLUMNS,
        "rows": rows,
        "summary": [summary[c] for c in config.checks],
    }


# --- sweep ------------------------------------------------------------------------------------


def _worker_count() -> int:
    env = os.environ.get("KRYLOVLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError("KRYLOVLAB_THREADS must be an integer") from None
    return os.cpu_count() or 1


def _point_config(raw: dict, axis: str, value: float, index: int, base_dir: Path) -> RunConfig:
    if axis == "seed":
        raw = dict(raw, seed=int(value))
    else:
        raw = set_path(raw, axis, value)
        raw["seed"] = derive_seed(int(raw["seed"]), index)
    return validate(raw, base_dir)


def _run_point(mode: str, raw: dict, axis: str, value: float, index: int, base_dir: Path):
    try:
        config = _point_config(raw, axis, value, index, base_dir)
        return index, (run_evolve(config) if mode == "evolve" else run_check(config)), None
    except Exception as exc:  # per-point failures are recorded, not fatal
        return index, None, {"index": index, "value": value, "exit_code": exit_code_for(exc), "error": str(exc)}


def run_sweep(raw: dict, axis: str, values, mode: str = "evolve", base_dir: Path = Path(".")) -> dict:
    if not axis:
        raise ConfigError("sweep needs an axis (--vary)")
    values = list(values or [])
    if not values:
        raise ConfigError("sweep axis has no values")
    if mode not in ("evolve", "check"):
        raise ConfigError("sweep mode must be 'evolve' or 'check'")
    validate(raw, base_dir)
    if axis != "seed":
        set_path(raw, axis, values[0])  # fail early on a non-numeric axis
    with ThreadPoolExecutor(max_workers=_worker_count()) as pool:
        results = list(pool.map(lambda iv: _run_point(mode, raw, axis, iv[1], iv[0], base_dir), enumerate(values)))
    results.sort(key=lambda r: r[0])
    docs = [(i, d) for i, d, _ in results if d is not None]
    failures = [f for _, _, f in results if f is not None]

    if mode == "evolve":
        width = max((d["dim_k"] for _, d in docs), default=0)
        columns = ["sweep_index", "sweep_value"]
        base_cols = None
        rows = []
        for i, d in docs:
            fixed = [c for c in d["columns"] if not c.startswith(("p_", "phi_"))]
            base_cols = base_cols or fixed
            n_fixed = len(fixed)
            for row in d["rows"]:
                pad = [0.0] * (3 * (width - d["dim_k"]))
                rows.append([i, values[i]] + row[:n_fixed] + row[n_fixed:] + pad)
        columns += (base_cols or []) + [f"{k}_{n}" for n in range(width) for k in ("p", "phi_re", "phi_im")]
        summary = []
    else:
        columns = ["sweep_index", "sweep_value"] + CHECK_COLUMNS
        rows = [[i, values[i]] + row for i, d in docs for row in d["rows"]]
        summary = _aggregate_summaries([d["summary"] for _, d in docs])
    return {
        "schema": SWEEP_SCHEMA,
        "version": SCHEMA_VERSION,
        "config": raw,
        "axis": axis,
        "values": values,
        "mode": mode,
        "columns": columns,
        "rows": rows,
        "summary": summary,
        "failures": failures,
    }


def _aggregate_summaries(per_point: list[list[dict]]) -> list[dict]:
    merged: dict[str, dict] = {}
    for summary in per_point:
        for entry in summary:
            m = merged.setdefault(entry["check"], dict(entry, instances=0, points=0, violations=0,
                                                       min_slack=None, max_abs_deviation=None))
            m["instances"] += entry["instances"]
            m["points"] += entry["points"]
            m["violations"] += entry["violations"]
            for key, pick in (("min_slack", min), ("max_abs_deviation", max)):
                if entry[key] is not None:
                    m[key] = entry[key] if m[key] is None else pick(m[key], entry[key])
    return list(merged.values())


# --- output and exit codes ---------------------------------------------------------------------


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (ConfigError, IncompatibleError, StructureError, FixtureError, KeyError)):
        return EXIT_CONFIG
    return EXIT_NUMERIC


def render(document: dict, fmt: str) -> tuple[str, str | None]:
    """Main artifact text and, for CSV with a summary, the summary table."""
    if fmt == "json":
        return to_json(document), None
    main = table_to_csv(document["columns"], document["rows"])
    summary = document.get("summary")
    if not summary:
        return main, None
    return main, table_to_csv(SUMMARY_COLUMNS, [[s.get(c) for c in SUMMARY_COLUMNS] for s in summary])


def write_output(document: dict, fmt: str, path: str | None) -> None:
    main, summary = render(document, fmt)
    failures = document.get("failures")
    if path is None:
        sys.stdout.write(main)
        if summary:
            sys.stdout.write("\n" + summary)
        return
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(main, encoding="utf-8")
    if summary:
        out.with_name(out.stem + ".summary.csv").write_text(summary, encoding="utf-8")
    if failures and fmt == "csv":
        out.with_name(out.stem + ".failures.json").write_text(to_json({"failures": failures}), encoding="utf-8")


def _overrides(args) -> dict:
    over: dict = {}
    if getattr(args, "seed", None) is not None:
        over["seed"] = args.seed
    if getattr(args, "tmax", None) is not None or getattr(args, "npoints", None) is not None:
        over["time"] = {}
        if args.tmax is not None:
            over["time"]["t_max"] = args.tmax
        if args.npoints is not None:
            over["time"]["n_points"] = args.npoints
    if getattr(args, "checks", None) is not None:
        over["checks"] = [c for c in args.checks.split(",") if c]
    if getattr(args, "gm_restarts", None) is not None:
        over["gm"] = {"restarts": args.gm_restarts}
    if getattr(args, "format", None) is not None or getattr(args, "out", None) is not None:
        over["output"] = {}
        if args.format is not None:
            over["output"]["format"] = args.format
        if args.out is not None:
            over["output"]["path"] = args.out
    if getattr(args, "instances", None) is not None:
        over["instances"] = args.instances
    return over


def _raw_config(args) -> tuple[dict, Path]:
    raw: dict = {}
    base = Path(".")
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        base = Path(args.config).parent
    return _merge(_merge(DEFAULTS, raw), _overrides(args)), base


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="krylovlab", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output path (stdout if omitted)")
        p.add_argument("--format", choices=["csv", "json"])
        p.add_argument("--tmax", type=float)
        p.add_argument("--npoints", type=int)
        p.add_argument("--checks", help="comma-separated: " + ",".join(KNOWN_CHECKS))
        p.add_argument("--gm-restarts", type=int)
        p.add_argument("--instances", type=int, help="number of seeded instances for check")

    common(sub.add_parser("evolve", help="Krylov amplitudes, K(t), IPR(t) and entropy"))
    common(sub.add_parser("check", help="evaluate bound and closed-form checks"))
    sweep = sub.add_parser("sweep", help="repeat evolve/check along one numeric config axis")
    common(sweep)
    sweep.add_argument("--vary", default="", help="dotted config path, or 'seed'")
    sweep.add_argument("--values", type=float, nargs="*", default=[])
    sweep.add_argument("--range", type=float, nargs=3, metavar=("START", "STOP", "N"))
    sweep.add_argument("--mode", choices=["evolve", "check"], default="evolve")

    fx = sub.add_parser("fixtures", help="serialize or inspect model instances")
    fx_sub = fx.add_subparsers(dest="action", required=True)
    dump = fx_sub.add_parser("dump")
    dump.add_argument("--config")
    dump.add_argument("--seed", type=int)
    dump.add_argument("--out", required=True)
    load = fx_sub.add_parser("load")
    load.add_argument("path")
    return parser


def _fixtures(args) -> int:
    if args.action == "dump":
        over = {"seed": args.seed} if args.seed is not None else {}
        config = load_config(args.config, over)
        H, psi0, seed = instance(config)
        source = None if config.fixture_path() else {"model": config.model, "seed": seed}
        dump_fixture(args.out, H, psi0, source)
        return EXIT_OK
    H, psi0 = load_fixture(args.path)
    info = {
        "party_dims": list(H.structure.party_dims),
        "dim": H.dim,
        "state_norm": float(np.linalg.norm(psi0.amplitudes)),
        "spectral_norm": H.spectral_norm(),
        "dim_k": build_krylov(H, psi0).dim_k,
    }
    sys.stdout.write(to_json(info))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if args.command == "fixtures":
            return _fixtures(args)
        raw, base = _raw_config(args)
        if args.command == "sweep":
            values = list(args.values)
            if args.range:
                start, stop, n = args.range
                values = np.linspace(start, stop, int(n)).tolist()
            document = run_sweep(raw, args.vary, values, args.mode, base)
            fmt, path = raw["output"]["format"], raw["output"]["path"]
            write_output(document, fmt, path)
            codes = [f["exit_code"] for f in document["failures"]]
            violations = sum(s["violations"] for s in document["summary"])
            return max(codes + [EXIT_VIOLATION if violations else EXIT_OK])
        config = validate(raw, base)
        document = run_evolve(config) if args.command == "evolve" else run_check(config)
        write_output(document, config.output["format"], config.output["path"])
        if args.command == "check":
            return EXIT_VIOLATION if any(s["violations"] for s in document["summary"]) else EXIT_OK
        return EXIT_OK
    except Exception as exc:
        code = exit_code_for(exc)
        print(f"krylovlab: error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    raise SystemExit(main())
