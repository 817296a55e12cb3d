"""Command-line front end: ``sl2lie {solve,reconstruct,invert,superpose,verify,bench}``.

Every run reads one JSON scenario (``--config``), validates it completely
and only then writes into ``--out``.  Exit codes:

    0 ok, 2 usage/config, 3 truncated run, 4 domain/precondition,
    5 residual above tolerance (or any truncation in ``reconstruct``).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .actions import apply_action
from .errors import ChartError, DegeneracyError, DomainError, UsageError
from .reconstruction import cross_validate, invert_ks2, invert_ks3, invert_mp, invert_riccati, reconstruct
from .reduced import solve_reduced
from .superposition import MixedConstants, PGL2Element, basic_sr_ks3, constants_from_initial, mixed_sr_ks2
from .systems import TAGS, Coefficient, SolverConfig, SystemKind, Trajectory, check_state, integrate, integrate_batch
from .verification import SUITES, ode_residual, random_point, run_suite

EXIT_OK, EXIT_USAGE, EXIT_TRUNCATED, EXIT_DOMAIN, EXIT_RESIDUAL = 0, 2, 3, 4, 5
DEFAULT_TOL = 1e-5


class Truncated(Exception):
    def __init__(self, diagnostic: dict):
        super().__init__(diagnostic.get("reason", "truncated"))
        self.diagnostic = diagnostic


# -- scenario parsing ---------------------------------------------------------------

def load_config(path) -> dict:
    if path is None:
        raise UsageError("--config is required for this command")
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    return cfg


def _number(cfg, key, default=None):
    val = cfg.get(key, default)
    if val is None:
        raise UsageError(f"missing required key {key!r}")
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise UsageError(f"{key!r} must be a number")
    return float(val)


def _vector(val, key):
    if not isinstance(val, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in val):
        raise UsageError(f"{key!r} must be a list of numbers")
    return [float(v) for v in val]


def parse_kind(entry: dict, shared: dict) -> SystemKind:
    tag = entry.get("system", shared.get("system"))
    if tag not in TAGS:
        raise UsageError(f"unknown or missing system tag {tag!r}")
    c0 = entry.get("c0", shared.get("c0", 0.0))
    if not isinstance(c0, (int, float)) or isinstance(c0, bool):
        c0 = Coefficient.from_spec(c0)
    c = 0.0
    if tag == "milne_pinney":
        c = entry.get("c", shared.get("c"))
        if isinstance(c, bool) or not isinstance(c, (int, float)):
            raise UsageError("milne_pinney needs a numeric 'c'")
    return SystemKind(tag, c0=c0, c=float(c))


def parse_common(cfg: dict):
    b1 = Coefficient.from_spec(cfg.get("b1", 0.0))
    t0 = _number(cfg, "t0", 0.0)
    t1 = _number(cfg, "t1", 1.0)
    if not t1 > t0:
        raise UsageError("t1 must be greater than t0")
    solver = SolverConfig(method=cfg.get("method", "rk4"), dt=_number(cfg, "dt", 1e-4),
                          tol=_number(cfg, "solver_tol", 1e-10))
    return b1, t0, t1, solver


def _initial(entry, kind: SystemKind):
    if kind.tag == "reduced_sl2" and "initial" not in entry:
        return [1.0, 0.0, 0.0, 1.0]
    if "initial" not in entry:
        raise UsageError(f"{kind.tag}: missing 'initial'")
    s0 = _vector(entry["initial"], "initial")
    if len(s0) != kind.dim:
        raise UsageError(f"{kind.tag}: initial state needs {kind.dim} components")
    return s0


def _c0_const(kind: SystemKind) -> float:
    return kind.c0_value


# -- commands ---------------------------------------------------------------------------------

def _check(name, value, threshold):
    ok = value is not None and math.isfinite(value) and value < threshold
    return {"check": name, "value": value if value is None or math.isfinite(value) else None,
            "threshold": threshold, "pass": bool(ok)}


def _trunc_diag(traj: Trajectory, label: str) -> dict:
    return {"error": "truncated", "what": label, "failure_time": traj.failure_time,
            "reason": traj.meta.get("reason", "")}


def cmd_solve(cfg: dict, out: Path, tol: float, seed: int):
    kind = parse_kind(cfg, cfg)
    b1, t0, t1, solver = parse_common(cfg)
    s0 = _initial(cfg, kind)
    check_state(kind, np.array(s0))
    traj = integrate(kind, b1, s0, solver, t0, t1)
    name = cfg.get("output", f"{kind.tag}.csv")
    _ensure(out)
    io.write_trajectory(out / name, traj)
    if traj.truncated:
        raise Truncated(_trunc_diag(traj, kind.tag))
    return None


def cmd_reconstruct(cfg: dict, out: Path, tol: float, seed: int):
    entries = cfg.get("systems")
    if not isinstance(entries, list) or not entries:
        raise UsageError("'systems' must be a non-empty list")
    b1, t0, t1, solver = parse_common(cfg)
    parsed = []
    for e in entries:
        if not isinstance(e, dict):
            raise UsageError("each entry of 'systems' must be an object")
        kind = parse_kind(e, {})
        if kind.tag == "reduced_sl2":
            raise UsageError("reduced_sl2 cannot be reconstructed")
        s0 = _initial(e, kind)
        if kind.tag in ("ks2", "ks3"):
            _c0_const(kind)
        parsed.append((kind, s0, e.get("output", f"{kind.tag}.csv")))
    names = [p[2] for p in parsed]
    if len(set(names)) != len(names):
        raise UsageError("duplicate output names; set 'output' per system")
    for kind, s0, _ in parsed:
        check_state(kind, np.array(s0))

    path = solve_reduced(b1, t0, t1, solver)
    _ensure(out)
    io.write_path(out / cfg.get("path_output", "reduced_path.csv"), path)
    checks = []
    for kind, s0, name in parsed:
        rec = reconstruct(kind, path, s0)
        io.write_trajectory(out / name, rec)
        rep = cross_validate(kind, b1, s0, solver, t0, t1, path=path)
        chk = _check(f"reconstruct.{Path(name).stem}", rep.sup_error, tol)
        chk.update(system=kind.tag, truncated=bool(rec.truncated or rep.meta["direct_truncated"]))
        if rec.truncated:
            chk["failure_time"] = rec.failure_time
            chk["pass"] = False
        if rep.meta["direct_truncated"]:
            chk["direct_failure_time"] = rep.meta["direct_failure_time"]
            chk["pass"] = False
        checks.append(chk)
    return _report("reconstruct", checks, out / cfg.get("report", "reconstruct_report.json"))


def _read_inputs(cfg, tag, count):
    files = cfg.get("inputs")
    if not isinstance(files, list) or len(files) != count or not all(isinstance(f, str) for f in files):
        raise UsageError(f"{tag} inversion needs 'inputs': a list of {count} CSV paths")
    base = Path(cfg.get("_base", "."))
    return [io.read_trajectory(base / f, tag) for f in files]


def cmd_invert(cfg: dict, out: Path, tol: float, seed: int):
    kind = parse_kind(cfg, cfg)
    tag = kind.tag
    if tag == "ks2":
        trajs = _read_inputs(cfg, tag, 2)
        rp = invert_ks2(*trajs, _c0_const(kind))
    elif tag == "ks3":
        trajs = _read_inputs(cfg, tag, 2)
        rp = invert_ks3(*trajs, _c0_const(kind))
    elif tag == "riccati":
        trajs = _read_inputs(cfg, tag, 3)
        rp = invert_riccati(*trajs)
    elif tag == "milne_pinney":
        trajs = _read_inputs(cfg, tag, 2)
        rp = invert_mp(*trajs, kind.c)
    else:
        raise UsageError(f"no inversion for system {tag!r}")
    _ensure(out)
    io.write_path(out / cfg.get("output", "reduced_path.csv"), rp)
    checks = []
    for i, tr in enumerate(trajs, start=1):
        rec = reconstruct(kind, rp, tr.states[0])
        n = len(rec)
        err = float(np.max(np.abs(rec.states[:n] - tr.states[:n]))) if n else math.inf
        chk = _check(f"invert.round_trip.{i}", err, tol)
        if rec.truncated:
            chk["pass"] = False
            chk["failure_time"] = rec.failure_time
        checks.append(chk)
    checks.append(_check("invert.max_det_drift", rp.meta.get("max_det_drift", 0.0), max(tol, 1e-9)))
    code = _report("invert", checks, out / cfg.get("report", "invert_report.json"))
    if rp.truncated:
        raise Truncated({"error": "truncated", "what": "invert", "failure_time": rp.meta.get("failure_time"),
                         "reason": rp.meta.get("reason", "")})
    return code


def _pgl(val) -> PGL2Element:
    try:
        (a, b), (c, d) = val
        return PGL2Element.normalized(float(a), float(b), float(c), float(d))
    except (TypeError, ValueError) as exc:
        raise UsageError(f"'A' must be a 2x2 matrix with nonzero determinant ({exc})") from None


def cmd_superpose(cfg: dict, out: Path, tol: float, seed: int):
    mode = cfg.get("mode")
    b1 = Coefficient.from_spec(cfg.get("b1", 0.0))
    base = Path(cfg.get("_base", "."))
    if mode == "basic_ks3":
        kind = SystemKind("ks3", c0=_number(cfg, "c0", 0.0))
        if "particular" not in cfg or "A" not in cfg:
            raise UsageError("basic_ks3 needs 'particular' (ks3 CSV) and 'A'")
        A = _pgl(cfg["A"])
        src = io.read_trajectory(base / cfg["particular"], "ks3")
        states = basic_sr_ks3(A, src.states.T).T
    elif mode == "mixed_ks2":
        c0 = _number(cfg, "c0")
        kind = SystemKind("ks2", c0=c0)
        ho = cfg.get("ho")
        if not isinstance(ho, list) or len(ho) != 2:
            raise UsageError("mixed_ks2 needs 'ho': two harmonic-oscillator CSVs")
        h1, h2 = (io.read_trajectory(base / f, "harmonic_oscillator") for f in ho)
        if len(h1) != len(h2) or not np.array_equal(h1.times, h2.times):
            raise UsageError("oscillator CSVs must share one grid")
        if "ks2_initial" in cfg:
            K = constants_from_initial(_vector(cfg["ks2_initial"], "ks2_initial"), h1.states[0], h2.states[0], c0)
        else:
            branch = cfg.get("branch", 1)
            if branch not in (1, -1):
                raise UsageError("'branch' must be 1 or -1")
            K = MixedConstants(_number(cfg, "k1"), _number(cfg, "k2"), branch, c0)
        states = mixed_sr_ks2(h1.states.T, h2.states.T, K).T
        src = h1
    else:
        raise UsageError("'mode' must be basic_ks3 or mixed_ks2")
    traj = Trajectory(kind.tag, src.times, states, float(src.times[0]), float(src.times[-1]), src.dt, {})
    resid = ode_residual(kind, b1, traj.times, traj.states)
    _ensure(out)
    io.write_trajectory(out / cfg.get("output", f"superposed_{kind.tag}.csv"), traj)
    checks = [_check(f"superpose.{mode}.ode_residual", resid, tol)]
    return _report("superpose", checks, out / cfg.get("report", "superpose_report.json"))


def cmd_verify(suite: str, out: Path | None, seed: int):
    if suite != "all" and suite not in SUITES:
        raise UsageError(f"unknown suite {suite!r}; choose from {', '.join(SUITES + ('all',))}")
    checks = run_suite(suite, seed=seed)
    report = {"command": "verify", "suite": suite, "seed": seed, "checks": checks,
              "pass": all(c["pass"] for c in checks)}
    text = io.dump_json(report)
    sys.stdout.write(text)
    if out is not None:
        _ensure(out)
        (out / f"verify_{suite}.json").write_text(text, encoding="utf-8", newline="\n")
    return EXIT_OK if report["pass"] else EXIT_RESIDUAL


def cmd_bench(cfg: dict, out: Path, tol: float, seed: int):
    kind = parse_kind(cfg, cfg)
    if kind.tag == "reduced_sl2":
        raise UsageError("bench needs a system acted on by the reduced path")
    b1, t0, t1, solver = parse_common(cfg)
    if solver.method != "rk4":
        raise UsageError("bench compares fixed-step RK4 runs")
    if "initial_states" in cfg:
        raw = cfg["initial_states"]
        if not isinstance(raw, list) or not raw:
            raise UsageError("'initial_states' must be a non-empty list")
        states = np.array([_vector(s, "initial_states") for s in raw])
    else:
        n = int(_number(cfg, "n"))
        if n < 1:
            raise UsageError("'n' must be at least 1")
        rng = np.random.default_rng(seed)
        states = np.array([random_point(kind.tag, rng) for _ in range(n)])
    if states.ndim != 2 or states.shape[1] != kind.dim:
        raise UsageError(f"initial states must have {kind.dim} components")
    for s in states:
        check_state(kind, s)
    c0 = _c0_const(kind) if kind.tag in ("ks2", "ks3") else 0.0

    start = time.perf_counter()
    direct, direct_failed = integrate_batch(kind, b1, states, solver, t0, t1)
    t_direct = time.perf_counter() - start

    start = time.perf_counter()
    path = solve_reduced(b1, t0, t1, solver)
    t_reduced_solve = time.perf_counter() - start
    g = path.element(len(path) - 1)
    start = time.perf_counter()
    recon = np.full_like(states, np.nan)
    for i, s in enumerate(states):
        try:
            recon[i] = apply_action(kind.tag, g, s, c0=c0, c=kind.c)
        except (ChartError, DomainError):
            pass
    t_actions = time.perf_counter() - start
    if path.truncated:
        recon[:] = np.nan

    fine = SolverConfig(method="rk4", dt=solver.dt / 4.0)
    ref, ref_failed = integrate_batch(kind, b1, states, fine, t0, t1)
    ok = ~direct_failed & ~ref_failed & np.all(np.isfinite(recon), axis=1)
    err_direct = float(np.max(np.abs(direct[ok] - ref[ok]))) if ok.any() else None
    err_recon = float(np.max(np.abs(recon[ok] - ref[ok]))) if ok.any() else None
    report = {
        "command": "bench",
        "system": kind.tag,
        "n": int(len(states)),
        "dt": solver.dt,
        "t0": t0,
        "t1": t1,
        "compared": int(ok.sum()),
        "direct": {"wall_time_s": t_direct, "max_error_vs_reference": err_direct,
                   "failed": int(direct_failed.sum())},
        "reduced": {"wall_time_s": t_reduced_solve + t_actions, "solve_time_s": t_reduced_solve,
                    "action_time_s": t_actions, "max_error_vs_reference": err_recon,
                    "failed": int((~np.all(np.isfinite(recon), axis=1)).sum())},
        "reference": {"method": "rk4", "dt": fine.dt},
    }
    text = io.dump_json(report)
    sys.stdout.write(text)
    _ensure(out)
    (out / cfg.get("report", "bench_report.json")).write_text(text, encoding="utf-8", newline="\n")
    if path.truncated:
        raise Truncated({"error": "truncated", "what": "reduced path", "failure_time": path.meta.get("failure_time"),
                         "reason": path.meta.get("reason", "")})
    return EXIT_OK


# -- plumbing ---------------------------------------------------------------------------------

def _ensure(out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)


def _report(command, checks, path) -> int:
    report = {"command": command, "checks": checks, "pass": all(c["pass"] for c in checks)}
    io.write_json(path, report)
    sys.stdout.write(io.dump_json(report))
    return EXIT_OK if report["pass"] else EXIT_RESIDUAL


def _diag(kind: str, message: str, **extra) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message, **extra}, sort_keys=True) + "\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", metavar="PATH", help="JSON scenario file")
    common.add_argument("--out", metavar="DIR", help="output directory (default: current directory)")
    common.add_argument("--seed", type=int, metavar="N", help="seed for random sampling (default 42)")
    common.add_argument("--tol", type=float, metavar="X", help="residual tolerance (default 1e-5)")
    parser = argparse.ArgumentParser(prog="sl2lie", parents=[common],
                                     description="Integrate sl(2,R) Lie systems through one reduced path.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("solve", "integrate one system directly and write its CSV"),
        ("reconstruct", "solve the reduced path once and reconstruct several systems"),
        ("invert", "recover the reduced path from particular solutions"),
        ("superpose", "apply the basic KS-3 or the mixed KS-2 superposition rule"),
        ("bench", "time direct integration against one reduced solve plus actions"),
    ):
        sub.add_parser(name, parents=[common], help=text)
    verify = sub.add_parser("verify", parents=[common], help="run the property suites")
    verify.add_argument("suite", help="algebra, actions, reconstruction, superposition or all")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    seed = getattr(args, "seed", 42)
    tol = getattr(args, "tol", None)
    out_arg = getattr(args, "out", None)
    out = Path(out_arg) if out_arg is not None else Path(".")
    try:
        if tol is not None and not tol > 0.0:
            raise UsageError("--tol must be positive")
        if args.command == "verify":
            return cmd_verify(args.suite, Path(out_arg) if out_arg is not None else None, seed)
        cfg_path = getattr(args, "config", None)
        cfg = load_config(cfg_path)
        cfg.setdefault("_base", str(Path(cfg_path).parent))
        if tol is None:
            tol = _number(cfg, "tolerance", DEFAULT_TOL)
        handler = {
            "solve": cmd_solve,
            "reconstruct": cmd_reconstruct,
            "invert": cmd_invert,
            "superpose": cmd_superpose,
            "bench": cmd_bench,
        }[args.command]
        code = handler(cfg, out, tol, seed)
        return EXIT_OK if code is None else code
    except Truncated as exc:
        sys.stderr.write(json.dumps(exc.diagnostic, sort_keys=True) + "\n")
        return EXIT_TRUNCATED
    except UsageError as exc:
        _diag("usage", str(exc))
        return EXIT_USAGE
    except (DomainError, DegeneracyError) as exc:
        extra = {"witness": float(exc.witness)} if isinstance(exc, ChartError) and exc.witness is not None else {}
        _diag("domain", str(exc), **extra)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
