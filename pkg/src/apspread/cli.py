"""Batch front-end: ``apspread <task> --config cfg.json --out DIR``."""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, fields, replace
from pathlib import Path

from .ap_core import APFunction, IndependenceError, QuadratureError, bounds, harmonic_mean
from .hj_cell import CoefficientSet, ConvergenceError, InvariantError, SolverParams, diagnose
from .kpp_sim import Bump, SimConfig, SimulationError, empirical_speed, simulate
from .speed import SandwichError, speed_finite, speed_infinity, speed_zero

TASKS = ("validate", "mean", "lambda", "speed", "simulate", "rate-small", "rate-large", "ctilde-effect", "compare")

EXIT_CONFIG, EXIT_INVARIANT, EXIT_SOLVER = 2, 3, 4
SOLVER_ERRORS = (ConvergenceError, SandwichError, SimulationError, QuadratureError, IndependenceError)

TASK_DEFAULTS = {
    "validate": {},
    "mean": {},
    "lambda": {"L": 1.0, "p_grid": [0.0, 1.0]},
    "speed": {"L": 1.0, "e": 1},
    "simulate": {"L": 1.0},
    "rate-small": {"e": 1, "L_grid": [0.5, 0.25, 0.1, 0.05, 0.02], "sigma": 0.9},
    "rate-large": {"e": 1, "L_grid": [5.0, 10.0, 20.0, 40.0, 80.0, 160.0]},
    "ctilde-effect": {"e": 1, "L_grid": [0.05, 20.0], "p_grid": [0.0, 1.0]},
    "compare": {"L": 5.0, "e": 1},
}


class ConfigError(ValueError):
    pass


# -- config ---------------------------------------------------------------

def _coeff_set(spec: dict, check: bool = True, strict: bool = True) -> CoefficientSet | dict:
    raw = {k: APFunction.from_spec(spec.get(k, "0")) for k in ("a", "b", "c", "c_tilde")}
    if not check:
        return raw
    return CoefficientSet(raw["a"], raw["b"], raw["c"], raw["c_tilde"], strict)


def _dataclass_from(cls, overrides: dict, name: str):
    known = {f.name for f in fields(cls)}
    unknown = set(overrides) - known
    if unknown:
        raise ConfigError(f"unknown {name} keys: {sorted(unknown)}")
    return cls(**overrides)


def resolve_config(raw: dict, task: str, args) -> dict:
    """Materialize every default so the run is fully described by its echo."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    cfg = dict(TASK_DEFAULTS[task])
    cfg.update({k: v for k, v in raw.items() if k not in ("solver", "sim", "coefficients", "functions")})
    cfg["task"] = task
    coeffs = raw.get("coefficients")
    if coeffs is None and task != "mean":
        raise ConfigError("config needs a 'coefficients' object")
    if coeffs is not None:
        try:
            cfg["coefficients"] = {k: APFunction.from_spec(coeffs.get(k, "0")).to_spec()
                                   for k in ("a", "b", "c", "c_tilde")}
        except (TypeError, ValueError, KeyError, AttributeError) as exc:
            raise ConfigError(f"bad coefficient spec: {exc}") from exc
    if "functions" in raw:
        cfg["functions"] = {k: APFunction.from_spec(v).to_spec() for k, v in raw["functions"].items()}
    solver = dict(raw.get("solver", {}))
    if args.grid_scale is not None:
        solver["grid_scale"] = args.grid_scale
    cfg["solver"] = asdict(_dataclass_from(SolverParams, solver, "solver"))
    sim = dict(raw.get("sim", {}))
    init = sim.pop("init", {})
    sc = _dataclass_from(SimConfig, sim, "sim")
    sc = replace(sc, init=_dataclass_from(Bump, init, "sim.init"))
    cfg["sim"] = asdict(sc)
    cfg["tol"] = float(args.tol if args.tol is not None else raw.get("tol", 1e-4))
    cfg["workers"] = int(args.workers if args.workers is not None else raw.get("workers", os.cpu_count() or 1))
    if "e" in cfg and cfg["e"] not in (1, -1):
        raise ConfigError("e must be +1 or -1")
    L = cfg.get("L")
    if L is not None and not (L in ("zero", "infinity") or (isinstance(L, (int, float)) and L > 0)):
        raise ConfigError("L must be positive or 'zero' / 'infinity'")
    return cfg


def _solver(cfg) -> SolverParams:
    return SolverParams(**cfg["solver"])


def _sim(cfg) -> SimConfig:
    s = dict(cfg["sim"])
    s["init"] = Bump(**s["init"])
    return SimConfig(**s)


# -- outputs --------------------------------------------------------------

def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, quoting=csv.QUOTE_MINIMAL)
        wr.writerow(header)
        for r in rows:
            wr.writerow([repr(v) if isinstance(v, float) else v for v in r])


def _write_summary(out: Path, cfg: dict, result: dict) -> None:
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump({"config": cfg, "result": result}, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _jsonable(v):
    try:
        return float(v)
    except (TypeError, ValueError):
        return str(v)


# -- tasks ----------------------------------------------------------------

def task_validate(cfg, out):
    co = _coeff_set(cfg["coefficients"], check=False)
    diags = diagnose(co["a"], co["b"], co["c"], co["c_tilde"])
    _write_csv(out / "diagnostics.csv", ["name", "passed", "detail"], [(d.name, d.passed, d.detail) for d in diags])
    for d in diags:
        print(f"{'PASS' if d.passed else 'FAIL'}  {d.name}: {d.detail}")
    return {"diagnostics": [{"name": d.name, "passed": d.passed, "detail": d.detail, "values": d.values}
                            for d in diags], "all_passed": all(d.passed for d in diags)}


def task_mean(cfg, out):
    fns = dict(cfg.get("functions", {}))
    if not fns:
        fns = {k: v for k, v in cfg.get("coefficients", {}).items()}
    rows, res = [], {}
    for name, spec in sorted(fns.items()):
        f = APFunction.from_spec(spec)
        lo, hi = bounds(f, 1e-6)
        hm = harmonic_mean(f) if lo > 0 else None
        res[name] = {"mean": f.mean() if f.independent or f.is_constant else None, "inf": lo, "sup": hi,
                     "harmonic_mean": hm}
        rows.append((name, res[name]["mean"], hm, lo, hi))
        print(f"{name}: mean {res[name]['mean']!r}  harmonic {hm!r}  range [{lo!r}, {hi!r}]")
    _write_csv(out / "means.csv", ["name", "mean", "harmonic_mean", "inf", "sup"], rows)
    return res


def _lambda_point(job):
    from .eigen import EigenvalueQuery, evaluate

    spec, L, p, solver = job
    # eigenvalues only need ellipticity; positivity and spreading are speed conditions
    ev = evaluate(EigenvalueQuery(_coeff_set(spec, strict=False), L, p), SolverParams(**solver))
    return p, ev.value, ev.error_bar, ev.source


def _pmap(fn, jobs, workers):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, jobs))
    return [fn(j) for j in jobs]


def task_lambda(cfg, out):
    jobs = [(cfg["coefficients"], cfg["L"], float(p), cfg["solver"]) for p in cfg["p_grid"]]
    rows = _pmap(_lambda_point, jobs, cfg["workers"])
    _write_csv(out / "lambda.csv", ["p", "lambda", "error_bar", "source"], rows)
    for p, lam, eb, src in rows:
        print(f"p={p:g}  lambda={lam:.10g}  +/- {eb:.2e}  ({src})")
    return {"L": cfg["L"], "points": [{"p": p, "lambda": lam, "error_bar": eb} for p, lam, eb, _ in rows]}


def _speed(co, L, e, params, tol):
    if L == "zero":
        return speed_zero(co, e, params, tol)
    if L == "infinity":
        return speed_infinity(co, e, params, tol)
    return speed_finite(co, float(L), e, params, tol)


def _speed_dict(r):
    return {"omega": r.omega, "p_star": r.p_star, "error_bar": r.error_bar, "bracket": list(r.bracket),
            "lambda_at_pstar": r.lambda_at_pstar, "tangency": r.tangency, "notes": r.notes}


def task_speed(cfg, out):
    co = _coeff_set(cfg["coefficients"])
    r = _speed(co, cfg["L"], cfg["e"], _solver(cfg), cfg["tol"])
    r.to_csv(out / "speed_quotient.csv")
    print(f"omega = {r.omega:.10g} +/- {r.error_bar:.2e} at p* = {r.p_star:.6g}")
    return _speed_dict(r)


def task_simulate(cfg, out):
    co = _coeff_set(cfg["coefficients"])
    series = simulate(co, float(cfg["L"]), _sim(cfg))
    series.to_csv(out / "front.csv")
    res = {"usable": series.usable, "notes": series.notes,
           "max_u": float(series.max_values.max()), "min_u": float(series.min_values.min())}
    if series.usable:
        for side, key in ((1, "right"), (-1, "left")):
            v, se = empirical_speed(series, side)
            res[f"speed_{key}"], res[f"stderr_{key}"] = v, se
            print(f"{key} front speed {v:.6g} +/- {se:.2e}")
    return res


def task_rate(cfg, out, regime):
    from .rate_lab import sweep_large_L, sweep_small_L

    co = _coeff_set(cfg["coefficients"])
    params = _solver(cfg)
    if regime == "small":
        s = sweep_small_L(co, cfg["e"], cfg["L_grid"], cfg["sigma"], params, cfg["tol"], cfg["workers"])
    else:
        s = sweep_large_L(co, cfg["e"], cfg["L_grid"], params, cfg["tol"], cfg["workers"])
    s.to_csv(out / "rate.csv")
    summ = s.summary()
    print(json.dumps(summ, indent=2, default=_jsonable))
    return summ


def task_ctilde_effect(cfg, out):
    from .eigen import lambda_zero

    co = _coeff_set(cfg["coefficients"])
    if co.c_tilde.is_constant:
        raise ConfigError("ctilde-effect needs a non-constant c_tilde")
    base = co.with_c_tilde(APFunction.const(0.0))
    params = _solver(cfg)
    rows, res = [], {"lambda": [], "speed": []}
    for p in cfg["p_grid"]:
        w, wo = lambda_zero(co, float(p), params), lambda_zero(base, float(p), params)
        eb = max(w.error_bar, wo.error_bar)
        d = w.value - wo.value
        rows.append(("lambda_zero", float(p), "zero", w.value, wo.value, d, eb, d > 3 * eb))
        res["lambda"].append({"p": p, "with": w.value, "without": wo.value, "error_bar": eb, "strict": d > 3 * eb})
    for L in cfg["L_grid"]:
        w = speed_finite(co, float(L), cfg["e"], params, cfg["tol"])
        wo = speed_finite(base, float(L), cfg["e"], params, cfg["tol"])
        eb = max(w.error_bar, wo.error_bar)
        d = w.omega - wo.omega
        rows.append(("omega", "", float(L), w.omega, wo.omega, d, eb, d > 3 * eb))
        res["speed"].append({"L": L, "with": w.omega, "without": wo.omega, "error_bar": eb, "strict": d > 3 * eb})
    _write_csv(out / "ctilde_effect.csv", ["quantity", "p", "L", "with_ctilde", "without", "difference",
                                           "error_bar", "strict"], rows)
    for r in rows:
        print(f"{r[0]:12s} p={r[1]!s:5s} L={r[2]!s:6s} with={r[3]:.8g} without={r[4]:.8g} strict={r[7]}")
    return res


def task_compare(cfg, out):
    co = _coeff_set(cfg["coefficients"])
    L = float(cfg["L"])
    r = speed_finite(co, L, cfg["e"], _solver(cfg), cfg["tol"])
    series = simulate(co, L, _sim(cfg))
    series.to_csv(out / "front.csv")
    v, se = empirical_speed(series, cfg["e"])
    gap = abs(v - r.omega) / r.omega
    _write_csv(out / "compare.csv", ["omega_eigen", "omega_eigen_error_bar", "omega_sim", "omega_sim_stderr",
                                     "relative_gap"], [(r.omega, r.error_bar, v, se, gap)])
    print(f"omega_eigen {r.omega:.6g}  omega_sim {v:.6g}  relative gap {gap:.3%}")
    return {"omega_eigen": r.omega, "omega_eigen_error_bar": r.error_bar, "omega_sim": v, "omega_sim_stderr": se,
            "relative_gap": gap}


DISPATCH = {
    "validate": task_validate, "mean": task_mean, "lambda": task_lambda, "speed": task_speed,
    "simulate": task_simulate, "rate-small": lambda c, o: task_rate(c, o, "small"),
    "rate-large": lambda c, o: task_rate(c, o, "large"), "ctilde-effect": task_ctilde_effect,
    "compare": task_compare,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="apspread", description="Spreading speeds in two-scale almost periodic media.")
    sub = ap.add_subparsers(dest="task", required=True)
    for t in TASKS:
        sp = sub.add_parser(t)
        sp.add_argument("--config", required=True, type=Path)
        sp.add_argument("--out", type=Path, default=Path("out"))
        sp.add_argument("--tol", type=float, default=None)
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--grid-scale", type=float, default=None)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        cfg = resolve_config(raw, args.task, args)
    except (OSError, json.JSONDecodeError, ConfigError, TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        result = DISPATCH[args.task](cfg, out)
    except InvariantError as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SOLVER_ERRORS as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    _write_summary(out, cfg, result)
    return 0


if __name__ == "__main__":
    sys.exit(main())
