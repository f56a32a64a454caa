"""Convergence-rate sweeps of speeds (or eigenvalues) toward their L -> 0 and L -> inf limits."""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .ap_core import APFunction, ScanParams, RhoTable, fit_rho_decay, theta
from .hj_cell import CoefficientSet, SolverParams
from .speed import speed_finite, speed_infinity, speed_zero


@dataclass
class RateSeries:
    regime: str                      # "small_L" | "large_L"
    L_values: np.ndarray
    errors: np.ndarray
    error_bars: np.ndarray
    bound_values: np.ndarray | None
    bound_kind: str
    limit: float
    limit_error_bar: float
    values: np.ndarray
    fitted_exponent: float | None = None
    exponent_stderr: float | None = None
    dominance_C: float | None = None
    ratio_spread: float | None = None
    dropped: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def __post_init__(self):
        if np.any(self.errors < 0):
            raise ValueError("errors must be nonnegative")
        d = np.diff(self.L_values)
        if len(d) and not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError("L values must be strictly monotone")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh)
            wr.writerow(["L", "value", "error", "error_bar", "bound", "ratio"])
            for i, L in enumerate(self.L_values):
                bound = None if self.bound_values is None else float(self.bound_values[i])
                ratio = None if not bound else float(self.errors[i]) / bound
                wr.writerow([repr(float(L)), repr(float(self.values[i])), repr(float(self.errors[i])),
                             repr(float(self.error_bars[i])), "" if bound is None else repr(bound),
                             "" if ratio is None else repr(ratio)])

    def summary(self) -> dict:
        return {
            "regime": self.regime, "bound_kind": self.bound_kind, "limit": self.limit,
            "limit_error_bar": self.limit_error_bar, "fitted_exponent": self.fitted_exponent,
            "exponent_stderr": self.exponent_stderr, "dominance_C": self.dominance_C,
            "ratio_spread": self.ratio_spread, "dropped": self.dropped, "notes": self.notes,
        }


def fit_rate(L_values, errors, min_points: int = 5) -> tuple[float, float]:
    """OLS slope of log(error) on log(L) with its standard error; nonpositive errors are dropped."""
    L = np.asarray(L_values, dtype=float)
    err = np.asarray(errors, dtype=float)
    keep = err > 0
    if keep.sum() < min_points:
        raise ValueError(f"need at least {min_points} positive errors, have {int(keep.sum())}")
    x, y = np.log(L[keep]), np.log(err[keep])
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = max(len(x) - 2, 1)
    stderr = math.sqrt(float(resid @ resid) / dof / float(np.sum((x - x.mean()) ** 2)))
    return float(coef[0]), stderr


def dominance(errors, bound_values) -> tuple[float, float]:
    """(C, max/min ratio) for errors <= C * bound with C the max ratio."""
    err = np.asarray(errors, dtype=float)
    bnd = np.asarray(bound_values, dtype=float)
    ratio = err / bnd
    pos = ratio[ratio > 0]
    spread = float(pos.max() / pos.min()) if pos.size else math.inf
    return float(ratio.max()), spread


def _finite_point(args):
    coeffs, L, e, params, tol = args
    try:
        r = speed_finite(coeffs, L, e, params, tol)
        return L, r.omega, r.error_bar, None
    except Exception as exc:        # point dropped, recorded
        return L, math.nan, math.nan, f"{type(exc).__name__}: {exc}"


def _sweep(coeffs, e, L_grid, params, tol, workers):
    jobs = [(coeffs, float(L), e, params, tol) for L in L_grid]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_finite_point, jobs))
    return [_finite_point(j) for j in jobs]


def _assemble(regime, rows, limit, bound_fn, bound_kind, min_points=5):
    dropped = [(L, msg) for L, _, _, msg in rows if msg is not None]
    ok = [(L, v, eb) for L, v, eb, msg in rows if msg is None]
    L = np.array([r[0] for r in ok])
    vals = np.array([r[1] for r in ok])
    ebs = np.array([r[2] for r in ok])
    errs = np.abs(vals - limit.omega)
    bounds = None if bound_fn is None else np.array([bound_fn(l) for l in L])
    s = RateSeries(regime, L, errs, ebs, bounds, bound_kind, limit.omega, limit.error_bar, vals, dropped=dropped)
    try:
        s.fitted_exponent, s.exponent_stderr = fit_rate(L, errs, min_points)
    except ValueError as exc:
        s.notes.append(f"exponent fit skipped: {exc}")
    if bounds is not None and len(L):
        s.dominance_C, s.ratio_spread = dominance(errs, bounds)
    noise = np.maximum(ebs, limit.error_bar) + 64 * np.finfo(float).eps * abs(limit.omega)
    if len(L) and np.all(errs <= 2 * noise):
        s.notes.append("all errors below twice the solver error bar (flat series)")
    return s


def stacked_theta_bound(coeffs: CoefficientSet, sigma: float, L_min: float, scan: ScanParams = ScanParams()):
    """L -> Theta_sigma(L) of the stacked (a, b, c), all sharing one shift-defect table."""
    fns = [f for f in (coeffs.a, coeffs.b, coeffs.c) if not f.is_constant]
    if not fns:
        return None
    table = RhoTable(fns, 1.0 / L_min, scan)
    return lambda L: theta(fns, sigma, L, scan, table=table).theta_value


def sweep_small_L(coeffs: CoefficientSet, e: int = 1, L_grid=(0.5, 0.25, 0.1, 0.05, 0.02), sigma: float = 0.9,
                  params: SolverParams = SolverParams(), tol: float = 1e-4, workers: int = 1,
                  scan: ScanParams = ScanParams()) -> RateSeries:
    L_grid = [float(L) for L in L_grid]
    if any(not 0 < L <= 1 for L in L_grid):
        raise ValueError("small-L grid must lie in (0, 1]")
    limit = speed_zero(coeffs, e, params, tol / 10)
    rows = _sweep(coeffs, e, L_grid, params, tol, workers)
    return _assemble("small_L", rows, limit, stacked_theta_bound(coeffs, sigma, min(L_grid), scan), f"theta_{sigma:g}")


def large_L_reference(c_tilde: APFunction, scan: ScanParams = ScanParams(), R_max: float = 200.0):
    """(bound function, description) for the large-L decay reference."""
    if c_tilde.is_constant:
        return None, "none (c_tilde constant)"
    if c_tilde.m == 1:
        return (lambda L: L ** -0.5), "L^-1/2 (periodic c_tilde)"
    table = RhoTable(c_tilde, R_max, scan)
    R = np.geomspace(1.0, R_max, 30)
    tau = fit_rho_decay(R, table.rho_values(R))
    if tau is None or tau <= 0:
        return None, "none (rho decay exponent not identifiable)"
    k = tau / (2 * tau + 1)
    return (lambda L: L ** -k), f"L^-{k:.4g} (tau = {tau:.4g})"


def sweep_large_L(coeffs: CoefficientSet, e: int = 1, L_grid=(5, 10, 20, 40, 80, 160),
                  params: SolverParams = SolverParams(), tol: float = 1e-4, workers: int = 1,
                  scan: ScanParams = ScanParams()) -> RateSeries:
    L_grid = [float(L) for L in L_grid]
    if any(not 5 <= L <= 200 for L in L_grid):
        raise ValueError("large-L grid must lie in [5, 200]")
    limit = speed_infinity(coeffs, e, params, tol / 10)
    rows = _sweep(coeffs, e, L_grid, params, tol, workers)
    bound_fn, kind = large_L_reference(coeffs.c_tilde, scan)
    return _assemble("large_L", rows, limit, bound_fn, kind)


def write_summary(series: RateSeries, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(series.summary(), fh, indent=2, default=float)
