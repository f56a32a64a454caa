"""Spreading speeds omega(e) = inf over p e > 0 of lambda(p) / (p e)."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .ap_core import bounds
from .eigen import lambda_finite, lambda_infinity, lambda_zero
from .hj_cell import CoefficientSet, InvariantError, SolverParams

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class SandwichError(RuntimeError):
    """A computed lambda falls outside the constant test-function bounds."""


@dataclass
class SpeedResult:
    omega: float
    p_star: float
    e: int
    bracket: tuple[float, float]
    lambda_at_pstar: float
    error_bar: float
    probes: list = field(default_factory=list)     # (p, lambda, error_bar)
    tangency: float | None = None
    notes: list = field(default_factory=list)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh)
            wr.writerow(["p", "lambda", "error_bar", "quotient"])
            for p, lam, eb in sorted(self.probes):
                wr.writerow([repr(p), repr(lam), repr(eb), repr(lam / (p * self.e))])


def sandwich_bounds(coeffs: CoefficientSet, p: float, e: int = 1, tol: float = 1e-6) -> tuple[float, float]:
    """(inf, sup) over x of a p^2 - b p + c + c_tilde.

    ``e`` is accepted for symmetry with the speed API; p already carries the sign.
    ``tol`` is relative to the amplitude sum once that exceeds one.
    """
    f = coeffs.a * (p * p) - coeffs.b * p + coeffs.c + coeffs.c_tilde
    return bounds(f, tol * max(1.0, f.amplitude_sum()))


def _bracket(coeffs: CoefficientSet, e: int) -> tuple[float, float, float, list]:
    """Momentum bracket outside of which lambda(p) / (p e) exceeds an upper
    bound of the speed; uses only the sandwich (valid for every L)."""
    lower = lambda t: sandwich_bounds(coeffs, e * t, e, 1e-4)[0]
    upper = lambda t: sandwich_bounds(coeffs, e * t, e, 1e-4)[1]
    ts = np.geomspace(1e-2, 1e2, 81)
    # inflated so the sublevel set has interior even when the sandwich is tight
    U = 1.1 * min(upper(t) / t for t in ts)
    g = lambda t: lower(t) - U * t
    gs = np.array([g(t) for t in ts])
    notes = []
    neg = np.flatnonzero(gs < 0)
    if neg.size == 0:
        raise InvariantError("sandwich bracket empty: lower bound never below the speed bound")
    i, j = neg[0], neg[-1]
    if j + 1 < ts.size:
        t_hi = brentq(g, ts[j], ts[j + 1])
    else:
        t_hi = ts[j]
        while g(2 * t_hi) < 0:
            t_hi *= 2.0
        t_hi *= 2.0
    if i > 0:
        t_lo = brentq(g, ts[i - 1], ts[i])
    elif g(1e-9) > 0:
        t_lo = brentq(g, 1e-9, ts[0])
    else:
        t_lo = 1e-3 * t_hi
        notes.append("sandwich gives no positive lower momentum; using 1e-3 of the upper end")
    return t_lo, t_hi, U, notes


def speed(lambda_fn: Callable[[float], tuple[float, float]], e: int, coeffs: CoefficientSet, tol: float = 1e-4,
          check_sandwich: bool = True) -> SpeedResult:
    """Golden-section minimization of lambda(p) / (p e) over the sandwich bracket.

    ``lambda_fn`` maps p to (lambda, error_bar).
    """
    if e not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    coeffs.require_spreading()
    t_lo, t_hi, U, notes = _bracket(coeffs, e)
    cache: dict[float, tuple[float, float]] = {}

    def lam(t: float) -> tuple[float, float]:
        if t not in cache:
            val, eb = lambda_fn(e * t)
            if check_sandwich:
                lo, hi = sandwich_bounds(coeffs, e * t, e, 1e-4)
                slack = 3.0 * eb + 1e-4
                if not (lo - slack <= val <= hi + slack):
                    raise SandwichError(f"lambda({e * t:.6g}) = {val:.6g} outside sandwich [{lo:.6g}, {hi:.6g}]")
            cache[t] = (float(val), float(eb))
        return cache[t]

    phi = lambda t: lam(t)[0] / t
    # expand in log-momentum: phi is quasiconvex, so golden section on s = log t
    a, b = math.log(t_lo), math.log(t_hi)
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = phi(math.exp(c)), phi(math.exp(d))
    eb_max = 0.0
    while True:
        eb_max = max(v[1] for v in cache.values())
        width_tol = max(tol, 3.0 * eb_max)
        if b - a < width_tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = phi(math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = phi(math.exp(d))
    t_star = math.exp(c if fc <= fd else d)
    search_err = abs(fc - fd)      # quotient resolution of the final bracket
    lam_star, eb_star = lam(t_star)
    omega = lam_star / t_star
    probes = sorted((e * t, v[0], v[1]) for t, v in cache.items())
    best = min(v[0] / t for t, v in cache.items())
    if best < omega:
        notes.append("a probe beat the golden-section point; using it")
        t_star = min(cache, key=lambda t: cache[t][0] / t)
        lam_star, eb_star = cache[t_star]
        omega = best
    # unimodality check on the probes, in units of the noise
    ordered = sorted(cache.items())
    q = np.array([v[0] / t for t, v in ordered])
    k = int(np.argmin(q))
    noise = np.array([3.0 * v[1] / t for t, v in ordered]) + 1e-12
    if np.any(np.diff(q[:k + 1]) > noise[1:k + 1]) or np.any(np.diff(q[k:]) < -noise[k + 1:]):
        notes.append("speed quotient samples not unimodal beyond tolerance")
    if t_star <= t_lo * 1.0001 or t_star >= t_hi * 0.9999:
        notes.append("minimizer at the bracket edge")
    # tangency diagnostic: lambda'(p*) p* - lambda(p*) should vanish
    dt = 1e-2 * t_star
    lp, lm = lam(t_star + dt)[0], lam(t_star - dt)[0]
    tangency = (lp - lm) / (2 * dt) * t_star - lam_star
    return SpeedResult(omega=float(omega), p_star=float(e * t_star), e=e, bracket=(e * t_lo, e * t_hi),
                       lambda_at_pstar=float(lam_star), error_bar=float(eb_star / t_star + search_err), probes=probes,
                       tangency=float(tangency), notes=notes)


def speed_finite(coeffs: CoefficientSet, L: float, e: int = 1, params: SolverParams = SolverParams(),
                 tol: float = 1e-4) -> SpeedResult:
    def fn(p):
        est = lambda_finite(coeffs, L, p, params)
        return est.lam, est.error_bar
    return speed(fn, e, coeffs, tol)


def speed_zero(coeffs: CoefficientSet, e: int = 1, params: SolverParams = SolverParams(),
               tol: float = 1e-4) -> SpeedResult:
    def fn(p):
        ev = lambda_zero(coeffs, p, params)
        return ev.value, ev.error_bar
    return speed(fn, e, coeffs, tol)


def speed_infinity(coeffs: CoefficientSet, e: int = 1, params: SolverParams = SolverParams(),
                   tol: float = 1e-4) -> SpeedResult:
    from .eigen import hbar_curve

    curve = None
    if not all(f.is_constant for f in (coeffs.a, coeffs.b, coeffs.c)) or coeffs.c_tilde.is_constant:
        lo, hi = _bracket(coeffs, e)[:2]
        curve = hbar_curve(coeffs, p_max=1.2 * hi, params=params)

    def fn(p):
        ev = lambda_infinity(coeffs, p, params, curve=curve)
        return ev.value, ev.error_bar
    return speed(fn, e, coeffs, tol)
