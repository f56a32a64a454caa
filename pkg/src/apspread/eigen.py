"""Generalized principal eigenvalues lambda(L, p) and their L -> 0, L -> inf limits."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .ap_core import TWO_PI, APFunction, _torus_grid, bounds, common_lift, mean_composite, sup_composite
from .hj_cell import (CellProblem, CoefficientSet, ConvergenceError, HamiltonianEstimate, SolverParams,
                      effective_hamiltonian, iota)


@dataclass
class Eigenvalue:
    value: float
    error_bar: float
    source: str
    plateau: bool = False
    info: dict = field(default_factory=dict)


@dataclass(frozen=True)
class EigenvalueQuery:
    coeffs: CoefficientSet
    L: float | str
    p: float
    e: int = 1

    def __post_init__(self):
        if isinstance(self.L, str):
            if self.L not in ("zero", "infinity"):
                raise ValueError("L must be positive or one of 'zero', 'infinity'")
        elif not self.L > 0:
            raise ValueError("L must be positive")
        if not math.isfinite(self.p):
            raise ValueError("p must be finite")
        if self.e not in (1, -1):
            raise ValueError("direction must be +1 or -1")


def finite_cell(coeffs: CoefficientSet, L: float) -> CellProblem:
    """Cell coefficients x -> (a(x/L), b(x/L), c(x/L) + c_tilde(x))."""
    return CellProblem(coeffs.a.rescale(L), coeffs.b.rescale(L), coeffs.c.rescale(L) + coeffs.c_tilde)


def lambda_finite(coeffs: CoefficientSet, L: float, p: float, params: SolverParams = SolverParams()) -> HamiltonianEstimate:
    if not L > 0:
        raise ValueError("L must be positive")
    return effective_hamiltonian(finite_cell(coeffs, L), p, params)


def homogenized_constants(coeffs: CoefficientSet, tol: float = 1e-10) -> tuple[float, float, float]:
    a = coeffs.a
    return (iota(a, a, tol, cross_check=False), iota(coeffs.b, a, tol, cross_check=False),
            iota(coeffs.c, a, tol, cross_check=False))


def lambda_zero(coeffs: CoefficientSet, p: float, params: SolverParams = SolverParams(),
                tol: float = 1e-6) -> Eigenvalue:
    ia, ib, ic = homogenized_constants(coeffs)
    cell = CellProblem(APFunction.const(ia), APFunction.const(ib), coeffs.c_tilde + ic)
    est = effective_hamiltonian(cell, p, params)
    info = {"iota_a": ia, "iota_b": ib, "iota_c": ic}
    if coeffs.c_tilde.is_constant:
        closed = ia * p * p - ib * p + ic + coeffs.c_tilde.constant
        if abs(closed - est.lam) > tol:
            raise ConvergenceError(f"homogenized closed form {closed!r} disagrees with solver {est.lam!r}")
        return Eigenvalue(float(closed), 0.0, "closed-form", info=info)
    return Eigenvalue(est.lam, est.error_bar, "cell-solve", info=info)


# -- inner effective Hamiltonian -------------------------------------------

def hbar(coeffs: CoefficientSet, x: float, q: float, params: SolverParams = SolverParams()) -> Eigenvalue:
    """Fast-variable effective Hamiltonian with the slow variable frozen at x."""
    ax, bx, cx = (float(f(x)) for f in (coeffs.a, coeffs.b, coeffs.c))
    if coeffs.c_tilde.is_constant:
        return Eigenvalue(ax * q * q + bx * q + cx + coeffs.c_tilde.constant, 0.0, "closed-form")
    est = effective_hamiltonian(CellProblem(APFunction.const(ax), APFunction.const(bx), coeffs.c_tilde + cx), -q, params)
    return Eigenvalue(est.lam, est.error_bar, "cell-solve")


def _x_samples(coeffs: CoefficientSet, n_x: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(a, b, c) on torus-equidistributed samples of their joint module."""
    basis, (a, b, c) = common_lift([coeffs.a, coeffs.b, coeffs.c])
    m = len(basis)
    if m == 0:
        return np.array([a.constant]), np.array([b.constant]), np.array([c.constant])
    n = max(2, int(round(n_x ** (1.0 / m))))
    th = _torus_grid(m, n)
    return a.lift(th), b.lift(th), c.lift(th)


@dataclass
class HBarCurve:
    """H-bar(x, q) on sampled slow positions, with per-x minima."""

    a_x: np.ndarray
    b_x: np.ndarray
    c_x: np.ndarray
    q_samples: np.ndarray          # (n_x, n_q)
    values: np.ndarray             # (n_x, n_q)
    m_x: np.ndarray
    q_star: np.ndarray
    M: float
    lam_max: float
    error_bar: float
    closed_form: bool
    _splines: list = field(default_factory=list, repr=False)
    _shift: float = 0.0

    def evaluate(self, q: np.ndarray) -> np.ndarray:
        """H-bar at per-sample momenta ``q`` (shape n_x)."""
        q = np.asarray(q, dtype=float)
        if self.closed_form:
            return self.a_x * q * q + self.b_x * q + self.c_x + self._shift
        return np.array([s(qi) for s, qi in zip(self._splines, q)])

    def roots(self, lam: float, iters: int = 80) -> tuple[np.ndarray, np.ndarray]:
        """Branch roots q_-(x) <= q* <= q_+(x) of H-bar(x, q) = lam by bisection."""
        if lam < self.m_x.max() - 1e-12:
            raise ValueError(f"level {lam} below M = {self.M}")
        width = np.ptp(self.q_samples, axis=1) + 1.0
        out = []
        for side in (-1.0, 1.0):
            lo = self.q_star.copy()
            hi = self.q_star + side * width
            # grow until bracketed (only needed beyond the tabulated range)
            for _ in range(60):
                bad = self.evaluate(hi) < lam
                if not bad.any():
                    break
                hi = np.where(bad, self.q_star + 2.0 * (hi - self.q_star), hi)
            for _ in range(iters):
                mid = 0.5 * (lo + hi)
                below = self.evaluate(mid) < lam
                lo = np.where(below, mid, lo)
                hi = np.where(below, hi, mid)
            out.append(0.5 * (lo + hi))
        return out[0], out[1]

    def p_right(self, lam: float) -> float:
        return -float(np.mean(self.roots(lam)[0]))

    def p_left(self, lam: float) -> float:
        return -float(np.mean(self.roots(lam)[1]))

    def convexity_defect(self) -> float:
        """Most negative discrete second difference (0 if convex)."""
        d2 = np.diff(self.values, 2, axis=1)
        return float(min(0.0, d2.min()))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh)
            wr.writerow(["x_index", "a", "b", "c", "q", "hbar"])
            for i in range(len(self.a_x)):
                for q, v in zip(self.q_samples[i], self.values[i]):
                    wr.writerow([i, repr(float(self.a_x[i])), repr(float(self.b_x[i])), repr(float(self.c_x[i])),
                                 repr(float(q)), repr(float(v))])


def lambda_upper(coeffs: CoefficientSet, p: float) -> float:
    """sup_x (a p^2 - b p + c) + sup c_tilde, an upper bound for every lambda(L, p)."""
    hi = bounds(coeffs.a * (p * p) - coeffs.b * p + coeffs.c, 1e-4)[1]
    return hi + bounds(coeffs.c_tilde, 1e-4)[1]


def hbar_curve(coeffs: CoefficientSet, p_max: float = 3.0, n_q: int = 41, n_x: int | None = None,
               params: SolverParams = SolverParams()) -> HBarCurve:
    """Tabulate H-bar(x, .) on a q-range that covers every level up to the
    a-priori bound for |p| <= p_max."""
    closed = coeffs.c_tilde.is_constant
    n_x = n_x or (1024 if closed else 65)
    a_x, b_x, c_x = _x_samples(coeffs, n_x)
    ct_lo, ct_hi = bounds(coeffs.c_tilde, 1e-4)
    lam_max = 1.1 * max(lambda_upper(coeffs, p_max), lambda_upper(coeffs, -p_max)) + 1.0
    # roots of the lower quadratic a q^2 + b q + c + inf c_tilde = lam_max bound the branches
    disc = np.maximum(b_x ** 2 - 4 * a_x * (c_x + ct_lo - lam_max), 0.0)
    q_lo = (-b_x - np.sqrt(disc)) / (2 * a_x) - 0.1
    q_hi = (-b_x + np.sqrt(disc)) / (2 * a_x) + 0.1
    q_samples = np.linspace(q_lo, q_hi, n_q, axis=1)
    err = 0.0
    if closed:
        ct = coeffs.c_tilde.constant
        values = a_x[:, None] * q_samples ** 2 + b_x[:, None] * q_samples + c_x[:, None] + ct
        q_star = -b_x / (2 * a_x)
        m_x = c_x - b_x ** 2 / (4 * a_x) + ct
        M, _ = sup_composite(lambda a, b, c: c - b * b / (4 * a), [coeffs.a, coeffs.b, coeffs.c])
        M += ct
        curve = HBarCurve(a_x, b_x, c_x, q_samples, values, m_x, q_star, float(M), lam_max, 0.0, True)
        curve._shift = ct
        return curve
    # solve the fast cell problem only once per distinct (a, b); c enters additively
    values = np.empty_like(q_samples)
    splines = []
    q_star = np.empty(len(a_x))
    m_x = np.empty(len(a_x))
    cache: dict = {}
    for i in range(len(a_x)):
        key = (a_x[i], b_x[i])
        cell = CellProblem(APFunction.const(a_x[i]), APFunction.const(b_x[i]), coeffs.c_tilde)
        row = []
        for q in q_samples[i]:
            k = key + (q,)
            if k not in cache:
                est = effective_hamiltonian(cell, -q, params)
                cache[k] = (est.lam, est.error_bar)
            row.append(cache[k][0])
            err = max(err, cache[k][1])
        values[i] = np.array(row) + c_x[i]
        s = CubicSpline(q_samples[i], values[i])
        splines.append(s)
        fine = np.linspace(q_samples[i, 0], q_samples[i, -1], 40 * n_q)
        j = int(np.argmin(s(fine)))
        q_star[i] = fine[j]
        m_x[i] = float(s(fine[j]))
    if np.ptp(a_x) == 0 and np.ptp(b_x) == 0:
        M = float(m_x[0] - c_x[0] + bounds(coeffs.c, 1e-8)[1])
    else:
        M = float(m_x.max())
    curve = HBarCurve(a_x, b_x, c_x, q_samples, values, m_x, q_star, M, lam_max, err, False, splines)
    return curve


def lambda_infinity(coeffs: CoefficientSet, p: float, params: SolverParams = SolverParams(),
                    curve: HBarCurve | None = None) -> Eigenvalue:
    """Outer first-order effective Hamiltonian of H-bar(x, u' - p)."""
    if not coeffs.c_tilde.is_constant and all(f.is_constant for f in (coeffs.a, coeffs.b, coeffs.c)):
        # H-bar is x-independent, so the outer problem is trivial
        est = effective_hamiltonian(CellProblem(coeffs.a, coeffs.b, coeffs.c + coeffs.c_tilde), p, params)
        return Eigenvalue(est.lam, est.error_bar, "cell-solve")
    if curve is None:
        curve = hbar_curve(coeffs, p_max=max(3.0, 1.5 * abs(p)), params=params)
    M = curve.M
    pr, pl = curve.p_right(M), curve.p_left(M)
    info = {"M": M, "plateau": (pl, pr)}
    if pl <= p <= pr:
        return Eigenvalue(M, curve.error_bar, "plateau", plateau=True, info=info)
    branch = curve.p_right if p > pr else curve.p_left
    hi = curve.lam_max
    for _ in range(40):
        if (branch(hi) - p) * (1 if p > pr else -1) >= 0:
            break
        hi = M + 2.0 * (hi - M)
    else:
        raise ValueError(f"p = {p} outside the computed branch range")
    lam = brentq(lambda l: branch(l) - p, M, hi, xtol=1e-13, rtol=1e-13)
    return Eigenvalue(float(lam), curve.error_bar, "branch-inversion", info=info)


# -- closed-form branch curves (c_tilde = 0) ------------------------------

@dataclass
class JCurves:
    lambda_grid: np.ndarray
    j_plus: np.ndarray
    j_minus: np.ndarray
    M: float
    plus_increasing: bool
    minus_decreasing: bool


def _j_value(coeffs: CoefficientSet, lam: float, sign: float, tol: float) -> float:
    drift = mean_composite(lambda a, b: b / (2 * a), [coeffs.a, coeffs.b], tol=tol)
    root = mean_composite(lambda a, b, c: np.sqrt(np.maximum((lam - c) / a + b * b / (4 * a * a), 0.0)),
                          [coeffs.a, coeffs.b, coeffs.c], tol=tol)
    return drift + sign * root


def plateau_level(coeffs: CoefficientSet) -> float:
    """M = sup (c - b^2 / 4a)."""
    return sup_composite(lambda a, b, c: c - b * b / (4 * a), [coeffs.a, coeffs.b, coeffs.c])[0]


def j_curves(coeffs: CoefficientSet, lambda_grid, tol: float = 1e-9) -> JCurves:
    """Momentum-versus-level relations for c_tilde = 0.

    j_+ is the right (increasing) branch, j_- the left one.
    """
    if not (coeffs.c_tilde.is_constant and coeffs.c_tilde.constant == 0.0):
        raise ValueError("closed-form branch curves need c_tilde = 0")
    M = plateau_level(coeffs)
    lam = np.asarray(lambda_grid, dtype=float)
    if lam.min() < M - 1e-10:
        raise ValueError(f"level {lam.min()} below M = {M}")
    jp = np.array([_j_value(coeffs, l, 1.0, tol) for l in lam])
    jm = np.array([_j_value(coeffs, l, -1.0, tol) for l in lam])
    return JCurves(lam, jp, jm, M, bool(np.all(np.diff(jp) > 0)), bool(np.all(np.diff(jm) < 0)))


def invert_j_curves(coeffs: CoefficientSet, p: float, tol: float = 1e-9) -> Eigenvalue:
    """Lambda(p) from the closed-form branch curves (plateau value M in between)."""
    M = plateau_level(coeffs)
    jp, jm = _j_value(coeffs, M, 1.0, tol), _j_value(coeffs, M, -1.0, tol)
    if jm <= p <= jp:
        return Eigenvalue(M, tol, "plateau", plateau=True, info={"M": M, "plateau": (jm, jp)})
    sign = 1.0 if p > jp else -1.0
    f = lambda l: _j_value(coeffs, l, sign, tol) - p
    hi = M + 1.0
    while f(hi) * sign < 0:
        hi = M + 2.0 * (hi - M)
    lam = brentq(f, M, hi, xtol=1e-12, rtol=1e-13)
    return Eigenvalue(float(lam), tol, "j-curves", info={"M": M, "plateau": (jm, jp)})


def positivity_gap(a0: float, b0: float, ctilde: APFunction, params: SolverParams = SolverParams()) -> Eigenvalue:
    """lambda of a0 u'' + a0 u'^2 + b0 u' + ctilde = lambda for mean-zero ctilde."""
    if abs(ctilde.constant) > 1e-12:
        raise ValueError("ctilde must have mean zero")
    if ctilde.is_constant or np.all(ctilde.amplitudes == 0):
        return Eigenvalue(0.0, 0.0, "degenerate")
    est = effective_hamiltonian(CellProblem(APFunction.const(a0), APFunction.const(b0), ctilde), 0.0, params)
    if not est.lam > est.error_bar:
        raise ConvergenceError(f"positivity gap {est.lam:.3g} not above its error bar {est.error_bar:.3g}")
    return Eigenvalue(est.lam, est.error_bar, "cell-solve")


def evaluate(query: EigenvalueQuery, params: SolverParams = SolverParams()) -> Eigenvalue:
    if query.L == "zero":
        return lambda_zero(query.coeffs, query.p, params)
    if query.L == "infinity":
        return lambda_infinity(query.coeffs, query.p, params)
    est = lambda_finite(query.coeffs, float(query.L), query.p, params)
    return Eigenvalue(est.lam, est.error_bar, "cell-solve")


def write_lambda_csv(rows, path) -> None:
    """rows: iterable of (p, lambda, error_bar)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh)
        wr.writerow(["p", "lambda", "error_bar"])
        for p, lam, eb in rows:
            wr.writerow([repr(float(p)), repr(float(lam)), repr(float(eb))])
