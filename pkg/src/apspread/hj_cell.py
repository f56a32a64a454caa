"""Discounted viscous Hamilton-Jacobi cell problems on a truncated line.

The cell Hamiltonian is

    H(x, u', u'') = a(x) u'' + a(x) (u' - p)^2 + b(x) (u' - p) + C(x)

and the effective Hamiltonian is read off the vanishing-discount limit of
``eps * u_eps`` where ``H = eps * u_eps``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .ap_core import TWO_PI, APFunction, bounds, common_lift, harmonic_mean, mean_composite


class ConvergenceError(RuntimeError):
    """Newton divergence, or discount estimates that are not Cauchy."""


class InvariantError(ValueError):
    """A standing hypothesis on the coefficients is violated."""


# -- coefficients ---------------------------------------------------------

@dataclass(frozen=True)
class Diagnostic:
    name: str
    passed: bool
    detail: str
    values: dict = field(default_factory=dict)


def diagnose(a: APFunction, b: APFunction, c: APFunction, c_tilde: APFunction | None = None,
             tol: float = 1e-5) -> list[Diagnostic]:
    """Check ellipticity, positivity of c, admissibility of c_tilde and the
    spreading condition ``sup b^2 < 4 alpha_m (inf c + max(inf c_tilde, 0))``."""
    c_tilde = c_tilde if c_tilde is not None else APFunction.const(0.0)
    a_lo, a_hi = bounds(a, tol)
    b_lo, b_hi = bounds(b, tol)
    c_lo, _ = bounds(c, tol)
    ct_lo, _ = bounds(c_tilde, tol)
    ct_mean = c_tilde.constant
    sup_b2 = max(b_lo ** 2, b_hi ** 2)
    credit = max(ct_lo, 0.0)
    rhs = 4.0 * a_lo * (c_lo + credit)
    out = [
        Diagnostic("ellipticity", a_lo > 0, f"inf a = {a_lo:.6g}", {"alpha_m": a_lo, "alpha_M": a_hi}),
        Diagnostic("positivity", c_lo > 0, f"inf c = {c_lo:.6g}", {"inf_c": c_lo}),
        Diagnostic("c_tilde", ct_lo >= -tol or abs(ct_mean) <= tol,
                   f"inf c_tilde = {ct_lo:.6g}, mean c_tilde = {ct_mean:.6g} (need inf >= 0 or mean 0)",
                   {"inf_c_tilde": ct_lo, "mean_c_tilde": ct_mean}),
        Diagnostic("spreading", sup_b2 < rhs,
                   f"sup b^2 = {sup_b2:.6g} vs 4 alpha_m (inf c + max(inf c_tilde, 0)) = {rhs:.6g}",
                   {"sup_b2": sup_b2, "rhs": rhs}),
    ]
    return out


@dataclass(frozen=True)
class CoefficientSet:
    """(a, b, c, c_tilde) with certified ellipticity bounds on ``a``.

    ``strict=False`` keeps ellipticity and c_tilde admissibility mandatory but
    only records positivity and the spreading condition: eigenvalues are
    defined without them, speeds are not (see ``spreading_ok``).
    """

    a: APFunction
    b: APFunction
    c: APFunction
    c_tilde: APFunction = field(default_factory=lambda: APFunction.const(0.0))
    strict: bool = True
    alpha_m: float = field(init=False)
    alpha_M: float = field(init=False)
    diagnostics: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        diags = diagnose(self.a, self.b, self.c, self.c_tilde)
        failed = [d for d in diags if not d.passed and (self.strict or d.name in ("ellipticity", "c_tilde"))]
        if failed:
            raise InvariantError("; ".join(f"{d.name}: {d.detail}" for d in failed))
        object.__setattr__(self, "alpha_m", diags[0].values["alpha_m"])
        object.__setattr__(self, "alpha_M", diags[0].values["alpha_M"])
        object.__setattr__(self, "diagnostics", tuple(diags))

    @property
    def spreading_ok(self) -> bool:
        return all(d.passed for d in self.diagnostics)

    def require_spreading(self) -> None:
        failed = [d for d in self.diagnostics if not d.passed]
        if failed:
            raise InvariantError("; ".join(f"{d.name}: {d.detail}" for d in failed))

    @classmethod
    def constant(cls, a: float, b: float, c: float, c_tilde: APFunction | float = 0.0,
                 strict: bool = True) -> "CoefficientSet":
        ct = c_tilde if isinstance(c_tilde, APFunction) else APFunction.const(c_tilde)
        return cls(APFunction.const(a), APFunction.const(b), APFunction.const(c), ct, strict)

    def with_c_tilde(self, c_tilde: APFunction) -> "CoefficientSet":
        return CoefficientSet(self.a, self.b, self.c, c_tilde, self.strict)

    def shifted_c_tilde(self, y: float) -> "CoefficientSet":
        return CoefficientSet(self.a, self.b, self.c, self.c_tilde.shift(y), self.strict)

    def to_spec(self) -> dict:
        return {k: getattr(self, k).to_spec() for k in ("a", "b", "c", "c_tilde")}

    @classmethod
    def from_spec(cls, spec: dict) -> "CoefficientSet":
        return cls(*(APFunction.from_spec(spec.get(k, "0")) for k in ("a", "b", "c", "c_tilde")))


# -- discretisation -------------------------------------------------------

@dataclass(frozen=True)
class SolverParams:
    ppw: int = 128                 # grid points per shortest coefficient wavelength
    n_scales: float = 40.0         # domain length in slowest periods (incommensurate modules)
    periodic_cells: int = 2        # domain length in periods (commensurate modules)
    bc: str = "periodic"           # "periodic" | "neumann"
    periodize: str = "snap"        # "snap" | "wrap"
    peclet_max: float = 0.25       # a-priori cell Peclet cap used to bound h
    grid_scale: float = 1.0        # multiplies h
    min_points: int = 64
    max_points: int = 400_000
    eps0: float = 1.0
    eps_ratio: float = 0.5
    n_eps: int = 12
    newton_tol: float = 1e-10
    max_newton: int = 40
    h_richardson: bool = False     # combine with a 2h solve to cancel the O(h^2) term

    def eps_schedule(self) -> list[float]:
        return [self.eps0 * self.eps_ratio ** k for k in range(self.n_eps)]


@dataclass(frozen=True)
class Grid1D:
    x_lo: float
    x_hi: float
    n: int
    bc: str = "periodic"

    def __post_init__(self):
        if self.n < 3 or self.x_hi <= self.x_lo:
            raise ValueError("degenerate grid")
        if self.bc not in ("periodic", "neumann"):
            raise ValueError(f"unknown boundary condition {self.bc!r}")

    @property
    def h(self) -> float:
        span = self.x_hi - self.x_lo
        return span / self.n if self.bc == "periodic" else span / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return self.x_lo + self.h * np.arange(self.n)


@dataclass(frozen=True)
class CellProblem:
    """Assembled scalar coefficients of one cell Hamiltonian."""

    a: APFunction
    b: APFunction
    C: APFunction
    quadratic: bool = True

    @classmethod
    def constant(cls, a: float, b: float, C: float, quadratic: bool = True) -> "CellProblem":
        return cls(APFunction.const(a), APFunction.const(b), APFunction.const(C), quadratic)

    def sandwich(self, p: float, tol: float = 1e-6) -> tuple[float, float]:
        """inf / sup over x of H(x, -p, 0), the v = 1 test-function bounds."""
        q = -p
        f = (self.a * (q * q if self.quadratic else 0.0)) + self.b * q + self.C
        return bounds(f, tol)


@dataclass
class Discretization:
    grid: Grid1D
    a: np.ndarray
    b: np.ndarray
    C: np.ndarray
    period: float | None
    snapped: bool
    notes: dict = field(default_factory=dict)


def near_common_period(basis: np.ndarray, n_scales: float, periodic_cells: int, q_factor: int = 4) -> float:
    """A length that is (nearly) a common period of all basis frequencies."""
    basis = np.asarray(basis, dtype=float)
    w_min = basis.min()
    if basis.size == 1:
        return periodic_cells * TWO_PI / w_min
    ratios = basis / w_min
    q_min = max(1, int(math.ceil(n_scales)))
    qs = np.arange(q_min, q_factor * q_min + 1)
    mism = np.abs(np.outer(qs, ratios) - np.rint(np.outer(qs, ratios))).max(axis=1)
    q = int(qs[np.argmin(mism / qs)])
    return q * TWO_PI / w_min


def _gradient_bound(cell: CellProblem, p: float, a_lo: float) -> float:
    C_lo, C_hi = bounds(cell.C, 1e-4)
    b_lo, b_hi = bounds(cell.b, 1e-4)
    B = max(abs(b_lo), abs(b_hi))
    return abs(p) + math.sqrt(max(C_hi - C_lo, 0.0) / a_lo) + B / a_lo


def discretize(cell: CellProblem, p: float, params: SolverParams = SolverParams()) -> Discretization:
    a_lo, a_hi = bounds(cell.a, 1e-4)
    if a_lo <= 0:
        raise InvariantError(f"non-elliptic diffusion: inf a = {a_lo:.3g}")
    basis, lifted = common_lift([cell.a, cell.b, cell.C])
    G = _gradient_bound(cell, p, a_lo)
    b_lo, b_hi = bounds(cell.b, 1e-4)
    beta = 2.0 * a_hi * G + max(abs(b_lo), abs(b_hi))
    h_cap = params.peclet_max * 2.0 * a_lo / beta if beta > 0 else np.inf
    notes = {"h_cap": h_cap, "gradient_bound": G}
    if basis.size == 0:
        h = min(h_cap, 1.0) * params.grid_scale
        n = params.min_points
        D = n * h if params.bc == "periodic" else (n - 1) * h
        grid = Grid1D(0.0, D, n, params.bc)
        x = grid.x
        return Discretization(grid, cell.a(x) + 0 * x, cell.b(x) + 0 * x, cell.C(x) + 0 * x, None, False, notes)
    D = near_common_period(basis, params.n_scales, params.periodic_cells)
    fns = [cell.a, cell.b, cell.C]
    snapped = params.bc == "periodic" and params.periodize == "snap"
    if snapped:
        fns = [f.snapped(D) for f in fns]
    f_max = max(f.max_frequency() for f in fns)
    h = TWO_PI / f_max / params.ppw if f_max > 0 else np.inf
    h = min(h, h_cap) * params.grid_scale
    n = max(params.min_points, int(math.ceil(D / h)))
    if n > params.max_points:
        raise ValueError(f"grid needs {n} points (> max_points={params.max_points}); coarsen or shorten")
    if params.bc == "neumann":
        grid = Grid1D(0.0, D, n + 1, "neumann")
    else:
        grid = Grid1D(0.0, D, n, "periodic")
    x = grid.x
    notes.update(domain=D, basis=basis.tolist())
    return Discretization(grid, fns[0](x) + 0 * x, fns[1](x) + 0 * x, fns[2](x) + 0 * x, D, snapped, notes)


def _difference_ops(grid: Grid1D):
    n, h = grid.n, grid.h
    e = np.ones(n)
    if grid.bc == "periodic":
        D2 = sp.diags([e[:-1], -2 * e, e[:-1], [1.0], [1.0]], [-1, 0, 1, n - 1, -(n - 1)], shape=(n, n))
        D1 = sp.diags([-e[:-1], e[:-1], [-1.0], [1.0]], [-1, 1, n - 1, -(n - 1)], shape=(n, n))
    else:
        lower, upper = e[:-1].copy(), e[:-1].copy()
        upper[0] = 2.0
        lower[-1] = 2.0
        D2 = sp.diags([lower, -2 * e, upper], [-1, 0, 1], shape=(n, n))
        lo1, up1 = -e[:-1].copy(), e[:-1].copy()
        up1[0] = 0.0
        lo1[-1] = 0.0
        D1 = sp.diags([lo1, up1], [-1, 1], shape=(n, n))
    return (D2 / h ** 2).tocsr(), (D1 / (2 * h)).tocsr()


# -- discounted solve -----------------------------------------------------

@dataclass
class DiscountedSolve:
    """Discrete solution of ``H(x, u', u'') = eps u``.

    ``u = shift + w``; the scalar shift carries the O(1/eps) part.
    """

    w: np.ndarray
    shift: float
    eps: float
    lambda_estimate: float
    osc_eps_u: float
    residual_norm: float
    newton_iters: int
    grid: Grid1D
    peclet: float
    range_eps_u: tuple[float, float]
    warnings: list = field(default_factory=list)

    @property
    def u(self) -> np.ndarray:
        return self.shift + self.w


def _middle(n: int) -> slice:
    return slice(n // 4, n - n // 4)


def solve_discounted(disc: Discretization, p: float, eps: float, tol: float = 1e-10, quadratic: bool = True,
                     w0: np.ndarray | None = None, shift: float | None = None, max_iter: int = 40,
                     ops=None) -> DiscountedSolve:
    """Damped Newton for the discounted problem, linearly implicit
    pseudo-time continuation as a fallback."""
    if eps <= 0:
        raise ValueError("discount eps must be positive")
    a, b, C = disc.a, disc.b, disc.C
    if a.min() <= 0:
        raise InvariantError("non-elliptic diffusion on the grid")
    grid = disc.grid
    D2, D1 = ops if ops is not None else _difference_ops(grid)
    n = grid.n
    if shift is None:
        shift = float(np.mean(C - b * p + (a * p * p if quadratic else 0.0))) / eps
    w = np.zeros(n) if w0 is None else np.array(w0, dtype=float)
    I = sp.identity(n, format="csr")

    def residual(w):
        g = D1 @ w - p
        r = a * (D2 @ w) + b * g + C - eps * (shift + w)
        if quadratic:
            r += a * g * g
        return r, g

    def jacobian(g):
        beta = b + (2.0 * a * g if quadratic else 0.0)
        return sp.diags(a) @ D2 + sp.diags(beta) @ D1 - eps * I

    hh = grid.h
    a_max, b_max = float(np.abs(a).max()), float(np.abs(b).max())
    scale = max(1.0, float(np.abs(C).max()))

    def done(res, w):
        # finite differences of w lose ~|w| * machine eps / h^2 to rounding
        wmax = float(np.abs(w).max())
        floor = 64.0 * np.finfo(float).eps * wmax * (4.0 * a_max / hh ** 2 + b_max / hh + eps)
        return res < max(tol * scale, floor)

    R, g = residual(w)
    rn = float(np.abs(R).max())
    notes = []
    it = 0
    converged = done(rn, w)
    while not converged and it < max_iter:
        it += 1
        J = jacobian(g)
        dw = splu(J.tocsc()).solve(-R)
        t = 1.0
        for _ in range(12):
            R_new, g_new = residual(w + t * dw)
            rn_new = float(np.abs(R_new).max())
            if rn_new < rn or done(rn_new, w + t * dw):
                break
            t *= 0.5
        else:
            break
        w = w + t * dw
        R, g, rn = R_new, g_new, rn_new
        converged = done(rn, w)
    if not converged:
        notes.append("newton stalled; pseudo-time continuation")
        dt = 0.1
        for _ in range(400):
            it += 1
            J = jacobian(g) - (1.0 / dt) * I
            dw = splu(J.tocsc()).solve(-R)
            R_new, g_new = residual(w + dw)
            rn_new = float(np.abs(R_new).max())
            if rn_new < rn:
                w, R, g, rn = w + dw, R_new, g_new, rn_new
                dt = min(dt * 2.0, 1e12)
            else:
                dt *= 0.25
            if done(rn, w):
                converged = True
                break
    if not converged:
        raise ConvergenceError(f"discounted solve did not converge (residual {rn:.2e}); grid may be too coarse")
    wbar = float(w.mean())
    shift, w = shift + wbar, w - wbar
    g = D1 @ w - p
    beta = b + (2.0 * a * g if quadratic else 0.0)
    peclet = float(grid.h * np.abs(beta).max() / (2.0 * a.min()))
    if peclet >= 1.0:
        notes.append(f"cell Peclet number {peclet:.2f} >= 1: central scheme not monotone")
    mid = _middle(n)
    eu = eps * w
    lam = eps * shift + float(eu[mid].mean())
    return DiscountedSolve(w=w, shift=shift, eps=eps, lambda_estimate=lam, osc_eps_u=float(np.ptp(eu)),
                           residual_norm=rn, newton_iters=it, grid=grid, peclet=peclet,
                           range_eps_u=(eps * shift + float(eu.min()), eps * shift + float(eu.max())),
                           warnings=notes)


# -- vanishing discount ---------------------------------------------------

@dataclass
class HamiltonianEstimate:
    lam: float
    error_bar: float
    estimates: list
    monotone: bool
    increment: float
    solve: DiscountedSolve
    disc: Discretization

    @property
    def warnings(self) -> list:
        return self.solve.warnings


def effective_hamiltonian(cell: CellProblem, p: float, params: SolverParams = SolverParams(),
                          eps_schedule: list[float] | None = None, disc: Discretization | None = None,
                          check_cauchy: bool = True) -> HamiltonianEstimate:
    """Richardson-extrapolated vanishing-discount limit of eps * u_eps."""
    if params.h_richardson and disc is None:
        fine = _vanishing_discount(cell, p, params, eps_schedule, None, check_cauchy)
        coarse = _vanishing_discount(cell, p, replace(params, grid_scale=2.0 * params.grid_scale),
                                     eps_schedule, None, check_cauchy)
        h_f, h_c = fine.disc.grid.h, coarse.disc.grid.h
        r2 = (h_c / h_f) ** 2
        lam = (r2 * fine.lam - coarse.lam) / (r2 - 1.0)
        fine.error_bar = max(fine.error_bar, abs(lam - fine.lam))
        fine.lam = float(lam)
        return fine
    return _vanishing_discount(cell, p, params, eps_schedule, disc, check_cauchy)


def _vanishing_discount(cell, p, params, eps_schedule, disc, check_cauchy) -> HamiltonianEstimate:
    sched = list(eps_schedule) if eps_schedule is not None else params.eps_schedule()
    if len(sched) < 3:
        raise ValueError("eps schedule needs at least 3 entries")
    if any(e2 >= e1 for e1, e2 in zip(sched, sched[1:])):
        raise ValueError("eps schedule must be strictly decreasing")
    if disc is None:
        disc = discretize(cell, p, params)
    ops = _difference_ops(disc.grid)
    w, shift, prev = None, None, None
    est = []
    sol = None
    for eps in sched:
        if prev is not None:
            shift = prev / eps
        sol = solve_discounted(disc, p, eps, tol=params.newton_tol, quadratic=cell.quadratic,
                               w0=w, shift=shift, max_iter=params.max_newton, ops=ops)
        w, prev = sol.w, sol.lambda_estimate
        est.append((eps, sol.lambda_estimate))
    (e1, l1), (e2, l2) = est[-2], est[-1]
    lam = (e1 * l2 - e2 * l1) / (e1 - e2)
    increment = abs(lam - l2)
    steps = np.abs(np.diff([v for _, v in est]))
    if check_cauchy and steps[-1] > steps[-2] * (1.0 + 1e-6) + 1e-13:
        raise ConvergenceError(f"discount estimates not Cauchy: last steps {steps[-2]:.3e}, {steps[-1]:.3e}")
    diffs = np.diff([v for _, v in est])
    monotone = bool(np.all(diffs >= -1e-14) or np.all(diffs <= 1e-14))
    error_bar = max(sol.osc_eps_u, increment)
    return HamiltonianEstimate(lam=float(lam), error_bar=float(error_bar), estimates=est, monotone=monotone,
                               increment=float(increment), solve=sol, disc=disc)


# -- linear homogenisation ------------------------------------------------

def iota(F: APFunction, a: APFunction, tol: float = 1e-10, cross_check: bool = True,
         params: SolverParams = SolverParams(), check_tol: float | None = None) -> float:
    """Homogenised constant of ``a v'' + F``: harmonic mean of ``a`` times
    the mean of ``F / a``.

    With ``cross_check`` the value is compared with the vanishing-discount
    limit of ``eps v = a v'' + F``; ``check_tol`` defaults to ``max(10 tol, 1e-6)``.
    """
    if a.is_constant:
        if a.constant <= 0:
            raise InvariantError("iota needs inf a > 0")
        value = F.mean()
    else:
        value = harmonic_mean(a, tol) * mean_composite(lambda f, aa: f / aa, [F, a], tol=tol)
    if cross_check and not F.is_constant:
        check = effective_hamiltonian(CellProblem(a, APFunction.const(0.0), F, quadratic=False), 0.0, params)
        limit = check_tol if check_tol is not None else max(10 * tol, 1e-6)
        if abs(check.lam - value) > limit + check.error_bar:
            raise ConvergenceError(f"iota cross-check failed: closed form {value:.10g} vs solver {check.lam:.10g}")
    return float(value)


def write_solve_csv(sol: DiscountedSolve, path) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x", "u", "eps_u"])
        for x, u in zip(sol.grid.x, sol.u):
            wr.writerow([repr(float(x)), repr(float(u)), repr(float(sol.eps * u))])
