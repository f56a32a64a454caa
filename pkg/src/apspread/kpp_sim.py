"""Direct simulation of u_t = a(x/L) u'' + b(x/L) u' + (c(x/L) + c_tilde(x)) u (1 - u)."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .hj_cell import CoefficientSet

POSITIVITY_SLACK = 1e-12


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Bump:
    center: float = 0.0
    width: float = 2.0
    height: float = 1.0

    def __call__(self, x: np.ndarray) -> np.ndarray:
        s = (x - self.center) / self.width
        return np.where(np.abs(s) < 1.0, self.height * np.cos(0.5 * np.pi * s) ** 2, 0.0)


@dataclass(frozen=True)
class SimConfig:
    X: float = 400.0
    nx: int = 4001
    dt: float = 0.01
    T: float = 150.0
    level: float = 0.5
    init: Bump = field(default_factory=Bump)
    fit_window: float = 0.5
    sample_every: int = 50
    snapshot_every: int = 0        # 0: no snapshots

    def __post_init__(self):
        if not 0.0 < self.init.height <= 1.0 or self.init.width <= 0:
            raise ValueError("initial bump must have height in (0, 1] and positive width")
        if not 0.0 < self.level < 1.0:
            raise ValueError("front level must lie in (0, 1)")
        if self.nx < 3 or self.X <= 0 or self.dt <= 0 or self.T <= 0:
            raise ValueError("degenerate simulation grid")
        if not 0.0 < self.fit_window <= 1.0:
            raise ValueError("fit_window must lie in (0, 1]")

    @property
    def h(self) -> float:
        return 2.0 * self.X / (self.nx - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(-self.X, self.X, self.nx)


@dataclass
class FrontSeries:
    times: np.ndarray
    x_plus: np.ndarray
    x_minus: np.ndarray
    masses: np.ndarray
    max_values: np.ndarray
    min_values: np.ndarray
    config: SimConfig
    usable: bool
    notes: list = field(default_factory=list)
    u_final: np.ndarray | None = None
    snapshots: list = field(default_factory=list)    # (t, u)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", "x_plus", "x_minus", "mass", "max_u"])
            for row in zip(self.times, self.x_plus, self.x_minus, self.masses, self.max_values):
                wr.writerow([repr(float(v)) for v in row])

    def snapshots_to_csv(self, path) -> None:
        x = self.config.x
        with open(path, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", "x", "u"])
            for t, u in self.snapshots:
                for xi, ui in zip(x, u):
                    wr.writerow([repr(float(t)), repr(float(xi)), repr(float(ui))])


def front_positions(x: np.ndarray, u: np.ndarray, level: float) -> tuple[float, float]:
    """Rightmost and leftmost crossings of ``level`` (linear interpolation)."""
    above = np.flatnonzero(u >= level)
    if above.size == 0:
        return np.nan, np.nan
    i, j = above[-1], above[0]
    if i + 1 < x.size:
        xr = x[i] + (u[i] - level) / (u[i] - u[i + 1]) * (x[i + 1] - x[i])
    else:
        xr = x[i]
    if j > 0:
        xl = x[j] - (u[j] - level) / (u[j] - u[j - 1]) * (x[j] - x[j - 1])
    else:
        xl = x[j]
    return float(xr), float(xl)


def _operator(a: np.ndarray, b: np.ndarray, h: float) -> sp.csr_matrix:
    """Centered a u'' + b u' with zero-flux (reflecting) ends."""
    n = a.size
    lo = a / h ** 2 - b / (2 * h)
    up = a / h ** 2 + b / (2 * h)
    main = -2 * a / h ** 2
    upper = up[:-1].copy()
    lower = lo[1:].copy()
    # ghost points u_{-1} = u_1, u_n = u_{n-2}
    upper[0] = lo[0] + up[0]
    lower[-1] = lo[-1] + up[-1]
    return sp.diags([lower, main, upper], [-1, 0, 1], shape=(n, n), format="csc")


def simulate(coeffs: CoefficientSet, L: float, cfg: SimConfig = SimConfig(), keep_final: bool = True) -> FrontSeries:
    x = cfg.x
    h = cfg.h
    a = coeffs.a.rescale(L)(x) + 0 * x
    b = coeffs.b.rescale(L)(x) + 0 * x
    r = (coeffs.c.rescale(L) + coeffs.c_tilde)(x) + 0 * x
    peclet = h * np.abs(b).max() / (2 * a.min())
    if peclet >= 1.0:
        raise SimulationError(f"cell Peclet number {peclet:.3g} >= 1: implicit step loses positivity")
    if cfg.dt * np.abs(r).max() > 1.0:
        raise SimulationError("dt * sup|c + c_tilde| > 1: explicit reaction loses positivity")
    A = _operator(a, b, h)
    solver = splu((sp.identity(x.size, format="csc") - cfg.dt * A).tocsc())
    u = cfg.init(x)
    n_steps = int(round(cfg.T / cfg.dt))
    times, xp, xm, mass, umax, umin = [], [], [], [], [], []
    snaps = []

    def record(k):
        f_r, f_l = front_positions(x, u, cfg.level)
        times.append(k * cfg.dt)
        xp.append(f_r)
        xm.append(f_l)
        mass.append(float(np.trapezoid(u, x)))
        umax.append(float(u.max()))
        umin.append(float(u.min()))

    record(0)
    for k in range(1, n_steps + 1):
        u = solver.solve(u + cfg.dt * r * u * (1.0 - u))
        lo, hi = float(u.min()), float(u.max())
        if lo < -POSITIVITY_SLACK or hi > 1.0 + POSITIVITY_SLACK:
            raise SimulationError(f"invariant region violated at step {k}: min {lo:.3e}, max {hi:.3e}")
        if k % cfg.sample_every == 0 or k == n_steps:
            record(k)
        if cfg.snapshot_every and k % cfg.snapshot_every == 0:
            snaps.append((k * cfg.dt, u.copy()))
    xp_a, xm_a = np.array(xp), np.array(xm)
    notes = []
    usable = True
    margin = 0.9 * cfg.X
    t_a = np.array(times)
    in_fit = t_a >= t_a[-1] * (1.0 - cfg.fit_window)
    if np.any(np.isnan(xp_a[in_fit])):
        usable = False
        notes.append("front undefined (no level crossing) inside the fit window")
    elif np.any(np.isnan(xp_a)):
        notes.append("front undefined during the initial transient")
    if usable and (np.nanmax(np.abs(xp_a)) > margin or np.nanmax(np.abs(xm_a)) > margin):
        usable = False
        notes.append("front came within 10% of the domain boundary")
    return FrontSeries(t_a, xp_a, xm_a, np.array(mass), np.array(umax), np.array(umin), cfg, usable,
                       notes, u if keep_final else None, snaps)


def empirical_speed(series: FrontSeries, side: int = 1) -> tuple[float, float]:
    """Least-squares front speed over the trailing fit window, with its standard error."""
    if not series.usable:
        raise SimulationError("series flagged unusable: " + "; ".join(series.notes))
    if side not in (1, -1):
        raise ValueError("side must be +1 or -1")
    t = series.times
    sel = t >= t[-1] * (1.0 - series.config.fit_window)
    if sel.sum() < 10:
        raise SimulationError("fit window holds fewer than 10 samples")
    y = series.x_plus[sel] if side == 1 else -series.x_minus[sel]
    tt = t[sel]
    A = np.vstack([tt, np.ones_like(tt)]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = max(len(tt) - 2, 1)
    s2 = float(resid @ resid) / dof
    stderr = float(np.sqrt(s2 / np.sum((tt - tt.mean()) ** 2)))
    return float(coef[0]), stderr
