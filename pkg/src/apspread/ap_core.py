"""Almost periodic functions on the line, stored as torus lifts.

A function is kept as ``f(x) = F(omega * x)`` where ``F`` is a trigonometric
polynomial on the m-torus.  Bohr means, translations and rescalings are exact
in this representation; everything nonlinear goes through torus quadrature.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Callable, Iterable, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi
MAX_MODULE_DIM = 3
RATIONAL_TOL = 1e-12
MAX_DENOMINATOR = 10_000


class IndependenceError(ValueError):
    """Frequencies are not declared (or not found to be) rationally independent."""


class QuadratureError(RuntimeError):
    pass


def _rational_ratio(r: float) -> Fraction | None:
    frac = Fraction(r).limit_denominator(MAX_DENOMINATOR)
    if abs(float(frac) - r) <= RATIONAL_TOL * max(1.0, abs(r)):
        return frac
    return None


def _fraction_gcd(fracs: Sequence[Fraction]) -> Fraction:
    num = reduce(math.gcd, (f.numerator for f in fracs))
    den = reduce(lambda x, y: x * y // math.gcd(x, y), (f.denominator for f in fracs))
    return Fraction(num, den)


@dataclass(frozen=True, eq=False)
class APFunction:
    """Trigonometric polynomial ``constant + sum_j A_j cos(k_j.w x) + B_j sin(k_j.w x)``.

    ``independent`` declares that the entries of ``frequencies`` are rationally
    independent; only then is ``mean`` available.
    """

    frequencies: np.ndarray
    modes: np.ndarray
    cos_amp: np.ndarray
    sin_amp: np.ndarray
    constant: float = 0.0
    independent: bool = False

    def __post_init__(self):
        freqs = np.atleast_1d(np.asarray(self.frequencies, dtype=float))
        m = freqs.size
        modes = np.asarray(self.modes, dtype=np.int64).reshape(-1, m) if m else np.zeros((0, 0), np.int64)
        cos_amp = np.asarray(self.cos_amp, dtype=float).reshape(-1)
        sin_amp = np.asarray(self.sin_amp, dtype=float).reshape(-1)
        if not (len(modes) == len(cos_amp) == len(sin_amp)):
            raise ValueError("modes, cos_amp and sin_amp must have equal length")
        if np.any(freqs <= 0):
            raise ValueError("frequencies must be positive")
        for name, arr in (("frequencies", freqs), ("modes", modes), ("cos_amp", cos_amp), ("sin_amp", sin_amp)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "constant", float(self.constant))
        if m == 0:
            object.__setattr__(self, "independent", True)

    # -- construction -----------------------------------------------------
    @classmethod
    def const(cls, value: float) -> "APFunction":
        return cls(np.zeros(0), np.zeros((0, 0)), [], [], float(value), True)

    @classmethod
    def from_terms(cls, constant: float = 0.0, terms: Iterable[tuple[float, float, float]] = ()) -> "APFunction":
        """Build from ``(frequency, cos_amp, sin_amp)`` triples.

        Frequencies are grouped into a rationally independent basis; the
        result has ``independent=True``.  Negative frequencies are folded.
        """
        terms = [(float(w), float(ca), float(sa)) for w, ca, sa in terms]
        folded = []
        for w, ca, sa in terms:
            if w == 0.0:
                constant += ca
                continue
            if w < 0:
                w, sa = -w, -sa
            folded.append((w, ca, sa))
        if not folded:
            return cls.const(constant)
        singles = [cls(np.array([w]), np.array([[1]]), [ca], [sa], 0.0, True) for w, ca, sa in folded]
        basis, mode_lists = merge_modules(singles)
        modes = np.vstack(mode_lists)
        return cls(basis, modes, [t[1] for t in folded], [t[2] for t in folded], constant, True).simplified()

    @classmethod
    def cosine(cls, frequency: float, amplitude: float = 1.0, constant: float = 0.0) -> "APFunction":
        return cls.from_terms(constant, [(frequency, amplitude, 0.0)])

    # -- basic queries ----------------------------------------------------
    @property
    def m(self) -> int:
        return self.frequencies.size

    @property
    def is_constant(self) -> bool:
        return self.modes.shape[0] == 0 or not np.any(self.cos_amp) and not np.any(self.sin_amp)

    @property
    def term_frequencies(self) -> np.ndarray:
        if self.m == 0:
            return np.zeros(0)
        return self.modes @ self.frequencies

    @property
    def amplitudes(self) -> np.ndarray:
        return np.hypot(self.cos_amp, self.sin_amp)

    def amplitude_sum(self) -> float:
        return abs(self.constant) + float(np.sum(self.amplitudes))

    def lipschitz(self) -> float:
        """Exact Lipschitz bound ``sum |k.w| |amp|`` on the line."""
        return float(np.sum(np.abs(self.term_frequencies) * self.amplitudes))

    def max_frequency(self) -> float:
        tf = np.abs(self.term_frequencies)
        return float(tf.max()) if tf.size else 0.0

    # -- evaluation -------------------------------------------------------
    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, self.constant)
        for w, ca, sa in zip(self.term_frequencies, self.cos_amp, self.sin_amp):
            ph = w * x
            if ca:
                out = out + ca * np.cos(ph)
            if sa:
                out = out + sa * np.sin(ph)
        return out if out.ndim else float(out)

    def lift(self, theta: np.ndarray) -> np.ndarray:
        """Evaluate the torus lift ``F`` at angles ``theta`` of shape ``(..., m)``."""
        theta = np.asarray(theta, dtype=float)
        out = np.full(theta.shape[:-1], self.constant)
        if self.m == 0:
            return out
        ph = theta @ self.modes.T.astype(float)
        return out + np.cos(ph) @ self.cos_amp + np.sin(ph) @ self.sin_amp

    # -- algebra ----------------------------------------------------------
    def derivative(self) -> "APFunction":
        tf = self.term_frequencies
        return APFunction(self.frequencies, self.modes, tf * self.sin_amp, -tf * self.cos_amp, 0.0, self.independent)

    def shift(self, y: float) -> "APFunction":
        """``x -> f(x + y)``, same frequency module."""
        ph = self.term_frequencies * y
        c, s = np.cos(ph), np.sin(ph)
        return APFunction(self.frequencies, self.modes,
                          self.cos_amp * c + self.sin_amp * s,
                          self.sin_amp * c - self.cos_amp * s,
                          self.constant, self.independent)

    def rescale(self, L: float) -> "APFunction":
        """``x -> f(x / L)``."""
        if L <= 0:
            raise ValueError("L must be positive")
        if self.m == 0:
            return self
        return APFunction(self.frequencies / L, self.modes, self.cos_amp, self.sin_amp, self.constant, self.independent)

    def scale(self, alpha: float) -> "APFunction":
        return APFunction(self.frequencies, self.modes, alpha * self.cos_amp, alpha * self.sin_amp,
                          alpha * self.constant, self.independent)

    def __mul__(self, alpha):
        if isinstance(alpha, APFunction):
            return NotImplemented
        return self.scale(float(alpha))

    __rmul__ = __mul__

    def __neg__(self):
        return self.scale(-1.0)

    def __add__(self, other):
        if not isinstance(other, APFunction):
            return APFunction(self.frequencies, self.modes, self.cos_amp, self.sin_amp,
                              self.constant + float(other), self.independent)
        basis, (ma, mb) = merge_modules([self, other])
        return APFunction(basis, np.vstack([ma, mb]),
                          np.concatenate([self.cos_amp, other.cos_amp]),
                          np.concatenate([self.sin_amp, other.sin_amp]),
                          self.constant + other.constant, True).simplified()

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other if isinstance(other, APFunction) else -float(other))

    def __rsub__(self, other):
        return (-self) + other

    def simplified(self) -> "APFunction":
        """Combine duplicate modes, fold k -> -k, drop zero terms."""
        if self.m == 0:
            return self
        acc: dict[tuple, list[float]] = {}
        const = self.constant
        for k, ca, sa in zip(self.modes, self.cos_amp, self.sin_amp):
            k = tuple(int(v) for v in k)
            nz = [v for v in k if v != 0]
            if not nz:
                const += ca
                continue
            if nz[0] < 0:
                k = tuple(-v for v in k)
                sa = -sa
            slot = acc.setdefault(k, [0.0, 0.0])
            slot[0] += ca
            slot[1] += sa
        keys = [k for k, (ca, sa) in acc.items() if ca != 0.0 or sa != 0.0]
        if not keys:
            return APFunction.const(const) if self.independent else APFunction(
                self.frequencies, np.zeros((0, self.m)), [], [], const, False)
        return APFunction(self.frequencies, np.array(keys),
                          [acc[k][0] for k in keys], [acc[k][1] for k in keys], const, self.independent)

    def snapped(self, period: float) -> "APFunction":
        """Periodic approximant on ``[0, period)``: every term frequency rounded
        to the nearest multiple of ``2*pi/period``."""
        if self.m == 0:
            return self
        g = TWO_PI / period
        ks = np.rint(self.term_frequencies / g).astype(np.int64)
        return APFunction(np.array([g]), ks.reshape(-1, 1), self.cos_amp, self.sin_amp,
                          self.constant, True).simplified()

    # -- means ------------------------------------------------------------
    def mean(self) -> float:
        if not self.independent:
            raise IndependenceError("mean requires declared rationally independent frequencies")
        return self.constant

    # -- text format ------------------------------------------------------
    def to_spec(self) -> dict:
        """Decimal-string coefficient spec; ``repr`` of a float round-trips exactly."""
        return {
            "constant": repr(self.constant),
            "terms": [{"frequency": repr(float(w)), "cos_amp": repr(float(ca)), "sin_amp": repr(float(sa))}
                      for w, ca, sa in zip(self.term_frequencies, self.cos_amp, self.sin_amp)],
        }

    @classmethod
    def from_spec(cls, spec) -> "APFunction":
        if isinstance(spec, (int, float, str)):
            return cls.const(float(spec))
        terms = [(float(t["frequency"]), float(t.get("cos_amp", 0.0)), float(t.get("sin_amp", 0.0)))
                 for t in spec.get("terms", [])]
        return cls.from_terms(float(spec.get("constant", 0.0)), terms)

    def dumps(self) -> str:
        return json.dumps(self.to_spec(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "APFunction":
        return cls.from_spec(json.loads(text))

    def __repr__(self):
        parts = [f"{self.constant:g}"]
        for w, ca, sa in zip(self.term_frequencies, self.cos_amp, self.sin_amp):
            if ca:
                parts.append(f"{ca:+g}cos({w:g}x)")
            if sa:
                parts.append(f"{sa:+g}sin({w:g}x)")
        return f"APFunction({' '.join(parts)})"


def merge_modules(fns: Sequence[APFunction]) -> tuple[np.ndarray, list[np.ndarray]]:
    """Common frequency basis for ``fns``.

    Returns the basis and, for each function, its modes re-expressed in that
    basis.  Generators whose ratio is rational (continued-fraction test at
    1e-12) are merged into one; the resulting basis is capped at dimension 3.
    """
    gens: list[float] = []
    owners: list[tuple[int, int]] = []
    for i, f in enumerate(fns):
        for j, w in enumerate(f.frequencies):
            gens.append(float(w))
            owners.append((i, j))
    groups: list[list[int]] = []
    ratios: list[list[Fraction]] = []
    for gi, w in enumerate(gens):
        for grp, rat in zip(groups, ratios):
            r = _rational_ratio(w / gens[grp[0]])
            if r is not None:
                grp.append(gi)
                rat.append(r)
                break
        else:
            groups.append([gi])
            ratios.append([Fraction(1)])
    if len(groups) > MAX_MODULE_DIM:
        raise IndependenceError(
            f"merged frequency module has dimension {len(groups)} > {MAX_MODULE_DIM}; "
            "reduce the number of incommensurate frequencies")
    basis = np.zeros(len(groups))
    # integer multiplier of generator gi over its group's basis element
    mult = np.zeros((len(gens), len(groups)), dtype=np.int64)
    for gidx, (grp, rat) in enumerate(zip(groups, ratios)):
        g = _fraction_gcd(rat)
        basis[gidx] = gens[grp[0]] * float(g)
        for gi, r in zip(grp, rat):
            q = r / g
            assert q.denominator == 1
            mult[gi, gidx] = q.numerator
    if len(groups) == 3:
        _check_no_triple_relation(basis)
    out = []
    for i, f in enumerate(fns):
        rows = [gi for gi, (fi, _) in enumerate(owners) if fi == i]
        if f.m == 0:
            out.append(np.zeros((0, len(groups)), dtype=np.int64))
        else:
            out.append(f.modes @ mult[rows])
    order = np.argsort(basis)
    return basis[order], [mo[:, order] for mo in out]


def _check_no_triple_relation(basis: np.ndarray) -> None:
    import mpmath

    with mpmath.workdps(30):
        rel = mpmath.pslq([mpmath.mpf(float(w)) for w in basis], tol=mpmath.mpf(1e-10), maxcoeff=200, maxsteps=2000)
    if rel is not None:
        raise IndependenceError(f"frequencies {basis} satisfy the integer relation {rel}")


def common_lift(fns: Sequence[APFunction]) -> tuple[np.ndarray, list[APFunction]]:
    """Re-express every function over one merged basis."""
    basis, modes = merge_modules(fns)
    m = len(basis)
    out = []
    for f, mo in zip(fns, modes):
        if m == 0:
            out.append(APFunction.const(f.constant))
        else:
            out.append(APFunction(basis, mo.reshape(-1, m), f.cos_amp, f.sin_amp, f.constant, True))
    return basis, out


def mean(f: APFunction) -> float:
    return f.mean()


def _torus_grid(m: int, n: int) -> np.ndarray:
    t = TWO_PI * (np.arange(n) + 0.5) / n
    mesh = np.meshgrid(*([t] * m), indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=-1)


def mean_composite(fmap: Callable[..., np.ndarray], fns: Sequence[APFunction] | APFunction,
                   tol: float = 1e-10, n0: int = 16, max_points: int = 2 ** 22) -> float:
    """Bohr mean of ``fmap(f_1(x), ..., f_k(x))`` by torus midpoint quadrature.

    The grid is doubled until two successive increments are below ``tol``.
    """
    if isinstance(fns, APFunction):
        fns = [fns]
    basis, lifted = common_lift(fns)
    m = len(basis)
    if m == 0:
        val = float(np.asarray(fmap(*[np.array([f.constant]) for f in lifted]))[0])
        if not np.isfinite(val):
            raise ValueError("map undefined on the range of its arguments")
        return val
    n = n0
    prev = None
    small = 0
    while True:
        if n ** m > max_points:
            raise QuadratureError(f"mean_composite not converged to {tol:g} within {max_points} points")
        theta = _torus_grid(m, n)
        with np.errstate(invalid="ignore", divide="ignore"):
            vals = np.asarray(fmap(*[f.lift(theta) for f in lifted]), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise ValueError("map undefined on the range of its arguments")
        est = float(vals.mean())
        if prev is not None:
            small = small + 1 if abs(est - prev) < tol else 0
            if small >= 2:
                return est
        prev = est
        n *= 2


def harmonic_mean(a: APFunction, tol: float = 1e-10) -> float:
    lo, _ = bounds(a, tol=1e-4)
    if lo <= 0:
        raise ValueError("harmonic mean needs inf a > 0")
    return 1.0 / mean_composite(np.reciprocal, a, tol=tol)


# -- extrema --------------------------------------------------------------

def _hessian_bound(f: APFunction) -> float:
    if f.m == 0:
        return 0.0
    return float(np.sum(np.sum(f.modes.astype(float) ** 2, axis=1) * f.amplitudes))


def _torus_extremum(f: APFunction, sign: float, tol: float, max_points: int) -> float:
    from scipy.optimize import minimize

    m = f.m
    H2 = _hessian_bound(f)
    # nearest grid point lies within pi/n per axis; at an interior extremum the
    # gap is at most 0.5 * H2 * m * (pi/n)^2
    n_need = int(math.ceil(math.pi * math.sqrt(max(0.5 * H2 * m / tol, 1.0))))
    n_cap = max(8, int(max_points ** (1.0 / m)))
    n = max(8, min(n_need, n_cap))
    cert = 0.5 * H2 * m * (math.pi / n) ** 2
    if cert > tol:
        warnings.warn(f"bounds: grid certificate {cert:.2e} exceeds tol {tol:.2e}", RuntimeWarning)
    theta = _torus_grid(m, n)
    vals = sign * f.lift(theta)
    grid_best = float(vals.min())
    starts = theta[np.argsort(vals)[:4]]
    kk = f.modes.astype(float)

    def fun(th):
        ph = kk @ th
        val = f.constant + f.cos_amp @ np.cos(ph) + f.sin_amp @ np.sin(ph)
        grad = kk.T @ (-f.cos_amp * np.sin(ph) + f.sin_amp * np.cos(ph))
        return sign * val, sign * grad

    best = grid_best
    for th0 in starts:
        res = minimize(fun, th0, jac=True, method="BFGS", options={"gtol": 1e-12})
        best = min(best, float(res.fun))
    return sign * best


def bounds(f: APFunction, tol: float = 1e-6, max_points: int = 2 ** 22) -> tuple[float, float]:
    """(inf f, sup f) from a torus scan with a second-order certificate and a
    local polish; true extrema lie within ``tol`` of the returned values when
    the scan budget allows it (a RuntimeWarning is issued otherwise)."""
    if f.is_constant:
        return f.constant, f.constant
    key = (f.dumps(), tol, max_points)
    if key not in _BOUNDS_CACHE:
        if len(_BOUNDS_CACHE) > 512:
            _BOUNDS_CACHE.clear()
        lo = _torus_extremum(f, 1.0, tol, max_points)
        hi = _torus_extremum(f, -1.0, tol, max_points)
        _BOUNDS_CACHE[key] = (lo, hi)
    return _BOUNDS_CACHE[key]


_BOUNDS_CACHE: dict = {}


def oscillation(f: APFunction, tol: float = 1e-6) -> float:
    lo, hi = bounds(f, tol)
    return hi - lo


# -- almost-periodicity moduli --------------------------------------------

@dataclass(frozen=True)
class ScanParams:
    """Sampling for the rho estimate.  ``None`` entries take defaults built
    from the frequency content (window 200 slow periods, step fast/64)."""

    window: float | None = None
    step: float | None = None
    torus_points: int = 64


@dataclass
class ModulusEstimate:
    R_grid: np.ndarray
    rho_values: np.ndarray
    sigma: float | None = None
    theta_value: float | None = None
    r: float | None = None
    tau: float | None = None
    theta_argmin: float | None = None
    scan: dict = field(default_factory=dict)


def _shift_defect(f: APFunction, s: np.ndarray, torus_points: int, chunk: int = 2048) -> np.ndarray:
    """g(s) = || f(. + s) - f ||_inf evaluated on a torus grid."""
    if f.is_constant:
        return np.zeros_like(s)
    m = f.m
    theta = _torus_grid(m, torus_points if m == 1 else max(16, int(torus_points ** (2.0 / m))))
    ph_t = theta @ f.modes.T.astype(float)          # (T, K)
    Ck, Sk = np.cos(ph_t).T, np.sin(ph_t).T         # (K, T)
    w = f.term_frequencies
    A, B = f.cos_amp, f.sin_amp
    out = np.empty(len(s))
    for i0 in range(0, len(s), chunk):
        ph = np.outer(s[i0:i0 + chunk], w)          # (S, K)
        c, sn = np.cos(ph) - 1.0, np.sin(ph)
        P = A * c + B * sn
        Q = -A * sn + B * c
        out[i0:i0 + chunk] = np.abs(P @ Ck + Q @ Sk).max(axis=1)
    return out


def _scan_defaults(fns: Sequence[APFunction], scan: ScanParams) -> tuple[float, float]:
    freqs = np.concatenate([np.abs(f.term_frequencies) for f in fns]) if fns else np.zeros(0)
    freqs = freqs[freqs > 0]
    if freqs.size == 0:
        return scan.window or 1.0, scan.step or 1.0
    window = scan.window if scan.window is not None else 200.0 * TWO_PI / freqs.min()
    step = scan.step if scan.step is not None else (TWO_PI / freqs.max()) / 64.0
    return window, step


class RhoTable:
    """Precomputed shift defects supporting fast rho(R) queries.

    For a vector of functions the defect is the max over components
    (the sup norm of the stacked vector).
    """

    def __init__(self, fns: Sequence[APFunction] | APFunction, R_max: float, scan: ScanParams = ScanParams()):
        if isinstance(fns, APFunction):
            fns = [fns]
        self.fns = list(fns)
        self.window, self.step = _scan_defaults(self.fns, scan)
        self.R_max = float(R_max)
        pad = int(math.ceil(self.R_max / self.step))
        ny = int(math.ceil(self.window / self.step)) + 1
        self.pad = pad
        self.s = (np.arange(-pad, ny + pad)) * self.step
        g = np.zeros(len(self.s))
        for f in self.fns:
            g = np.maximum(g, _shift_defect(f, self.s, scan.torus_points))
        self.g = g
        self.ny = ny
        self.scan = {"window": self.window, "step": self.step, "torus_points": scan.torus_points, "R_max": self.R_max}

    def rho(self, R: float) -> float:
        from scipy.ndimage import minimum_filter1d

        if R < 0:
            raise ValueError("R must be nonnegative")
        half = int(math.floor(min(R, self.R_max) / self.step + 1e-9))
        if half == 0:
            mins = self.g
        else:
            mins = minimum_filter1d(self.g, size=2 * half + 1, mode="nearest")
        return float(mins[self.pad:self.pad + self.ny].max())

    def rho_values(self, R_grid: Iterable[float]) -> np.ndarray:
        vals = np.array([self.rho(R) for R in R_grid])
        # exact rho is nonincreasing; enforce against window-discretisation ties
        return np.minimum.accumulate(vals)


def rho(f: APFunction | Sequence[APFunction], R: float, scan: ScanParams = ScanParams()) -> float:
    """Estimate of sup_y inf_{|z|<=R} ||f(.+y) - f(.+z)||_inf."""
    return RhoTable(f, max(R, 0.0), scan).rho(R)


def theta(f: APFunction | Sequence[APFunction], sigma: float, r: float, scan: ScanParams = ScanParams(),
          table: RhoTable | None = None, n_grid: int = 200) -> ModulusEstimate:
    """Theta_sigma(r; f) = min over R in [0, 1/r) of rho(R) + (r R)^sigma."""
    if not (0 < sigma <= 1) or r <= 0:
        raise ValueError("need sigma in (0, 1] and r > 0")
    R_top = 1.0 / r
    if table is None or table.R_max < R_top:
        table = RhoTable(f, R_top, scan)
    R_grid = np.concatenate([[0.0], np.geomspace(table.step, R_top * (1 - 1e-9), n_grid)]) \
        if R_top > table.step else np.array([0.0])
    rhos = table.rho_values(R_grid)
    obj = rhos + (r * R_grid) ** sigma
    i = int(np.argmin(obj))
    # local refinement on a uniform grid between the neighbours of the best node
    lo = R_grid[max(i - 1, 0)]
    hi = R_grid[min(i + 1, len(R_grid) - 1)]
    fine = np.linspace(lo, hi, 41)
    fine_obj = np.array([table.rho(R) for R in fine]) + (r * fine) ** sigma
    j = int(np.argmin(fine_obj))
    best, arg = (fine_obj[j], fine[j]) if fine_obj[j] < obj[i] else (obj[i], R_grid[i])
    return ModulusEstimate(R_grid=R_grid, rho_values=rhos, sigma=sigma, theta_value=float(best), r=r,
                           theta_argmin=float(arg), scan=table.scan)


def fit_rho_decay(R_grid: np.ndarray, rho_values: np.ndarray, R_min: float = 1.0) -> float | None:
    """Exponent tau in rho(R) <= C R^-tau, from a log-log fit over R >= R_min."""
    R_grid = np.asarray(R_grid)
    rho_values = np.asarray(rho_values)
    sel = (R_grid >= R_min) & (rho_values > 0)
    if sel.sum() < 3:
        return None
    slope = np.polyfit(np.log(R_grid[sel]), np.log(rho_values[sel]), 1)[0]
    return float(-slope)


def sup_composite(fmap: Callable[..., np.ndarray], fns: Sequence[APFunction] | APFunction,
                  n: int | None = None) -> tuple[float, np.ndarray | None]:
    """sup over x of ``fmap(f_1(x), ...)`` by a torus scan plus local polish.

    Returns the value and the maximizing torus point (None for constants).
    Not certified; the scan size defaults to ~2^18 points.
    """
    from scipy.optimize import minimize

    if isinstance(fns, APFunction):
        fns = [fns]
    basis, lifted = common_lift(fns)
    m = len(basis)
    if m == 0:
        return float(np.asarray(fmap(*[np.array([f.constant]) for f in lifted]))[0]), None
    n = n or max(8, int((2 ** 18) ** (1.0 / m)))
    theta = _torus_grid(m, n)
    vals = np.asarray(fmap(*[f.lift(theta) for f in lifted]), dtype=float)
    i = int(np.argmax(vals))

    def neg(th):
        return -float(np.asarray(fmap(*[f.lift(th[None, :]) for f in lifted]))[0])

    res = minimize(neg, theta[i], method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
    if -res.fun >= vals[i]:
        return float(-res.fun), np.mod(res.x, TWO_PI)
    return float(vals[i]), theta[i]
