import math

import numpy as np
import pytest

from apspread.ap_core import APFunction
from apspread.hj_cell import CoefficientSet
from apspread.rate_lab import (RateSeries, dominance, fit_rate, large_L_reference, sweep_large_L, sweep_small_L,
                               write_summary)

F = APFunction
SQ2 = math.sqrt(2.0)
# fixed multiplicative noise in [-10%, +10%]
NOISE = np.array([0.07, -0.1, 0.03, 0.1, -0.05, -0.08, 0.02, 0.09])


def test_fit_exact_power_laws():
    L = np.array([0.5, 0.25, 0.1, 0.05, 0.02])
    assert fit_rate(L, L ** 2)[0] == pytest.approx(2.0, abs=1e-12)
    L = np.array([5, 10, 20, 40, 80, 160.0])
    slope, se = fit_rate(L, 3 * L ** -0.5)
    assert slope == pytest.approx(-0.5, abs=1e-12) and se < 1e-10


def test_fit_noisy_power_law():
    L = np.geomspace(0.02, 0.5, 8)
    slope, se = fit_rate(L, L ** 1.5 * (1 + NOISE))
    assert abs(slope - 1.5) < 0.1 and se > 0


def test_fit_needs_points():
    with pytest.raises(ValueError):
        fit_rate([1, 2, 3], [1e-3, 0, 1e-4])


def test_dominance():
    C, spread = dominance([2e-3, 1e-3, 5e-4], [1e-2, 5e-3, 2.5e-3])
    assert C == pytest.approx(0.2) and spread == pytest.approx(1.0)
    C, spread = dominance([2e-3, 1e-4], [1e-2, 1e-2])
    assert C == pytest.approx(0.2) and spread == pytest.approx(20.0)


def test_series_validation():
    L = np.array([1.0, 0.5, 0.6])
    with pytest.raises(ValueError):
        RateSeries("small_L", L, np.zeros(3), np.zeros(3), None, "none", 0.0, 0.0, np.zeros(3))
    with pytest.raises(ValueError):
        RateSeries("small_L", L[:2], -np.ones(2), np.zeros(2), None, "none", 0.0, 0.0, np.zeros(2))


def test_large_L_reference_kinds():
    fn, kind = large_L_reference(F.cosine(1.0))
    assert fn(4.0) == pytest.approx(0.5) and "periodic" in kind
    assert large_L_reference(F.const(0.0))[0] is None


def test_flat_sweep_for_constant_coefficients(tmp_path):
    co = CoefficientSet.constant(1.0, 0.0, 1.0)
    s = sweep_small_L(co, 1, L_grid=(0.5, 0.2, 0.1))
    assert np.all(s.errors < 1e-6)
    assert s.bound_values is None
    assert any("flat" in n for n in s.notes) and s.fitted_exponent is None
    s.to_csv(tmp_path / "r.csv")
    write_summary(s, tmp_path / "r.json")
    assert (tmp_path / "r.csv").read_text().splitlines()[0] == "L,value,error,error_bar,bound,ratio"


def test_large_L_sweep_periodic_rate_shape():
    co = CoefficientSet(F.const(1.0), F.const(0.0), F.cosine(1.0, 0.5, 1.0))
    s = sweep_large_L(co, 1, L_grid=(10, 40))
    assert s.limit == pytest.approx(2.0298, abs=1e-3)
    assert np.all(s.errors < 0.1)
    assert s.errors[1] < s.errors[0]
    assert s.bound_kind == "none (c_tilde constant)"


def test_grid_validation():
    co = CoefficientSet.constant(1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        sweep_small_L(co, 1, L_grid=(2.0, 0.5))
    with pytest.raises(ValueError):
        sweep_large_L(co, 1, L_grid=(1.0, 10.0))
