import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from apspread.ap_core import APFunction
from apspread.hj_cell import CoefficientSet
from apspread.kpp_sim import Bump, SimConfig, SimulationError, empirical_speed, front_positions, simulate

F = APFunction
SQ2 = math.sqrt(2.0)
SMALL = dict(X=200.0, nx=2001, dt=0.02, T=60.0, sample_every=25)


def cfg(**kw):
    return SimConfig(**{**SMALL, **kw})


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(level=1.0)
    with pytest.raises(ValueError):
        SimConfig(init=Bump(height=1.5))
    with pytest.raises(ValueError):
        SimConfig(nx=2)


def test_front_positions_interpolate():
    x = np.linspace(-2, 2, 5)
    u = np.array([0.0, 0.4, 1.0, 0.6, 0.0])
    xr, xl = front_positions(x, u, 0.5)
    assert xr == pytest.approx(1 + 0.1 / 0.6)
    assert xl == pytest.approx(-1 + 0.1 / 0.6)
    assert all(math.isnan(v) for v in front_positions(x, 0 * u, 0.5))


def test_constant_speed_two():
    s = simulate(CoefficientSet.constant(1.0, 0.0, 1.0), 1.0, cfg())
    assert s.usable
    for side in (1, -1):
        v, se = empirical_speed(s, side)
        # finite-time speed sits below 2 by the logarithmic delay
        assert v == pytest.approx(2.0, rel=0.03)
        assert v < 2.0


def test_invariant_region_and_mass_growth():
    co = CoefficientSet(F.cosine(1.0, 0.3, 1.0), F.cosine(SQ2, 0.3), F.cosine(1.0, 0.5, 1.0), F.cosine(SQ2, 0.3))
    s = simulate(co, 2.0, cfg(T=30.0))
    assert np.all(s.min_values >= -1e-12) and np.all(s.max_values <= 1 + 1e-12)
    assert np.all(np.diff(s.masses[5:]) > 0)


def test_drift_signs():
    # +b u_x transports mass toward -x: right front slower, left front faster
    s = simulate(CoefficientSet.constant(1.0, 1.0, 1.0), 1.0, cfg())
    vr, _ = empirical_speed(s, 1)
    vl, _ = empirical_speed(s, -1)
    assert vr == pytest.approx(1.0, rel=0.06)
    assert vl == pytest.approx(3.0, rel=0.03)


def test_bump_width_independence():
    co = CoefficientSet.constant(1.0, 0.0, 1.0)
    v1, s1 = empirical_speed(simulate(co, 1.0, cfg(init=Bump(width=1.0))), 1)
    v2, s2 = empirical_speed(simulate(co, 1.0, cfg(init=Bump(width=4.0))), 1)
    assert abs(v1 - v2) < 2 * max(s1, s2)


def test_level_independence():
    co = CoefficientSet.constant(1.0, 0.0, 1.0)
    vs = [empirical_speed(simulate(co, 1.0, cfg(level=lev)), 1)[0] for lev in (0.2, 0.5, 0.8)]
    assert max(vs) - min(vs) < 0.01 * max(vs)


def test_comparison_with_enlarged_perturbation():
    base = CoefficientSet(F.const(1.0), F.const(0.0), F.cosine(1.0, 0.5, 1.0))
    rich = base.with_c_tilde(F.from_terms(0.3, [(SQ2, 0.3, 0.0)]))
    c = cfg(T=30.0)
    u0 = simulate(base, 3.0, c).u_final
    u1 = simulate(rich, 3.0, c).u_final
    assert np.all(u1 >= u0 - 1e-10)


def test_unusable_when_front_reaches_boundary():
    s = simulate(CoefficientSet.constant(1.0, 0.0, 1.0), 1.0, cfg(X=50.0, nx=501, T=40.0))
    assert not s.usable
    with pytest.raises(SimulationError):
        empirical_speed(s)


def test_peclet_guard():
    co = CoefficientSet.constant(0.01, 0.0, 1.0)
    co_b = CoefficientSet(F.const(0.01), F.const(0.15), F.const(1.0))
    simulate(co, 1.0, cfg(T=1.0))
    with pytest.raises(SimulationError):
        simulate(co_b, 1.0, cfg(T=1.0))


def test_reaction_step_guard():
    with pytest.raises(SimulationError):
        simulate(CoefficientSet.constant(1.0, 0.0, 1.0), 1.0, cfg(dt=1.5, T=3.0))


def test_csv_outputs(tmp_path):
    s = simulate(CoefficientSet.constant(1.0, 0.0, 1.0), 1.0, cfg(T=2.0, snapshot_every=50, nx=201, X=20.0))
    s.to_csv(tmp_path / "f.csv")
    s.snapshots_to_csv(tmp_path / "u.csv")
    assert (tmp_path / "f.csv").read_text().splitlines()[0] == "t,x_plus,x_minus,mass,max_u"
    assert len((tmp_path / "u.csv").read_text().splitlines()) == 1 + 2 * 201


@settings(max_examples=5, deadline=None)
@given(st.floats(0.0, 0.6), st.floats(0.0, 0.5), st.floats(0.5, 3.0))
def test_invariant_region_property(amp_c, amp_b, L):
    co = CoefficientSet(F.const(1.0), F.cosine(1.0, amp_b), F.cosine(1.0, amp_c, 1.0), F.cosine(SQ2, 0.2))
    s = simulate(co, L, cfg(T=15.0, X=80.0, nx=801))
    assert np.all(s.min_values >= -1e-12) and np.all(s.max_values <= 1 + 1e-12)
