"""Spreading speeds of Fisher-KPP fronts in two-scale almost periodic media."""
from .ap_core import APFunction, bounds, harmonic_mean, mean_composite, rho, theta
from .hj_cell import CellProblem, CoefficientSet, SolverParams, effective_hamiltonian, iota, solve_discounted
from .eigen import hbar, j_curves, lambda_finite, lambda_infinity, lambda_zero, positivity_gap
from .speed import sandwich_bounds, speed, speed_finite, speed_infinity, speed_zero
from .kpp_sim import SimConfig, empirical_speed, simulate

__version__ = "0.1.0"
