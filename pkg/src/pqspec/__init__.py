"""Neumann eigenvalue problems for the fractional (p,q)-Laplacian on an interval.

The nonlocal forms are discretized with continuous piecewise-linear
functions on the interval plus a truncated exterior collar; collar values
are free unknowns, so variational stationarity encodes the nonlocal
Neumann condition.
"""
__version__ = "0.1.0"

from .constraints import (Regime, classify_regime, nehari_scale, normalize_lq,
                          shift_to_zero_qmean)
from .eigensolver import (EIGENPAIR, NO_SOLUTION, ScanReport, SolveResult, SolverOptions,
                          compute_lambda1, rayleigh_pq, residual, scan_spectrum, solve_at_lambda)
from .energy import (EnergyBreakdown, GridFunction, Params, QuadratureRule, f_lambda,
                     form_action, grad_f_lambda, mass_q, q_mean, seminorm)
from .exceptions import (DegenerateInputError, InfeasibleDirectionError, ParameterError,
                         PQSpecError, UnsupportedParametersError)
from .exterior import (DeGiorgiReport, LinfReport, degiorgi_sequence, extend_exterior, extend_exterior_terms,
                       extend_exterior_newton, linf_report, neumann_residual)
from .grid import CellPair, Grid, build_grid, cell_pairs
from .oracle import (DenseForm, dense_eigensolve_q2, dense_form, multistart_bruteforce,
                     reference_seminorm)

__all__ = [
    "CellPair", "DeGiorgiReport", "DegenerateInputError", "DenseForm", "EIGENPAIR",
    "EnergyBreakdown", "Grid", "GridFunction", "InfeasibleDirectionError", "LinfReport",
    "NO_SOLUTION", "PQSpecError", "ParameterError", "Params", "QuadratureRule", "Regime",
    "ScanReport", "SolveResult", "SolverOptions", "UnsupportedParametersError", "build_grid",
    "cell_pairs", "classify_regime", "compute_lambda1", "degiorgi_sequence",
    "dense_eigensolve_q2", "dense_form", "extend_exterior", "extend_exterior_newton", "extend_exterior_terms",
    "f_lambda", "form_action", "grad_f_lambda", "linf_report", "mass_q",
    "multistart_bruteforce", "nehari_scale", "neumann_residual", "normalize_lq", "q_mean",
    "rayleigh_pq", "reference_seminorm", "residual", "scan_spectrum", "seminorm",
    "shift_to_zero_qmean", "solve_at_lambda",
]
