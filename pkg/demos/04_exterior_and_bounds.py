"""Collar values, sup bounds and the De Giorgi truncations.

Given interior data, each collar value solves a scalar monotone equation
(the nonlocal Neumann condition at that point).  Bisection and Newton agree,
the collar never exceeds the interior sup, and the truncation masses
U_n = int ((u - 1 + 2^-n)^+)^q decrease to int ((u - 1)^+)^q.
"""
import numpy as np

from pqspec import (Grid, Params, SolverOptions, compute_lambda1, degiorgi_sequence, extend_exterior,
                    extend_exterior_newton, linf_report, neumann_residual, solve_at_lambda)

grid = Grid(0.0, 1.0, 32, 1.0, 16)
prm = Params(0.7, 0.3, 3.0, 2.0)
opts = SolverOptions(restarts=2)
l1 = compute_lambda1(0.3, 2.0, grid, opts)
out = solve_at_lambda(prm.with_lambda(2 * l1.lam), grid, opts, l1)
print("solve:", out.classification, f"residual {out.residual_inf:.1e}")

ext = extend_exterior(out.u, prm)
newton = extend_exterior_newton(out.u, prm)
print("bisection vs Newton:", np.abs(ext.values - newton.values).max())
print("pointwise residual after extension:", np.abs(neumann_residual(ext, prm).values).max())

amp = np.abs(out.u.values).max()
gap = np.abs(ext.values - out.u.values)[:grid.n_ext] / amp
print("free collar vs pointwise root, outer end first:", np.array2string(gap[:8], precision=2))

print("sup report:", linf_report(out.u).to_dict())

# Scale so the sup is 2: the truncations then see something above level 1.
v = out.u * (2.0 / amp)
rep = degiorgi_sequence(v, 2.0, 12)
print(rep.to_csv())
print("monotone:", rep.monotone, " limit:", rep.limit, " gap:", rep.limit_gap)
