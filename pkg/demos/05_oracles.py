"""Brute force on a tiny grid.

With eleven nodes, SLSQP from many random and patterned starts can afford
to look for the global minimum directly.  The production solvers must land
on the same values.
"""
from pqspec import (Grid, Params, SolverOptions, compute_lambda1, dense_eigensolve_q2,
                    multistart_bruteforce, solve_at_lambda)

tiny = Grid(0.0, 1.0, 4, 0.5, 3)
prm = Params(0.7, 0.3, 3.0, 2.0)

bf = multistart_bruteforce(prm, tiny, problem="lambda1")
l1 = compute_lambda1(0.3, 2.0, tiny, SolverOptions(restarts=4))
print(f"lambda1: brute {bf.lam:.12f}  solver {l1.lam:.12f}  dense {dense_eigensolve_q2(0.3, tiny)[1][0]:.12f}")

at = prm.with_lambda(2 * l1.lam)
be = multistart_bruteforce(at, tiny)
sv = solve_at_lambda(at, tiny, SolverOptions(restarts=4), l1)
print(f"min F at 2*lambda1: brute {be.energies.f_lambda:.12f}  solver {sv.energies.f_lambda:.12f}")
