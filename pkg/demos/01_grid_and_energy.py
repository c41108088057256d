"""Grids, the discrete Gagliardo seminorm and the energy.

The unknowns are nodal values of a continuous piecewise-linear function on
the interval plus an exterior collar.  Constants cost nothing, seminorms
scale like |t|^r, and a hat function can be checked against a slow graded
quadrature that shares no code with the production rows.
"""
import numpy as np

from pqspec import (Grid, GridFunction, Params, QuadratureRule, f_lambda, mass_q,
                    reference_seminorm, seminorm)

grid = Grid(a=0.0, b=1.0, n_int=8, L=1.0, n_ext=4)
print(grid)
print("nodes:", np.round(grid.nodes, 3))
print("tags: ", grid.tags)

# A single interior hat.
hat = GridFunction.hat(grid, grid.n_ext + 4)
for s in (0.3, 0.5, 0.7):
    fast = seminorm(hat, s, 2.0)
    slow = reference_seminorm(hat, s, 2.0)
    print(f"s={s}: production {fast:.10f}  graded reference {slow:.10f}  rel {abs(fast / slow - 1):.1e}")

# Constants lie in the kernel; scaling is r-homogeneous.
print("constant:", seminorm(GridFunction.constant(grid, 3.0), 0.4, 2.5))
u = GridFunction.from_callable(grid, lambda x: np.cos(np.pi * np.clip(x, 0, 1)))
print("homogeneity ratio:", seminorm(u * 2.0, 0.4, 2.5) / seminorm(u, 0.4, 2.5), "vs", 2.0 ** 2.5)

# The outermost collar value also stands for everything beyond L.  Turning
# that far-field term off shows how much of the form lives out there.
for tail in (True, False):
    print(f"tail={tail}: [u]^2 = {seminorm(u, 0.3, 2.0, QuadratureRule(tail=tail)):.6f}")

prm = Params(s1=0.7, s2=0.3, p=3.0, q=2.0, lam=5.0)
e = f_lambda(u, prm)
print("energy breakdown:", e.to_dict())
print("L^2 mass on the interval:", mass_q(u, 2.0))
