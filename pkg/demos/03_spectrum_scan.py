"""Where eigenvalues start.

Below and at lambda1 of the right-hand-side operator the minimizers collapse
to zero; above it a nontrivial eigenfunction appears.  The coercive case
(p > q) minimizes the energy on the zero-q-mean cone, the Nehari case
(p < q) minimizes it on the Nehari set.
"""
from pqspec import Grid, Params, SolverOptions, compute_lambda1, scan_spectrum

grid = Grid(0.0, 1.0, 16, 2.0, 16)
opts = SolverOptions(restarts=4)
factors = (0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 4.0)

for tag, prm in (("P1", Params(0.7, 0.3, 3.0, 2.0)), ("P2", Params(0.3, 0.7, 2.0, 3.0))):
    l1 = compute_lambda1(*prm.rhs_pair, grid, opts)
    rep = scan_spectrum(prm, grid, [f * l1.lam for f in factors], opts, l1)
    print(f"{tag}: lambda1_h = {l1.lam:.6f}, threshold {rep.threshold}, monotone {rep.monotone}")
    for lam, cls, res, fmin in rep.rows:
        print(f"   lambda = {lam:10.4f}  {cls:24s} residual {res:9.2e}  F = {fmin:.6g}")
