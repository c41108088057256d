"""Independent reference computations.

* :func:`dense_eigensolve_q2` solves the linear (q = 2) Neumann pencil with
  dense LAPACK after eliminating the collar unknowns.
* :func:`reference_seminorm` integrates the seminorm by brute force on a
  10x refined mesh with explicit geometric grading of every singular pair.
* :func:`multistart_bruteforce` re-solves tiny nonlinear instances with a
  general-purpose constrained optimizer from many starts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.optimize import minimize

from .constraints import COERCIVE, classify_regime, shift_root
from .eigensolver import (EIGENPAIR, NO_SOLUTION, RESIDUAL_TOL, SolveResult, SolverOptions,
                          _cosine_start, residual)
from .energy import (EnergyBreakdown, GridFunction, Params, QuadratureRule, gauss_01,
                     get_assembly)
from .exceptions import DegenerateInputError, ParameterError
from .grid import Grid

DENSE_NODE_CAP = 2000
BRUTE_NODE_CAP = 12


@dataclass
class DenseForm:
    A: np.ndarray
    M: np.ndarray
    interior: np.ndarray
    exterior: np.ndarray

    def schur(self) -> np.ndarray:
        """``A_ii - A_ie A_ee^{-1} A_ei`` on the closed interior nodes."""
        i, e = self.interior, self.exterior
        Aee = self.A[np.ix_(e, e)]
        Aei = self.A[np.ix_(e, i)]
        X = scipy.linalg.solve(Aee, Aei, assume_a="pos")
        S = self.A[np.ix_(i, i)] - Aei.T @ X
        return 0.5 * (S + S.T)


def dense_form(s: float, grid: Grid, rule: QuadratureRule = QuadratureRule()) -> DenseForm:
    """Dense ``r = 2`` form and interior mass matrices."""
    if grid.n_nodes > DENSE_NODE_CAP:
        raise ParameterError(f"dense oracle limited to {DENSE_NODE_CAP} nodes, grid has {grid.n_nodes}")
    asm = get_assembly(grid, rule)
    A = asm.stiffness_matrix(s).toarray()
    M = asm.mass_matrix().toarray()
    return DenseForm(0.5 * (A + A.T), 0.5 * (M + M.T), grid.closed_interior_nodes, grid.exterior_nodes)


def dense_eigensolve_q2(s2: float, grid: Grid,
                        rule: QuadratureRule = QuadratureRule()) -> list[tuple[float, GridFunction]]:
    """Eigenpairs of the linear Neumann problem, ascending.

    Collar unknowns carry no mass, so they are eliminated exactly by the
    Schur complement; each eigenvector is then extended to the collar by
    ``u_e = -A_ee^{-1} A_ei u_i`` and normalized to unit L^2(Omega) mass.
    """
    form = dense_form(s2, grid, rule)
    i, e = form.interior, form.exterior
    S = form.schur()
    Mi = form.M[np.ix_(i, i)]
    vals, vecs = scipy.linalg.eigh(S, Mi)
    Aee = form.A[np.ix_(e, e)]
    Aei = form.A[np.ix_(e, i)]
    ext = -scipy.linalg.solve(Aee, Aei @ vecs, assume_a="pos")
    out = []
    for k in range(vals.size):
        U = np.zeros(grid.n_nodes)
        U[i] = vecs[:, k]
        U[e] = ext[:, k]
        U /= math.sqrt(float(vecs[:, k] @ Mi @ vecs[:, k]))
        out.append((float(vals[k]), GridFunction(grid, U)))
    return out


# --------------------------------------------------------------------------
# brute seminorm
# --------------------------------------------------------------------------
def _graded_self(h: np.ndarray, slope: np.ndarray, s: float, r: float, layers: int,
                 t: np.ndarray, w: np.ndarray) -> float:
    """``iint_{[0,h]^2} |g (x-y)|^r |x-y|^{-1-sr}`` in the difference
    coordinate, graded panels ``[h 2^{-k-1}, h 2^{-k}]`` plus a plain inner one."""
    total = 0.0
    beta = r - 1.0 - s * r
    for k in range(layers + 1):
        hi = 2.0 ** (-k)
        lo = 0.0 if k == layers else 0.5 * hi
        z = lo + (hi - lo) * t
        wz = (hi - lo) * w
        # int_0^h 2 (h - z) z^beta dz with z scaled by h
        f = np.sum(wz * 2.0 * (1.0 - z) * z ** beta)
        total += f
    return float(np.sum(np.abs(slope) ** r * h ** (beta + 2.0)) * total)


def reference_seminorm(u: GridFunction, s: float, r: float, subdivide: int = 10,
                       layers: int = 12, gauss: int = 8, tail: bool = True) -> float:
    """Seminorm by direct quadrature on a mesh refined ``subdivide`` times.

    Every pair of refined cells touching Omega is integrated separately:
    identical cells by graded panels in the difference coordinate, touching
    cells by ``layers`` explicit L-shaped graded shells around the shared
    corner (two tensor rectangles each) plus the innermost square, and the
    rest by a plain tensor rule.  Exterior-exterior pairs are dropped.  With
    ``tail`` the far field (``u`` continued by its outermost collar values)
    is added exactly as in the production assembly's definition.
    """
    g = u.grid
    t, w = gauss_01(gauss)
    nodes = np.asarray(g.nodes)
    # refined nodes and values (u is linear on each coarse cell)
    frac = np.arange(subdivide) / subdivide
    xs = np.concatenate([(nodes[:-1, None] + np.diff(nodes)[:, None] * frac).ravel(), nodes[-1:]])
    us = np.concatenate([(u.values[:-1, None] + np.diff(u.values)[:, None] * frac).ravel(),
                         u.values[-1:]])
    inside = np.repeat(np.asarray(g.cell_is_interior), subdivide)
    n = inside.size
    h = np.diff(xs)
    slope = np.diff(us) / h

    # identical cells
    total = _graded_self(h[inside], slope[inside], s, r, layers, t, w)

    def u_at(c, x):
        return us[c] + slope[c] * (x - xs[c])

    def rect(ci, cj, ax, bx, ay, by):
        # tensor Gauss over [ax,bx] x [ay,by] subsets of cells ci (x) and cj (y)
        X = ax[:, None] + (bx - ax)[:, None] * t[None, :]
        Y = ay[:, None] + (by - ay)[:, None] * t[None, :]
        WX = (bx - ax)[:, None] * w[None, :]
        WY = (by - ay)[:, None] * w[None, :]
        ux = u_at(ci[:, None], X)
        uy = u_at(cj[:, None], Y)
        num = np.abs(ux[:, :, None] - uy[:, None, :]) ** r
        ker = np.abs(X[:, :, None] - Y[:, None, :]) ** (-1.0 - s * r)
        return float(np.sum(WX[:, :, None] * WY[:, None, :] * num * ker))

    # touching cells: ci on the left, ci+1 on the right, corner at xs[ci+1]
    ci = np.arange(n - 1)
    ci = ci[inside[ci] | inside[ci + 1]]
    cj = ci + 1
    x0 = xs[cj]
    h1, h2 = h[ci], h[cj]
    touch = 0.0
    for k in range(layers):
        a1, a2 = h1 * 2.0 ** (-k), h2 * 2.0 ** (-k)
        b1, b2 = 0.5 * a1, 0.5 * a2
        touch += rect(ci, cj, x0 - a1, x0 - b1, x0, x0 + a2)
        touch += rect(ci, cj, x0 - b1, x0, x0 + b2, x0 + a2)
        touch += rect(ci, cj, x0 - b1, x0, x0, x0 + b2) if k == layers - 1 else 0.0
    total += 2.0 * touch

    # disjoint pairs, in row blocks to bound memory
    far = 0.0
    idx = np.arange(n)
    for i in range(n):
        j = idx[i + 2:]
        j = j[inside[i] | inside[j]]
        if j.size == 0:
            continue
        ii = np.full(j.size, i)
        far += rect(ii, j, xs[ii], xs[ii + 1], xs[j], xs[j + 1])
    total += 2.0 * far

    if tail:
        # far field: u continued by its outermost collar values
        ci = np.flatnonzero(inside)
        X = xs[ci][:, None] + h[ci][:, None] * t[None, :]
        WX = h[ci][:, None] * w[None, :]
        ux = u_at(ci[:, None], X)
        for end in (0, -1):
            d = np.abs(X - xs[end])
            total += 2.0 * float(np.sum(WX * np.abs(ux - us[end]) ** r * d ** (-s * r))) / (s * r)
    return total


# --------------------------------------------------------------------------
# brute-force multistart
# --------------------------------------------------------------------------
def _pattern_starts(grid: Grid) -> list[np.ndarray]:
    n = grid.n_nodes
    out = []
    for i in grid.closed_interior_nodes:
        e = np.zeros(n)
        e[i] = 1.0
        out += [e, -e]
    x = np.clip(np.asarray(grid.nodes), grid.a, grid.b)
    for k in (1, 3, 5):
        c = np.cos(k * np.pi * (x - grid.a) / grid.length)
        out += [c, -c]
    out.append(_cosine_start(grid))
    return out


def multistart_bruteforce(prm: Params, grid: Grid, n_starts: int = 64,
                          opts: SolverOptions = SolverOptions(),
                          rule: QuadratureRule = QuadratureRule(),
                          problem: str = "energy") -> SolveResult:
    """Best of many SLSQP runs on a tiny grid.

    ``problem="lambda1"`` minimizes ``semi_q / mass_q`` under the explicit
    constraints ``q_mean = 0`` and ``mass_q = 1`` (exponent ``prm.m``, order
    of the rhs operator).  ``problem="energy"`` minimizes the ray-reduced
    functional ``Phi(u) = F(t(u) u)`` over shapes with the same constraints,
    where ``t(u)`` is the closed-form critical point of ``t -> F(t u)``;
    on the coercive branch shapes without a negative ray give ``Phi = 0``
    (the trivial solution), on the nehari branch they are excluded by an
    inequality constraint.
    """
    if grid.n_nodes > BRUTE_NODE_CAP:
        raise ParameterError(f"brute force limited to {BRUTE_NODE_CAP} nodes, grid has {grid.n_nodes}")
    if n_starts < 64:
        raise ParameterError("multistart_bruteforce needs n_starts >= 64")
    if problem not in ("energy", "lambda1"):
        raise ParameterError(f"unknown problem {problem!r}")
    A = get_assembly(grid, rule)
    m = prm.m
    (s_o, r_o), (s_r, r_r) = prm.other_pair, prm.rhs_pair
    regime = classify_regime(prm)
    coercive = regime.branch == COERCIVE

    if problem == "energy" and prm.lam == 0:
        zero = np.zeros(grid.n_nodes)
        return SolveResult(0.0, GridFunction(grid, zero), A.energy(zero, prm), 0.0, 0, True,
                           NO_SOLUTION, regime, None, 0)

    cons = [{"type": "eq", "fun": lambda U: A.q_mean(U, m)},
            {"type": "eq", "fun": lambda U: A.mass(U, m) - 1.0}]

    if problem == "lambda1":
        def obj(U):
            return A.seminorm(U, s_r, r_r) / A.mass(U, m)
    else:
        c = 1.0 / r_o - 1.0 / r_r
        e = r_r / (r_r - r_o)

        def gap(U):
            return prm.lam * A.mass(U, m) - A.seminorm(U, s_r, r_r)

        floor = 1e-9 * prm.lam

        def obj(U):
            b = gap(U)
            a = A.seminorm(U, s_o, r_o)
            if coercive and b <= 0:
                return 0.0
            # t^{r_o - r_r} = b / a and Phi = c * a * t^{r_o}; clamp keeps it finite
            return c * a ** e * max(b, floor) ** (-r_o / (r_r - r_o))

        if not coercive:
            cons.append({"type": "ineq", "fun": lambda U: gap(U) - floor})

    def prepare(U0):
        U0 = U0 - shift_root(A, U0, m)
        return U0 / A.mass(U0, m) ** (1.0 / m)

    rng = np.random.default_rng(opts.rng_seed)
    base = _cosine_start(grid)
    starts = _pattern_starts(grid) + [rng.standard_normal(grid.n_nodes) for _ in range(n_starts)]
    best = None
    for k, U0 in enumerate(starts):
        if np.ptp(A.B @ U0) == 0:
            continue
        try:
            U0 = prepare(U0)
            if problem == "energy" and not coercive:
                # pull random shapes toward the first mode until they see lambda
                theta = 1.0
                while gap(U0) <= floor and theta > 1e-3:
                    theta *= 0.5
                    U0 = prepare(base + theta * U0 / np.abs(U0).max())
                if gap(U0) <= floor:
                    continue
        except DegenerateInputError:
            continue
        res = minimize(obj, U0, method="SLSQP", constraints=cons,
                       options={"ftol": 1e-15, "maxiter": 500})
        if not np.all(np.isfinite(res.x)):
            continue
        feas = abs(A.q_mean(res.x, m)) <= 1e-8 and abs(A.mass(res.x, m) - 1.0) <= 1e-8
        val = float(obj(res.x))
        if feas and math.isfinite(val) and val < 1e299 and (best is None or val < best[0]):
            best = (val, k, res.x, res.nit)

    if best is None:
        zero = np.zeros(grid.n_nodes)
        return SolveResult(prm.lam, GridFunction(grid, zero), A.energy(zero, prm), math.nan, 0, False,
                           NO_SOLUTION, regime, None, len(starts))
    val, _, U, nit = best
    if problem == "lambda1":
        energies = EnergyBreakdown(0.0, A.seminorm(U, s_r, r_r), A.mass(U, m), 0.0)
        return SolveResult(val, GridFunction(grid, U), energies, math.nan, nit, True,
                           EIGENPAIR, None, None, len(starts))
    b = gap(U)
    if b <= 0:
        zero = np.zeros(grid.n_nodes)
        return SolveResult(prm.lam, GridFunction(grid, zero), A.energy(zero, prm), math.nan, nit, True,
                           NO_SOLUTION, regime, None, len(starts))
    t = (A.seminorm(U, s_o, r_o) / b) ** (1.0 / (r_r - r_o))
    u = GridFunction(grid, t * U)
    res, _ = residual(u, prm, rule)
    nehari_min = None if coercive else val
    return SolveResult(prm.lam, u, A.energy(t * U, prm), res, nit, True,
                       EIGENPAIR if res <= RESIDUAL_TOL else NO_SOLUTION, regime, nehari_min, len(starts))

