"""Pointwise nonlocal Neumann condition on the collar, sup bounds and the
De Giorgi truncation sequence.

For an exterior point ``x`` the (p,q) Neumann condition reads

    N(v) = sum_r int_Omega |v - u(y)|^{r-2} (v - u(y)) |x - y|^{-1-r s_r} dy = 0

with ``r`` running over ``(p, s1)`` and ``(q, s2)``.  ``N`` is strictly
increasing in ``v`` and changes sign on ``[min u, max u]``, so each exterior
value is a bracketed root.  The integral over Omega uses Gauss points on the
interior cells.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .energy import GridFunction, Params, QuadratureRule, gauss_01
from .exceptions import ParameterError
from .grid import Grid


def _odd(v: np.ndarray, e: float) -> np.ndarray:
    return np.copysign(np.abs(v) ** e, v) * (v != 0)


def _check_grid(u: GridFunction, grid: Optional[Grid]) -> Grid:
    if grid is not None and grid != u.grid:
        raise ParameterError("u does not live on the given grid")
    return u.grid


class _NeumannData:
    """Quadrature of Omega plus kernel tables for every exterior node."""

    def __init__(self, u: GridFunction, terms, n_gauss: int):
        g = u.grid
        t, w = gauss_01(n_gauss)
        cells = g.interior_cells
        left = np.asarray(g.nodes)[cells]
        hw = np.asarray(g.cell_width)[cells]
        self.y = (left[:, None] + hw[:, None] * t[None, :]).ravel()
        self.w = (hw[:, None] * w[None, :]).ravel()
        U = u.values
        # written as U_i + t dU so that constants interpolate exactly
        self.uy = (U[cells, None] + t[None, :] * (U[cells + 1] - U[cells])[:, None]).ravel()
        self.ext = g.exterior_nodes
        x = np.asarray(g.nodes)[self.ext]
        dist = np.abs(x[:, None] - self.y[None, :])
        self.terms = [(r, self.w[None, :] * dist ** (-1.0 - r * s)) for s, r in terms]
        om = U[g.closed_interior_nodes]
        self.lo, self.hi = float(om.min()), float(om.max())

    def value(self, v: np.ndarray) -> np.ndarray:
        diff = v[:, None] - self.uy[None, :]
        return sum(np.sum(K * _odd(diff, r - 1.0), axis=1) for r, K in self.terms)

    def derivative(self, v: np.ndarray) -> np.ndarray:
        diff = np.abs(v[:, None] - self.uy[None, :])
        out = 0.0
        for r, K in self.terms:
            with np.errstate(divide="ignore"):
                out = out + (r - 1.0) * np.sum(K * diff ** (r - 2.0), axis=1)
        return out

    def scale(self) -> np.ndarray:
        """Per-node magnitude ``sum_r max|u|^{r-1} int_Omega K_r``."""
        amp = max(abs(self.lo), abs(self.hi), 1e-300)
        return sum(amp ** (r - 1.0) * K.sum(axis=1) for r, K in self.terms)


def _terms(prm: Params) -> list:
    return [(prm.s1, prm.p), (prm.s2, prm.q)]


def extend_exterior_terms(u: GridFunction, terms, rule: QuadratureRule = QuadratureRule()) -> GridFunction:
    """Bisection collar extension for an arbitrary list of ``(s, r)`` terms."""
    nd = _NeumannData(u, terms, rule.gauss)
    n = nd.ext.size
    lo = np.full(n, nd.lo)
    hi = np.full(n, nd.hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        active = (mid > lo) & (mid < hi)
        if not active.any():
            break
        pos = nd.value(mid) > 0
        hi = np.where(active & pos, mid, hi)
        lo = np.where(active & ~pos, mid, lo)
    # pick the bracket end with the smaller residual
    vlo, vhi = np.abs(nd.value(lo)), np.abs(nd.value(hi))
    root = np.where(vlo <= vhi, lo, hi)
    out = u.values.copy()
    out[nd.ext] = root
    return GridFunction(u.grid, out)


def extend_exterior(u: GridFunction, prm: Params, grid: Optional[Grid] = None,
                    rule: QuadratureRule = QuadratureRule()) -> GridFunction:
    """Replace collar values by the bisection root of the Neumann map.

    Interior and boundary values are kept; the input collar values are
    ignored.  The bracket ``[min u, max u]`` over the closed interval is
    halved until it cannot shrink further in floating point.
    """
    _check_grid(u, grid)
    return extend_exterior_terms(u, _terms(prm), rule)


def extend_exterior_newton(u: GridFunction, prm: Params, grid: Optional[Grid] = None,
                           rule: QuadratureRule = QuadratureRule(), max_iter: int = 400) -> GridFunction:
    """Independent route to the collar values: safeguarded Newton.

    Starts from the kernel-weighted mean of ``u`` over Omega.  A bisection
    step replaces any Newton step that leaves the current bracket, and is
    forced whenever the bracket failed to halve over two iterations (the
    derivative blows up at data values when an exponent is below 2).
    """
    grid = _check_grid(u, grid)
    nd = _NeumannData(u, _terms(prm), rule.gauss)
    n = nd.ext.size
    lo = np.full(n, nd.lo)
    hi = np.full(n, nd.hi)
    Ksum = sum(K for _, K in nd.terms)
    v = np.clip((Ksum @ nd.uy) / Ksum.sum(axis=1), lo, hi)
    widths = [hi - lo, hi - lo]
    eps = np.finfo(float).eps
    for _ in range(max_iter):
        f = nd.value(v)
        hi = np.where(f > 0, v, hi)
        lo = np.where(f <= 0, v, lo)
        mid = 0.5 * (lo + hi)
        done = (f == 0) | (hi - lo <= 4 * eps * np.maximum(np.abs(lo), np.abs(hi))) | (mid <= lo) | (mid >= hi)
        if done.all():
            break
        df = nd.derivative(v)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = v - f / df
        slow = (hi - lo) > 0.5 * widths[0]
        bad = ~np.isfinite(step) | (step <= lo) | (step >= hi) | slow
        v = np.where(done, v, np.where(bad, mid, step))
        widths = [widths[1], hi - lo]
    out = u.values.copy()
    out[nd.ext] = v
    return GridFunction(grid, out)


def neumann_residual(u: GridFunction, prm: Params, grid: Optional[Grid] = None,
                     rule: QuadratureRule = QuadratureRule()) -> GridFunction:
    """Neumann map at every collar node divided by its natural magnitude
    ``sum_r max|u|^{r-1} int_Omega |x-y|^{-1-r s_r} dy``; zero elsewhere."""
    grid = _check_grid(u, grid)
    nd = _NeumannData(u, _terms(prm), rule.gauss)
    out = np.zeros(grid.n_nodes)
    out[nd.ext] = nd.value(u.values[nd.ext]) / nd.scale()
    return GridFunction(grid, out)


@dataclass
class LinfReport:
    sup_interior: float
    sup_exterior: float
    global_sup: float
    bound_ok: bool
    exterior_ok: bool

    @property
    def factor(self) -> float:
        """Observed ``global_sup / sup_interior``."""
        return self.global_sup / self.sup_interior if self.sup_interior > 0 else math.inf

    def to_dict(self) -> dict:
        return {"sup_interior": self.sup_interior, "sup_exterior": self.sup_exterior,
                "global_sup": self.global_sup, "bound_ok": self.bound_ok,
                "exterior_ok": self.exterior_ok,
                "factor": self.factor if math.isfinite(self.factor) else None}


def linf_report(u: GridFunction, grid: Optional[Grid] = None) -> LinfReport:
    """Sup norms of the piecewise-linear ``u`` (attained at nodes).

    ``bound_ok`` checks the factor-2 global bound; ``exterior_ok`` checks the
    sharper ``sup_exterior <= sup_interior`` (a few ulps of slack allowed).
    """
    grid = _check_grid(u, grid)
    vals = np.abs(u.values)
    s_in = float(vals[grid.closed_interior_nodes].max())
    s_ex = float(vals[grid.exterior_nodes].max())
    g = max(s_in, s_ex)
    slack = 8 * np.finfo(float).eps * s_in
    return LinfReport(s_in, s_ex, g, bool(g <= 2.0 * s_in + slack), bool(s_ex <= s_in + slack))


def positive_part_power_integral(u: GridFunction, level: float, q: float) -> float:
    """Exact ``int_Omega ((u - level)^+)^q`` for piecewise-linear ``u``."""
    g = u.grid
    cells = g.interior_cells
    a = u.values[cells] - level
    b = u.values[cells + 1] - level
    h = np.asarray(g.cell_width)[cells]
    ap, bp = np.maximum(a, 0.0), np.maximum(b, 0.0)
    diff = b - a
    near = np.abs(diff) <= 1e-7 * np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-300)
    with np.errstate(divide="ignore", invalid="ignore"):
        exact = (bp ** (q + 1) - ap ** (q + 1)) / ((q + 1) * diff)
    # nearly flat cells: two-point Gauss on a (numerically) linear integrand
    t, w = gauss_01(2)
    flat = sum(wk * np.maximum(a + tk * diff, 0.0) ** q for tk, wk in zip(t, w))
    return float(np.sum(h * np.where(near, flat, exact)))


@dataclass
class DeGiorgiReport:
    levels: list = field(default_factory=list)
    masses: list = field(default_factory=list)
    limit: float = 0.0
    q: float = 2.0

    @property
    def monotone(self) -> bool:
        return all(b <= a for a, b in zip(self.masses, self.masses[1:]))

    @property
    def limit_gap(self) -> float:
        return abs(self.masses[-1] - self.limit)

    def to_dict(self) -> dict:
        return {"q": self.q, "levels": self.levels, "masses": self.masses, "limit": self.limit,
                "monotone": self.monotone, "limit_gap": self.limit_gap}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["n", "C_n", "U_n"])
        for n, (c, m) in enumerate(zip(self.levels, self.masses)):
            wr.writerow([n, f"{c:.17g}", f"{m:.17g}"])
        return buf.getvalue()


def degiorgi_sequence(u: GridFunction, q: float, n_max: int) -> DeGiorgiReport:
    """Truncation masses ``U_n = int_Omega ((u - C_n)^+)^q`` with ``C_n = 1 - 2^-n``."""
    if n_max < 1:
        raise ParameterError("n_max must be >= 1")
    if not q > 1:
        raise ParameterError("q must exceed 1")
    levels = [1.0 - 2.0 ** (-n) for n in range(n_max + 1)]
    masses = [positive_part_power_integral(u, c, q) for c in levels]
    return DeGiorgiReport(levels, masses, positive_part_power_integral(u, 1.0, q), q)
