"""Discrete Gagliardo seminorms, nonlinear forms and the energy functional.

Every double integral over the interaction region is replaced by a fixed
quadrature of the form ``sum_k W_k |(D U)_k|^r`` where ``D`` samples the
difference ``u(x) - u(y)`` at quadrature point pairs and ``W_k`` carries the
kernel ``|x - y|^(-1 - s r)``.  Gradients are exact derivatives of that sum,
so finite differences of the discrete energy match them to round-off.

Quadrature per cell pair:

* identical cells: ``u(x) - u(y) = g (x - y)`` exactly, so the pair reduces to
  ``|g|^r`` times a 1-D integral in the difference coordinate, evaluated by
  graded Gauss panels toward ``z = 0``;
* cells sharing a node: the integrand is homogeneous around the shared node,
  so the graded L-shaped layers are scaled copies of the outermost one and
  the layer sum is a geometric series (closed analytically);
* disjoint cells: a tensor Gauss rule;
* beyond the collar: ``u`` is continued by the outermost collar value, so the
  far-field pairs reduce to a Gauss sum over Omega with the kernel integrated
  exactly over the half-line.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .exceptions import ParameterError, UnsupportedParametersError
from .grid import Grid, cell_pair_arrays


# --------------------------------------------------------------------------
# parameters and data containers
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class Params:
    """Problem parameters.

    ``rhs_exp`` selects the exponent of the right-hand side: ``"q"`` for
    ``lam |u|^{q-2} u`` (default) or ``"p"`` for the swapped problem.
    The kernel normalization constant is 1.
    """

    s1: float
    s2: float
    p: float
    q: float
    lam: float = 0.0
    rhs_exp: str = "q"

    def __post_init__(self):
        for name in ("s1", "s2", "p", "q", "lam"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float, np.floating, np.integer)) or not np.isfinite(v):
                raise ParameterError(f"{name} must be a finite real, got {v!r}")
            object.__setattr__(self, name, float(v))
        if not (0 < self.s1 < 1 and 0 < self.s2 < 1):
            raise ParameterError(f"fractional orders must lie in (0,1), got s1={self.s1}, s2={self.s2}")
        if not (self.p > 1 and self.q > 1):
            raise ParameterError(f"exponents must exceed 1, got p={self.p}, q={self.q}")
        if self.p == self.q:
            raise UnsupportedParametersError(f"unsupported parameters: p == q == {self.p} (requires p != q)")
        if self.lam < 0:
            raise ParameterError(f"lambda must be >= 0, got {self.lam}")
        if self.rhs_exp not in ("q", "p"):
            raise ParameterError(f"rhs_exp must be 'q' or 'p', got {self.rhs_exp!r}")

    @property
    def sigma(self) -> float:
        return max(self.s1, self.s2)

    @property
    def theta(self) -> float:
        return max(self.p, self.q)

    @property
    def m(self) -> float:
        """Exponent of the right-hand side."""
        return self.q if self.rhs_exp == "q" else self.p

    @property
    def rhs_pair(self) -> tuple[float, float]:
        """``(s, r)`` of the operator whose exponent matches the right-hand side."""
        return (self.s2, self.q) if self.rhs_exp == "q" else (self.s1, self.p)

    @property
    def other_pair(self) -> tuple[float, float]:
        return (self.s1, self.p) if self.rhs_exp == "q" else (self.s2, self.q)

    def with_lambda(self, lam: float) -> "Params":
        return Params(self.s1, self.s2, self.p, self.q, lam, self.rhs_exp)

    def to_dict(self) -> dict:
        return {"s1": self.s1, "s2": self.s2, "p": self.p, "q": self.q,
                "lambda": self.lam, "rhs_exp": self.rhs_exp}


class GridFunction:
    """Nodal values of a continuous piecewise-linear function on a grid."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        vals = np.array(values, dtype=float).reshape(-1)
        if vals.size != grid.n_nodes:
            raise ParameterError(f"expected {grid.n_nodes} nodal values, got {vals.size}")
        if not np.all(np.isfinite(vals)):
            raise ParameterError("nodal values must be finite")
        self.grid = grid
        self.values = vals

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "GridFunction":
        return cls(grid, np.full(grid.n_nodes, float(c)))

    @classmethod
    def hat(cls, grid: Grid, i: int) -> "GridFunction":
        v = np.zeros(grid.n_nodes)
        v[i] = 1.0
        return cls(grid, v)

    @classmethod
    def from_callable(cls, grid: Grid, f) -> "GridFunction":
        return cls(grid, f(np.asarray(grid.nodes)))

    def copy(self) -> "GridFunction":
        return GridFunction(self.grid, self.values.copy())

    def _check(self, other: "GridFunction"):
        if other.grid != self.grid:
            raise ParameterError("grid functions live on different grids")

    def __add__(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return GridFunction(self.grid, self.values + other.values)
        return GridFunction(self.grid, self.values + other)

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return GridFunction(self.grid, self.values - other.values)
        return GridFunction(self.grid, self.values - other)

    def __mul__(self, t):
        return GridFunction(self.grid, self.values * float(t))

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def __repr__(self):
        return f"GridFunction(n_nodes={self.values.size})"


@dataclass(frozen=True)
class EnergyBreakdown:
    semi_p: float
    semi_q: float
    mass_q: float
    f_lambda: float

    def to_dict(self) -> dict:
        return {"semi_p": self.semi_p, "semi_q": self.semi_q,
                "mass_q": self.mass_q, "f_lambda": self.f_lambda}


@dataclass(frozen=True)
class QuadratureRule:
    """Quadrature knobs.

    ``gauss`` points per direction on each panel.  ``panels`` is the number
    of explicit graded layers used by the brute reference integrator in
    :mod:`pqspec.oracle`; the production assembly closes the layer sum
    analytically, which is exact for piecewise-linear data.

    ``tail`` keeps the interaction of Omega with the far field: beyond the
    collar ``u`` is continued by its outermost collar value, and the
    ``y``-integral of the kernel over each half-line is done in closed form.
    With ``tail=False`` those interactions are dropped.
    """

    panels: int = 12
    gauss: int = 5
    tail: bool = True

    def __post_init__(self):
        if self.panels < 1 or self.gauss < 1:
            raise ParameterError("panels and gauss must be >= 1")


# --------------------------------------------------------------------------
# assembly
# --------------------------------------------------------------------------
SAME, TOUCH, FAR, TAIL = 0, 1, 2, 3


def gauss_01(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def self_cell_integral(h, s: float, r: float, n_gauss: int = 5) -> np.ndarray:
    """``iint_{[0,h]^2} |x - y|^beta dx dy = 2 h^(beta+2) / ((beta+1)(beta+2))``
    with ``beta = r - 1 - s r > -1``.  ``n_gauss`` is accepted for symmetry
    with the other quadrature helpers and ignored."""
    h = np.asarray(h, dtype=float)
    beta = r - 1.0 - s * r
    return 2.0 * h ** (beta + 2.0) / ((beta + 1.0) * (beta + 2.0))


class Assembly:
    """Quadrature rows for one grid and rule (see module docstring)."""

    def __init__(self, grid: Grid, rule: QuadratureRule):
        self.grid = grid
        self.rule = rule
        G = rule.gauss
        tg, wg = gauss_01(G)
        nodes = np.asarray(grid.nodes)
        width = np.asarray(grid.cell_width)
        I, J = cell_pair_arrays(grid)

        cols, coefs, base, dist, kind = [], [], [], [], []

        # identical cells: one row per interior cell
        same = I[I == J]
        cols.append(np.stack([same, same + 1], axis=1))
        coefs.append(np.tile([-1.0, 1.0], (same.size, 1)))
        base.append(np.ones(same.size))
        dist.append(width[same])
        kind.append(np.full(same.size, SAME))

        # cells sharing a node: outermost graded layer, 3 rectangles
        touch_mask = J == I + 1
        ci = I[touch_mask]
        h1, h2 = width[ci], width[ci + 1]
        x0 = nodes[ci + 1]
        rects = [((0.5, 1.0), (0.0, 0.5)), ((0.0, 0.5), (0.5, 1.0)), ((0.5, 1.0), (0.5, 1.0))]
        for (xa, xb), (ya, yb) in rects:
            for a_ in range(G):
                for b_ in range(G):
                    fx = xa + (xb - xa) * tg[a_]      # xi / h1
                    fy = ya + (yb - ya) * tg[b_]      # eta / h2
                    wt = (xb - xa) * (yb - ya) * wg[a_] * wg[b_]
                    xi, eta = fx * h1, fy * h2
                    # x = x0 - xi in cell ci (local t = 1 - fx); y = x0 + eta in cell ci+1 (local t = fy)
                    tx = 1.0 - fx
                    cols.append(np.stack([ci, ci + 1, ci + 1, ci + 2], axis=1))
                    coefs.append(np.stack([np.full_like(h1, 1.0 - tx), np.full_like(h1, tx),
                                           -np.full_like(h1, 1.0 - fy), -np.full_like(h1, fy)], axis=1))
                    base.append(wt * h1 * h2)
                    dist.append(xi + eta)
                    kind.append(np.full(ci.size, TOUCH))

        # disjoint cells: tensor rule
        far_mask = J > I + 1
        fi, fj = I[far_mask], J[far_mask]
        hi, hj = width[fi], width[fj]
        for a_ in range(G):
            for b_ in range(G):
                x = nodes[fi] + tg[a_] * hi
                y = nodes[fj] + tg[b_] * hj
                cols.append(np.stack([fi, fi + 1, fj, fj + 1], axis=1))
                coefs.append(np.stack([np.full_like(hi, 1.0 - tg[a_]), np.full_like(hi, tg[a_]),
                                       -np.full_like(hi, 1.0 - tg[b_]), -np.full_like(hi, tg[b_])], axis=1))
                base.append(wg[a_] * wg[b_] * hi * hj)
                dist.append(y - x)
                kind.append(np.full(fi.size, FAR))

        # far field: u continued by its outermost collar value beyond the collar
        if rule.tail:
            cells = grid.interior_cells
            for end, side in ((0, -1.0), (grid.n_nodes - 1, 1.0)):
                for a_ in range(G):
                    x = nodes[cells] + tg[a_] * width[cells]
                    cols.append(np.stack([cells, cells + 1, np.full_like(cells, end),
                                          np.full_like(cells, end)], axis=1))
                    coefs.append(np.stack([np.full(cells.size, 1.0 - tg[a_]), np.full(cells.size, tg[a_]),
                                           np.full(cells.size, -1.0), np.zeros(cells.size)], axis=1))
                    base.append(wg[a_] * width[cells])
                    dist.append(side * (nodes[end] - x))
                    kind.append(np.full(cells.size, TAIL))

        self._kind = np.concatenate(kind)
        self._base = np.concatenate(base)
        self._dist = np.concatenate(dist)
        n_rows = self._kind.size
        col_list = list(cols)
        coef_list = list(coefs)
        # pad the 2-column same-cell block to 4 columns
        col_list[0] = np.concatenate([col_list[0], col_list[0]], axis=1)
        coef_list[0] = np.concatenate([coef_list[0], np.zeros_like(coef_list[0])], axis=1)
        C = np.concatenate(col_list)
        V = np.concatenate(coef_list)
        rows = np.repeat(np.arange(n_rows), 4)
        D = sp.csr_matrix((V.ravel(), (rows, C.ravel())), shape=(n_rows, grid.n_nodes))
        D.sum_duplicates()
        self.D = D
        self.DT = D.T.tocsr()

        # interior mass quadrature
        Gm = max(G, 2)
        tm, wm = gauss_01(Gm)
        cells = grid.interior_cells
        mcells = np.repeat(cells, Gm)
        mt = np.tile(tm, cells.size)
        self.mass_w = np.tile(wm, cells.size) * width[mcells]
        mrows = np.repeat(np.arange(mcells.size), 2)
        mcols = np.stack([mcells, mcells + 1], axis=1).ravel()
        mvals = np.stack([1.0 - mt, mt], axis=1).ravel()
        self.B = sp.csr_matrix((mvals, (mrows, mcols)), shape=(mcells.size, grid.n_nodes))
        self.BT = self.B.T.tocsr()
        self._wcache: dict = {}

    @property
    def n_rows(self) -> int:
        return self._kind.size

    def weights(self, s: float, r: float) -> np.ndarray:
        key = (float(s), float(r))
        w = self._wcache.get(key)
        if w is None:
            w = np.empty(self.n_rows)
            k = self._kind
            m = k == SAME
            hh = self._dist[m]
            w[m] = self_cell_integral(hh, s, r, self.rule.gauss) / hh ** r
            m = k == TOUCH
            rho = 2.0 ** (-(r - s * r + 1.0))
            w[m] = 2.0 * self._base[m] * self._dist[m] ** (-1.0 - s * r) / (1.0 - rho)
            m = k == FAR
            w[m] = 2.0 * self._base[m] * self._dist[m] ** (-1.0 - s * r)
            m = k == TAIL
            w[m] = 2.0 * self._base[m] * self._dist[m] ** (-s * r) / (s * r)
            w.flags.writeable = False
            self._wcache[key] = w
        return w

    # -- vector-level kernels used by the solvers -------------------------
    def diff(self, U: np.ndarray) -> np.ndarray:
        """Row differences ``D U``; shifting by ``U[0]`` first makes constants
        map to exact zeros (the rows sum to zero only up to rounding)."""
        return self.D @ (U - U[0])

    def seminorm(self, U: np.ndarray, s: float, r: float) -> float:
        d = self.diff(U)
        return float(np.dot(self.weights(s, r), np.abs(d) ** r))

    def seminorm_and_dual(self, U: np.ndarray, s: float, r: float) -> tuple[float, np.ndarray]:
        """Return ``[u]^r`` and the nodal vector ``E_{s,r}(u, phi_i)``
        (the gradient of ``[u]^r / r``)."""
        d = self.diff(U)
        a = np.abs(d)
        ar1 = a ** (r - 1.0)
        w = self.weights(s, r)
        val = float(np.dot(w, ar1 * a))
        dual = self.DT @ (w * np.copysign(ar1, d) * (d != 0))
        return val, dual

    def form_action(self, U: np.ndarray, V: np.ndarray, s: float, r: float) -> float:
        du = self.diff(U)
        dv = self.diff(V)
        a = np.abs(du)
        return float(np.dot(self.weights(s, r), np.copysign(a ** (r - 1.0), du) * (du != 0) * dv))

    def mass(self, U: np.ndarray, m: float) -> float:
        return float(np.dot(self.mass_w, np.abs(self.B @ U) ** m))

    def mass_and_dual(self, U: np.ndarray, m: float) -> tuple[float, np.ndarray]:
        """``int |u|^m`` and the nodal vector ``int |u|^{m-2} u phi_i``."""
        v = self.B @ U
        a = np.abs(v)
        am1 = a ** (m - 1.0)
        odd = np.copysign(am1, v) * (v != 0)
        return float(np.dot(self.mass_w, am1 * a)), self.BT @ (self.mass_w * odd)

    def q_mean(self, U: np.ndarray, m: float) -> float:
        v = self.B @ U
        return float(np.dot(self.mass_w, np.copysign(np.abs(v) ** (m - 1.0), v) * (v != 0)))

    def q_mean_abs(self, U: np.ndarray, m: float) -> float:
        """``int |u|^{m-1}``: the natural scale for :meth:`q_mean`."""
        return float(np.dot(self.mass_w, np.abs(self.B @ U) ** (m - 1.0)))

    def q_mean_normal(self, U: np.ndarray, m: float) -> np.ndarray:
        """Gradient of :meth:`q_mean` (``(m-1) int |u|^{m-2} phi_i``).

        For ``m < 2`` the weight blows up at zeros of ``u``; it is capped at a
        tiny fraction of ``max|u|`` so the vector stays usable as a direction.
        """
        v = np.abs(self.B @ U)
        floor = 1e-12 * max(float(v.max(initial=0.0)), 1e-300)
        return self.BT @ (self.mass_w * (m - 1.0) * np.maximum(v, floor) ** (m - 2.0))

    def energy(self, U: np.ndarray, prm: Params) -> EnergyBreakdown:
        sp_ = self.seminorm(U, prm.s1, prm.p)
        sq_ = self.seminorm(U, prm.s2, prm.q)
        mq = self.mass(U, prm.m)
        f = sp_ / prm.p + sq_ / prm.q - prm.lam / prm.m * mq
        return EnergyBreakdown(sp_, sq_, mq, f)

    def energy_and_grad(self, U: np.ndarray, prm: Params) -> tuple[EnergyBreakdown, np.ndarray]:
        sp_, gp = self.seminorm_and_dual(U, prm.s1, prm.p)
        sq_, gq = self.seminorm_and_dual(U, prm.s2, prm.q)
        mq, gm = self.mass_and_dual(U, prm.m)
        f = sp_ / prm.p + sq_ / prm.q - prm.lam / prm.m * mq
        return EnergyBreakdown(sp_, sq_, mq, f), gp + gq - prm.lam * gm

    def jacobi_diagonal(self, s_values) -> np.ndarray:
        """Diagonal of the ``r = 2`` stiffness for the given orders (preconditioner)."""
        diag = np.zeros(self.grid.n_nodes)
        D2 = self.D.multiply(self.D).tocsr()
        for s in s_values:
            diag += D2.T @ self.weights(s, 2.0)
        return diag

    def stiffness_matrix(self, s: float) -> sp.csr_matrix:
        """Sparse ``r = 2`` form matrix ``A`` with ``form_action(u, v, s, 2) = u^T A v``."""
        W = sp.diags(self.weights(s, 2.0))
        return (self.DT @ W @ self.D).tocsr()

    def mass_matrix(self) -> sp.csr_matrix:
        return (self.BT @ sp.diags(self.mass_w) @ self.B).tocsr()


@lru_cache(maxsize=32)
def get_assembly(grid: Grid, rule: QuadratureRule = QuadratureRule()) -> Assembly:
    return Assembly(grid, rule)


# --------------------------------------------------------------------------
# public GridFunction-level operations
# --------------------------------------------------------------------------
def _check_sr(s: float, r: float):
    if not (0 < s < 1):
        raise ParameterError(f"s must lie in (0,1), got {s}")
    if not r > 1:
        raise ParameterError(f"r must exceed 1, got {r}")


def _check_m(m: float):
    if not m > 1:
        raise ParameterError(f"exponent must exceed 1, got {m}")


def seminorm(u: GridFunction, s: float, r: float, rule: QuadratureRule = QuadratureRule()) -> float:
    """Quadrature value of ``iint_Q |u(x)-u(y)|^r / |x-y|^(1+s r)``."""
    _check_sr(s, r)
    return get_assembly(u.grid, rule).seminorm(u.values, s, r)


def form_action(u: GridFunction, v: GridFunction, s: float, r: float,
                rule: QuadratureRule = QuadratureRule()) -> float:
    """``E_{s,r}(u, v)`` at the same quadrature nodes as :func:`seminorm`."""
    _check_sr(s, r)
    if u.grid != v.grid:
        raise ParameterError("u and v live on different grids")
    return get_assembly(u.grid, rule).form_action(u.values, v.values, s, r)


def mass_q(u: GridFunction, m: float, rule: QuadratureRule = QuadratureRule()) -> float:
    _check_m(m)
    return get_assembly(u.grid, rule).mass(u.values, m)


def q_mean(u: GridFunction, m: float, rule: QuadratureRule = QuadratureRule()) -> float:
    """``int_Omega |u|^(m-2) u``."""
    _check_m(m)
    return get_assembly(u.grid, rule).q_mean(u.values, m)


def f_lambda(u: GridFunction, prm: Params, rule: QuadratureRule = QuadratureRule()) -> EnergyBreakdown:
    return get_assembly(u.grid, rule).energy(u.values, prm)


def grad_f_lambda(u: GridFunction, prm: Params, rule: QuadratureRule = QuadratureRule()) -> GridFunction:
    """Nodal vector ``<F'_lambda(u), phi_i>`` (derivative of the discrete energy)."""
    _, g = get_assembly(u.grid, rule).energy_and_grad(u.values, prm)
    return GridFunction(u.grid, g)
