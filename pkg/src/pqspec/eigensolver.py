"""First nonzero eigenvalue, eigenfunctions at a given lambda, and spectrum scans.

All three minimizations share one engine: a projected spectral gradient
method (Barzilai-Borwein trial step, nonmonotone Armijo backtracking) in a
diagonal metric taken from the current curvature of the seminorm terms.
Each trial point is pulled back to the feasible set by a retraction: shift
to zero q-mean, then either L^q normalization (lambda_1) or rescaling to
the critical point of ``F_lambda`` along the ray (both (p,q) branches).  Exterior nodal values are free
unknowns throughout, so stationarity in exterior directions is the discrete
nonlocal Neumann condition.
"""
from __future__ import annotations

import logging
import math
import os
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .constraints import COERCIVE, NEHARI, Regime, classify_regime, nehari_factor, shift_root
from .energy import (Assembly, EnergyBreakdown, GridFunction, Params, QuadratureRule,
                     get_assembly)
from .exceptions import (DegenerateInputError, InfeasibleDirectionError, ParameterError)
from .grid import Grid

log = logging.getLogger(__name__)

EIGENPAIR = "eigenpair"
NO_SOLUTION = "no-nontrivial-solution"

#: residual threshold for accepting an eigenpair
RESIDUAL_TOL = 1e-6
#: ||u||_{L^m(Omega)} below this counts as the trivial solution
DEGENERACY_FLOOR = 1e-6
#: relative margin for lambda*mass - seminorm > 0 in Nehari scaling
NEHARI_MARGIN = 1e-10


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-8
    max_iter: int = 50000
    restarts: int = 8
    rng_seed: int = 0
    step0: float = 1.0
    armijo_factor: float = 0.5
    armijo_c: float = 1e-4
    gtol: float = 1e-10
    memory: int = 10
    precond_every: int = 20

    def __post_init__(self):
        if not self.tol > 0:
            raise ParameterError("tol must be positive")
        if self.max_iter < 1:
            raise ParameterError("max_iter must be >= 1")
        if self.restarts < 1:
            raise ParameterError("restarts must be >= 1")
        if not 0 < self.armijo_factor < 1:
            raise ParameterError("armijo_factor must lie in (0,1)")
        if not 0 < self.armijo_c < 1:
            raise ParameterError("armijo_c must lie in (0,1)")
        if not self.step0 > 0 or not self.gtol > 0:
            raise ParameterError("step0 and gtol must be positive")


@dataclass
class SolveResult:
    lam: float
    u: GridFunction
    energies: EnergyBreakdown
    residual_inf: float
    iterations: int
    converged: bool
    classification: str
    regime: Optional[Regime] = None
    nehari_min: Optional[float] = None
    restarts_run: int = 0

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "classification": self.classification,
            "converged": self.converged,
            "iterations": self.iterations,
            "residual_inf": _finite_or_none(self.residual_inf),
            "nehari_min": self.nehari_min,
            "regime": self.regime.to_dict() if self.regime else None,
            "energies": self.energies.to_dict(),
            "restarts_run": self.restarts_run,
        }


@dataclass
class ScanReport:
    rows: list = field(default_factory=list)
    lambda1_h: Optional[float] = None
    threshold: tuple = (None, None)

    @property
    def monotone(self) -> bool:
        """True when every no-solution row precedes every eigenpair row."""
        seen_pair = False
        for _, cls, _, _ in self.rows:
            if cls == EIGENPAIR:
                seen_pair = True
            elif seen_pair:
                return False
        return True

    def to_dict(self) -> dict:
        return {
            "lambda1_h": self.lambda1_h,
            "threshold": {"last_no_solution": self.threshold[0], "first_eigenpair": self.threshold[1]},
            "monotone": self.monotone,
            "rows": [{"lambda": lam, "classification": c, "residual": _finite_or_none(r),
                      "f_min": _finite_or_none(f)} for lam, c, r, f in self.rows],
        }


def _finite_or_none(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def n_workers() -> int:
    try:
        return max(1, int(os.environ.get("PQSPEC_THREADS", "1")))
    except ValueError:
        return 1


# --------------------------------------------------------------------------
# objectives
# --------------------------------------------------------------------------
def _residual_measure(g: np.ndarray, U: np.ndarray, scale: float) -> float:
    gmax = float(np.abs(g).max(initial=0.0))
    if gmax == 0.0:
        return 0.0
    if not scale > 0:
        return math.inf
    return gmax * float(np.abs(U).max()) / scale


class _Objective:
    A: Assembly
    m: float
    terms: list  # (s, r) pairs entering the curvature metric

    def retract(self, U):  # pragma: no cover - interface
        raise NotImplementedError

    def evaluate(self, U):  # pragma: no cover - interface
        raise NotImplementedError

    def degenerate(self, U) -> bool:
        return False

    def metric(self, U) -> np.ndarray:
        A = self.A
        D2 = _squared_transpose(A)
        d = np.abs(A.diff(U))
        floor = 1e-3 * max(float(d.max(initial=0.0)), 1e-300)
        P = np.zeros(U.size)
        for s, r in self.terms:
            P += D2 @ (A.weights(s, r) * (r - 1.0) * np.maximum(d, floor) ** (r - 2.0))
        return np.maximum(P, 1e-300)


_D2_CACHE: dict = {}


def _squared_transpose(A: Assembly):
    key = id(A)
    hit = _D2_CACHE.get(key)
    if hit is None or hit[0] is not A:
        hit = (A, A.D.multiply(A.D).T.tocsr())
        _D2_CACHE[key] = hit
    return hit[1]


class _Lambda1Objective(_Objective):
    """Rayleigh quotient ``[u]^r_{s,r} / int |u|^r`` on the zero-r-mean cone."""

    def __init__(self, A: Assembly, s: float, r: float):
        self.A, self.s, self.r, self.m = A, s, r, r
        self.terms = [(s, r)]

    def retract(self, U):
        U = U - shift_root(self.A, U, self.r)
        mass = self.A.mass(U, self.r)
        if not mass > 0:
            raise DegenerateInputError("zero mass")
        return U * mass ** (-1.0 / self.r)

    def evaluate(self, U):
        sv, ds = self.A.seminorm_and_dual(U, self.s, self.r)
        mv, dm = self.A.mass_and_dual(U, self.r)
        R = sv / mv
        G = ds - R * dm
        return R, self.r * G / mv, _residual_measure(G, U, sv + R * mv)


class _EnergyObjective(_Objective):
    """``F_lambda`` on the cone (coercive) or on the Nehari manifold.

    Both branches rescale every iterate to the critical point of
    ``t -> F(t u)``.  For the coercive branch that point is the ray
    minimizer, so the scaling is an exact line search in the radial
    direction; when ``lam * mass <= seminorm`` the ray minimum is the
    trivial function and restoration fails, which is how collapse shows up.
    """

    def __init__(self, A: Assembly, prm: Params, nehari: bool):
        self.A, self.prm, self.nehari = A, prm, nehari
        self.m = prm.m
        self.terms = [(prm.s1, prm.p), (prm.s2, prm.q)]

    def retract(self, U):
        A, prm = self.A, self.prm
        U = U - shift_root(A, U, self.m)
        (s_o, r_o), (s_r, r_r) = prm.other_pair, prm.rhs_pair
        t = nehari_factor(A.seminorm(U, s_o, r_o), A.seminorm(U, s_r, r_r), A.mass(U, self.m),
                          prm.lam, r_o, r_r, NEHARI_MARGIN)
        return t * U

    def evaluate(self, U):
        e, g = self.A.energy_and_grad(U, self.prm)
        scale = e.semi_p + e.semi_q + self.prm.lam * e.mass_q
        return e.f_lambda, g, _residual_measure(g, U, scale)

    def degenerate(self, U):
        return self.A.mass(U, self.m) ** (1.0 / self.m) < DEGENERACY_FLOOR


@dataclass
class _Run:
    U: np.ndarray
    f: float
    residual: float
    iterations: int
    status: str
    seed_index: int


def _minimize(obj: _Objective, U0: np.ndarray, opts: SolverOptions, seed_index: int = 0) -> _Run:
    """Projected spectral gradient with nonmonotone Armijo backtracking."""
    A = obj.A
    U = obj.retract(U0)
    f, g, res = obj.evaluate(U)
    hist = deque([f], maxlen=opts.memory)
    alpha = None
    P = obj.metric(U)
    quiet = 0
    status = "max_iter"
    it = 0
    for it in range(opts.max_iter):
        if res <= opts.gtol:
            status = "converged"
            break
        if obj.degenerate(U):
            status = "degenerate"
            break
        if it and it % opts.precond_every == 0:
            P = obj.metric(U)
        n = A.q_mean_normal(U, obj.m)
        Pg, Pn = g / P, n / P
        nPn = float(n @ Pn)
        mu = float(n @ Pg) / nPn if nPn > 0 else 0.0
        d = -(Pg - mu * Pn)
        gd = float(g @ d)
        if not gd < 0:
            status = "stationary"
            break
        if alpha is None:
            alpha = opts.step0 * 1e-2 * float(np.abs(U).max()) / float(np.abs(d).max())
        fref = max(hist)
        for _ in range(80):
            try:
                Un = obj.retract(U + alpha * d)
                fn, gn, resn = obj.evaluate(Un)
            except (InfeasibleDirectionError, DegenerateInputError):
                fn = math.inf
            if fn <= fref + opts.armijo_c * alpha * gd:
                break
            alpha *= opts.armijo_factor
        else:
            status = "line_search_failed"
            break
        step = Un - U
        y = gn - g
        sy = float(step @ y)
        alpha = float(step @ (P * step)) / sy if sy > 0 else alpha / opts.armijo_factor
        rel = float(np.abs(step).max()) / max(float(np.abs(Un).max()), 1e-300)
        quiet = quiet + 1 if rel <= opts.tol else 0
        U, f, g, res = Un, fn, gn, resn
        hist.append(f)
        if quiet >= 25:
            status = "stalled"
            break
    else:
        it = opts.max_iter
    if res <= opts.gtol:
        status = "converged"
    return _Run(U, f, res, it, status, seed_index)


def _run_starts(obj: _Objective, starts: list, opts: SolverOptions) -> list:
    def one(item):
        k, U0 = item
        try:
            return _minimize(obj, U0, opts, k)
        except (InfeasibleDirectionError, DegenerateInputError) as exc:
            log.debug("start %d rejected: %s", k, exc)
            return None

    items = list(enumerate(starts))
    workers = min(n_workers(), len(items))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            runs = list(ex.map(one, items))
    else:
        runs = [one(it) for it in items]
    return [r for r in runs if r is not None]


def _best(runs: list) -> _Run:
    return min(runs, key=lambda r: (r.f, r.seed_index))


def _random_start(grid: Grid, seed: int, k: int) -> np.ndarray:
    rng = np.random.default_rng([seed, k])
    return rng.standard_normal(grid.n_nodes)


def _cosine_start(grid: Grid) -> np.ndarray:
    x = np.clip(np.asarray(grid.nodes), grid.a, grid.b)
    return np.cos(np.pi * (x - grid.a) / grid.length)


# --------------------------------------------------------------------------
# public API
# --------------------------------------------------------------------------
def compute_lambda1(s2: float, q: float, grid: Grid, opts: SolverOptions = SolverOptions(),
                    rule: QuadratureRule = QuadratureRule()) -> SolveResult:
    """First nonzero eigenvalue of the fractional ``q``-Laplacian with the
    nonlocal Neumann condition, by minimizing ``[u]^q_{s2,q}`` over unit
    ``L^q`` mass functions with zero q-mean.

    The first start is a cosine profile, the others are seeded Gaussian
    nodal noise; the best run is returned.  ``energies.semi_p`` is 0 since
    the pure problem has no second operator.
    """
    if not (0 < s2 < 1) or not q > 1:
        raise ParameterError(f"need 0 < s < 1 and q > 1, got s={s2}, q={q}")
    if grid.n_int < 4:
        raise ParameterError("compute_lambda1 needs at least 4 interior cells")
    A = get_assembly(grid, rule)
    obj = _Lambda1Objective(A, s2, q)
    starts = [_cosine_start(grid)] + [_random_start(grid, opts.rng_seed, k)
                                      for k in range(1, opts.restarts)]
    runs = _run_starts(obj, starts, opts)
    best = _best(runs)
    lam1 = best.f
    mass = A.mass(best.U, q)
    energies = EnergyBreakdown(0.0, A.seminorm(best.U, s2, q), mass, 0.0)
    converged = best.status == "converged" or best.residual <= RESIDUAL_TOL
    cls = EIGENPAIR if best.residual <= RESIDUAL_TOL and mass > 0 else NO_SOLUTION
    return SolveResult(lam1, GridFunction(grid, best.U), energies, best.residual,
                       sum(r.iterations for r in runs), converged, cls, None, None, len(runs))


def residual(u: GridFunction, prm: Params, rule: QuadratureRule = QuadratureRule()) -> tuple[float, GridFunction]:
    """Normalized stationarity of ``F_lambda`` in every nodal direction.

    Component ``i`` is ``<F'(u), phi_i> * max|u| / (semi_p + semi_q + lam*mass)``;
    exterior components measure the discrete nonlocal Neumann condition.
    """
    A = get_assembly(u.grid, rule)
    e, g = A.energy_and_grad(u.values, prm)
    scale = e.semi_p + e.semi_q + prm.lam * e.mass_q
    umax = float(np.abs(u.values).max())
    if np.abs(g).max(initial=0.0) == 0.0:
        vec = np.zeros_like(g)
    elif scale > 0:
        vec = g * umax / scale
    else:
        vec = np.full_like(g, math.inf)
    return float(np.abs(vec).max(initial=0.0)), GridFunction(u.grid, np.nan_to_num(vec, posinf=1e300))


def rayleigh_pq(u: GridFunction, prm: Params, rule: QuadratureRule = QuadratureRule()) -> float:
    """``(semi_p/p + semi_q/q) / (mass/m)`` for ``u`` in the cone."""
    A = get_assembly(u.grid, rule)
    U = u.values
    vals = A.B @ U
    if np.ptp(vals) <= 1e-14 * max(np.abs(vals).max(initial=0.0), 1e-300):
        raise DegenerateInputError("rayleigh_pq is undefined for constant u")
    qm = A.q_mean(U, prm.m)
    if abs(qm) > 1e-8 * A.q_mean_abs(U, prm.m):
        raise ParameterError(f"u is not in the zero-q-mean cone (q_mean={qm:.3e})")
    e = A.energy(U, prm)
    return (e.semi_p / prm.p + e.semi_q / prm.q) / (e.mass_q / prm.m)


def _trivial_result(grid: Grid, prm: Params, A: Assembly, regime: Regime, iterations: int,
                    restarts_run: int) -> SolveResult:
    zero = np.zeros(grid.n_nodes)
    return SolveResult(prm.lam, GridFunction(grid, zero), A.energy(zero, prm), math.nan,
                       iterations, True, NO_SOLUTION, regime, None, restarts_run)


def solve_at_lambda(prm: Params, grid: Grid, opts: SolverOptions = SolverOptions(),
                    lambda1: Optional[SolveResult] = None,
                    rule: QuadratureRule = QuadratureRule()) -> SolveResult:
    """Look for an eigenfunction at ``prm.lam``.

    ``lambda1`` may carry a precomputed :func:`compute_lambda1` result for
    the right-hand-side operator; otherwise it is computed here.
    ``lam == 0`` returns the normalized constant eigenfunction.
    """
    if prm.lam < 0:
        raise ParameterError("lambda must be >= 0")
    A = get_assembly(grid, rule)
    regime = classify_regime(prm)
    if prm.lam == 0:
        U = np.full(grid.n_nodes, grid.length ** (-1.0 / prm.m))
        res, _ = residual(GridFunction(grid, U), prm, rule)
        return SolveResult(0.0, GridFunction(grid, U), A.energy(U, prm), res, 0, True,
                           EIGENPAIR, regime, None, 0)

    s_r, r_r = prm.rhs_pair
    if lambda1 is None:
        lambda1 = compute_lambda1(s_r, r_r, grid, opts, rule)
    u1 = lambda1.u.values
    lam1 = lambda1.lam
    s_o, r_o = prm.other_pair
    semi_o = A.seminorm(u1, s_o, r_o)

    if regime.branch == COERCIVE:
        obj = _EnergyObjective(A, prm, nehari=False)
        # minimizer of F along the ray t*u1 when lam > lam1
        t = ((prm.lam - lam1) / semi_o) ** (1.0 / (r_o - r_r)) if prm.lam > lam1 else 1.0
        starts = [t * u1]
        for k in range(1, opts.restarts):
            V = _random_start(grid, opts.rng_seed, k)
            V = V - shift_root(A, V, prm.m)
            starts.append(V * t * A.mass(V, prm.m) ** (-1.0 / prm.m))
    else:
        obj = _EnergyObjective(A, prm, nehari=True)
        starts = [u1.copy()]
        umax = float(np.abs(u1).max())
        for k in range(1, opts.restarts):
            V = _random_start(grid, opts.rng_seed, k)
            starts.append(u1 + 0.1 * k / opts.restarts * umax * V / np.abs(V).max())

    runs = _run_starts(obj, starts, opts)
    iterations = sum(r.iterations for r in runs)
    if not runs:
        return _trivial_result(grid, prm, A, regime, iterations, 0)
    best = _best(runs)
    U = best.U
    mass = A.mass(U, prm.m)
    res, _ = residual(GridFunction(grid, U), prm, rule)
    energies = A.energy(U, prm)
    nontrivial = mass ** (1.0 / prm.m) >= DEGENERACY_FLOOR
    if not nontrivial:
        return _trivial_result(grid, prm, A, regime, iterations, len(runs))
    is_pair = res <= RESIDUAL_TOL
    converged = best.status == "converged" or is_pair
    nehari_min = None
    if regime.branch == NEHARI and is_pair:
        nehari_min = (1.0 / r_o - 1.0 / r_r) * A.seminorm(U, s_o, r_o)
    return SolveResult(prm.lam, GridFunction(grid, U), energies, res, iterations, converged,
                       EIGENPAIR if is_pair else NO_SOLUTION, regime, nehari_min, len(runs))


def scan_spectrum(prm_base: Params, grid: Grid, lambdas, opts: SolverOptions = SolverOptions(),
                  lambda1: Optional[SolveResult] = None,
                  rule: QuadratureRule = QuadratureRule()) -> ScanReport:
    """Classify each ``lambda`` and locate the observed threshold."""
    lams = [float(x) for x in lambdas]
    if not lams:
        return ScanReport()
    if any(not x > 0 for x in lams):
        raise ParameterError("scan lambdas must all be positive")
    lams = sorted(lams)
    if lambda1 is None:
        s_r, r_r = prm_base.rhs_pair
        lambda1 = compute_lambda1(s_r, r_r, grid, opts, rule)
    rows = []
    for lam in lams:
        out = solve_at_lambda(prm_base.with_lambda(lam), grid, opts, lambda1, rule)
        rows.append((lam, out.classification, out.residual_inf, out.energies.f_lambda))
        log.info("lambda=%.6g -> %s (residual %.2e)", lam, out.classification, out.residual_inf)
    below = [lam for lam, c, _, _ in rows if c == NO_SOLUTION]
    above = [lam for lam, c, _, _ in rows if c == EIGENPAIR]
    threshold = (max(below) if below else None, min(above) if above else None)
    return ScanReport(rows, lambda1.lam, threshold)
