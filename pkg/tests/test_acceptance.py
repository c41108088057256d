"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` (the lines are echoed
in the terminal summary) or as a script: ``python tests/test_acceptance.py``.
"""
from __future__ import annotations

import sys
import time
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))
from conftest import ACCEPTANCE_LINES  # noqa: E402

from pqspec import (EIGENPAIR, NO_SOLUTION, GridFunction, Grid, Params, SolverOptions,  # noqa: E402
                    compute_lambda1, degiorgi_sequence, dense_eigensolve_q2, extend_exterior,
                    f_lambda, form_action, grad_f_lambda, linf_report, mass_q,
                    multistart_bruteforce, nehari_scale, neumann_residual, q_mean, rayleigh_pq,
                    residual, seminorm, shift_to_zero_qmean, solve_at_lambda)

MAIN_GRID = Grid(0.0, 1.0, 64, 2.0, 128)
TINY_GRID = Grid(0.0, 1.0, 4, 0.5, 3)      # 11 nodes
FD_GRID = Grid(0.0, 1.0, 8, 1.0, 4)
REGIMES = {"P1": (0.7, 0.3, 3.0, 2.0), "P2": (0.3, 0.7, 2.0, 3.0),
           "P3": (0.4, 0.6, 3.0, 2.0), "P4": (0.6, 0.4, 2.0, 3.0)}
BELOW, ABOVE = (0.25, 0.5, 0.75), (1.5, 2.0, 4.0)


def report(n: int, ok: bool, text: str) -> None:
    line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}: {text}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


# --------------------------------------------------------------------------
# shared runs
# --------------------------------------------------------------------------
@lru_cache(maxsize=None)
def lambda1_case(s2: float, q: float = 2.0, grid: Grid = MAIN_GRID):
    t0 = time.perf_counter()
    res = compute_lambda1(s2, q, grid, SolverOptions())
    return res, time.perf_counter() - t0


@lru_cache(maxsize=None)
def regime_scan(tag: str):
    s1, s2, p, q = REGIMES[tag]
    prm = Params(s1, s2, p, q)
    t0 = time.perf_counter()
    l1, _ = lambda1_case(*prm.rhs_pair)
    rows = [(f, solve_at_lambda(prm.with_lambda(f * l1.lam), MAIN_GRID, SolverOptions(), l1))
            for f in BELOW + ABOVE]
    return prm, l1, rows, time.perf_counter() - t0


# --------------------------------------------------------------------------
# criteria
# --------------------------------------------------------------------------
@pytest.mark.parametrize("s2", [0.3, 0.5, 0.7])
def test_c01_linear_oracle(s2):
    res, secs = lambda1_case(s2)
    lam_dense = dense_eigensolve_q2(s2, MAIN_GRID)[1][0]
    rel = abs(res.lam - lam_dense) / lam_dense
    report(1, rel <= 1e-6 and secs <= 120 and res.converged,
           f"s2={s2}: lambda1_h={res.lam:.10g} dense={lam_dense:.10g} rel={rel:.1e} "
           f"time={secs:.1f}s (tol 1e-6, 120s)")


@pytest.mark.parametrize("tag", list(REGIMES))
def test_c02_spectrum_structure(tag):
    prm, l1, rows, secs = regime_scan(tag)
    bad = []
    for f, r in rows:
        want = NO_SOLUTION if f < 1 else EIGENPAIR
        if r.classification != want or (want == EIGENPAIR and not r.residual_inf <= 1e-6):
            bad.append(f"{f}:{r.classification}:{r.residual_inf:.1e}")
    worst = max(r.residual_inf for f, r in rows if f > 1)
    report(2, not bad and secs <= 600,
           f"{tag} {prm.s1, prm.s2, prm.p, prm.q}: lambda1_h={l1.lam:.8g}, "
           f"{{0.25,0.5,0.75}} none, {{1.5,2,4}} eigenpairs, worst residual {worst:.1e}, "
           f"time={secs:.0f}s" + (f" mismatches {bad}" if bad else ""))


def test_c03_zero_eigenvalue():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(25):
        s1, s2 = rng.uniform(0.05, 0.95, 2)
        p, q = rng.uniform(1.2, 4.0, 2)
        prm = Params(s1, s2, p, q)
        out = solve_at_lambda(prm, FD_GRID)
        c = rng.uniform(-5, 5)
        r_c, _ = residual(GridFunction.constant(FD_GRID, c), prm)
        worst = max(worst, out.residual_inf, r_c)
        assert out.classification == EIGENPAIR
    report(3, worst <= 1e-12, f"25 random (s1,s2,p,q), constants at lambda=0: max residual {worst:.1e} "
                              "(tol 1e-12)")


def _fd_error(prm: Params, rng, n_u: int = 100) -> float:
    worst = 0.0
    n = FD_GRID.n_nodes
    for _ in range(n_u):
        u = GridFunction(FD_GRID, rng.standard_normal(n))
        g = grad_f_lambda(u, prm).values
        eps = 1e-6 * float(np.abs(u.values).max())
        fd = np.empty(n)
        for i in range(n):
            e = np.zeros(n)
            e[i] = eps
            fp = f_lambda(GridFunction(FD_GRID, u.values + e), prm).f_lambda
            fm = f_lambda(GridFunction(FD_GRID, u.values - e), prm).f_lambda
            fd[i] = (fp - fm) / (2 * eps)
        worst = max(worst, float(np.abs(fd - g).max() / np.abs(g).max()))
    return worst


def test_c04_gradient_consistency():
    rng = np.random.default_rng(4)
    sets = [Params(0.3, 0.7, 2.0, 3.0, 5.0), Params(0.7, 0.4, 3.5, 2.0, 12.0),
            Params(0.5, 0.6, 2.5, 4.0, 1.0, "p")]
    errs = [_fd_error(prm, rng) for prm in sets]
    low = _fd_error(Params(0.4, 0.6, 1.5, 2.5, 7.0), rng)
    report(4, max(errs) <= 1e-6 and low <= 1e-4,
           f"p,q>=2: max rel FD error {max(errs):.1e} over 3x100 u (tol 1e-6); "
           f"min(p,q)=1.5: {low:.1e} over 100 u (tol 1e-4)")


def test_c05_homogeneity_symmetry():
    rng = np.random.default_rng(5)
    g = FD_GRID
    n = g.n_nodes
    worst = {"homog": 0.0, "sign": 0.0, "reflect": 0.0, "qmean": 0.0, "form": 0.0, "identity": 0.0}
    for _ in range(1000):
        s = rng.uniform(0.05, 0.95)
        r = rng.uniform(1.1, 4.0)
        t = rng.uniform(-10, 10)
        u = GridFunction(g, rng.standard_normal(n))
        base = seminorm(u, s, r)
        worst["homog"] = max(worst["homog"], abs(seminorm(u * t, s, r) - abs(t) ** r * base) / (abs(t) ** r * base))
        worst["sign"] = max(worst["sign"], abs(seminorm(-u, s, r) - base) / base,
                            abs(mass_q(-u, r) - mass_q(u, r)) / mass_q(u, r))
        ref = GridFunction(g, u.values[::-1].copy())
        worst["reflect"] = max(worst["reflect"], abs(seminorm(ref, s, r) - base) / base)
        worst["qmean"] = max(worst["qmean"], abs(q_mean(-u, r) + q_mean(u, r)))
        worst["form"] = max(worst["form"], abs(form_action(u, u, s, r) - base) / base)
        p, q = rng.uniform(1.1, 4.0, 2)
        prm = Params(s, rng.uniform(0.05, 0.95), p, q, rng.uniform(0, 50))
        e = f_lambda(u, prm)
        lhs = e.semi_p / prm.p + e.semi_q / prm.q - prm.lam / prm.m * e.mass_q
        worst["identity"] = max(worst["identity"], abs(e.f_lambda - lhs) / (abs(lhs) + e.semi_p + e.semi_q))
    tol = {"homog": 1e-12, "sign": 1e-12, "reflect": 1e-10, "qmean": 1e-12, "form": 1e-12, "identity": 1e-12}
    ok = all(worst[k] <= tol[k] for k in tol)
    report(5, ok, "1000 trials: " + ", ".join(f"{k} {worst[k]:.0e}/{tol[k]:.0e}" for k in tol))


def test_c06_nehari():
    rng = np.random.default_rng(6)
    g = Grid(0.0, 1.0, 16, 2.0, 16)
    worst, count = 0.0, 0
    while count < 100:
        s1, s2 = rng.uniform(0.1, 0.9, 2)
        p = rng.uniform(1.5, 3.0)
        q = p + rng.uniform(0.3, 2.0)
        u, _ = shift_to_zero_qmean(GridFunction(g, rng.standard_normal(g.n_nodes)), q)
        e = f_lambda(u, Params(s1, s2, p, q))
        lam = (1.0 + rng.uniform(0.05, 3.0)) * e.semi_q / e.mass_q
        prm = Params(s1, s2, p, q, lam)
        t = nehari_scale(u, prm)
        lhs = t ** p * e.semi_p + t ** q * e.semi_q
        worst = max(worst, abs(lhs - lam * t ** q * e.mass_q) / lhs)
        count += 1
    mins = []
    for tag in ("P2", "P4"):
        prm, _, rows, _ = regime_scan(tag)
        for f, r in rows:
            if r.classification == EIGENPAIR:
                mins.append(r.nehari_min if r.nehari_min is not None else -1.0)
    report(6, worst <= 1e-10 and mins and min(mins) > 0,
           f"Nehari identity max rel error {worst:.1e} over 100 u (tol 1e-10); "
           f"{len(mins)} nehari eigenpairs with min nehari_min {min(mins):.3e} > 0")


def _eigenfunctions():
    out = []
    for s2 in (0.3, 0.5, 0.7):
        res, _ = lambda1_case(s2)
        out.append((f"u1(s2={s2})", Params(0.9, s2, 3.0, 2.0), res.u))
    for tag in REGIMES:
        prm, _, rows, _ = regime_scan(tag)
        out += [(f"{tag}@{f}", prm.with_lambda(r.lam), r.u) for f, r in rows if r.classification == EIGENPAIR]
    return out


def test_c07_exterior_linf():
    efs = _eigenfunctions()
    ext_res, ext_ok, bound_ok, dg_ok, gap = 0.0, True, True, True, 0.0
    factor = 0.0
    for name, prm, u in efs:
        e = extend_exterior(u, prm)
        ext_res = max(ext_res, float(np.abs(neumann_residual(e, prm).values).max()))
        for v in (u, e):
            rep = linf_report(v)
            ext_ok &= rep.exterior_ok
            bound_ok &= rep.bound_ok
        factor = max(factor, linf_report(u).factor)
        # De Giorgi on the raw function and on a copy scaled to sup 2 over Omega
        amp = linf_report(u).sup_interior
        for v in (u, u * (2.0 / amp)):
            for qq in (prm.p, prm.q):
                dg = degiorgi_sequence(v, qq, 40)
                dg_ok &= dg.monotone
                gap = max(gap, dg.limit_gap)
    report(7, ext_res <= 1e-10 and ext_ok and bound_ok and dg_ok and gap <= 1e-10,
           f"{len(efs)} eigenfunctions: extension residual {ext_res:.1e} (tol 1e-10), "
           f"sup_ext<=sup_int {ext_ok}, factor-2 bound {bound_ok} (max observed factor {factor:.3f}), "
           f"De Giorgi monotone {dg_ok}, limit gap {gap:.1e} (tol 1e-10)")


def test_c08_eigenequal():
    prm = Params(*REGIMES["P1"])           # p > q
    res, _ = lambda1_case(prm.s2, prm.q)
    vals = [rayleigh_pq(res.u * (1.0 / t), prm) for t in (1.0, 10.0, 100.0, 1000.0)]
    rel = abs(vals[-1] - res.lam) / res.lam
    mono = all(b < a for a, b in zip(vals, vals[1:]))
    report(8, rel <= 0.01 and mono,
           f"p>q, u = u1/t: quotient {', '.join(f'{v:.6g}' for v in vals)} at t=1,10,100,1000; "
           f"rel gap at t=1000 {rel:.1e} (tol 1e-2), decreasing {mono}")


def test_c09_discretization_stability():
    worst_h, worst_L, parts = 0.0, 0.0, []
    for s2 in (0.3, 0.5, 0.7):
        base, _ = lambda1_case(s2)
        fine, _ = lambda1_case(s2, 2.0, Grid(0.0, 1.0, 128, 2.0, 256))
        wide, _ = lambda1_case(s2, 2.0, Grid(0.0, 1.0, 64, 4.0, 256))
        dh = abs(fine.lam - base.lam) / base.lam
        dL = abs(wide.lam - base.lam) / base.lam
        worst_h, worst_L = max(worst_h, dh), max(worst_L, dL)
        parts.append(f"s2={s2}: {base.lam:.6g} h/2 {dh:.1e} 2L {dL:.1e}")
    report(9, worst_h <= 0.02 and worst_L <= 0.02,
           f"q=2, base n_int=64 L=2 (far field continued by the outer collar value): "
           + "; ".join(parts) + " (tol 2e-2)")


def test_c10_bruteforce():
    parts, worst = [], 0.0
    for tag, (s1, s2, p, q) in REGIMES.items():
        prm = Params(s1, s2, p, q)
        l1 = compute_lambda1(*prm.rhs_pair, TINY_GRID)
        b1 = multistart_bruteforce(prm, TINY_GRID, 64, problem="lambda1")
        at = prm.with_lambda(2.0 * l1.lam)
        sol = solve_at_lambda(at, TINY_GRID, SolverOptions(), l1)
        be = multistart_bruteforce(at, TINY_GRID, 64)
        r1 = abs(l1.lam - b1.lam) / abs(b1.lam)
        rE = abs(sol.energies.f_lambda - be.energies.f_lambda) / abs(be.energies.f_lambda)
        worst = max(worst, r1, rE)
        parts.append(f"{tag} lambda1 {r1:.0e} F {rE:.0e}")
    report(10, worst <= 1e-6, f"{TINY_GRID.n_nodes}-node grid, 64 random + pattern starts: "
                              + "; ".join(parts) + " (tol 1e-6)")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
