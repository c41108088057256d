import json
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pqspec import (Grid, GridFunction, ParameterError, Params, SolverOptions, compute_lambda1,
                    degiorgi_sequence, extend_exterior, extend_exterior_newton, extend_exterior_terms,
                    linf_report, neumann_residual, residual, solve_at_lambda)
from pqspec.energy import gauss_01

G = Grid(0.0, 1.0, 8, 1.0, 4)
PRM = Params(0.7, 0.3, 3.0, 2.0)
OPTS = SolverOptions(restarts=4)


def interior_random(seed, grid=G):
    rng = np.random.default_rng(seed)
    return GridFunction(grid, rng.standard_normal(grid.n_nodes))


@lru_cache(maxsize=None)
def eigenfunction():
    l1 = compute_lambda1(0.3, 2.0, G, OPTS)
    return solve_at_lambda(PRM.with_lambda(2 * l1.lam), G, OPTS, l1)


def test_constant_extends_to_constant():
    u = GridFunction.constant(G, -1.7)
    ext = extend_exterior(u, PRM)
    np.testing.assert_array_equal(ext.values, u.values)
    assert np.all(neumann_residual(u, PRM).values == 0.0)


def test_linear_case_is_kernel_average():
    s = 0.35
    u = interior_random(1)
    ext = extend_exterior_terms(u, [(s, 2.0)])
    t, w = gauss_01(5)
    x = np.asarray(G.nodes)
    cells = G.interior_cells
    y = (x[cells, None] + G.h * t[None, :]).ravel()
    wy = np.tile(G.h * w, cells.size)
    uy = ((1 - t)[None, :] * u.values[cells, None] + t[None, :] * u.values[cells + 1, None]).ravel()
    for i in G.exterior_nodes:
        K = wy * np.abs(x[i] - y) ** (-1 - 2 * s)
        assert ext.values[i] == pytest.approx(K @ uy / K.sum(), rel=1e-12, abs=1e-13)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 31), s1=st.floats(0.1, 0.9), s2=st.floats(0.1, 0.9),
       p=st.floats(1.3, 4.0), q=st.floats(1.3, 4.0))
def test_bisection_matches_newton_and_zeroes_residual(seed, s1, s2, p, q):
    if abs(p - q) < 1e-3:
        return
    prm = Params(s1, s2, p, q)
    u = interior_random(seed)
    a = extend_exterior(u, prm)
    b = extend_exterior_newton(u, prm)
    amp = np.abs(u.values[G.closed_interior_nodes]).max()
    np.testing.assert_allclose(a.values, b.values, rtol=0, atol=1e-12 * amp)
    assert np.abs(neumann_residual(a, prm).values).max() <= 1e-10
    rep = linf_report(a)
    assert rep.exterior_ok and rep.bound_ok


def test_extension_is_idempotent():
    prm = Params(0.3, 0.6, 1.5, 3.0)
    once = extend_exterior(interior_random(2), prm)
    twice = extend_exterior(once, prm)
    np.testing.assert_array_equal(once.values, twice.values)


def test_root_is_monotone_in_interior_data():
    prm = Params(0.4, 0.7, 2.5, 1.8)
    u = interior_random(3)
    base = extend_exterior(u, prm).values
    for i in G.closed_interior_nodes:
        bumped = u.values.copy()
        bumped[i] += 0.3
        up = extend_exterior(GridFunction(G, bumped), prm).values
        assert np.all(up[G.exterior_nodes] >= base[G.exterior_nodes] - 1e-14)


def test_grid_mismatch_rejected():
    with pytest.raises(ParameterError):
        extend_exterior(interior_random(4), PRM, Grid(0.0, 1.0, 8, 2.0, 4))


def test_linf_constant():
    rep = linf_report(GridFunction.constant(G, -3.0))
    assert rep.sup_interior == rep.sup_exterior == rep.global_sup == 3.0
    assert rep.bound_ok and rep.exterior_ok
    json.dumps(rep.to_dict())


def test_linf_detects_violation():
    vals = np.zeros(G.n_nodes)
    vals[G.closed_interior_nodes] = 1.0
    vals[0] = 2.5
    rep = linf_report(GridFunction(G, vals))
    assert not rep.bound_ok and not rep.exterior_ok
    assert rep.factor == pytest.approx(2.5)


# -- solver output --------------------------------------------------------
def test_eigenfunction_sup_bound():
    rep = linf_report(eigenfunction().u)
    assert rep.bound_ok and rep.exterior_ok and rep.factor <= 1.0 + 1e-12


def test_eigenfunction_is_stationary_in_collar_directions():
    out = eigenfunction()
    _, vec = residual(out.u, PRM.with_lambda(out.lam))
    assert np.abs(vec.values[G.exterior_nodes]).max() <= 1e-6


def test_pointwise_extension_close_to_solver_collar():
    # the outermost collar unknown stands in for the whole far field, so
    # the free values there deviate from the pointwise root; the deviation
    # decays geometrically inward and the rest of the collar tracks the root
    g = Grid(0.0, 1.0, 32, 1.0, 16)
    prm = Params(0.7, 0.3, 3.0, 2.0)
    l1 = compute_lambda1(0.3, 2.0, g, SolverOptions(restarts=2))
    out = solve_at_lambda(prm.with_lambda(2 * l1.lam), g, SolverOptions(restarts=2), l1)
    ext = extend_exterior(out.u, prm)
    gap = np.abs(ext.values - out.u.values) / np.abs(out.u.values).max()
    layer = 5
    for side in (gap[:g.n_ext], gap[::-1][:g.n_ext]):
        assert all(side[k + 1] < 0.5 * side[k] for k in range(layer - 1))
        assert side[layer:].max() <= 5e-3


@pytest.mark.xfail(strict=True, reason="variational collar values satisfy the pointwise Neumann map "
                                       "only to discretization accuracy, not to 1e-6")
def test_pointwise_neumann_residual_of_solver_output():
    out = eigenfunction()
    assert np.abs(neumann_residual(out.u, PRM).values).max() <= 1e-6


# -- De Giorgi ------------------------------------------------------------
def test_degiorgi_unit_constant():
    g = Grid(0.0, 1.0, 4, 1.0, 2)
    rep = degiorgi_sequence(GridFunction.constant(g, 1.0), 2.5, 10)
    expect = [2.0 ** (-n * 2.5) for n in range(11)]
    np.testing.assert_allclose(rep.masses, expect, rtol=1e-12)
    assert rep.monotone and rep.limit == 0.0


def test_degiorgi_nonpositive():
    g = Grid(0.0, 1.0, 4, 1.0, 2)
    rep = degiorgi_sequence(GridFunction(g, -np.abs(np.linspace(-1, 1, g.n_nodes))), 2.0, 8)
    assert all(m == 0.0 for m in rep.masses)


def test_degiorgi_two():
    g = Grid(0.0, 1.0, 4, 1.0, 2)
    rep = degiorgi_sequence(GridFunction.constant(g, 2.0), 3.0, 40)
    np.testing.assert_allclose(rep.masses, [(1 + 2.0 ** (-n)) ** 3 for n in range(41)], rtol=1e-12)
    assert rep.limit == pytest.approx(1.0, rel=1e-14)
    assert rep.limit_gap <= 1e-10


def test_degiorgi_csv_and_errors():
    rep = degiorgi_sequence(interior_random(5), 2.0, 3)
    lines = rep.to_csv().strip().splitlines()
    assert lines[0] == "n,C_n,U_n" and len(lines) == 5
    json.loads(rep.to_json())
    with pytest.raises(ParameterError):
        degiorgi_sequence(interior_random(5), 2.0, 0)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 31), q=st.floats(1.2, 4.0), amp=st.floats(0.1, 3.0))
def test_degiorgi_monotone_and_limit(seed, q, amp):
    u = interior_random(seed) * amp
    rep = degiorgi_sequence(u, q, 45)
    assert rep.monotone
    assert rep.limit_gap <= 1e-10 * max(1.0, rep.masses[0])
