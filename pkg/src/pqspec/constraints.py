"""Feasible-set machinery: the zero-q-mean cone, L^q normalization, Nehari
scaling and the regime classifier."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .energy import Assembly, GridFunction, Params, QuadratureRule, get_assembly
from .exceptions import DegenerateInputError, InfeasibleDirectionError, UnsupportedParametersError

COERCIVE = "coercive"
NEHARI = "nehari"


@dataclass(frozen=True)
class Regime:
    tag: str
    branch: str

    def to_dict(self) -> dict:
        return {"tag": self.tag, "branch": self.branch}


def classify_regime(prm: Params) -> Regime:
    """Place ``(s1, s2, p, q)`` in one of P1-P4.

    Ties ``s1 == s2`` go to P3 (q < p) or P4 (p < q).  For the swapped
    problem (``rhs_exp == "p"``) the roles of ``(s1, p)`` and ``(s2, q)`` are
    exchanged before classifying, so the branch is always decided by which
    exponent sits on the right-hand side.
    """
    if prm.rhs_exp == "p":
        s1, s2, p, q = prm.s2, prm.s1, prm.q, prm.p
    else:
        s1, s2, p, q = prm.s1, prm.s2, prm.p, prm.q
    if p == q:
        raise UnsupportedParametersError("unsupported parameters: p == q")
    if q < p:
        tag = "P1" if s2 < s1 else "P3"
        return Regime(tag, COERCIVE)
    tag = "P2" if s1 < s2 else "P4"
    return Regime(tag, NEHARI)


# --------------------------------------------------------------------------
# cone projection
# --------------------------------------------------------------------------
def _odd_power(v: np.ndarray, m: float) -> np.ndarray:
    return np.copysign(np.abs(v) ** (m - 1.0), v) * (v != 0)


def shift_root(A: Assembly, U: np.ndarray, m: float) -> float:
    """Constant ``c`` with ``int |u - c|^{m-2}(u - c) = 0`` (bisection + Newton polish)."""
    v = A.B @ U
    w = A.mass_w
    lo, hi = float(v.min()), float(v.max())
    if hi - lo <= 1e-300 or hi - lo <= 1e-15 * max(abs(lo), abs(hi)):
        raise DegenerateInputError("cannot shift a function that is constant on Omega")

    def phi(c):
        return float(np.dot(w, _odd_power(v - c, m)))

    width = 1e-14 * (hi - lo)
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if phi(mid) > 0:
            lo = mid
        else:
            hi = mid
    c = 0.5 * (lo + hi)
    best = abs(phi(c))
    for _ in range(2):
        dphi = -(m - 1.0) * float(np.dot(w, np.abs(v - c) ** (m - 2.0)))
        if not np.isfinite(dphi) or dphi == 0:
            break
        c_new = c - phi(c) / dphi
        val = abs(phi(c_new))
        if val < best:
            c, best = c_new, val
        else:
            break
    return c


def shift_to_zero_qmean(u: GridFunction, m: float,
                        rule: QuadratureRule = QuadratureRule()) -> tuple[GridFunction, float]:
    """Return ``(u - c, c)`` with ``u - c`` in the zero-q-mean cone."""
    A = get_assembly(u.grid, rule)
    c = shift_root(A, u.values, m)
    return GridFunction(u.grid, u.values - c), c


def normalize_lq(u: GridFunction, m: float, rho: float = 1.0,
                 rule: QuadratureRule = QuadratureRule()) -> GridFunction:
    """Scale ``u`` so that ``int_Omega |u|^m = rho``."""
    if not rho > 0:
        raise DegenerateInputError(f"rho must be positive, got {rho}")
    mass = get_assembly(u.grid, rule).mass(u.values, m)
    if not mass > 0:
        raise DegenerateInputError("cannot normalize a function with zero mass on Omega")
    return GridFunction(u.grid, u.values * (rho / mass) ** (1.0 / m))


# --------------------------------------------------------------------------
# Nehari scaling
# --------------------------------------------------------------------------
def nehari_factor(semi_other: float, semi_rhs: float, mass_rhs: float, lam: float,
                  r_other: float, r_rhs: float, rel_floor: float = 0.0) -> float:
    """Solve ``t^a S_a + t^b S_b = lam t^b M`` for ``t > 0`` (``a < b``)."""
    if not semi_other > 0:
        raise DegenerateInputError("u is constant: its seminorm vanishes")
    denom = lam * mass_rhs - semi_rhs
    if not denom > rel_floor * (lam * mass_rhs + semi_rhs):
        raise InfeasibleDirectionError(
            f"lambda*mass - seminorm = {denom:.3e} <= 0: direction cannot reach the Nehari manifold")
    return (semi_other / denom) ** (1.0 / (r_rhs - r_other))


def nehari_scale(u: GridFunction, prm: Params, rule: QuadratureRule = QuadratureRule()) -> float:
    """``t > 0`` with ``t u`` on the Nehari manifold (nehari branch only)."""
    if classify_regime(prm).branch != NEHARI:
        raise UnsupportedParametersError("Nehari scaling needs the right-hand-side exponent to be the larger one")
    A = get_assembly(u.grid, rule)
    (s_o, r_o), (s_r, r_r) = prm.other_pair, prm.rhs_pair
    return nehari_factor(A.seminorm(u.values, s_o, r_o), A.seminorm(u.values, s_r, r_r),
                         A.mass(u.values, prm.m), prm.lam, r_o, r_r)
