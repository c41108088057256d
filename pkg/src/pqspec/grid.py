"""Uniform 1-D mesh of an interval plus a truncated exterior collar.

The nonlocal forms couple the interval ``(a, b)`` to the whole real line.  We
keep a collar ``(a - L, a)`` and ``(b, b + L)`` on each side and drop
interactions beyond it.  Functions are continuous piecewise linear on
``[a - L, b + L]``; every node (including exterior ones) carries a free value.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import ParameterError

INTERIOR = "interior"
BOUNDARY = "boundary"
EXTERIOR = "exterior"

IDENTICAL = "identical"
SHARING_NODE = "sharing-a-node"
DISJOINT = "disjoint"


@dataclass(frozen=True)
class Grid:
    """Mesh of ``(a - L, b + L)`` with ``n_int`` cells in ``(a, b)`` and
    ``n_ext`` cells in each collar segment.

    Only the five defining numbers are stored; coordinates and tags are
    derived (and cached), so two grids compare equal iff they were built
    from the same parameters.
    """

    a: float
    b: float
    n_int: int
    L: float
    n_ext: int

    def __post_init__(self):
        vals = (self.a, self.b, self.L)
        if not all(isinstance(v, (int, float)) and math.isfinite(v) for v in vals):
            raise ParameterError(f"grid endpoints and collar width must be finite, got {vals}")
        if not self.a < self.b:
            raise ParameterError(f"need a < b, got a={self.a}, b={self.b}")
        if not self.L > 0:
            raise ParameterError(f"collar width must be positive, got L={self.L}")
        for name, val, lo in (("n_int", self.n_int, 2), ("n_ext", self.n_ext, 1)):
            if isinstance(val, bool) or not isinstance(val, (int, np.integer)) or val < lo:
                raise ParameterError(f"{name} must be an integer >= {lo}, got {val!r}")
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "n_int", int(self.n_int))
        object.__setattr__(self, "n_ext", int(self.n_ext))

    # -- sizes -----------------------------------------------------------
    @property
    def h(self) -> float:
        """Interior spacing."""
        return (self.b - self.a) / self.n_int

    @property
    def h_ext(self) -> float:
        """Collar spacing."""
        return self.L / self.n_ext

    @property
    def n_cells(self) -> int:
        return self.n_int + 2 * self.n_ext

    @property
    def n_nodes(self) -> int:
        return self.n_cells + 1

    @property
    def length(self) -> float:
        return self.b - self.a

    # -- geometry --------------------------------------------------------
    @cached_property
    def nodes(self) -> np.ndarray:
        left = np.linspace(self.a - self.L, self.a, self.n_ext + 1)
        mid = np.linspace(self.a, self.b, self.n_int + 1)
        right = np.linspace(self.b, self.b + self.L, self.n_ext + 1)
        x = np.concatenate([left[:-1], mid, right[1:]])
        x.flags.writeable = False
        return x

    @cached_property
    def tags(self) -> tuple:
        """Region tag per node."""
        i0, i1 = self.n_ext, self.n_ext + self.n_int
        out = []
        for i in range(self.n_nodes):
            if i < i0 or i > i1:
                out.append(EXTERIOR)
            elif i == i0 or i == i1:
                out.append(BOUNDARY)
            else:
                out.append(INTERIOR)
        return tuple(out)

    @cached_property
    def cell_left(self) -> np.ndarray:
        return self.nodes[:-1]

    @cached_property
    def cell_width(self) -> np.ndarray:
        w = np.diff(self.nodes)
        w.flags.writeable = False
        return w

    @cached_property
    def cell_is_interior(self) -> np.ndarray:
        flags = np.zeros(self.n_cells, dtype=bool)
        flags[self.n_ext:self.n_ext + self.n_int] = True
        flags.flags.writeable = False
        return flags

    @property
    def interior_cells(self) -> np.ndarray:
        return np.arange(self.n_ext, self.n_ext + self.n_int)

    @property
    def closed_interior_nodes(self) -> np.ndarray:
        """Nodes in ``[a, b]`` (interior and boundary)."""
        return np.arange(self.n_ext, self.n_ext + self.n_int + 1)

    @property
    def exterior_nodes(self) -> np.ndarray:
        i1 = self.n_ext + self.n_int
        return np.concatenate([np.arange(self.n_ext), np.arange(i1 + 1, self.n_nodes)])

    def midpoint(self) -> float:
        return 0.5 * (self.a + self.b)

    # -- serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "n_int": self.n_int, "L": self.L, "n_ext": self.n_ext}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "Grid":
        keys = {"a", "b", "n_int", "L", "n_ext"}
        if set(d) != keys:
            raise ParameterError(f"grid JSON must have exactly the keys {sorted(keys)}, got {sorted(d)}")
        return cls(d["a"], d["b"], d["n_int"], d["L"], d["n_ext"])

    @classmethod
    def from_json(cls, text: str) -> "Grid":
        return cls.from_dict(json.loads(text))


def build_grid(a: float, b: float, n_int: int, L: float, n_ext: int) -> Grid:
    """Build a grid; raises :class:`ParameterError` on invalid sizes."""
    return Grid(a, b, n_int, L, n_ext)


@dataclass(frozen=True)
class CellPair:
    i: int
    j: int
    adjacency: str
    in_interaction_region: bool = True


def cell_pair_arrays(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Index arrays ``(I, J)`` with ``I <= J`` of all cell pairs touching Omega.

    Pairs are ordered lexicographically; exterior-exterior pairs are omitted.
    """
    n = grid.n_cells
    I, J = np.triu_indices(n)
    inside = grid.cell_is_interior
    keep = inside[I] | inside[J]
    return I[keep], J[keep]


def cell_pairs(grid: Grid) -> list[CellPair]:
    I, J = cell_pair_arrays(grid)
    out = []
    for i, j in zip(I.tolist(), J.tolist()):
        if i == j:
            kind = IDENTICAL
        elif j == i + 1:
            kind = SHARING_NODE
        else:
            kind = DISJOINT
        out.append(CellPair(i, j, kind, True))
    return out
