"""Feasible solution spaces the trees draw their leaf solutions from.

Built in: monotone source-to-sink paths on a directed grid, fixed-size
item selections, and explicit solution lists for small hand-built cases.
Each space exposes the same duck-typed surface:

* ``n_items`` — indicator vector length,
* ``min_linear(costs)`` — exact minimizer of ``costs @ x`` with a
  deterministic tie-break (lexicographically smallest indicator),
* ``is_feasible(x)``,
* ``enumerate(cap)`` — all solutions, lexicographic indicator order,
* ``count()`` — number of feasible solutions.

``min_linear`` never enumerates; ``enumerate`` refuses to materialize more
than ``cap`` solutions by raising :class:`CapExceeded`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import CapExceeded

ENUMERATION_CAP = 10_000


def _check_costs(costs, n_items):
    costs = np.asarray(costs, dtype=np.float64)
    if costs.shape != (n_items,):
        raise ValueError(f"costs must have shape ({n_items},)")
    if not np.all(np.isfinite(costs)):
        raise ValueError("costs must be finite")
    return costs


def _lex_sorted(rows):
    return np.asarray(sorted(tuple(int(v) for v in r) for r in rows),
                      dtype=np.int8)


@dataclass(frozen=True)
class GridGraph:
    """South-west to north-east paths on a ``side`` x ``side`` node grid.

    Edges point west->east and south->north only.  Indicator layout: all
    horizontal edges in row-major order (row 0 is the southern row), then
    all vertical edges in row-major order; ``2*side*(side-1)`` edges total.
    Every path uses exactly ``2*(side-1)`` edges.
    """

    side: int

    def __post_init__(self):
        if self.side < 2:
            raise ValueError("side must be >= 2")

    @property
    def n_items(self):
        return 2 * self.side * (self.side - 1)

    def horizontal_index(self, row, col):
        return row * (self.side - 1) + col

    def vertical_index(self, row, col):
        return self.side * (self.side - 1) + row * self.side + col

    def min_linear(self, costs):
        costs = _check_costs(costs, self.n_items)
        x, _ = kernels.grid_min_path(self.side, costs)
        return x, float(np.dot(costs, x.astype(np.float64)))

    def is_feasible(self, x):
        x = np.asarray(x)
        if x.shape != (self.n_items,) or not np.isin(x, (0, 1)).all():
            return False
        g = self.side
        selected = {i for i in range(self.n_items) if x[i]}
        r = c = 0
        used = 0
        while (r, c) != (g - 1, g - 1):
            north = r < g - 1 and self.vertical_index(r, c) in selected
            east = c < g - 1 and self.horizontal_index(r, c) in selected
            if north == east:
                return False
            if north:
                r += 1
            else:
                c += 1
            used += 1
        return used == len(selected)

    def count(self):
        return math.comb(2 * (self.side - 1), self.side - 1)

    def enumerate(self, cap=ENUMERATION_CAP):
        if self.count() > cap:
            raise CapExceeded(
                f"{self.count()} paths exceed the cap of {cap}")
        g = self.side
        rows = []

        def walk(r, c, edges):
            if (r, c) == (g - 1, g - 1):
                x = np.zeros(self.n_items, dtype=np.int8)
                x[edges] = 1
                rows.append(x)
                return
            if c < g - 1:
                walk(r, c + 1, edges + [self.horizontal_index(r, c)])
            if r < g - 1:
                walk(r + 1, c, edges + [self.vertical_index(r, c)])

        walk(0, 0, [])
        return _lex_sorted(rows)


@dataclass(frozen=True)
class SelectionSpace:
    """All ways to pick exactly ``choose`` of ``n_items`` items."""

    n_items: int
    choose: int

    def __post_init__(self):
        if not 0 < self.choose <= self.n_items:
            raise ValueError("need 0 < choose <= n_items")

    def min_linear(self, costs):
        costs = _check_costs(costs, self.n_items)
        # Ties prefer the higher index, which yields the lexicographically
        # smallest indicator among optimal selections.
        order = np.lexsort((-np.arange(self.n_items), costs))
        x = np.zeros(self.n_items, dtype=np.int8)
        x[order[:self.choose]] = 1
        return x, float(np.dot(costs, x.astype(np.float64)))

    def is_feasible(self, x):
        x = np.asarray(x)
        return (x.shape == (self.n_items,)
                and bool(np.isin(x, (0, 1)).all())
                and int(x.sum()) == self.choose)

    def count(self):
        return math.comb(self.n_items, self.choose)

    def enumerate(self, cap=ENUMERATION_CAP):
        if self.count() > cap:
            raise CapExceeded(
                f"{self.count()} selections exceed the cap of {cap}")
        rows = []
        for combo in itertools.combinations(range(self.n_items), self.choose):
            x = np.zeros(self.n_items, dtype=np.int8)
            x[list(combo)] = 1
            rows.append(x)
        return _lex_sorted(rows)


@dataclass(frozen=True)
class ExplicitSpace:
    """A small space given by listing its solutions outright."""

    solutions: np.ndarray

    def __post_init__(self):
        sols = np.asarray(self.solutions, dtype=np.int8)
        if sols.ndim != 2 or sols.shape[0] < 1:
            raise ValueError("solutions must be a non-empty matrix")
        if not np.isin(sols, (0, 1)).all():
            raise ValueError("solutions must be binary indicators")
        sols = _lex_sorted({tuple(int(v) for v in r) for r in sols})
        sols.setflags(write=False)
        object.__setattr__(self, "solutions", sols)

    @property
    def n_items(self):
        return self.solutions.shape[1]

    def min_linear(self, costs):
        costs = _check_costs(costs, self.n_items)
        values = self.solutions.astype(np.float64) @ costs
        arg = int(np.argmin(values))
        x = self.solutions[arg].copy()
        return x, float(np.dot(costs, x.astype(np.float64)))

    def is_feasible(self, x):
        x = np.asarray(x, dtype=np.int8)
        if x.shape != (self.n_items,):
            return False
        return bool((self.solutions == x).all(axis=1).any())

    def count(self):
        return self.solutions.shape[0]

    def enumerate(self, cap=ENUMERATION_CAP):
        if self.count() > cap:
            raise CapExceeded(
                f"{self.count()} solutions exceed the cap of {cap}")
        return self.solutions.copy()
