import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robust_trees import (
    ENUMERATION_CAP,
    CapExceeded,
    ExplicitSpace,
    GridGraph,
    SelectionSpace,
)


def first_enumerated_min(space, costs):
    """Reference optimizer: first lex-ordered solution hitting the min."""
    rows = space.enumerate()
    values = [float(np.dot(costs, r.astype(np.float64))) for r in rows]
    best = min(values)
    return rows[values.index(best)], best


class TestGridGraph:
    def test_requires_two_nodes_per_side(self):
        with pytest.raises(ValueError):
            GridGraph(1)

    @pytest.mark.parametrize("side", [2, 3, 4, 5])
    def test_counts(self, side):
        space = GridGraph(side)
        assert space.n_items == 2 * side * (side - 1)
        assert space.count() == math.comb(2 * (side - 1), side - 1)
        rows = space.enumerate()
        assert rows.shape == (space.count(), space.n_items)
        assert len({tuple(r) for r in rows}) == space.count()

    def test_edge_indices_partition_items(self):
        space = GridGraph(4)
        horizontal = {space.horizontal_index(r, c)
                      for r in range(4) for c in range(3)}
        vertical = {space.vertical_index(r, c)
                    for r in range(3) for c in range(4)}
        assert horizontal | vertical == set(range(space.n_items))
        assert not horizontal & vertical

    @pytest.mark.parametrize("side", [2, 3, 4])
    def test_enumerated_paths_are_feasible_and_sorted(self, side):
        space = GridGraph(side)
        rows = space.enumerate()
        assert [tuple(r) for r in rows] == sorted(tuple(r) for r in rows)
        for r in rows:
            assert r.sum() == 2 * (side - 1)
            assert space.is_feasible(r)

    def test_is_feasible_rejects_non_paths(self):
        space = GridGraph(3)
        path = space.enumerate()[0]
        assert not space.is_feasible(np.zeros(space.n_items, dtype=np.int8))
        assert not space.is_feasible(path[:-1])
        extra = path.copy()
        extra[np.flatnonzero(extra == 0)[0]] = 1
        assert not space.is_feasible(extra)
        doubled = path.astype(np.int64) * 2
        assert not space.is_feasible(doubled)

    @pytest.mark.parametrize("side", [3, 4])
    def test_min_linear_matches_enumeration(self, side):
        space = GridGraph(side)
        rng = np.random.default_rng(17)
        for _ in range(200):
            costs = rng.integers(0, 4, size=space.n_items).astype(np.float64)
            x, value = space.min_linear(costs)
            ref_x, ref_value = first_enumerated_min(space, costs)
            assert value == ref_value
            assert np.array_equal(x, ref_x)
            assert space.is_feasible(x)

    @settings(max_examples=60, deadline=None, derandomize=True)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_min_linear_is_lower_bound(self, seed):
        space = GridGraph(3)
        rng = np.random.default_rng(seed)
        costs = rng.uniform(-5, 10, size=space.n_items)
        _, value = space.min_linear(costs)
        _, ref_value = first_enumerated_min(space, costs)
        assert value <= ref_value + 1e-9

    def test_enumerate_cap(self):
        space = GridGraph(9)
        assert space.count() > ENUMERATION_CAP
        with pytest.raises(CapExceeded):
            space.enumerate()


class TestSelectionSpace:
    def test_validation(self):
        with pytest.raises(ValueError):
            SelectionSpace(3, 0)
        with pytest.raises(ValueError):
            SelectionSpace(3, 4)

    def test_enumerate_shape(self):
        space = SelectionSpace(5, 2)
        rows = space.enumerate()
        assert rows.shape == (10, 5)
        assert (rows.sum(axis=1) == 2).all()
        assert [tuple(r) for r in rows] == sorted(tuple(r) for r in rows)

    def test_min_linear_matches_enumeration(self):
        space = SelectionSpace(6, 3)
        rng = np.random.default_rng(5)
        for _ in range(300):
            costs = rng.integers(0, 3, size=6).astype(np.float64)
            x, value = space.min_linear(costs)
            ref_x, ref_value = first_enumerated_min(space, costs)
            assert value == ref_value
            assert np.array_equal(x, ref_x)

    def test_is_feasible(self):
        space = SelectionSpace(4, 2)
        assert space.is_feasible([1, 0, 1, 0])
        assert not space.is_feasible([1, 1, 1, 0])
        assert not space.is_feasible([2, 0, 0, 0])

    def test_enumerate_cap(self):
        with pytest.raises(CapExceeded):
            SelectionSpace(20, 10).enumerate()


class TestExplicitSpace:
    def test_dedupes_and_sorts(self):
        space = ExplicitSpace([[1, 0], [0, 1], [1, 0]])
        assert space.count() == 2
        assert space.enumerate().tolist() == [[0, 1], [1, 0]]

    def test_validation(self):
        with pytest.raises(ValueError):
            ExplicitSpace(np.zeros((0, 2)))
        with pytest.raises(ValueError):
            ExplicitSpace([[0, 2]])

    def test_min_linear_tie_break(self):
        space = ExplicitSpace([[1, 1, 0], [0, 1, 1], [1, 0, 1]])
        x, value = space.min_linear(np.array([1.0, 1.0, 1.0]))
        assert value == 2.0
        assert x.tolist() == [0, 1, 1]

    def test_is_feasible_is_membership(self, demo_space):
        assert demo_space.is_feasible([1, 1, 0, 0])
        assert not demo_space.is_feasible([1, 0, 1, 0])
