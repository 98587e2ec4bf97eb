import numpy as np
import pytest

from robust_trees import Dataset, DecisionTree, ExplicitSpace, SelectionSpace

# Worked example shared across modules: five 4-item cost samples and the
# two feasible solutions A (items 0+1) and B (items 2+3).
DEMO_COSTS = np.array([
    [0.0, 1.0, 7.0, 9.0],
    [1.0, 5.0, 3.0, 10.0],
    [9.0, 4.0, 4.0, 9.0],
    [9.0, 10.0, 5.0, 7.0],
    [10.0, 8.0, 2.0, 2.0],
])
SOLUTION_A = np.array([1, 1, 0, 0], dtype=np.int8)
SOLUTION_B = np.array([0, 0, 1, 1], dtype=np.int8)


@pytest.fixture
def demo_dataset():
    return Dataset(DEMO_COSTS)


@pytest.fixture
def demo_space():
    return ExplicitSpace(np.stack([SOLUTION_A, SOLUTION_B]))


@pytest.fixture
def depth1_tree():
    """Split item 0 at 5; low observations get A, high get B."""
    return DecisionTree(1, [0], [5.0], np.stack([SOLUTION_A, SOLUTION_B]))


@pytest.fixture
def depth2_tree():
    """Item 0 at 5, then item 1 at 6.5 on both sides; A only deep left."""
    leaves = np.stack([SOLUTION_A, SOLUTION_B, SOLUTION_B, SOLUTION_B])
    return DecisionTree(2, [0, 1, 1], [5.0, 6.5, 6.5], leaves)


def selection_fixture():
    """Small pick-2-of-6 instance with a hand-verified optimum of 25.

    Three cost samples and a depth-1 split on item 4 at 10: with one
    unit of perturbation budget, the best leaf assignment for that
    structure pays exactly 25, checkable by enumerating all leaf pairs.
    """
    space = SelectionSpace(6, 2)
    costs = np.array([
        [9.0, 8.0, 7.0, 6.0, 60.0, 60.0],
        [60.0, 60.0, 60.0, 60.0, 0.0, 0.0],
        [2.0, 4.0, 6.0, 8.0, 10.0, 0.0],
    ])
    tree = DecisionTree(1, [4], [10.0],
                        np.stack([space.enumerate()[0]] * 2))
    return Dataset(costs), space, tree


# ---------------------------------------------------------------------------
# Acceptance reporting: tests append (number, description, passed) and a
# terminal hook prints one line per criterion after the run.
# ---------------------------------------------------------------------------

ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num, desc, passed in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {num:2d}: {status} - {desc}")
