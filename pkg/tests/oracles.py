"""Independent reference implementations used to check the solvers.

Everything here is written for clarity over speed and reimplements the
math from scratch: leaf constraint boxes are rebuilt by walking leaf
index bits, efforts are plain interval distances, and all optimization
is exhaustive enumeration.  Only trivial accessors of the package
(array fields, ``traverse_batch``) are reused.
"""

import itertools
import math

import numpy as np


def leaf_bounds(tree, leaf, eps):
    """Per-item (lo, hi) interval an observation must satisfy to reach
    ``leaf``; None when the constraints contradict."""
    node = 0
    bounds = {}
    for level in range(tree.depth):
        bit = (leaf >> (tree.depth - 1 - level)) & 1
        item = int(tree.items[node])
        theta = float(tree.thresholds[node])
        lo, hi = bounds.get(item, (-math.inf, math.inf))
        if bit == 0:
            hi = min(hi, theta)
        else:
            lo = max(lo, theta + eps)
        if lo > hi:
            return None
        bounds[item] = (lo, hi)
        node = 2 * node + 1 + bit
    return bounds


def effort(tree, costs_row, leaf, eps):
    """Minimum L1 change moving one observation into a leaf's box."""
    bounds = leaf_bounds(tree, leaf, eps)
    if bounds is None:
        return math.inf
    total = 0.0
    for item, (lo, hi) in sorted(bounds.items()):
        c = float(costs_row[item])
        if c < lo:
            total += lo - c
        elif c > hi:
            total += c - hi
    return total


def effort_matrix(tree, dataset, eps):
    n_leaves = 2 ** tree.depth
    rho = np.empty((dataset.n_samples, n_leaves))
    for j in range(dataset.n_samples):
        for k in range(n_leaves):
            rho[j, k] = effort(tree, dataset.costs[j], k, eps)
    return rho


def values_matrix(tree, dataset):
    vals = np.empty((dataset.n_samples, 2 ** tree.depth))
    for k in range(2 ** tree.depth):
        vals[:, k] = dataset.costs @ tree.leaves[k].astype(np.float64)
    return vals


def adversary_local(tree, dataset, gamma, eps):
    """Per-sample worst case: best reachable leaf, independently."""
    rho = effort_matrix(tree, dataset, eps)
    vals = values_matrix(tree, dataset)
    total = 0.0
    for j in range(dataset.n_samples):
        total += max(vals[j, k] for k in range(vals.shape[1])
                     if rho[j, k] <= gamma)
    return total


def adversary_global(tree, dataset, gamma, eps):
    """Shared-budget worst case by enumerating all leaf assignments."""
    rho = effort_matrix(tree, dataset, eps)
    vals = values_matrix(tree, dataset)
    n, k = vals.shape
    best = -math.inf
    for assign in itertools.product(range(k), repeat=n):
        spent = sum(rho[j, assign[j]] for j in range(n))
        if spent <= gamma:
            best = max(best, sum(vals[j, assign[j]] for j in range(n)))
    return best


def adversary_value(tree, dataset, budget, eps):
    if budget.kind == "local":
        return adversary_local(tree, dataset, budget.gamma, eps)
    return adversary_global(tree, dataset, budget.gamma, eps)


def best_tree_value(dataset, space, budget, depth, eps):
    """Exhaustive optimum over every split structure and leaf tuple."""
    from robust_trees import DecisionTree, build_threshold_catalog

    splits = build_threshold_catalog(dataset).all_splits()
    pool = space.enumerate()
    n_nodes = 2 ** depth - 1
    n_leaves = 2 ** depth
    best = math.inf
    for combo in itertools.product(splits, repeat=n_nodes):
        items = [c[0] for c in combo]
        thetas = [c[1] for c in combo]
        for pick in itertools.product(range(len(pool)), repeat=n_leaves):
            tree = DecisionTree(depth, items, thetas, pool[list(pick)])
            best = min(best, adversary_value(tree, dataset, budget, eps))
    return best


def best_leaf_fill_value(tree, dataset, budget, pool, eps):
    """Exhaustive optimum over leaf tuples for a fixed structure."""
    n_leaves = 2 ** tree.depth
    best = math.inf
    for pick in itertools.product(range(len(pool)), repeat=n_leaves):
        cand = tree.with_leaves(pool[list(pick)])
        best = min(best, adversary_value(cand, dataset, budget, eps))
    return best
