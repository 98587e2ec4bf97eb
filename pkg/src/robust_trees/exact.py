"""Exact tree optimization by structure enumeration and cut generation.

The master problem picks one (item, threshold) split per internal node
and one feasible solution per leaf, minimizing the worst objective over a
finite set of perturbation scenarios (routing uses perturbed
observations, objectives charge true costs).  Splits with identical
routing behaviour over every (sample, scenario) pair are interchangeable,
so the search enumerates distinct routing *patterns* and maps the winner
back to the first (item, threshold) representative — an exact reduction.
Leaf assignment decomposes per leaf whenever all scenarios route alike
(then each leaf takes ``min_linear`` of its samples' summed costs);
otherwise an exact branch and bound picks the leaf tuple.

``scenario_generation`` alternates the master with the exact adversary,
appending each worst-case shift as a new scenario until the two values
meet within tolerance, which certifies optimality over the catalog-split
family.  ``post_process`` then slides thresholds inside their enclosing
observed-value intervals and keeps the best tree found.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

import numpy as np

from . import adversary, kernels
from .errors import CapExceeded, ConvergenceStall, NoSplitAvailable
from .model import (EPSILON, OBJECTIVE_TOL, DecisionTree, assignment_objective,
                    build_threshold_catalog, leaf_values)

PI_GRID = tuple(round(0.1 * t, 1) for t in range(1, 10))
"""Interpolation weights used when refining thresholds."""

_CHUNK = 100_000
_TIME_CHECK = 2048
_MAX_STRUCTURES = 2 ** 62


@dataclass(frozen=True)
class ScenarioSet:
    """Perturbation scenarios the master hedges against; index 0 is zero."""

    xi: np.ndarray

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=np.float64)
        if xi.ndim != 3:
            raise ValueError("xi must be (scenarios, samples, items)")
        if np.any(xi[0] != 0.0):
            raise ValueError("the first scenario must be all zeros")
        object.__setattr__(self, "xi", xi)

    @classmethod
    def zero(cls, n_samples, n_items):
        return cls(np.zeros((1, n_samples, n_items)))

    @property
    def n_scenarios(self):
        return self.xi.shape[0]

    def contains(self, xi_new, tol=1e-9):
        return bool(np.all(np.abs(self.xi - xi_new) <= tol, axis=(1, 2)).any())

    def append(self, xi_new):
        return ScenarioSet(np.concatenate([self.xi, xi_new[None]], axis=0))


@dataclass
class SolveReport:
    """Outcome of a solve: the tree plus bookkeeping.

    ``objective`` is the value the method stands behind (for converged
    cut generation the certified worst case, for heuristics the incumbent's
    worst case, for a bare master solve the scenario-set value).
    ``optimal`` marks a certified optimum; heuristics never set it.
    """

    method: str
    tree: DecisionTree
    objective: float
    master_objective: float
    iterations: int
    wall_time: float
    converged: bool
    optimal: bool
    extras: dict = field(default_factory=dict)

    def to_json_dict(self):
        return {
            "method": self.method,
            "objective": self.objective,
            "master_objective": self.master_objective,
            "iterations": self.iterations,
            "wall_time_s": self.wall_time,
            "converged": self.converged,
            "optimal": self.optimal,
            "extras": self.extras,
        }


def _split_patterns(costs, scenarios, catalog):
    """Distinct routing patterns over catalog splits.

    Returns (splits, pattern_bits, reps): pattern_bits[m, s, j] is 1 when
    sample j under scenario s branches left at pattern m; reps[m] indexes
    the first split (item-then-threshold order) realizing the pattern.
    """
    splits = catalog.all_splits()
    if not splits:
        raise NoSplitAvailable("no item has two distinct observed values")
    obs = costs[None, :, :] + scenarios.xi
    bits = np.empty((len(splits), scenarios.n_scenarios, costs.shape[0]),
                    dtype=np.uint8)
    for m, (i, theta) in enumerate(splits):
        bits[m] = obs[:, :, i] <= theta
    flat = bits.reshape(len(splits), -1)
    _, first = np.unique(flat, axis=0, return_index=True)
    reps = np.sort(first)
    return splits, np.ascontiguousarray(bits[reps]), reps


def _master_objective(tree, dataset, scenarios):
    values = leaf_values(dataset, tree)
    best = -np.inf
    for s in range(scenarios.n_scenarios):
        assign = tree.traverse_batch(dataset.costs + scenarios.xi[s])
        best = max(best, assignment_objective(values, assign))
    return best


def _route_matrix(pattern_bits, choices, depth):
    """Leaf of each (scenario, sample) for one choice of node patterns."""
    n_scen = pattern_bits.shape[1]
    n = pattern_bits.shape[2]
    ch = np.asarray(choices, dtype=np.int64)
    leafm = np.empty((n_scen, n), dtype=np.int64)
    cols = np.arange(n)
    for s in range(n_scen):
        node = np.zeros(n, dtype=np.int64)
        for _ in range(depth):
            left = pattern_bits[ch[node], s, cols].astype(bool)
            node = np.where(left, 2 * node + 1, 2 * node + 2)
        leafm[s] = node - (2 ** depth - 1)
    return leafm


def solve_master(dataset, scenarios, space, depth, catalog=None, pool=None,
                 fixed_leaves=None, time_limit=None):
    """Best tree against a fixed scenario set; exact unless it times out.

    With ``fixed_leaves`` only the split structure is searched (the leaf
    solutions are given).  ``pool`` overrides the candidate solutions for
    free leaves (default: the space's full enumeration).  On timeout the
    incumbent is returned with ``optimal=False``.
    """
    start = time.perf_counter()
    costs = dataset.costs
    n = dataset.n_samples

    def out_of_time():
        return (time_limit is not None
                and time.perf_counter() - start > time_limit)

    if depth == 0:
        if fixed_leaves is not None:
            leaves = np.asarray(fixed_leaves, dtype=np.int8).reshape(1, -1)
        else:
            x, _ = space.min_linear(costs.sum(axis=0))
            leaves = x[None, :]
        tree = DecisionTree(0, [], [], leaves)
        obj = _master_objective(tree, dataset, scenarios)
        return SolveReport("master", tree, obj, obj, 1,
                           time.perf_counter() - start, True, True)

    if catalog is None:
        catalog = build_threshold_catalog(dataset)
    splits, pattern_bits, reps = _split_patterns(costs, scenarios, catalog)
    n_pat = pattern_bits.shape[0]
    n_nodes = 2 ** depth - 1
    n_leaves_ = 2 ** depth
    total = n_pat ** n_nodes
    if total > _MAX_STRUCTURES:
        raise CapExceeded(f"{total} split structures is beyond any search")

    timed_out = False
    best_obj = np.inf
    best_choice = None

    if fixed_leaves is not None:
        leaf_vals = np.ascontiguousarray(
            costs @ np.asarray(fixed_leaves, np.int8).astype(np.float64).T)
        lb = float(leaf_vals.min(axis=1).sum())
        lb_stop = lb + 1e-12 * (1.0 + abs(lb))
        for lo in range(0, total, _CHUNK):
            hi = min(lo + _CHUNK, total)
            obj, improved, choice = kernels.scan_structures_fixed(
                pattern_bits, leaf_vals, depth, lo, hi, best_obj, lb)
            if improved:
                best_obj = obj
                best_choice = choice
            if best_obj <= lb_stop:
                break
            if hi < total and out_of_time():
                timed_out = True
                break
        leaves = np.asarray(fixed_leaves, dtype=np.int8)
    else:
        if pool is None:
            pool = space.enumerate()
        pool = np.asarray(pool, dtype=np.int8)
        values = np.ascontiguousarray(costs @ pool.astype(np.float64).T)
        lb = float(values.min(axis=1).sum())
        lb_stop = lb + 1e-12 * (1.0 + abs(lb))
        best_tuple = None
        if scenarios.n_scenarios == 1:
            bits2 = np.ascontiguousarray(pattern_bits[:, 0, :])
            for lo in range(0, total, _CHUNK):
                hi = min(lo + _CHUNK, total)
                obj, improved, choice, leafpick = kernels.scan_structures_free(
                    bits2, values, depth, lo, hi, best_obj, lb)
                if improved:
                    best_obj = obj
                    best_choice = choice
                    best_tuple = leafpick
                if best_obj <= lb_stop:
                    break
                if hi < total and out_of_time():
                    timed_out = True
                    break
        else:
            memo = {}
            counter = itertools.count()
            for it in range(total):
                rem = it
                choices = [0] * n_nodes
                for q in range(n_nodes - 1, -1, -1):
                    choices[q] = rem % n_pat
                    rem //= n_pat
                leafm = _route_matrix(pattern_bits, choices, depth)
                key = leafm.tobytes()
                hit = memo.get(key)
                if hit is None:
                    if (leafm == leafm[0]).all():
                        tup = np.zeros(n_leaves_, dtype=np.int64)
                        obj = 0.0
                        for k in range(n_leaves_):
                            members = leafm[0] == k
                            colsum = values[members].sum(axis=0)
                            tup[k] = int(np.argmin(colsum))
                            obj += float(colsum[tup[k]])
                    else:
                        agg = np.zeros(
                            (scenarios.n_scenarios, n_leaves_,
                             values.shape[1]))
                        for s in range(scenarios.n_scenarios):
                            for k in range(n_leaves_):
                                agg[s, k] = values[leafm[s] == k].sum(axis=0)
                        obj, tup = kernels.assign_minmax(agg, agg.min(axis=2))
                    memo[key] = (obj, tup)
                else:
                    obj, tup = hit
                if obj < best_obj:
                    best_obj = obj
                    best_choice = list(choices)
                    best_tuple = tup
                if best_obj <= lb_stop:
                    break
                if next(counter) % _TIME_CHECK == 0 and out_of_time():
                    timed_out = True
                    break
        leaves = pool[np.asarray(best_tuple, dtype=np.int64)]

    rep_items = []
    rep_thetas = []
    for c in best_choice:
        i, theta = splits[int(reps[int(c)])]
        rep_items.append(i)
        rep_thetas.append(theta)
    tree = DecisionTree(depth, rep_items, rep_thetas, leaves)
    obj = _master_objective(tree, dataset, scenarios)
    return SolveReport("master", tree, obj, obj, 1,
                       time.perf_counter() - start, not timed_out,
                       not timed_out)


def robust_value(tree, dataset, budget, eps=EPSILON):
    """Worst-case objective of a tree under the budget's kind."""
    if budget.kind == "local":
        return adversary.solve_local(tree, dataset, budget.gamma, eps).objective
    return adversary.solve_global(tree, dataset, budget.gamma, eps).objective


def _adversary_result(tree, dataset, budget, eps):
    if budget.kind == "local":
        return adversary.solve_local(tree, dataset, budget.gamma, eps)
    return adversary.solve_global(tree, dataset, budget.gamma, eps)


def scenario_generation(dataset, budget, space, depth, catalog=None,
                        pool=None, fixed_leaves=None, time_limit=3600.0,
                        tol=OBJECTIVE_TOL, eps=EPSILON, dup_tol=1e-9):
    """Alternate master and adversary until their values meet.

    Master values are nondecreasing in the iteration count.  Convergence
    (|master - adversary| <= tol) certifies the tree optimal over the
    catalog-split family (with ``fixed_leaves``: optimal structure for
    those leaves).  A worst case identical (within ``dup_tol`` entrywise)
    to a stored scenario cannot cut anything off and raises
    :class:`ConvergenceStall`.  Hitting ``time_limit`` returns the current
    incumbent with ``converged=False``; a running master or adversary
    solve is never interrupted between the checks.
    """
    start = time.perf_counter()
    scen = ScenarioSet.zero(dataset.n_samples, dataset.n_items)
    masters = []
    iteration = 0
    while True:
        iteration += 1
        remaining = (None if time_limit is None
                     else time_limit - (time.perf_counter() - start))
        m = solve_master(dataset, scen, space, depth, catalog=catalog,
                         pool=pool, fixed_leaves=fixed_leaves,
                         time_limit=remaining)
        masters.append(m.master_objective)
        if not m.optimal:
            return SolveReport(
                "SG", m.tree, m.master_objective, m.master_objective,
                iteration, time.perf_counter() - start, False, False,
                extras={"master_objectives": masters})
        adv = _adversary_result(m.tree, dataset, budget, eps)
        if adv.objective - m.master_objective <= tol:
            return SolveReport(
                "SG", m.tree, adv.objective, m.master_objective, iteration,
                time.perf_counter() - start, True, True,
                extras={"master_objectives": masters})
        if time_limit is not None and time.perf_counter() - start > time_limit:
            return SolveReport(
                "SG", m.tree, adv.objective, m.master_objective, iteration,
                time.perf_counter() - start, False, False,
                extras={"master_objectives": masters})
        if scen.contains(adv.xi, dup_tol):
            raise ConvergenceStall(
                "worst-case scenario repeated without convergence")
        scen = scen.append(adv.xi)


def post_process(tree, dataset, budget, space=None, pis=PI_GRID, eps=EPSILON,
                 input_objective=None):
    """Refine thresholds inside their enclosing observed-value intervals.

    Each internal node's threshold is replaced by candidates interpolating
    the two observed values bracketing it (weights ``pis``); every
    combination is evaluated through the adversary (exactly
    prod(|options|) evaluations, |pis|^nodes when all thresholds sit
    strictly between observations).  Returns the strictly best tree found,
    or the input tree on ties.  When the input's thresholds are catalog
    midpoints the input combination is part of the grid, so no extra
    evaluation is needed; otherwise ``input_objective`` is used as the
    reference (one extra adversary call when omitted).
    """
    if space is not None:
        for k in range(tree.n_leaves):
            if not space.is_feasible(tree.leaves[k]):
                raise ValueError(f"leaf {k} is not feasible in the given space")
    if tree.depth == 0:
        robust_value(tree, dataset, budget, eps)
        return tree

    options = []
    for q in range(tree.n_internal):
        theta = float(tree.thresholds[q])
        vals = np.unique(dataset.costs[:, tree.items[q]])
        pos = int(np.searchsorted(vals, theta))
        if 0 < pos < vals.size and vals[pos - 1] < theta < vals[pos]:
            lo, hi = float(vals[pos - 1]), float(vals[pos])
            options.append([pi * lo + (1.0 - pi) * hi for pi in pis])
        else:
            options.append([theta])

    original = tuple(float(t) for t in tree.thresholds)
    best_val = np.inf
    best_combo = None
    original_val = None
    for combo in itertools.product(*options):
        candidate = tree.with_thresholds(np.asarray(combo))
        val = robust_value(candidate, dataset, budget, eps)
        if combo == original:
            original_val = val
        if val < best_val:
            best_val = val
            best_combo = combo
    ref = input_objective
    if ref is None:
        ref = original_val
    if ref is None:
        ref = robust_value(tree, dataset, budget, eps)
    if best_val < ref - 1e-9:
        return tree.with_thresholds(np.asarray(best_combo))
    return tree
