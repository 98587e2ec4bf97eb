"""Hot numerical loops, compiled with numba when available.

Every kernel is written once as plain loops over numpy arrays.  At import
time the module decides which backend to use:

* ``ROBUST_TREES_BACKEND=numba`` forces compilation (ImportError if numba
  is missing),
* ``ROBUST_TREES_BACKEND=numpy`` forces the interpreted fallback,
* unset: numba when importable, fallback otherwise.

Both paths run the identical code and return identical results; only the
speed differs.  ``benchmarks/bench_kernels.py`` measures the gap.

Branch-and-bound kernels use small safety margins (1e-9 absolute) so that
float rounding in bound arithmetic can never prune a strictly better
solution; this costs a handful of extra nodes and keeps the searches exact.
"""

from __future__ import annotations

import os

import numpy as np

_PRUNE_MARGIN = 1e-9

_env = os.environ.get("ROBUST_TREES_BACKEND", "").strip().lower()
if _env not in ("", "numpy", "numba"):
    raise ValueError(
        f"ROBUST_TREES_BACKEND must be 'numba' or 'numpy', got {_env!r}"
    )

if _env == "numpy":
    HAS_NUMBA = False
else:
    try:
        from numba import njit  # noqa: F401

        HAS_NUMBA = True
    except ImportError:
        if _env == "numba":
            raise
        HAS_NUMBA = False

BACKEND = "numba" if HAS_NUMBA else "numpy"


def _maybe_jit(func):
    if HAS_NUMBA:
        return njit(cache=True)(func)
    return func


# ---------------------------------------------------------------------------
# Shortest monotone path on a directed grid
# ---------------------------------------------------------------------------

def _grid_min_path(g, costs):
    """Cheapest southwest-to-northeast path on a g x g grid.

    Edge indexing: west-to-east edge (r, c) at r*(g-1)+c, then
    south-to-north edge (r, c) at g*(g-1) + r*g + c, rows counted from the
    south.  Works for negative costs (the graph is acyclic).  Ties are
    resolved toward the lexicographically smallest indicator vector, which
    for this indexing means preferring the northward move.
    """
    nh = g * (g - 1)
    best = np.empty((g, g), np.float64)
    best[g - 1, g - 1] = 0.0
    for r in range(g - 1, -1, -1):
        for c in range(g - 1, -1, -1):
            if r == g - 1 and c == g - 1:
                continue
            v = np.inf
            if r < g - 1:
                v = costs[nh + r * g + c] + best[r + 1, c]
            if c < g - 1:
                e = costs[r * (g - 1) + c] + best[r, c + 1]
                if e < v:
                    v = e
            best[r, c] = v
    x = np.zeros(costs.shape[0], np.int8)
    r = 0
    c = 0
    while r < g - 1 or c < g - 1:
        if r < g - 1 and costs[nh + r * g + c] + best[r + 1, c] == best[r, c]:
            x[nh + r * g + c] = 1
            r += 1
        else:
            x[r * (g - 1) + c] = 1
            c += 1
    return x, best[0, 0]


# ---------------------------------------------------------------------------
# Per-leaf perturbation efforts
# ---------------------------------------------------------------------------

def _effort_matrix(costs, item, lo, hi, leaf_ptr, leaf_ok):
    """L1 effort to route each sample into each leaf.

    Constraints for leaf k occupy rows leaf_ptr[k]:leaf_ptr[k+1]; each
    requires observation `item` to land in [lo, hi].  A leaf whose combined
    constraints are contradictory (leaf_ok false) costs +inf for every
    sample.
    """
    n_samples = costs.shape[0]
    n_leaves = leaf_ptr.shape[0] - 1
    rho = np.zeros((n_samples, n_leaves), np.float64)
    for k in range(n_leaves):
        if not leaf_ok[k]:
            for j in range(n_samples):
                rho[j, k] = np.inf
            continue
        for t in range(leaf_ptr[k], leaf_ptr[k + 1]):
            i = item[t]
            for j in range(n_samples):
                cji = costs[j, i]
                if cji < lo[t]:
                    rho[j, k] += lo[t] - cji
                elif cji > hi[t]:
                    rho[j, k] += cji - hi[t]
    return rho


# ---------------------------------------------------------------------------
# Exact shared-budget upgrade search (multiple-choice knapsack)
# ---------------------------------------------------------------------------

def _mckp_lp_bound(t0, budget, hull_level, hull_de, hull_dv):
    """Fractional greedy over hull increments of levels >= t0.

    Items arrive in globally non-increasing dv/de ratio; the scan stops at
    the first item that no longer fits, taking it fractionally, which keeps
    every class at a prefix of its hull chain.  Upper-bounds any integral
    completion.
    """
    b = budget
    v = 0.0
    for h in range(hull_de.shape[0]):
        if hull_level[h] < t0:
            continue
        if hull_de[h] <= b:
            b -= hull_de[h]
            v += hull_dv[h]
        else:
            v += hull_dv[h] * (b / hull_de[h])
            break
    return v


def _mckp_search(cand_ptr, cand_de, cand_dv, suffix_max,
                 hull_level, hull_pos, hull_de, hull_dv, hull_cand, gamma):
    """Depth-first exact search over one upgrade (or none) per level.

    Levels are samples that own at least one affordable upgrade; candidates
    per level are dominance-filtered and stored by increasing effort.
    Children are explored by decreasing gain, staying put last, and an
    incumbent is replaced only on strict improvement, so the result is
    deterministic.  Bounds: min(suffix-maxima bound, hull LP bound).

    Returns (value, choice) where choice[t] is a global candidate index or
    -1 for "keep the nominal leaf".
    """
    n_levels = cand_ptr.shape[0] - 1
    best_choice = np.full(n_levels, -1, np.int64)
    cur_choice = np.full(n_levels, -1, np.int64)

    # Greedy integral start: walk hull items in ratio order, take whole
    # increments while they fit and stay on each level's chain prefix.
    next_pos = np.zeros(n_levels, np.int64)
    b = gamma
    best_val = 0.0
    for h in range(hull_de.shape[0]):
        lv = hull_level[h]
        if hull_pos[h] == next_pos[lv] and hull_de[h] <= b:
            b -= hull_de[h]
            best_val += hull_dv[h]
            next_pos[lv] += 1
            best_choice[lv] = hull_cand[h]

    ci = np.zeros(n_levels + 1, np.int64)
    bud = np.empty(n_levels + 1, np.float64)
    val = np.empty(n_levels + 1, np.float64)
    bud[0] = gamma
    val[0] = 0.0
    t = 0
    while t >= 0:
        if t == n_levels:
            if val[t] > best_val:
                best_val = val[t]
                for q in range(n_levels):
                    best_choice[q] = cur_choice[q]
            t -= 1
            continue
        n_c = cand_ptr[t + 1] - cand_ptr[t]
        if ci[t] == 0:
            ub = val[t] + suffix_max[t]
            if ub > best_val - _PRUNE_MARGIN:
                ub2 = val[t] + _mckp_lp_bound(
                    t, bud[t], hull_level, hull_de, hull_dv)
                if ub2 < ub:
                    ub = ub2
            if ub <= best_val - _PRUNE_MARGIN:
                ci[t] = n_c + 1
        if ci[t] > n_c:
            ci[t] = 0
            t -= 1
            continue
        k = ci[t]
        ci[t] += 1
        if k < n_c:
            g_idx = cand_ptr[t + 1] - 1 - k
            de = cand_de[g_idx]
            if de > bud[t]:
                continue
            cur_choice[t] = g_idx
            bud[t + 1] = bud[t] - de
            val[t + 1] = val[t] + cand_dv[g_idx]
        else:
            cur_choice[t] = -1
            bud[t + 1] = bud[t]
            val[t + 1] = val[t]
        t += 1
        ci[t] = 0
    return best_val, best_choice


# ---------------------------------------------------------------------------
# Leaf-tuple assignment, scenario-coupled (minimize the max scenario sum)
# ---------------------------------------------------------------------------

def _assign_minmax(agg, minagg):
    """Pick one candidate per leaf minimizing max_s of the summed values.

    agg[s, k, p]: total value of candidate p at leaf k under scenario s
    (summed over the samples the scenario routes to k).  minagg[s, k] is
    the per-(s, k) minimum over p, used for the completion bound.
    """
    n_scen, n_leaves, n_pool = agg.shape
    suf = np.zeros((n_scen, n_leaves + 1), np.float64)
    for s in range(n_scen):
        for k in range(n_leaves - 1, -1, -1):
            suf[s, k] = suf[s, k + 1] + minagg[s, k]
    best = np.inf
    best_t = np.zeros(n_leaves, np.int64)
    cur_t = np.zeros(n_leaves, np.int64)
    part = np.zeros((n_leaves + 1, n_scen), np.float64)
    ci = np.zeros(n_leaves + 1, np.int64)
    t = 0
    while t >= 0:
        if t == n_leaves:
            v = part[t, 0]
            for s in range(1, n_scen):
                if part[t, s] > v:
                    v = part[t, s]
            if v < best:
                best = v
                for q in range(n_leaves):
                    best_t[q] = cur_t[q]
            t -= 1
            continue
        if ci[t] == 0:
            bnd = -np.inf
            for s in range(n_scen):
                w = part[t, s] + suf[s, t]
                if w > bnd:
                    bnd = w
            if bnd >= best + _PRUNE_MARGIN:
                ci[t] = n_pool
        if ci[t] >= n_pool:
            ci[t] = 0
            t -= 1
            continue
        p = ci[t]
        ci[t] += 1
        cur_t[t] = p
        for s in range(n_scen):
            part[t + 1, s] = part[t, s] + agg[s, t, p]
        t += 1
        ci[t] = 0
    return best, best_t


# ---------------------------------------------------------------------------
# Leaf-tuple assignment under per-sample reach sets (minimize sum of maxima)
# ---------------------------------------------------------------------------

def _assign_reach(values, reach, minval, last_reach):
    """Pick one candidate per leaf minimizing sum_j max over reachable leaves.

    values[j, p]: candidate p's value for sample j; reach[j, k] marks leaves
    sample j can be pushed into; minval[j] = min_p values[j, p];
    last_reach[j] = highest reachable leaf index (every sample reaches at
    least its nominal leaf).
    """
    n_samples, n_pool = values.shape
    n_leaves = reach.shape[1]
    cur = np.full((n_leaves + 1, n_samples), -np.inf, np.float64)
    best = np.inf
    best_t = np.zeros(n_leaves, np.int64)
    cur_t = np.zeros(n_leaves, np.int64)
    ci = np.zeros(n_leaves + 1, np.int64)
    t = 0
    while t >= 0:
        if t == n_leaves:
            v = 0.0
            for j in range(n_samples):
                v += cur[t, j]
            if v < best:
                best = v
                for q in range(n_leaves):
                    best_t[q] = cur_t[q]
            t -= 1
            continue
        if ci[t] == 0:
            bnd = 0.0
            for j in range(n_samples):
                w = cur[t, j]
                if last_reach[j] >= t and minval[j] > w:
                    w = minval[j]
                bnd += w
            if bnd >= best + _PRUNE_MARGIN:
                ci[t] = n_pool
        if ci[t] >= n_pool:
            ci[t] = 0
            t -= 1
            continue
        p = ci[t]
        ci[t] += 1
        cur_t[t] = p
        for j in range(n_samples):
            if reach[j, t] and values[j, p] > cur[t, j]:
                cur[t + 1, j] = values[j, p]
            else:
                cur[t + 1, j] = cur[t, j]
        t += 1
        ci[t] = 0
    return best, best_t


# ---------------------------------------------------------------------------
# Split-structure scans
# ---------------------------------------------------------------------------

def _scan_structures_free(bits, values, depth, start, stop, best_in, lb):
    """Scan structures [start, stop) with free leaves, single routing.

    bits[m, j]: 1 when sample j satisfies split pattern m (branches left).
    values[j, p]: candidate p's value for sample j.  With one routing the
    leaves decouple, so each leaf takes the candidate minimizing its summed
    value.  Structures are visited in odometer order (node 0 slowest), the
    incumbent moves only on strict improvement, and the scan stops early
    once it touches the relaxation bound lb.
    """
    n_pat = bits.shape[0]
    n_samples = bits.shape[1]
    n_pool = values.shape[1]
    n_nodes = 2 ** depth - 1
    n_leaves = 2 ** depth
    choice = np.zeros(n_nodes, np.int64)
    best_choice = np.full(n_nodes, -1, np.int64)
    best_leaf = np.zeros(n_leaves, np.int64)
    leafsum = np.zeros((n_leaves, n_pool), np.float64)
    best = best_in
    improved = False
    lb_stop = lb + 1e-12 * (1.0 + abs(lb))
    for it in range(start, stop):
        rem = it
        for q in range(n_nodes - 1, -1, -1):
            choice[q] = rem % n_pat
            rem //= n_pat
        for k in range(n_leaves):
            for p in range(n_pool):
                leafsum[k, p] = 0.0
        for j in range(n_samples):
            node = 0
            for _ in range(depth):
                if bits[choice[node], j]:
                    node = 2 * node + 1
                else:
                    node = 2 * node + 2
            k = node - n_nodes
            for p in range(n_pool):
                leafsum[k, p] += values[j, p]
        obj = 0.0
        for k in range(n_leaves):
            m0 = leafsum[k, 0]
            for p in range(1, n_pool):
                if leafsum[k, p] < m0:
                    m0 = leafsum[k, p]
            obj += m0
        if obj < best:
            best = obj
            improved = True
            for q in range(n_nodes):
                best_choice[q] = choice[q]
            for k in range(n_leaves):
                arg = 0
                m0 = leafsum[k, 0]
                for p in range(1, n_pool):
                    if leafsum[k, p] < m0:
                        m0 = leafsum[k, p]
                        arg = p
                best_leaf[k] = arg
            if best <= lb_stop:
                break
    return best, improved, best_choice, best_leaf


def _scan_structures_fixed(bits, leaf_vals, depth, start, stop, best_in, lb):
    """Scan structures [start, stop) with fixed leaf values, any scenarios.

    bits[m, s, j]: 1 when sample j under scenario s satisfies pattern m.
    leaf_vals[j, k]: value of sample j if routed to leaf k.  Objective is
    the max over scenarios of the routed sums.
    """
    n_pat = bits.shape[0]
    n_scen = bits.shape[1]
    n_samples = bits.shape[2]
    n_nodes = 2 ** depth - 1
    choice = np.zeros(n_nodes, np.int64)
    best_choice = np.full(n_nodes, -1, np.int64)
    best = best_in
    improved = False
    lb_stop = lb + 1e-12 * (1.0 + abs(lb))
    for it in range(start, stop):
        rem = it
        for q in range(n_nodes - 1, -1, -1):
            choice[q] = rem % n_pat
            rem //= n_pat
        obj = -np.inf
        for s in range(n_scen):
            tot = 0.0
            for j in range(n_samples):
                node = 0
                for _ in range(depth):
                    if bits[choice[node], s, j]:
                        node = 2 * node + 1
                    else:
                        node = 2 * node + 2
                tot += leaf_vals[j, node - n_nodes]
            if tot > obj:
                obj = tot
        if obj < best:
            best = obj
            improved = True
            for q in range(n_nodes):
                best_choice[q] = choice[q]
            if best <= lb_stop:
                break
    return best, improved, best_choice


_mckp_lp_bound = _maybe_jit(_mckp_lp_bound)

grid_min_path = _maybe_jit(_grid_min_path)
effort_matrix = _maybe_jit(_effort_matrix)
mckp_search = _maybe_jit(_mckp_search)
assign_minmax = _maybe_jit(_assign_minmax)
assign_reach = _maybe_jit(_assign_reach)
scan_structures_free = _maybe_jit(_scan_structures_free)
scan_structures_fixed = _maybe_jit(_scan_structures_fixed)
