#!/usr/bin/env python3
"""Time the hot kernels under the active backend.

Run directly for one backend (selected by ROBUST_TREES_BACKEND), or with
``--both`` to re-execute itself under numba and the pure NumPy fallback
and print a side-by-side table:

    python3 benchmarks/bench_kernels.py --both
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from robust_trees import (
    Dataset,
    DecisionTree,
    InstanceSpec,
    ScenarioSet,
    build_threshold_catalog,
    generate_instance,
    optimize_leaves_local,
    perturbation_cost,
    sample_random_structure,
    solve_global,
    solve_master,
)
from robust_trees.kernels import BACKEND


def _tree_for(dataset, depth, seed):
    catalog = build_threshold_catalog(dataset)
    rng = np.random.default_rng(seed)
    items, thetas = sample_random_structure(catalog, depth, rng)
    leaves = rng.integers(0, 2,
                          size=(2 ** depth, dataset.n_items)).astype(np.int8)
    return DecisionTree(depth, items, thetas, leaves)


def bench_grid_min_path():
    from robust_trees import GridGraph

    space = GridGraph(40)
    rng = np.random.default_rng(0)
    costs = rng.uniform(0, 10, size=(200, space.n_items))
    for row in costs:
        space.min_linear(row)


def bench_perturbation_cost():
    rng = np.random.default_rng(1)
    ds = Dataset(rng.uniform(0, 10, size=(2000, 24)))
    tree = _tree_for(ds, 2, 1)
    for _ in range(30):
        perturbation_cost(tree, ds)


def bench_solve_global():
    rng = np.random.default_rng(2)
    ds = Dataset(np.round(rng.uniform(0, 10, size=(40, 8)), 3))
    tree = _tree_for(ds, 2, 2)
    for gamma in np.linspace(0.5, 6.0, 12):
        solve_global(tree, ds, float(gamma))


def bench_leaf_assignment():
    inst = generate_instance(InstanceSpec(grid_side=3, n_train=30, n_test=1,
                                          seed=3))
    ds, space = inst.train, inst.space
    pool = space.enumerate()
    tree = _tree_for(ds, 2, 3)
    for gamma in np.linspace(0.0, 3.0, 30):
        optimize_leaves_local(tree, ds, float(gamma), pool)


def bench_structure_scan():
    inst = generate_instance(InstanceSpec(grid_side=4, n_train=5, n_test=1,
                                          seed=4))
    ds, space = inst.train, inst.space
    scen = ScenarioSet.zero(ds.n_samples, ds.n_items)
    solve_master(ds, scen, space, depth=2)


BENCHMARKS = [
    ("grid_min_path", bench_grid_min_path),
    ("perturbation_cost", bench_perturbation_cost),
    ("solve_global", bench_solve_global),
    ("leaf_assignment", bench_leaf_assignment),
    ("structure_scan", bench_structure_scan),
]


def run_suite(repeat):
    results = {}
    for name, fn in BENCHMARKS:
        fn()  # warm-up triggers compilation under numba
        best = min(_timed(fn) for _ in range(repeat))
        results[name] = best
    return results


def _timed(fn):
    start = time.perf_counter()
    fn()
    return time.perf_counter() - start


def _run_backend(backend, repeat):
    env = dict(os.environ, ROBUST_TREES_BACKEND=backend)
    proc = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--json",
         "--repeat", str(repeat)],
        env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--both", action="store_true",
                        help="compare the numba and numpy backends")
    parser.add_argument("--json", action="store_true",
                        help="emit raw timings as JSON")
    parser.add_argument("--repeat", type=int, default=3,
                        help="timed repetitions per benchmark (best wins)")
    args = parser.parse_args()

    if args.both:
        fast = _run_backend("numba", args.repeat)
        slow = _run_backend("numpy", args.repeat)
        width = max(len(n) for n, _ in BENCHMARKS)
        print(f"{'benchmark':<{width}}  {'numba':>10}  {'numpy':>10}"
              f"  {'speedup':>8}")
        for name, _ in BENCHMARKS:
            ratio = slow[name] / fast[name]
            print(f"{name:<{width}}  {fast[name]:>9.3f}s  {slow[name]:>9.3f}s"
                  f"  {ratio:>7.1f}x")
        return

    results = run_suite(args.repeat)
    if args.json:
        print(json.dumps(results))
        return
    print(f"backend: {BACKEND}")
    for name, seconds in results.items():
        print(f"  {name}: {seconds:.3f}s")


if __name__ == "__main__":
    main()
