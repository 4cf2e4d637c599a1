#!/usr/bin/env python3
"""Compare the compiled branch-and-bound kernel against the pure fallback.

Runs the same sub-problems through both implementations and reports wall
time, node throughput, and (as a sanity check) result equality.

Usage: python3 benchmarks/bench_engine.py [--ops N] [--machines M] [--reps R]
"""

import argparse
import random
import statistics
import time

from pmbatch.core import theta_from_schedule, wspt_order
from pmbatch.engine import _pure
from pmbatch.instgen import GenParams, generate
from pmbatch.mip import ModelConfig, build_model, restrict_and_fix, schedule_to_slots
from pmbatch.search import Params, SearchState, init_or_update_mb
from pmbatch.subsolve import _build_subproblem

try:
    from pmbatch import _kernel
except ImportError:
    _kernel = None


def make_subproblems(n_ops, n_machines, reps, node_limit):
    """Relocate-style restricted sub-problems from constructive solutions."""
    from pmbatch.construct import wmct_wavga

    subs = []
    for seed in range(reps):
        inst = generate(GenParams(n_ops, n_machines, seed=seed))
        sched = wmct_wavga(inst)
        view = schedule_to_slots(inst, sched)
        state = SearchState(inst, Params(), random.Random(seed))
        init_or_update_mb(state, view)
        rng = random.Random(seed + 1000)
        pairs = rng.sample(state.available_pairs(),
                           max(2, len(state.available_pairs()) // 3))
        free_ops = {i for (k, b) in pairs
                    if view[k - 1][b - 1] is not None
                    for i in view[k - 1][b - 1].ops}
        prec = wspt_order(inst, theta_from_schedule(sched))
        model = build_model(inst, ModelConfig("wspt"), prec)
        restricted = restrict_and_fix(model, sched, set(pairs), free_ops)
        subs.append(_build_subproblem(restricted, sched))
    return subs


def bench(fn, subs, node_limit):
    times, nodes, results = [], 0, []
    for sub in subs:
        t0 = time.perf_counter()
        res = fn(sub, None, node_limit)
        times.append(time.perf_counter() - t0)
        nodes += res[4]
        results.append(res)
    return sum(times), statistics.median(times), nodes, results


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ops", type=int, default=15)
    ap.add_argument("--machines", type=int, default=4)
    ap.add_argument("--reps", type=int, default=10)
    ap.add_argument("--node-limit", type=int, default=200_000)
    args = ap.parse_args()

    subs = make_subproblems(args.ops, args.machines, args.reps,
                            args.node_limit)
    total_p, med_p, nodes_p, res_p = bench(_pure.solve_subproblem, subs,
                                           args.node_limit)
    print(f"pure     total {total_p:8.3f}s  median {med_p:7.4f}s  "
          f"nodes {nodes_p:>10}  ({nodes_p / total_p:,.0f} nodes/s)")
    if _kernel is None:
        print("compiled kernel not built; skipping comparison")
        return
    total_c, med_c, nodes_c, res_c = bench(_kernel.solve_subproblem, subs,
                                           args.node_limit)
    print(f"compiled total {total_c:8.3f}s  median {med_c:7.4f}s  "
          f"nodes {nodes_c:>10}  ({nodes_c / total_c:,.0f} nodes/s)")
    assert res_p == res_c, "implementations disagree!"
    print(f"speedup {total_p / total_c:.1f}x; results identical across "
          f"{len(subs)} sub-problems")


if __name__ == "__main__":
    main()
