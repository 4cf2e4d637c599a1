"""Compiled kernel vs pure-Python engine: identical results and node counts."""

import random

import pytest

from pmbatch.core import theta_from_schedule, wspt_order
from pmbatch.engine import _pure
from pmbatch.mip import ModelConfig, build_model, restrict_and_fix, schedule_to_slots
from pmbatch.subsolve import _build_subproblem

from .test_core import random_feasible_schedule, random_instance

kernel = pytest.importorskip("pmbatch._kernel",
                             reason="compiled kernel not built")


def _both(sub, node_limit=None):
    a = _pure.solve_subproblem(sub, None, node_limit)
    b = kernel.solve_subproblem(sub, None, node_limit)
    return a, b


def _subproblems():
    rng = random.Random(101)
    for case in range(12):
        inst = random_instance(rng, rng.randint(2, 7), rng.randint(1, 3))
        sched = random_feasible_schedule(inst, rng)
        kind = "s" if case % 2 else "wspt"
        prec = (wspt_order(inst, theta_from_schedule(sched))
                if kind == "wspt" else None)
        model = build_model(inst, ModelConfig(kind), prec)
        if case % 3 == 0:
            # restricted sub-problem: free one machine's first two slots
            view = schedule_to_slots(inst, sched)
            free_slots = {(1, 1), (1, 2)}
            free_ops = {i for (k, b) in free_slots
                        if view[k - 1][b - 1] is not None
                        for i in view[k - 1][b - 1].ops}
            free_slots = {(k, b) for (k, b) in free_slots
                          if b <= model.slots[k]}
            model = restrict_and_fix(model, sched, free_slots, free_ops)
            warm = sched
        else:
            warm = sched if case % 2 else None
        yield _build_subproblem(model, warm)


def test_full_parity_exhaustive():
    for sub in _subproblems():
        a, b = _both(sub)
        assert a == b


def test_parity_under_node_limits():
    rng = random.Random(7)
    inst = random_instance(rng, 6, 2)
    sched = random_feasible_schedule(inst, rng)
    model = build_model(inst, ModelConfig("s"))
    sub = _build_subproblem(model, sched)
    for limit in (1, 10, 137, 5000, 100000):
        a, b = _both(sub, node_limit=limit)
        assert a == b


def test_parity_infeasible():
    from pmbatch.engine import SubProblem
    sub = SubProblem(
        n_ops=2, n_machines=1, p=[1, 1], r=[0, 0], load=[60, 60],
        fam=[0, 0], elig=[(0,), (0,)], setup=[1], mach_r=[0], mach_q=[100],
        job_w=[1], job_ops=[(0, 1)],
        fixed_content=[[None]], free_ops=[0, 1], kind_s=True, rank=[0, 1])
    a, b = _both(sub)
    assert a == b
    assert a[0] == 2  # infeasible proven by both
