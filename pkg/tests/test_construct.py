"""Constructive heuristic: priority rule, placement costs, RCL behavior."""

import random
from fractions import Fraction

import pytest

from pmbatch.construct import initial_priorities, randomized_construct, wmct_wavga
from pmbatch.core import check_feasibility, evaluate
from pmbatch.instgen import GenParams, generate

from .conftest import make_example_instance
from .test_core import random_instance, single_op_instance


def test_first_iteration_priorities_oracle(example_instance):
    """Hand-applied priority formula on the golden instance, op 10."""
    pri = initial_priorities(example_instance)
    # op 10 is in jobs 2 (w40, 3 ops) and 5 (w3, 6 ops); all ops unscheduled
    w10 = Fraction(40, 3) + Fraction(3, 6)
    assert w10 == Fraction(83, 6)
    # T_10 = min machine completion over eligible {1,2,3,4} = min release = 0
    # r_10 = 0, p_10 = 25, family-1 setup 5
    assert pri[10] == w10 / 30

    # independent direct-formula oracle for every op
    inst = example_instance
    for op in inst.operations:
        w = sum(Fraction(inst.job(j).w, len(inst.job(j).ops))
                for j in inst.jobs_of_op[op.id])
        t = min(inst.machine(k).r for k in op.eligible)
        expected = w / (max(t, op.r) + op.p + inst.family(op.family).s)
        assert pri[op.id] == expected


def test_single_op_instance():
    inst = single_op_instance(p=23, r_op=5, s=5, r_mach=1, w=7)
    sched = wmct_wavga(inst)
    assert len(sched.machines[0]) == 1
    res = evaluate(inst, sched)
    assert res.op_completion[1] == max(1, 5) + 5 + 23


def test_same_family_single_machine_single_batch():
    rng = random.Random(2)
    inst = random_instance(rng, 5, 1)
    # force: one family, zero releases, ample capacity
    from pmbatch.core import Family, Instance, Machine, Operation
    ops = tuple(Operation(o.id, o.p, 0, 10, 1, frozenset({1}))
                for o in inst.operations)
    inst = Instance(ops, inst.jobs, (Machine(1, 0, 100),), (Family(1, 5),))
    sched = wmct_wavga(inst)
    assert len(sched.machines[0]) == 1
    assert check_feasibility(inst, sched) == []


def test_output_feasible_and_complete():
    rng = random.Random(4)
    for seed in range(15):
        inst = generate(GenParams(num_ops=5 + seed, num_machines=1 + seed % 4,
                                  seed=seed))
        sched = wmct_wavga(inst)
        assert check_feasibility(inst, sched) == []
        sched2 = randomized_construct(inst, 0.3, random.Random(seed))
        assert check_feasibility(inst, sched2) == []


def test_rcl_alpha_zero_equals_greedy():
    for seed in range(20):
        inst = generate(GenParams(num_ops=6 + seed, num_machines=1 + seed % 3,
                                  seed=1000 + seed))
        base = wmct_wavga(inst)
        assert randomized_construct(inst, 0.0, random.Random(seed)) == base
        assert randomized_construct(inst, 0.0, random.Random(seed + 7)) == base


def test_rcl_alpha_one_varies_with_seed():
    inst = generate(GenParams(num_ops=20, num_machines=3, seed=9))
    outs = {randomized_construct(inst, 1.0, random.Random(s)) for s in range(6)}
    assert len(outs) > 1
    for s in outs:
        assert check_feasibility(inst, s) == []


def test_randomized_deterministic_per_seed():
    inst = generate(GenParams(num_ops=18, num_machines=2, seed=3))
    a = randomized_construct(inst, 0.1, random.Random(5))
    b = randomized_construct(inst, 0.1, random.Random(5))
    assert a == b


def test_invalid_alpha_rejected():
    inst = generate(GenParams(num_ops=4, num_machines=1, seed=0))
    with pytest.raises(ValueError):
        randomized_construct(inst, 1.5, random.Random(0))


def test_construct_not_catastrophically_bad():
    """Greedy should land within 2x of optimum on tiny instances."""
    from pmbatch.core import brute_force_optimum
    rng = random.Random(8)
    for _ in range(8):
        inst = random_instance(rng, rng.randint(2, 5), 2)
        opt, _ = brute_force_optimum(inst)
        got = evaluate(inst, wmct_wavga(inst)).twct
        assert opt <= got <= 2 * opt
