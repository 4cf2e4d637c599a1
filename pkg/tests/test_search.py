"""Neighborhood searches, perturbation, and the matheuristic drivers."""

import math
import random

import pytest

import pmbatch.search as search_mod
from pmbatch.construct import wmct_wavga
from pmbatch.core import (
    brute_force_optimum,
    check_feasibility,
    evaluate,
)
from pmbatch.mip import schedule_to_slots, slots_to_schedule
from pmbatch.search import (
    Params,
    SearchState,
    apply_swaps,
    batch_windows,
    grasp_math,
    ils_math,
    init_or_update_mb,
    multi_batches_relocate,
    random_batch_swap,
    run_variant,
    vnd,
    window_ranges,
)

from .test_core import random_feasible_schedule, random_instance, single_op_instance

# Deterministic, fast sub-solves for unit tests.
FAST = Params(sub_time_limit=None, sub_node_limit=20000, omega_max=2)


def _state(inst, seed=0, params=FAST):
    return SearchState(inst, params, random.Random(seed))


def _twct(inst, view):
    return evaluate(inst, slots_to_schedule(view)).twct


# ------------------------------------------------------------ MB bookkeeping

def test_mb_init_on_reference(example_instance, reference_schedule):
    state = _state(example_instance)
    view = schedule_to_slots(example_instance, reference_schedule)
    mb = init_or_update_mb(state, view)
    assert mb == {1: 4, 2: 4, 3: 5, 4: 4}
    assert sum(mb.values()) == 17


def test_mb_clamped_to_slot_count():
    rng = random.Random(2)
    inst = random_instance(rng, 3, 1)
    # one op per batch -> all |B_1| = 3 slots used
    full = (tuple(search_mod.Batch(o.family, (o.id,))
                  for o in inst.operations),)
    state = _state(inst)
    mb = init_or_update_mb(state, schedule_to_slots(inst, full))
    assert mb == {1: 3}  # 1 + 3 clamped to |B_1| = 3


def test_mb_empty_machine_is_one(example_instance, reference_schedule):
    # strip machine 4's batches: its ops won't be covered, but MB bookkeeping
    # only reads batch usage
    view = list(schedule_to_slots(example_instance, reference_schedule))
    view[3] = tuple(None for _ in view[3])
    state = _state(example_instance)
    mb = init_or_update_mb(state, tuple(view))
    assert mb[4] == 1


def test_mb_update_trigger(example_instance, reference_schedule):
    state = _state(example_instance)
    view = schedule_to_slots(example_instance, reference_schedule)
    init_or_update_mb(state, view)
    before = dict(state.mb)
    # same usage again: no machine has used == MB (all have one spare)
    init_or_update_mb(state, view)
    assert state.mb == before
    # occupy machine 1's spare batch 4 -> 4 used == MB_1 fires the update
    rows = [list(r) for r in view]
    rows[0][3] = search_mod.Batch(1, (5,))
    init_or_update_mb(state, tuple(tuple(r) for r in rows))
    assert state.mb[1] == 5  # 1 + 4 used, |B_1| = 10 so no clamp
    assert state.mb[2] == before[2]


# ------------------------------------------------------------- batch windows

def test_window_ranges_match_example():
    assert window_ranges(90, 30) == [
        (60, 90), (45, 75), (30, 60), (15, 45), (0, 30)]


def test_window_ranges_single_window():
    assert window_ranges(50, 100) == [(0, 50)]


def test_window_iteration_count_formula():
    for cmax, rs in ((90, 30), (100, 20), (77, 13)):
        expected = math.ceil(cmax / (rs / 2)) - 1
        assert len(window_ranges(cmax, rs)) == expected


def test_windows_freed_ops_iteration3(example_instance, reference_schedule,
                                      monkeypatch):
    """With RS=30 on the reference schedule, iteration 3 frees a known set."""
    view = schedule_to_slots(example_instance, reference_schedule)
    state = _state(example_instance)
    calls = []

    def spy(state, view, free_slots, ctx):
        calls.append(sorted(free_slots))
        return view, False

    monkeypatch.setattr(search_mod, "_optimize_slots", spy)
    batch_windows(state, view, "s", rho=1 / 3)
    assert len(calls) == 5
    it3 = calls[2]
    assert it3 == [(1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (2, 3),
                   (3, 2), (3, 3), (4, 2), (4, 3)]
    freed_ops = {i for (k, b) in it3 for i in view[k - 1][b - 1].ops}
    assert freed_ops == {1, 3, 4, 5, 6, 7, 8, 9, 10, 11, 13, 15}


def test_batch_windows_non_worsening(example_instance, reference_schedule):
    state = _state(example_instance)
    view = schedule_to_slots(example_instance, reference_schedule)
    before = _twct(example_instance, view)
    out, improved = batch_windows(state, view, "s")
    after = _twct(example_instance, out)
    assert after <= before
    assert improved == (after < before)
    assert check_feasibility(example_instance,
                             slots_to_schedule(out)) == []


# -------------------------------------------------------- relocate structure

def test_relocate_partition_structure(example_instance, reference_schedule,
                                      monkeypatch):
    view = schedule_to_slots(example_instance, reference_schedule)
    state = _state(example_instance, seed=3)
    calls = []

    def spy(state, view, free_slots, ctx):
        calls.append(set(free_slots))
        return view, False

    monkeypatch.setattr(search_mod, "_optimize_slots", spy)
    multi_batches_relocate(state, view, "s")
    # sum MB = 17, phi = 0.30 -> NB = 6 -> iterations of 6, 6, 5
    assert [len(c) for c in calls] == [6, 6, 5]
    seen = set()
    for c in calls:
        assert not (c & seen)  # each batch optimized exactly once
        seen |= c
    assert seen == {(k, b) for k, n in state.mb.items()
                    for b in range(1, n + 1)}


def test_relocate_single_batch_draws(example_instance, reference_schedule,
                                     monkeypatch):
    view = schedule_to_slots(example_instance, reference_schedule)
    state = _state(example_instance,
                   params=Params(phi=0.0, sub_time_limit=None,
                                 sub_node_limit=1))
    calls = []
    monkeypatch.setattr(search_mod, "_optimize_slots",
                        lambda st, v, fs, ctx: (calls.append(set(fs)),
                                                (v, False))[1])
    multi_batches_relocate(state, view, "s")
    assert [len(c) for c in calls] == [1] * 17  # NB clamps to 1


def test_relocate_non_worsening():
    rng = random.Random(9)
    for seed in range(4):
        inst = random_instance(rng, 6, 2)
        sched = random_feasible_schedule(inst, rng)
        state = _state(inst, seed=seed)
        view = schedule_to_slots(inst, sched)
        before = _twct(inst, view)
        out, _ = multi_batches_relocate(state, view, "s")
        assert _twct(inst, out) <= before
        assert check_feasibility(inst, slots_to_schedule(out)) == []


# ---------------------------------------------------------------------- VND

def test_vnd_monotone_and_feasible():
    rng = random.Random(4)
    for seed in range(3):
        inst = random_instance(rng, 5, 2)
        sched = random_feasible_schedule(inst, rng)
        state = _state(inst, seed=seed)
        view = schedule_to_slots(inst, sched)
        before = _twct(inst, view)
        out = vnd(state, view, "s")
        after = _twct(inst, out)
        assert after <= before
        assert check_feasibility(inst, slots_to_schedule(out)) == []
        # a second VND cannot worsen the first
        out2 = vnd(state, out, "s")
        assert _twct(inst, out2) <= after


def test_vnd_never_beats_oracle():
    rng = random.Random(11)
    for _ in range(3):
        inst = random_instance(rng, 5, 2)
        opt, _ = brute_force_optimum(inst)
        state = _state(inst)
        view = schedule_to_slots(inst, random_feasible_schedule(inst, rng))
        out = vnd(state, view, "s")
        assert _twct(inst, out) >= opt


# ------------------------------------------------------------- perturbation

def test_apply_swaps_involution(example_instance, reference_schedule):
    view = schedule_to_slots(example_instance, reference_schedule)
    pairs = [((1, 1), (2, 4)), ((3, 2), (3, 5)), ((1, 1), (4, 2))]
    there = apply_swaps(view, pairs)
    assert there != view
    assert apply_swaps(there, list(reversed(pairs))) == view


def test_swap_preserves_content_and_feasibility(example_instance,
                                                reference_schedule):
    view = schedule_to_slots(example_instance, reference_schedule)
    state = _state(example_instance, seed=5)
    init_or_update_mb(state, view)
    out = random_batch_swap(state, view)
    before = sorted(b.ops for row in view for b in row if b)
    after = sorted(b.ops for row in out for b in row if b)
    assert before == after  # batches move whole; contents preserved
    assert check_feasibility(example_instance, slots_to_schedule(out)) == []


def test_swap_count_from_omega(example_instance, reference_schedule):
    # sum MB = 17, omega = 0.10 -> NS = 2 swaps -> at most 4 slots change
    view = schedule_to_slots(example_instance, reference_schedule)
    state = _state(example_instance, seed=1)
    out = random_batch_swap(state, view)
    changed = sum(1 for r1, r2 in zip(view, out)
                  for a, b in zip(r1, r2) if a != b)
    assert 2 <= changed <= 4


def test_swap_no_pair_returns_input():
    inst = single_op_instance()
    view = schedule_to_slots(inst, random_feasible_schedule(
        inst, random.Random(0)))
    state = _state(inst)
    assert random_batch_swap(state, view) == view


def test_swap_deterministic(example_instance, reference_schedule):
    view = schedule_to_slots(example_instance, reference_schedule)
    outs = []
    for _ in range(2):
        state = _state(example_instance, seed=42)
        outs.append(random_batch_swap(state, view))
    assert outs[0] == outs[1]


# ------------------------------------------------------------ matheuristics

def test_ils_reaches_or_bounds_oracle():
    rng = random.Random(7)
    hits = 0
    for seed in range(4):
        inst = random_instance(rng, 5, 2)
        opt, _ = brute_force_optimum(inst)
        sched = ils_math(inst, FAST, variant=2, seed=seed)
        twct = evaluate(inst, sched).twct
        assert check_feasibility(inst, sched) == []
        assert twct >= opt
        hits += twct == opt
    assert hits >= 3


def test_ils_accepted_strictly_decreasing(example_instance):
    log = search_mod.RunLog()
    ils_math(example_instance, FAST, variant=1, seed=0, log=log)
    accepted = [e.twct for e in log.events if e.phase == "accept"]
    assert all(a < b for a, b in zip(accepted[1:], accepted))
    curve = log.best_curve()
    assert all(c2[1] < c1[1] for c1, c2 in zip(curve, curve[1:]))


def test_ils_no_worse_than_construct(example_instance):
    base = evaluate(example_instance, wmct_wavga(example_instance)).twct
    sched = ils_math(example_instance, FAST, variant=1, seed=2)
    assert evaluate(example_instance, sched).twct <= base


def test_grasp_feasible_and_deterministic():
    rng = random.Random(15)
    inst = random_instance(rng, 6, 2)
    a = grasp_math(inst, FAST, variant=2, seed=9)
    b = grasp_math(inst, FAST, variant=2, seed=9)
    assert a == b
    assert check_feasibility(inst, a) == []


def test_grasp_alpha_zero_matches_vnd_quality():
    rng = random.Random(23)
    inst = random_instance(rng, 5, 2)
    params = Params(rcl_alpha=0.0, omega_max=1, sub_time_limit=None,
                    sub_node_limit=20000)
    sched = grasp_math(inst, params, variant=2, seed=0)
    base = evaluate(inst, wmct_wavga(inst)).twct
    assert evaluate(inst, sched).twct <= base


def test_run_variant_switch_logging(example_instance):
    fast1 = Params(omega_max=1, sub_time_limit=None, sub_node_limit=5000)
    for method in ("ils", "grasp"):
        for variant in (1, 2, 3):
            sched, log = run_variant(example_instance, method, variant, fast1,
                                     seed=0)
            assert check_feasibility(example_instance, sched) == []
            switches = [e for e in log.events
                        if e.phase == "formulation-switch"]
            assert len(switches) == (1 if variant == 3 else 0)
            assert log.events[-1].phase == "done"


def test_run_variant_rejects_unknown(example_instance):
    with pytest.raises(ValueError, match="method"):
        run_variant(example_instance, "tabu", 1)
    with pytest.raises(ValueError, match="variant"):
        run_variant(example_instance, "ils", 4)


def test_params_validation():
    with pytest.raises(ValueError, match="rho"):
        Params(rho=1.5)
    with pytest.raises(ValueError, match="omega_max"):
        Params(omega_max=0)
