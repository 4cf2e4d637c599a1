"""Constructive heuristic: weighted-minimum-completion-time dispatching.

At each step the unscheduled operation with the highest priority
pi_i = w_i / (max(T_i, r_i) + p_i + s_{f_i}) is chosen, where T_i is the
earliest completion time over its eligible machines and w_i splits each
containing job's weight equally over that job's *unscheduled* operations.
The chosen operation is appended to a machine's current batch or opens a new
batch, whichever has the lower weighted-completion cost; appending pays a
delay penalty for already-placed batch members that get pushed back.

All priority and cost comparisons use exact rational arithmetic so ties are
detected exactly; ties break to the lowest operation id, then current-batch
over new-batch, then the lowest machine id.  ``randomized_construct`` replaces
the greedy pick with a uniform draw from a restricted candidate list (RCL);
with ``rcl_alpha = 0`` it reproduces ``wmct_wavga`` exactly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from .core import Batch, Instance, Schedule

__all__ = ["ConstructState", "wmct_wavga", "randomized_construct",
           "initial_priorities"]


@dataclass
class ConstructState:
    """Mutable per-machine construction state."""

    completion: list[int]           # C_k; starts at machine release
    batch_start: list[int]          # S_k of the open batch (0 if none)
    batch_load: list[int]           # L_k
    batch_family: list[Optional[int]]   # F_k; None = machine empty
    batch_ops: list[list[int]]      # A_k
    unscheduled: set[int] = field(default_factory=set)


def _as_fraction(x: Union[float, int, Fraction]) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(str(x))


def _dynamic_weight(inst: Instance, i: int,
                    remaining: dict[int, int]) -> Fraction:
    """Job weights split over each job's currently-unscheduled ops.

    ``remaining[j]`` is |U_j|; jobs with every op scheduled contribute 0.
    """
    w = Fraction(0)
    for j in inst.jobs_of_op[i]:
        r = remaining[j]
        if r:
            w += Fraction(inst.job(j).w, r)
    return w


def _priorities(inst: Instance, state: ConstructState,
                remaining: dict[int, int]) -> dict[int, Fraction]:
    pri: dict[int, Fraction] = {}
    for i in state.unscheduled:
        op = inst.op(i)
        t_i = min(state.completion[k - 1] for k in op.eligible)
        denom = max(t_i, op.r) + op.p + inst.family(op.family).s
        pri[i] = _dynamic_weight(inst, i, remaining) / denom
    return pri


def initial_priorities(inst: Instance) -> dict[int, Fraction]:
    """First-iteration priorities (no op scheduled yet); exposed for tests."""
    state = _initial_state(inst)
    remaining = {j.id: len(j.ops) for j in inst.jobs}
    return _priorities(inst, state, remaining)


def _initial_state(inst: Instance) -> ConstructState:
    m = len(inst.machines)
    return ConstructState(
        completion=[mk.r for mk in inst.machines],
        batch_start=[0] * m,
        batch_load=[0] * m,
        batch_family=[None] * m,
        batch_ops=[[] for _ in range(m)],
        unscheduled={o.id for o in inst.operations},
    )


def _construct(inst: Instance, rcl_alpha: Fraction,
               rng: Optional[random.Random]) -> Schedule:
    state = _initial_state(inst)
    remaining = {j.id: len(j.ops) for j in inst.jobs}
    rows: list[list[Batch]] = [[] for _ in inst.machines]

    while state.unscheduled:
        pri = _priorities(inst, state, remaining)
        if rcl_alpha == 0 or rng is None or len(pri) == 1:
            best = max(pri.values())
            chosen = min(i for i, v in pri.items() if v == best)
        else:
            hi, lo = max(pri.values()), min(pri.values())
            threshold = hi - rcl_alpha * (hi - lo)
            rcl = sorted(i for i, v in pri.items() if v >= threshold)
            chosen = rng.choice(rcl)

        op = inst.op(chosen)
        setup = inst.family(op.family).s
        w_i = _dynamic_weight(inst, chosen, remaining)
        candidates: list[tuple[Fraction, int, int]] = []  # (cost, kind, k)
        for k in sorted(op.eligible):
            idx = k - 1
            c_k = state.completion[idx]
            if (state.batch_family[idx] == op.family
                    and state.batch_load[idx] + op.l <= inst.machine(k).q):
                delay = max(0, op.r - state.batch_start[idx])
                cost = w_i * (c_k + delay + op.p)
                if delay:
                    cost += delay * sum(
                        _dynamic_weight(inst, m, remaining)
                        for m in state.batch_ops[idx])
                candidates.append((cost, 0, k))
            cost_nb = w_i * (max(op.r, c_k) + setup + op.p)
            candidates.append((cost_nb, 1, k))
        _, kind, k = min(candidates)
        idx = k - 1
        if kind == 0:
            delay = max(0, op.r - state.batch_start[idx])
            state.batch_start[idx] += delay
            state.completion[idx] += delay + op.p
            state.batch_load[idx] += op.l
            state.batch_ops[idx].append(chosen)
            rows[idx][-1] = Batch(op.family,
                                  rows[idx][-1].ops + (chosen,))
        else:
            start = max(op.r, state.completion[idx])
            state.batch_start[idx] = start
            state.completion[idx] = start + setup + op.p
            state.batch_load[idx] = op.l
            state.batch_family[idx] = op.family
            state.batch_ops[idx] = [chosen]
            rows[idx].append(Batch(op.family, (chosen,)))
        state.unscheduled.discard(chosen)
        for j in inst.jobs_of_op[chosen]:
            remaining[j] -= 1

    return Schedule(tuple(tuple(r) for r in rows))


def wmct_wavga(inst: Instance) -> Schedule:
    """Deterministic greedy construction."""
    return _construct(inst, Fraction(0), None)


def randomized_construct(inst: Instance, rcl_alpha: Union[float, Fraction],
                         rng: random.Random) -> Schedule:
    """RCL-randomized construction; rcl_alpha = 0 degenerates to the greedy."""
    alpha = _as_fraction(rcl_alpha)
    if not 0 <= alpha <= 1:
        raise ValueError(f"rcl_alpha must be in [0, 1], got {rcl_alpha}")
    return _construct(inst, alpha, rng)
