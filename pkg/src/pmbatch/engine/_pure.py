"""Pure-Python reference implementation of the branch-and-bound engine.

The compiled kernel (``pmbatch._kernel``) mirrors this module line for line;
search order, pruning, node counts, and results must stay identical.
"""

from __future__ import annotations

from time import perf_counter
from typing import Optional

from . import (
    STATUS_FEASIBLE,
    STATUS_INFEASIBLE,
    STATUS_OPTIMAL,
    STATUS_UNKNOWN,
    SubProblem,
)

_TIME_CHECK_MASK = 255


def solve_subproblem(sub: SubProblem,
                     time_limit: Optional[float] = None,
                     node_limit: Optional[int] = None):
    """Return (status, best_slots, objective, bound, nodes).

    ``best_slots`` maps (machine, slot) -> tuple of ops for every free slot
    of the incumbent (fixed slots are implicit), or None if no incumbent.
    """
    n = sub.n_ops
    m = sub.n_machines
    p, r, load, fam = sub.p, sub.r, sub.load, sub.fam
    setup, mach_r, mach_q = sub.setup, sub.mach_r, sub.mach_q
    rank, kind_s = sub.rank, sub.kind_s
    deadline = perf_counter() + time_limit if time_limit else None

    slots_per_mach = [len(row) for row in sub.fixed_content]
    is_free = [[c is None for c in row] for row in sub.fixed_content]
    members = [[list(c) if c is not None else [] for c in row]
               for row in sub.fixed_content]
    slot_load = [[sum(load[i] for i in mem) for mem in row]
                 for row in members]
    free_slots = [(k, b) for k in range(m) for b in range(slots_per_mach[k])
                  if is_free[k][b]]

    comp = [0] * n

    def retime(k: int) -> None:
        t = mach_r[k]
        for mem in members[k]:
            if not mem:
                continue
            start = t
            for i in mem:
                if r[i] > start:
                    start = r[i]
            t = start + setup[fam[mem[0]]]
            for i in mem:
                t += p[i]
                comp[i] = t

    for k in range(m):
        retime(k)

    placed = [True] * n
    static_lb = [0] * n
    for i in sub.free_ops:
        placed[i] = False
        earliest = min(mach_r[k] for k in sub.elig[i])
        static_lb[i] = max(r[i], earliest) + setup[fam[i]] + p[i]

    job_w, job_ops = sub.job_w, sub.job_ops

    def lower_bound() -> int:
        total = 0
        for j in range(len(job_w)):
            worst = 0
            for i in job_ops[j]:
                v = comp[i] if placed[i] else static_lb[i]
                if v > worst:
                    worst = v
            total += job_w[j] * worst
        return total

    def snapshot():
        return {(k, b): tuple(members[k][b]) for (k, b) in free_slots}

    free_ops = list(sub.free_ops)
    n_free = len(free_ops)
    best_obj: Optional[int] = None
    best_slots = None

    # Pre-register the warm start as the incumbent so the search only needs
    # to find strict improvements.
    if sub.warm is not None:
        order = sorted(range(n_free), key=lambda lv: (sub.warm[lv][0],
                                                      sub.warm[lv][1],
                                                      sub.warm[lv][2]))
        for lv in order:
            i = free_ops[lv]
            k, b, pos = sub.warm[lv]
            members[k][b].insert(min(pos, len(members[k][b])), i)
            slot_load[k][b] += load[i]
            placed[i] = True
        for k in range(m):
            retime(k)
        best_obj = lower_bound()
        best_slots = snapshot()
        for lv in order:
            i = free_ops[lv]
            k, b, _ = sub.warm[lv]
            members[k][b].remove(i)
            slot_load[k][b] -= load[i]
            placed[i] = False
        for k in range(m):
            retime(k)

    root_bound = lower_bound()
    warm_slot = {free_ops[lv]: (sub.warm[lv][0], sub.warm[lv][1])
                 for lv in range(n_free)} if sub.warm is not None else {}

    nodes = 0
    interrupted = False

    def leaf_has_gap() -> bool:
        for k in range(m):
            row_free, row_mem = is_free[k], members[k]
            for b in range(slots_per_mach[k] - 1):
                if (row_free[b] and not row_mem[b]
                        and row_free[b + 1] and row_mem[b + 1]):
                    return True
        return False

    def candidates(i: int):
        out = []
        li = load[i]
        fi = fam[i]
        for k in sub.elig[i]:
            if li > mach_q[k]:
                continue
            for b in range(slots_per_mach[k]):
                if not is_free[k][b]:
                    continue
                mem = members[k][b]
                if mem:
                    if fam[mem[0]] != fi or slot_load[k][b] + li > mach_q[k]:
                        continue
                    if kind_s:
                        for pos in range(len(mem) + 1):
                            out.append((k, b, pos))
                    else:
                        pos = 0
                        ri = rank[i]
                        for x in mem:
                            if rank[x] < ri:
                                pos += 1
                        out.append((k, b, pos))
                else:
                    out.append((k, b, 0))
        if i in warm_slot:
            wk, wb = warm_slot[i]
            out.sort(key=lambda c: (c[0], c[1]) != (wk, wb))
        return out

    def dfs(level: int) -> None:
        nonlocal nodes, best_obj, best_slots, interrupted
        if level == n_free:
            if leaf_has_gap():
                return
            obj = lower_bound()
            if best_obj is None or obj < best_obj:
                best_obj = obj
                best_slots = snapshot()
            return
        i = free_ops[level]
        for k, b, pos in candidates(i):
            nodes += 1
            if node_limit is not None and nodes > node_limit:
                interrupted = True
                return
            if (deadline is not None and (nodes & _TIME_CHECK_MASK) == 0
                    and perf_counter() > deadline):
                interrupted = True
                return
            members[k][b].insert(pos, i)
            slot_load[k][b] += load[i]
            placed[i] = True
            retime(k)
            if best_obj is None or lower_bound() < best_obj:
                dfs(level + 1)
            members[k][b].pop(pos)
            slot_load[k][b] -= load[i]
            placed[i] = False
            retime(k)
            if interrupted:
                return

    dfs(0)

    if best_obj is None:
        status = STATUS_UNKNOWN if interrupted else STATUS_INFEASIBLE
        return status, None, None, root_bound, nodes
    if interrupted:
        return STATUS_FEASIBLE, best_slots, best_obj, root_bound, nodes
    return STATUS_OPTIMAL, best_slots, best_obj, best_obj, nodes
