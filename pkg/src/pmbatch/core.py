"""Domain model for parallel machine batch scheduling with family setups.

Operations carry a processing time, release date, load, family, and a set of
eligible machines.  Machines process operations in *batches*: one family setup
followed by the member operations run back to back (serial batching).  A batch
cannot start before its machine is free and released, nor before every member
operation is released (non-anticipatory setup).  Jobs aggregate operations;
a job completes when its last operation does.  The objective throughout the
package is the total weighted completion time (TWCT) of the jobs.

All quantities are integers, so equality tests are exact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Optional, Sequence

__all__ = [
    "Operation",
    "Job",
    "Machine",
    "Family",
    "Instance",
    "Batch",
    "Schedule",
    "EvalResult",
    "Violation",
    "ValidationReport",
    "InvalidScheduleError",
    "validate_instance",
    "evaluate",
    "check_feasibility",
    "estimated_weights",
    "wspt_order",
    "theta_from_schedule",
    "WsptOrder",
    "brute_force_optimum",
]


class InvalidScheduleError(ValueError):
    """Raised when a schedule is structurally unusable (coverage broken)."""

    def __init__(self, message: str, op_id: Optional[int] = None):
        super().__init__(message)
        self.op_id = op_id


@dataclass(frozen=True)
class Operation:
    id: int
    p: int          # processing time
    r: int          # release date
    l: int          # load occupancy
    family: int
    eligible: frozenset[int]


@dataclass(frozen=True)
class Job:
    id: int
    w: int                      # weight
    ops: frozenset[int]


@dataclass(frozen=True)
class Machine:
    id: int
    r: int          # release date
    q: int          # capacity


@dataclass(frozen=True)
class Family:
    id: int
    s: int          # setup time


@dataclass(frozen=True)
class Instance:
    """Immutable problem instance.

    Ids are 1-based and contiguous within each entity class; accessor helpers
    and derived maps assume that (``validate_instance`` checks it).
    """

    operations: tuple[Operation, ...]
    jobs: tuple[Job, ...]
    machines: tuple[Machine, ...]
    families: tuple[Family, ...]

    def op(self, i: int) -> Operation:
        return self.operations[i - 1]

    def job(self, j: int) -> Job:
        return self.jobs[j - 1]

    def machine(self, k: int) -> Machine:
        return self.machines[k - 1]

    def family(self, f: int) -> Family:
        return self.families[f - 1]

    @property
    def jobs_of_op(self) -> Mapping[int, tuple[int, ...]]:
        """N_i: ids of the jobs containing each operation."""
        cached = self.__dict__.get("_jobs_of_op")
        if cached is None:
            m: dict[int, list[int]] = {o.id: [] for o in self.operations}
            for j in self.jobs:
                for i in sorted(j.ops):
                    m[i].append(j.id)
            cached = {i: tuple(v) for i, v in m.items()}
            object.__setattr__(self, "_jobs_of_op", cached)
        return cached

    @property
    def ops_of_machine(self) -> Mapping[int, tuple[int, ...]]:
        """O_k: ids of the operations machine k may run."""
        cached = self.__dict__.get("_ops_of_machine")
        if cached is None:
            m: dict[int, list[int]] = {mk.id: [] for mk in self.machines}
            for o in self.operations:
                for k in sorted(o.eligible):
                    m[k].append(o.id)
            cached = {k: tuple(v) for k, v in m.items()}
            object.__setattr__(self, "_ops_of_machine", cached)
        return cached


@dataclass(frozen=True)
class Batch:
    family: int
    ops: tuple[int, ...]


@dataclass(frozen=True)
class Schedule:
    """Per-machine ordered batch sequences; index = machine id - 1."""

    machines: tuple[tuple[Batch, ...], ...]

    def batches(self) -> Iterator[tuple[int, int, Batch]]:
        """Yield (machine_id, position, batch) with 1-based positions."""
        for mi, seq in enumerate(self.machines):
            for bi, batch in enumerate(seq):
                yield mi + 1, bi + 1, batch


@dataclass(frozen=True)
class EvalResult:
    batch_start: tuple[tuple[int, ...], ...]    # S per machine, per batch
    batch_proc: tuple[tuple[int, ...], ...]     # P (setup + work)
    op_completion: Mapping[int, int]
    job_completion: Mapping[int, int]
    twct: int
    cmax: int


@dataclass(frozen=True)
class Violation:
    kind: str       # coverage | family | capacity | eligibility | instance
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def _contiguous_ids(items: Sequence, label: str, out: list[Violation]) -> bool:
    ids = [x.id for x in items]
    if sorted(ids) != list(range(1, len(items) + 1)):
        out.append(Violation(
            "instance", f"{label} ids must be 1..{len(items)} without gaps "
                        f"or duplicates, got {sorted(ids)}"))
        return False
    if ids != sorted(ids):
        out.append(Violation("instance", f"{label} entries not in id order"))
        return False
    return True


def validate_instance(inst: Instance) -> ValidationReport:
    """Check every instance invariant; violations are data, not exceptions."""
    v: list[Violation] = []
    ids_ok = all((
        _contiguous_ids(inst.operations, "operation", v),
        _contiguous_ids(inst.jobs, "job", v),
        _contiguous_ids(inst.machines, "machine", v),
        _contiguous_ids(inst.families, "family", v),
    ))
    if not ids_ok:
        return ValidationReport(tuple(v))

    n_f, n_m, n_o = len(inst.families), len(inst.machines), len(inst.operations)
    for f in inst.families:
        if f.s < 0:
            v.append(Violation("instance", f"family {f.id}: setup {f.s} < 0"))
    for m in inst.machines:
        if m.r < 0:
            v.append(Violation("instance", f"machine {m.id}: release {m.r} < 0"))
        if m.q < 1:
            v.append(Violation("instance", f"machine {m.id}: capacity {m.q} < 1"))
    for o in inst.operations:
        if o.p < 1:
            v.append(Violation("instance", f"op {o.id}: processing time {o.p} < 1"))
        if o.r < 0:
            v.append(Violation("instance", f"op {o.id}: release {o.r} < 0"))
        if o.l < 0:
            v.append(Violation("instance", f"op {o.id}: load {o.l} < 0"))
        if not 1 <= o.family <= n_f:
            v.append(Violation("instance", f"op {o.id}: unknown family {o.family}"))
        if not o.eligible:
            v.append(Violation("instance", f"op {o.id}: no eligible machine"))
        for k in sorted(o.eligible):
            if not 1 <= k <= n_m:
                v.append(Violation("instance", f"op {o.id}: unknown machine {k}"))
            elif o.l > inst.machine(k).q:
                v.append(Violation(
                    "instance",
                    f"op {o.id}: load {o.l} exceeds capacity "
                    f"{inst.machine(k).q} of eligible machine {k}"))
    covered: set[int] = set()
    for j in inst.jobs:
        if j.w < 1:
            v.append(Violation("instance", f"job {j.id}: weight {j.w} < 1"))
        if not j.ops:
            v.append(Violation("instance", f"job {j.id}: no operations"))
        for i in sorted(j.ops):
            if not 1 <= i <= n_o:
                v.append(Violation("instance", f"job {j.id}: unknown op {i}"))
        covered |= j.ops
    for o in inst.operations:
        if o.id not in covered:
            v.append(Violation("instance", f"op {o.id}: belongs to no job"))
    return ValidationReport(tuple(v))


def _check_coverage(inst: Instance, sched: Schedule) -> None:
    """Raise InvalidScheduleError unless every op appears exactly once."""
    seen: set[int] = set()
    n = len(inst.operations)
    if len(sched.machines) != len(inst.machines):
        raise InvalidScheduleError(
            f"schedule has {len(sched.machines)} machine rows, "
            f"instance has {len(inst.machines)}")
    for k, b, batch in sched.batches():
        if not batch.ops:
            raise InvalidScheduleError(
                f"empty batch at machine {k} position {b}")
        for i in batch.ops:
            if not 1 <= i <= n:
                raise InvalidScheduleError(f"unknown operation {i}", op_id=i)
            if i in seen:
                raise InvalidScheduleError(f"operation {i} scheduled twice",
                                           op_id=i)
            seen.add(i)
    missing = set(range(1, n + 1)) - seen
    if missing:
        i = min(missing)
        raise InvalidScheduleError(f"operation {i} missing from schedule",
                                   op_id=i)


def evaluate(inst: Instance, sched: Schedule) -> EvalResult:
    """Compute batch timings, completion times, TWCT, and makespan.

    Batch start = max(machine release, previous batch end, max member
    release); batch processing = setup + sum of member processing times;
    members complete serially after the setup.
    """
    _check_coverage(inst, sched)
    starts: list[tuple[int, ...]] = []
    procs: list[tuple[int, ...]] = []
    comp: dict[int, int] = {}
    for mi, seq in enumerate(sched.machines):
        mach = inst.machines[mi]
        t = mach.r
        s_row: list[int] = []
        p_row: list[int] = []
        for batch in seq:
            start = max(t, max(inst.op(i).r for i in batch.ops))
            setup = inst.family(batch.family).s
            cursor = start + setup
            for i in batch.ops:
                cursor += inst.op(i).p
                comp[i] = cursor
            s_row.append(start)
            p_row.append(cursor - start)
            t = cursor
        starts.append(tuple(s_row))
        procs.append(tuple(p_row))
    job_comp = {j.id: max(comp[i] for i in j.ops) for j in inst.jobs}
    twct = sum(j.w * job_comp[j.id] for j in inst.jobs)
    cmax = max(comp.values()) if comp else 0
    return EvalResult(tuple(starts), tuple(procs), comp, job_comp, twct, cmax)


def check_feasibility(inst: Instance, sched: Schedule) -> list[Violation]:
    """All coverage / family / capacity / eligibility violations (exhaustive)."""
    out: list[Violation] = []
    n = len(inst.operations)
    seen: dict[int, int] = {}
    for k, b, batch in sched.batches():
        loc = f"machine {k} batch {b}"
        if not batch.ops:
            out.append(Violation("coverage", f"{loc}: empty batch"))
        if not 1 <= batch.family <= len(inst.families):
            out.append(Violation("family", f"{loc}: unknown family {batch.family}"))
            continue
        load = 0
        for i in batch.ops:
            if not 1 <= i <= n:
                out.append(Violation("coverage", f"{loc}: unknown op {i}"))
                continue
            seen[i] = seen.get(i, 0) + 1
            op = inst.op(i)
            if op.family != batch.family:
                out.append(Violation(
                    "family", f"{loc}: op {i} of family {op.family} in a "
                              f"family-{batch.family} batch"))
            if k not in op.eligible:
                out.append(Violation(
                    "eligibility", f"{loc}: machine {k} not eligible for op {i}"))
            load += op.l
        if load > inst.machine(k).q:
            out.append(Violation(
                "capacity", f"{loc}: load {load} exceeds capacity "
                            f"{inst.machine(k).q}"))
    for i in range(1, n + 1):
        cnt = seen.get(i, 0)
        if cnt == 0:
            out.append(Violation("coverage", f"op {i} not scheduled"))
        elif cnt > 1:
            out.append(Violation("coverage", f"op {i} scheduled {cnt} times"))
    return out


def estimated_weights(inst: Instance) -> dict[int, Fraction]:
    """Per-operation weight: each job's weight split equally over its ops."""
    w: dict[int, Fraction] = {o.id: Fraction(0) for o in inst.operations}
    for j in inst.jobs:
        share = Fraction(j.w, len(j.ops))
        for i in j.ops:
            w[i] += share
    return w


def theta_from_schedule(sched: Schedule) -> frozenset[tuple[int, int]]:
    """Ordered pairs (i, î): i immediately-or-later precedes î in one batch."""
    pairs: set[tuple[int, int]] = set()
    for _, _, batch in sched.batches():
        for a, b in itertools.combinations(batch.ops, 2):
            pairs.add((a, b))
    return frozenset(pairs)


@dataclass(frozen=True)
class WsptOrder:
    """A strict total order over operations, as ranks and preceding sets."""

    order: tuple[int, ...]                      # op ids, first-to-last
    rank: Mapping[int, int]                     # op id -> 0-based position

    def before(self, a: int, b: int) -> bool:
        return self.rank[a] < self.rank[b]

    @property
    def preceding_sets(self) -> Mapping[int, frozenset[int]]:
        """O_i: all operations that precede i in the order."""
        cached = self.__dict__.get("_preceding")
        if cached is None:
            cached = {}
            before: set[int] = set()
            for i in self.order:
                cached[i] = frozenset(before)
                before.add(i)
            object.__setattr__(self, "_preceding", cached)
        return cached


def wspt_order(inst: Instance,
               theta: Optional[Iterable[tuple[int, int]]] = None) -> WsptOrder:
    """Total order by weighted-shortest-processing-time over split weights.

    Sort key: higher w_i/p_i first, then higher w_i, then smaller id; exact
    rational comparison throughout.  When ``theta`` pairs are supplied (from
    an existing schedule's inner-batch orders) they dominate: the result is a
    linear extension of theta, ties broken by the WSPT key.
    """
    w = estimated_weights(inst)
    keys = {o.id: (-Fraction(w[o.id], o.p), -w[o.id], o.id)
            for o in inst.operations}
    ids = sorted(keys, key=keys.get)
    if not theta:
        order = tuple(ids)
    else:
        succ: dict[int, list[int]] = {i: [] for i in keys}
        indeg = {i: 0 for i in keys}
        for a, b in theta:
            succ[a].append(b)
            indeg[b] += 1
        import heapq
        heap = [keys[i] for i in ids if indeg[i] == 0]
        heapq.heapify(heap)
        out: list[int] = []
        while heap:
            i = heapq.heappop(heap)[2]
            out.append(i)
            for j in succ[i]:
                indeg[j] -= 1
                if indeg[j] == 0:
                    heapq.heappush(heap, keys[j])
        if len(out) != len(ids):
            raise ValueError("precedence pairs contain a cycle")
        order = tuple(out)
    return WsptOrder(order, {i: pos for pos, i in enumerate(order)})


def _ordered_batchings(inst: Instance, mach: Machine,
                       ops: tuple[int, ...]) -> list[tuple[Batch, ...]]:
    """All ordered batch sequences of `ops` feasible on `mach`.

    A sequence is a permutation plus cut points; each (permutation, cuts)
    pair maps to a distinct sequence, so enumeration is duplicate-free.
    """
    if not ops:
        return [()]
    out: list[tuple[Batch, ...]] = []
    n = len(ops)
    fam = {i: inst.op(i).family for i in ops}
    load = {i: inst.op(i).l for i in ops}
    for perm in itertools.permutations(ops):
        for cuts in itertools.product((False, True), repeat=n - 1):
            batches: list[Batch] = []
            cur = [perm[0]]
            cur_load = load[perm[0]]
            ok = True
            for pos in range(1, n):
                i = perm[pos]
                if cuts[pos - 1]:
                    batches.append(Batch(fam[cur[0]], tuple(cur)))
                    cur, cur_load = [i], load[i]
                else:
                    if fam[i] != fam[cur[0]] or cur_load + load[i] > mach.q:
                        ok = False
                        break
                    cur.append(i)
                    cur_load += load[i]
            if ok:
                batches.append(Batch(fam[cur[0]], tuple(cur)))
                out.append(tuple(batches))
    return out


def brute_force_optimum(inst: Instance, max_ops: int = 7,
                        max_machines: int = 3) -> tuple[int, Schedule]:
    """Exhaustive minimum-TWCT search for tiny instances (test oracle).

    Enumerates every machine assignment, ordered batch partition, and
    inner-batch order respecting eligibility, family, and capacity.
    """
    n = len(inst.operations)
    m = len(inst.machines)
    if n > max_ops or m > max_machines:
        raise ValueError(
            f"instance too large for exhaustive search ({n} ops / {m} "
            f"machines, guard {max_ops}/{max_machines})")
    op_ids = [o.id for o in inst.operations]
    eligibles = [sorted(inst.op(i).eligible) for i in op_ids]
    best: Optional[int] = None
    best_sched: Optional[Schedule] = None
    job_ops = [(j.w, tuple(j.ops)) for j in inst.jobs]
    for assign in itertools.product(*eligibles):
        per_mach: list[tuple[int, ...]] = [
            tuple(i for i, k in zip(op_ids, assign) if k == mk.id)
            for mk in inst.machines]
        options = [_ordered_batchings(inst, inst.machines[kk], per_mach[kk])
                   for kk in range(m)]
        if any(not o for o in options):
            continue
        for combo in itertools.product(*options):
            comp: dict[int, int] = {}
            for kk, seq in enumerate(combo):
                t = inst.machines[kk].r
                for batch in seq:
                    start = max(t, max(inst.op(i).r for i in batch.ops))
                    t = start + inst.family(batch.family).s
                    for i in batch.ops:
                        t += inst.op(i).p
                        comp[i] = t
            twct = sum(w * max(comp[i] for i in ops) for w, ops in job_ops)
            if best is None or twct < best:
                best = twct
                best_sched = Schedule(tuple(combo))
    if best is None:
        raise ValueError("no feasible schedule exists")
    return best, best_sched
