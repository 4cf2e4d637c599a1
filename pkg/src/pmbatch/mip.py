"""Abstract mixed-integer models for the batch scheduling problem.

Two formulations share a base:

* kind ``"wspt"`` — inner-batch sequences are pre-fixed by a strict total
  order (``core.wspt_order``): completion times use the precedence sets O_i.
* kind ``"s"`` — inner-batch sequencing is decided by binary variables
  Z[i,î] (i precedes î in a shared batch), generated only for operation
  pairs that can actually share a batch (same family, a common eligible
  machine with enough capacity).

Variables: binary X[i,k,b] (op i in the b-th batch slot of machine k, only
for eligible k with q_k >= l_i), binary Y[f,k,b] (slot family), continuous
S[k,b], P[k,b] (slot start / processing), C_op[i], C_job[j].  Each machine
has |B_k| = |O_k| slots.  The objective is sum of w_j * C_job[j].

Models are plain data (variables, bounds, linear constraints, objective) so
they can be solved by the built-in branch-and-bound, exported to LP text, or
fed to an external solver.  ``restrict_and_fix`` pins everything outside a
chosen set of free batch slots and free operations to an incumbent schedule,
producing the fix-and-optimize sub-models used by the neighborhood searches.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Optional, Sequence, Union

from .core import Batch, Instance, Schedule, WsptOrder, evaluate

__all__ = [
    "ModelConfig",
    "CompatibilitySets",
    "LinearConstraint",
    "VarInfo",
    "Restriction",
    "BatchModel",
    "SlotView",
    "compatibility_sets",
    "default_big_m",
    "build_model",
    "restrict_and_fix",
    "schedule_to_slots",
    "slots_to_schedule",
]

# A slot view is a per-machine sequence of batch slots where ``None`` marks
# an empty slot; schedules map to a slot view with used batches up front.
SlotView = tuple[tuple[Optional[Batch], ...], ...]
Incumbent = Union[Schedule, SlotView, Sequence[Sequence[Optional[Batch]]]]


@dataclass(frozen=True)
class ModelConfig:
    kind: str                       # "wspt" | "s"
    big_m: Optional[int] = None     # None = instance horizon bound

    def __post_init__(self):
        if self.kind not in ("wspt", "s"):
            raise ValueError(f"unknown formulation kind {self.kind!r}")


@dataclass(frozen=True)
class CompatibilitySets:
    """Pairs/triples of operations that can share one batch."""

    pair_machines: Mapping[tuple[int, int], frozenset[int]]  # key i < î
    pairs: frozenset[tuple[int, int]]                        # mu = 1, i < î
    triples: frozenset[tuple[int, int, int]]                 # mu = 1, sorted


@dataclass(frozen=True)
class LinearConstraint:
    name: str
    terms: tuple[tuple[int, str], ...]      # (coefficient, variable)
    sense: str                              # "<=", ">=", "=="
    rhs: int

    def satisfied(self, values: Mapping[str, int]) -> bool:
        lhs = sum(c * values.get(v, 0) for c, v in self.terms)
        if self.sense == "<=":
            return lhs <= self.rhs
        if self.sense == ">=":
            return lhs >= self.rhs
        return lhs == self.rhs


@dataclass(frozen=True)
class VarInfo:
    kind: str           # "binary" | "continuous"
    lb: int
    ub: Optional[int]   # None = unbounded above


@dataclass(frozen=True)
class Restriction:
    """Fix-and-optimize metadata attached by restrict_and_fix."""

    slot_content: tuple[tuple[tuple[int, ...], ...], ...]  # [mach][slot] op ids
    free_slots: frozenset[tuple[int, int]]                 # (machine, slot) 1-based
    free_ops: frozenset[int]


def compatibility_sets(inst: Instance) -> CompatibilitySets:
    pair_machines: dict[tuple[int, int], frozenset[int]] = {}
    pairs = set()
    ids = [o.id for o in inst.operations]
    for a, b in itertools.combinations(ids, 2):
        oa, ob = inst.op(a), inst.op(b)
        if oa.family != ob.family:
            continue
        ms = frozenset(k for k in oa.eligible & ob.eligible
                       if oa.l + ob.l <= inst.machine(k).q)
        if ms:
            pair_machines[(a, b)] = ms
            pairs.add((a, b))
    triples = set()
    for a, b, c in itertools.combinations(ids, 3):
        if not ((a, b) in pairs and (a, c) in pairs and (b, c) in pairs):
            continue
        oa, ob, oc = inst.op(a), inst.op(b), inst.op(c)
        load = oa.l + ob.l + oc.l
        if any(load <= inst.machine(k).q
               for k in oa.eligible & ob.eligible & oc.eligible):
            triples.add((a, b, c))
    return CompatibilitySets(pair_machines, frozenset(pairs),
                             frozenset(triples))


def default_big_m(inst: Instance) -> int:
    """Safe horizon bound: releases + all work + a setup per batch slot."""
    max_s = max(f.s for f in inst.families)
    total_slots = sum(len(ops) for ops in inst.ops_of_machine.values())
    return (max(m.r for m in inst.machines)
            + max(o.r for o in inst.operations)
            + sum(o.p for o in inst.operations)
            + total_slots * max_s)


def schedule_to_slots(inst: Instance, incumbent: Incumbent) -> SlotView:
    """Normalize a Schedule or partial slot view to full |B_k|-length rows."""
    if isinstance(incumbent, Schedule):
        rows: Sequence[Sequence[Optional[Batch]]] = incumbent.machines
    else:
        rows = incumbent
    out = []
    for mi, row in enumerate(rows):
        k = mi + 1
        n_slots = len(inst.ops_of_machine[k])
        row = list(row)
        if len(row) > n_slots:
            raise ValueError(
                f"machine {k} uses {len(row)} batch slots, model has {n_slots}")
        row += [None] * (n_slots - len(row))
        out.append(tuple(b if (b and b.ops) else None for b in row))
    return tuple(out)


def slots_to_schedule(view: Incumbent) -> Schedule:
    """Drop empty slots; order-preserving compaction."""
    if isinstance(view, Schedule):
        return view
    return Schedule(tuple(
        tuple(b for b in row if b is not None and b.ops) for row in view))


class BatchModel:
    """Immutable-by-convention integer program for one formulation kind."""

    def __init__(self, inst: Instance, cfg: ModelConfig,
                 prec: Optional[WsptOrder],
                 compat: Optional[CompatibilitySets],
                 restriction: Optional[Restriction] = None,
                 fixed: Optional[Mapping[str, int]] = None):
        self.inst = inst
        self.kind = cfg.kind
        self.big_m = cfg.big_m if cfg.big_m is not None else default_big_m(inst)
        self.cfg = ModelConfig(cfg.kind, self.big_m)
        self.prec = prec
        self.compat = compat
        self.restriction = restriction
        self.fixed: dict[str, int] = dict(fixed or {})
        self.slots = {m.id: len(inst.ops_of_machine[m.id])
                      for m in inst.machines}
        self.x_keys = tuple(
            (o.id, k, b)
            for o in inst.operations
            for k in sorted(o.eligible) if o.l <= inst.machine(k).q
            for b in range(1, self.slots[k] + 1))
        self.y_keys = tuple(
            (f.id, m.id, b)
            for m in inst.machines for b in range(1, self.slots[m.id] + 1)
            for f in inst.families)
        if self.kind == "s":
            assert compat is not None
            self.z_keys = tuple(sorted(
                itertools.chain.from_iterable(((a, b), (b, a))
                                              for a, b in compat.pairs)))
        else:
            self.z_keys = ()
        self._constraints: Optional[tuple[LinearConstraint, ...]] = None

    # ------------------------------------------------------------- naming

    @staticmethod
    def x_name(i: int, k: int, b: int) -> str:
        return f"X_{i}_{k}_{b}"

    @staticmethod
    def y_name(f: int, k: int, b: int) -> str:
        return f"Y_{f}_{k}_{b}"

    @staticmethod
    def z_name(i: int, j: int) -> str:
        return f"Z_{i}_{j}"

    @staticmethod
    def s_name(k: int, b: int) -> str:
        return f"S_{k}_{b}"

    @staticmethod
    def p_name(k: int, b: int) -> str:
        return f"P_{k}_{b}"

    @staticmethod
    def cop_name(i: int) -> str:
        return f"Ci_{i}"

    @staticmethod
    def cjob_name(j: int) -> str:
        return f"Cj_{j}"

    @staticmethod
    def parse_name(name: str) -> tuple[str, tuple[int, ...]]:
        """Inverse of the var namers: 'X_1_2_3' -> ('X', (1, 2, 3))."""
        head, *idx = name.split("_")
        return head, tuple(int(x) for x in idx)

    # ---------------------------------------------------------- variables

    def variables(self) -> dict[str, VarInfo]:
        out: dict[str, VarInfo] = {}
        for i, k, b in self.x_keys:
            out[self.x_name(i, k, b)] = VarInfo("binary", 0, 1)
        for f, k, b in self.y_keys:
            out[self.y_name(f, k, b)] = VarInfo("binary", 0, 1)
        for i, j in self.z_keys:
            out[self.z_name(i, j)] = VarInfo("binary", 0, 1)
        for m in self.inst.machines:
            for b in range(1, self.slots[m.id] + 1):
                out[self.s_name(m.id, b)] = VarInfo("continuous", 0, None)
                out[self.p_name(m.id, b)] = VarInfo("continuous", 0, None)
        for o in self.inst.operations:
            out[self.cop_name(o.id)] = VarInfo("continuous", 0, None)
        for j in self.inst.jobs:
            out[self.cjob_name(j.id)] = VarInfo("continuous", 0, None)
        for name, value in self.fixed.items():
            info = out[name]
            out[name] = VarInfo(info.kind, value, value)
        return out

    def objective(self) -> dict[str, int]:
        return {self.cjob_name(j.id): j.w for j in self.inst.jobs}

    # --------------------------------------------------------- constraints

    def constraints(self) -> tuple[LinearConstraint, ...]:
        if self._constraints is None:
            self._constraints = tuple(self._build_constraints())
        return self._constraints

    def _build_constraints(self) -> Iterable[LinearConstraint]:
        inst, M = self.inst, self.big_m
        x_by_op: dict[int, list[tuple[int, int]]] = {}
        x_by_slot: dict[tuple[int, int], list[int]] = {}
        for i, k, b in self.x_keys:
            x_by_op.setdefault(i, []).append((k, b))
            x_by_slot.setdefault((k, b), []).append(i)

        for o in inst.operations:
            yield LinearConstraint(
                f"assign_{o.id}",
                tuple((1, self.x_name(o.id, k, b)) for k, b in x_by_op[o.id]),
                "==", 1)
        for m in inst.machines:
            k = m.id
            for b in range(1, self.slots[k] + 1):
                yield LinearConstraint(
                    f"onefam_{k}_{b}",
                    tuple((1, self.y_name(f.id, k, b)) for f in inst.families),
                    "<=", 1)
        for i, k, b in self.x_keys:
            yield LinearConstraint(
                f"famlink_{i}_{k}_{b}",
                ((1, self.x_name(i, k, b)),
                 (-1, self.y_name(inst.op(i).family, k, b))),
                "<=", 0)
        for (k, b), ops in sorted(x_by_slot.items()):
            yield LinearConstraint(
                f"cap_{k}_{b}",
                tuple((inst.op(i).l, self.x_name(i, k, b)) for i in ops),
                "<=", inst.machine(k).q)
        for m in inst.machines:
            k = m.id
            for b in range(1, self.slots[k] + 1):
                terms = [(1, self.p_name(k, b))]
                terms += [(-inst.op(i).p, self.x_name(i, k, b))
                          for i in x_by_slot.get((k, b), ())]
                terms += [(-f.s, self.y_name(f.id, k, b))
                          for f in inst.families]
                yield LinearConstraint(f"proc_{k}_{b}", tuple(terms), ">=", 0)
                yield LinearConstraint(
                    f"mrel_{k}_{b}", ((1, self.s_name(k, b)),), ">=", m.r)
                if b < self.slots[k]:
                    yield LinearConstraint(
                        f"chain_{k}_{b}",
                        ((1, self.s_name(k, b + 1)), (-1, self.s_name(k, b)),
                         (-1, self.p_name(k, b))),
                        ">=", 0)
        for i, k, b in self.x_keys:
            yield LinearConstraint(
                f"nonant_{i}_{k}_{b}",
                ((1, self.s_name(k, b)),
                 (-inst.op(i).r, self.x_name(i, k, b))),
                ">=", 0)
        # completion of operations: big-M linking, formulation-specific
        if self.kind == "wspt":
            assert self.prec is not None
            preceding = self.prec.preceding_sets
            for i, k, b in self.x_keys:
                terms = [(1, self.cop_name(i)), (-1, self.s_name(k, b)),
                         (-M, self.x_name(i, k, b))]
                for p in sorted(preceding[i]):
                    if (p, k, b) in self._xkey_set():
                        terms.append((-inst.op(p).p, self.x_name(p, k, b)))
                yield LinearConstraint(
                    f"comp_{i}_{k}_{b}", tuple(terms), ">=",
                    inst.op(i).p + inst.family(inst.op(i).family).s - M)
        else:
            z_set = set(self.z_keys)
            for i, k, b in self.x_keys:
                terms = [(1, self.cop_name(i)), (-1, self.s_name(k, b)),
                         (-M, self.x_name(i, k, b))]
                for p in [o.id for o in inst.operations]:
                    if (p, i) in z_set:
                        terms.append((-inst.op(p).p, self.z_name(p, i)))
                yield LinearConstraint(
                    f"comp_{i}_{k}_{b}", tuple(terms), ">=",
                    inst.op(i).p + inst.family(inst.op(i).family).s - M)
        for j in inst.jobs:
            for i in sorted(j.ops):
                yield LinearConstraint(
                    f"jobcomp_{j.id}_{i}",
                    ((1, self.cjob_name(j.id)), (-1, self.cop_name(i))),
                    ">=", 0)
        if self.kind == "s":
            assert self.compat is not None
            xset = self._xkey_set()
            for (a, c), machines in sorted(self.compat.pair_machines.items()):
                for k in sorted(machines):
                    for b in range(1, self.slots[k] + 1):
                        if (a, k, b) not in xset or (c, k, b) not in xset:
                            continue
                        yield LinearConstraint(
                            f"pair_{a}_{c}_{k}_{b}",
                            ((1, self.z_name(a, c)), (1, self.z_name(c, a)),
                             (-1, self.x_name(a, k, b)),
                             (-1, self.x_name(c, k, b))),
                            ">=", -1)
                yield LinearConstraint(
                    f"pairone_{a}_{c}",
                    ((1, self.z_name(a, c)), (1, self.z_name(c, a))),
                    "<=", 1)
            for a, b_, c in sorted(self.compat.triples):
                for i, j, l in ((a, b_, c), (a, c, b_)):
                    yield LinearConstraint(
                        f"cycle_{i}_{j}_{l}",
                        ((1, self.z_name(i, j)), (1, self.z_name(j, l)),
                         (1, self.z_name(l, i))),
                        "<=", 2)

    def _xkey_set(self) -> set[tuple[int, int, int]]:
        cached = getattr(self, "_xkey_cache", None)
        if cached is None:
            cached = set(self.x_keys)
            self._xkey_cache = cached
        return cached

    # ------------------------------------------------------------ encoding

    def encode_schedule(self, incumbent: Incumbent) -> dict[str, int]:
        """Variable values whose fixing satisfies every constraint and whose
        objective equals the evaluator's TWCT (for kind 'wspt' this requires
        the precedence order to agree with the schedule's inner orders)."""
        inst = self.inst
        view = schedule_to_slots(inst, incumbent)
        values: dict[str, int] = {name: 0 for name in self.variables()}
        batch_of: dict[int, tuple[int, int]] = {}
        inner_rank: dict[int, int] = {}
        batch_members: dict[tuple[int, int], tuple[int, ...]] = {}
        for mi, row in enumerate(view):
            k = mi + 1
            t = inst.machine(k).r
            for bi, batch in enumerate(row):
                b = bi + 1
                if batch is None:
                    values[self.s_name(k, b)] = t
                    values[self.p_name(k, b)] = 0
                    continue
                start = max(t, max(inst.op(i).r for i in batch.ops))
                proc = (inst.family(batch.family).s
                        + sum(inst.op(i).p for i in batch.ops))
                values[self.s_name(k, b)] = start
                values[self.p_name(k, b)] = proc
                values[self.y_name(batch.family, k, b)] = 1
                batch_members[(k, b)] = batch.ops
                for pos, i in enumerate(batch.ops):
                    name = self.x_name(i, k, b)
                    if name not in values:
                        raise ValueError(
                            f"op {i} cannot be encoded on machine {k}")
                    values[name] = 1
                    batch_of[i] = (k, b)
                    inner_rank[i] = pos
                t = start + proc
        if len(batch_of) != len(inst.operations):
            missing = sorted(set(o.id for o in inst.operations) - set(batch_of))
            raise ValueError(f"schedule missing operations {missing}")
        for a, c in self.z_keys:
            if batch_of[a] == batch_of[c] and inner_rank[a] < inner_rank[c]:
                values[self.z_name(a, c)] = 1
        # operation completions per the formulation's linking constraints
        for o in inst.operations:
            k, b = batch_of[o.id]
            start = values[self.s_name(k, b)]
            setup = inst.family(o.family).s
            members = batch_members[(k, b)]
            if self.kind == "wspt":
                work = sum(inst.op(p).p for p in members
                           if p in self.prec.preceding_sets[o.id])
            else:
                work = sum(inst.op(p).p for p in members
                           if inner_rank[p] < inner_rank[o.id])
            values[self.cop_name(o.id)] = start + setup + work + o.p
        for j in inst.jobs:
            values[self.cjob_name(j.id)] = max(
                values[self.cop_name(i)] for i in j.ops)
        return values

    def objective_value(self, values: Mapping[str, int]) -> int:
        return sum(c * values.get(v, 0) for v, c in self.objective().items())

    def check_point(self, values: Mapping[str, int]) -> list[str]:
        """Names of violated constraints/bounds at the given point."""
        bad = [c.name for c in self.constraints() if not c.satisfied(values)]
        for name, info in self.variables().items():
            v = values.get(name, 0)
            if v < info.lb or (info.ub is not None and v > info.ub):
                bad.append(f"bound_{name}")
        return bad

    def decode_values(self, values: Mapping[str, int]) -> Schedule:
        """Build the schedule from X/Y/Z binaries; timings recomputed."""
        inst = self.inst
        rows: list[list[Batch]] = [[] for _ in inst.machines]
        for m in inst.machines:
            k = m.id
            for b in range(1, self.slots[k] + 1):
                members = [i for (i, kk, bb) in self.x_keys
                           if kk == k and bb == b
                           and values.get(self.x_name(i, kk, bb), 0) >= 1]
                if not members:
                    continue
                if self.kind == "wspt":
                    members.sort(key=lambda i: self.prec.rank[i])
                else:
                    snapshot = tuple(members)
                    members.sort(key=lambda i: sum(
                        values.get(self.z_name(p, i), 0)
                        for p in snapshot if p != i))
                rows[k - 1].append(Batch(inst.op(members[0]).family,
                                         tuple(members)))
        return Schedule(tuple(tuple(r) for r in rows))


def build_model(inst: Instance, cfg: ModelConfig,
                prec: Optional[WsptOrder] = None) -> BatchModel:
    """Construct the abstract model for either formulation kind."""
    if cfg.kind == "wspt":
        if prec is None:
            raise ValueError("the 'wspt' formulation requires a precedence "
                             "order (core.wspt_order)")
        return BatchModel(inst, cfg, prec, None)
    return BatchModel(inst, cfg, None, compatibility_sets(inst))


def restrict_and_fix(model: BatchModel, incumbent: Incumbent,
                     free_batches: Iterable[tuple[int, int]],
                     free_ops: Iterable[int]) -> BatchModel:
    """Fix everything outside (free_ops x free_batches) to the incumbent.

    The incumbent stays feasible in the restricted model, so any sub-solve
    warm-started from it can only tie or improve.
    """
    inst = model.inst
    free_slots = frozenset(free_batches)
    free = frozenset(free_ops)
    view = schedule_to_slots(inst, incumbent)
    slot_content = tuple(
        tuple((row[b - 1].ops if row[b - 1] is not None else ())
              for b in range(1, model.slots[mi + 1] + 1))
        for mi, row in enumerate(view))
    slot_of: dict[int, tuple[int, int]] = {}
    for mi, row in enumerate(slot_content):
        for bi, ops in enumerate(row):
            for i in ops:
                slot_of[i] = (mi + 1, bi + 1)
    for k, b in free_slots:
        if not (1 <= k <= len(inst.machines) and 1 <= b <= model.slots[k]):
            raise ValueError(f"free batch ({k}, {b}) outside the model slots")
    for i in free:
        if slot_of.get(i) not in free_slots:
            raise ValueError(
                f"inconsistent free sets: op {i} is in free_ops but the "
                f"incumbent does not assign it to a free batch")
    for (k, b) in free_slots:
        for i in slot_content[k - 1][b - 1]:
            if i not in free:
                raise ValueError(
                    f"inconsistent free sets: op {i} sits in free batch "
                    f"({k}, {b}) but is missing from free_ops")

    fixed: dict[str, int] = {}
    for i, k, b in model.x_keys:
        if i in free and (k, b) in free_slots:
            continue
        incumbent_here = slot_of.get(i) == (k, b)
        fixed[model.x_name(i, k, b)] = 1 if incumbent_here else 0
    for f, k, b in model.y_keys:
        if (k, b) in free_slots:
            continue
        ops = slot_content[k - 1][b - 1]
        fam = inst.op(ops[0]).family if ops else None
        fixed[model.y_name(f, k, b)] = 1 if f == fam else 0
    for a, c in model.z_keys:
        if a in free and c in free:
            continue
        same = (slot_of.get(a) is not None and slot_of.get(a) == slot_of.get(c)
                and slot_of.get(a) not in free_slots)
        if same:
            row = slot_content[slot_of[a][0] - 1][slot_of[a][1] - 1]
            fixed[model.z_name(a, c)] = (
                1 if row.index(a) < row.index(c) else 0)
        else:
            fixed[model.z_name(a, c)] = 0

    restricted = BatchModel(
        inst, model.cfg, model.prec, model.compat,
        restriction=Restriction(slot_content, free_slots, free),
        fixed=fixed)
    return restricted
