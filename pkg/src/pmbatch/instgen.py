"""Random instance generation and file codecs.

Generation follows a fixed recipe: 3 families with setups U(5,10), processing
times U(1,30), loads uniform over {10,...,100}, machine capacities from
{80,90,100}, job weights U(1,50), releases U(0,MR) with
MR = ceil(release_factor * sum(p_i + s_{f_i}) / |M|), per-op machine
eligibility with probability ``eligibility_factor``, and job-operation links
with probability ``job_assoc_factor``.  |N| = max(1, |O| // 3).

Randomness is numpy PCG64 seeded through SeedSequence.spawn with one child
stream per entity class (fixed order: families, setups, processing, loads,
capacities, weights, releases, eligibility, association, repair), so output
is byte-reproducible across platforms.

The instance file format is versioned JSON; best-known-solution (BKS) files
are two-column CSV ``instance_name,twct``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .core import (
    Batch,
    Family,
    Instance,
    Job,
    Machine,
    Operation,
    Schedule,
    validate_instance,
)

__all__ = [
    "GenParams",
    "generate",
    "max_release",
    "instance_to_json",
    "instance_from_json",
    "read_instance",
    "write_instance",
    "read_bks",
    "schedule_to_json",
    "schedule_from_json",
    "read_schedule",
    "write_schedule",
    "instance_name",
    "ParseError",
]

SCHEMA_VERSION = 1
_NUM_FAMILIES = 3
_CAPACITIES = (80, 90, 100)


class ParseError(ValueError):
    """Malformed instance/schedule/BKS file; message carries the locus."""


@dataclass(frozen=True)
class GenParams:
    num_ops: int
    num_machines: int
    release_factor: float = 0.5
    eligibility_factor: float = 0.9
    job_assoc_factor: float = 0.15
    seed: int = 0

    def __post_init__(self):
        if self.num_ops < 1 or self.num_machines < 1:
            raise ValueError("num_ops and num_machines must be >= 1")
        for name in ("release_factor", "eligibility_factor", "job_assoc_factor"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")


def max_release(release_factor: float, total_work: int, num_machines: int) -> int:
    """MR = ceil(release_factor * total (processing + setup) / |M|)."""
    return math.ceil(release_factor * total_work / num_machines)


def generate(p: GenParams) -> Instance:
    """Draw a valid random instance; pure function of the params."""
    streams = {
        name: np.random.Generator(np.random.PCG64(child))
        for name, child in zip(
            ("families", "setups", "processing", "loads", "capacities",
             "weights", "releases", "eligibility", "association", "repair"),
            np.random.SeedSequence(p.seed).spawn(10))
    }
    n_ops, n_mach = p.num_ops, p.num_machines
    n_jobs = max(1, n_ops // 3)

    fam_of = streams["families"].integers(1, _NUM_FAMILIES + 1, size=n_ops)
    setups = streams["setups"].integers(5, 11, size=_NUM_FAMILIES)
    proc = streams["processing"].integers(1, 31, size=n_ops)
    caps = streams["capacities"].choice(_CAPACITIES, size=n_mach)
    max_q = int(caps.max())
    rng_loads = streams["loads"]
    loads = []
    for _ in range(n_ops):
        l = int(rng_loads.integers(1, 11)) * 10
        while l > max_q:
            l = int(rng_loads.integers(1, 11)) * 10
        loads.append(l)
    weights = streams["weights"].integers(1, 51, size=n_jobs)

    total_work = int(proc.sum()) + sum(int(setups[f - 1]) for f in fam_of)
    mr = max_release(p.release_factor, total_work, n_mach)
    rng_rel = streams["releases"]
    op_releases = rng_rel.integers(0, mr + 1, size=n_ops)
    mach_releases = rng_rel.integers(0, mr + 1, size=n_mach)

    rng_el = streams["eligibility"]
    rng_rep = streams["repair"]
    eligible: list[frozenset[int]] = []
    for i in range(n_ops):
        feasible = [k for k in range(1, n_mach + 1) if caps[k - 1] >= loads[i]]
        row = [k for k in feasible if rng_el.random() < p.eligibility_factor]
        guard = 0
        while not row:
            guard += 1
            if guard > 1000:
                row = [feasible[int(rng_rep.integers(0, len(feasible)))]]
                break
            row = [k for k in feasible
                   if rng_rep.random() < p.eligibility_factor]
        eligible.append(frozenset(row))

    rng_as = streams["association"]
    job_ops: list[set[int]] = [set() for _ in range(n_jobs)]
    for j in range(n_jobs):
        for i in range(1, n_ops + 1):
            if rng_as.random() < p.job_assoc_factor:
                job_ops[j].add(i)
    for j in range(n_jobs):
        if not job_ops[j]:
            job_ops[j].add(int(rng_rep.integers(1, n_ops + 1)))
    covered = set().union(*job_ops)
    for i in range(1, n_ops + 1):
        if i not in covered:
            job_ops[int(rng_rep.integers(0, n_jobs))].add(i)

    inst = Instance(
        operations=tuple(
            Operation(i + 1, int(proc[i]), int(op_releases[i]), loads[i],
                      int(fam_of[i]), eligible[i])
            for i in range(n_ops)),
        jobs=tuple(Job(j + 1, int(weights[j]), frozenset(job_ops[j]))
                   for j in range(n_jobs)),
        machines=tuple(Machine(k + 1, int(mach_releases[k]), int(caps[k]))
                       for k in range(n_mach)),
        families=tuple(Family(f + 1, int(setups[f]))
                       for f in range(_NUM_FAMILIES)),
    )
    report = validate_instance(inst)
    assert report.ok, report.violations
    return inst


def instance_name(num_ops: int, num_machines: int, factor_index: int,
                  replicate: int) -> str:
    """Short joinable name: o{|O|}_m{|M|}_{factor combination}_{replicate}."""
    return f"o{num_ops}_m{num_machines}_{factor_index}_{replicate}"


# ------------------------------------------------------------------- codecs

def instance_to_json(inst: Instance) -> str:
    doc = {
        "version": SCHEMA_VERSION,
        "ops": [{"id": o.id, "p": o.p, "r": o.r, "l": o.l, "f": o.family,
                 "eligible": sorted(o.eligible)} for o in inst.operations],
        "jobs": [{"id": j.id, "w": j.w, "ops": sorted(j.ops)}
                 for j in inst.jobs],
        "machines": [{"id": m.id, "r": m.r, "q": m.q} for m in inst.machines],
        "families": [{"id": f.id, "s": f.s} for f in inst.families],
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def _require(doc, key, locus):
    if not isinstance(doc, dict) or key not in doc:
        raise ParseError(f"{locus}: missing field '{key}'")
    return doc[key]


def _int_field(rec, key, locus):
    v = _require(rec, key, locus)
    if not isinstance(v, int) or isinstance(v, bool):
        raise ParseError(f"{locus}: field '{key}' must be an integer, got {v!r}")
    return v


def _unique_ids(records, label):
    seen = set()
    for rec in records:
        if rec["id"] in seen:
            raise ParseError(f"duplicate {label} id {rec['id']}")
        seen.add(rec["id"])


def instance_from_json(text: str) -> Instance:
    if not text.strip():
        raise ParseError("empty instance file")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON at line {e.lineno}: {e.msg}") from e
    version = _require(doc, "version", "document")
    if version != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema version {version}")
    raw_ops, raw_jobs = _require(doc, "ops", "document"), _require(doc, "jobs", "document")
    raw_machs = _require(doc, "machines", "document")
    raw_fams = _require(doc, "families", "document")
    ops = []
    for idx, rec in enumerate(raw_ops):
        locus = f"ops[{idx}]"
        elig = _require(rec, "eligible", locus)
        if (not isinstance(elig, list)
                or any(not isinstance(k, int) or isinstance(k, bool)
                       for k in elig)):
            raise ParseError(f"{locus}: 'eligible' must be a list of integers")
        ops.append(Operation(
            _int_field(rec, "id", locus), _int_field(rec, "p", locus),
            _int_field(rec, "r", locus), _int_field(rec, "l", locus),
            _int_field(rec, "f", locus), frozenset(elig)))
    jobs = []
    for idx, rec in enumerate(raw_jobs):
        locus = f"jobs[{idx}]"
        jops = _require(rec, "ops", locus)
        if (not isinstance(jops, list)
                or any(not isinstance(i, int) or isinstance(i, bool)
                       for i in jops)):
            raise ParseError(f"{locus}: 'ops' must be a list of integers")
        jobs.append(Job(_int_field(rec, "id", locus),
                        _int_field(rec, "w", locus), frozenset(jops)))
    machines = [Machine(_int_field(rec, "id", f"machines[{idx}]"),
                        _int_field(rec, "r", f"machines[{idx}]"),
                        _int_field(rec, "q", f"machines[{idx}]"))
                for idx, rec in enumerate(raw_machs)]
    families = [Family(_int_field(rec, "id", f"families[{idx}]"),
                       _int_field(rec, "s", f"families[{idx}]"))
                for idx, rec in enumerate(raw_fams)]
    for records, label in ((raw_ops, "operation"), (raw_jobs, "job"),
                           (raw_machs, "machine"), (raw_fams, "family")):
        _unique_ids(records, label)
    inst = Instance(
        tuple(sorted(ops, key=lambda o: o.id)),
        tuple(sorted(jobs, key=lambda j: j.id)),
        tuple(sorted(machines, key=lambda m: m.id)),
        tuple(sorted(families, key=lambda f: f.id)))
    report = validate_instance(inst)
    if not report.ok:
        details = "; ".join(v.message for v in report.violations)
        raise ParseError(f"instance violates invariants: {details}")
    return inst


def write_instance(inst: Instance, path: Union[str, Path]) -> None:
    Path(path).write_text(instance_to_json(inst))


def read_instance(path: Union[str, Path]) -> Instance:
    return instance_from_json(Path(path).read_text())


def read_bks(path: Union[str, Path]) -> dict[str, int]:
    """Best-known-solution CSV: ``instance_name,twct`` per line."""
    out: dict[str, int] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if lineno == 1 and line.lower().replace(" ", "") in (
                "instance_name,twct", "instance,twct", "name,twct"):
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(f"BKS line {lineno}: expected 'name,twct'")
        name, value = parts[0].strip(), parts[1].strip()
        try:
            out[name] = int(value)
        except ValueError as e:
            raise ParseError(f"BKS line {lineno}: non-integer twct {value!r}") from e
    return out


def schedule_to_json(sched: Schedule) -> str:
    doc = {
        "version": SCHEMA_VERSION,
        "machines": [[{"family": b.family, "ops": list(b.ops)} for b in row]
                     for row in sched.machines],
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def schedule_from_json(text: str) -> Schedule:
    if not text.strip():
        raise ParseError("empty schedule file")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON at line {e.lineno}: {e.msg}") from e
    if _require(doc, "version", "document") != SCHEMA_VERSION:
        raise ParseError("unsupported schema version")
    rows = []
    for mi, row in enumerate(_require(doc, "machines", "document")):
        batches = []
        for bi, rec in enumerate(row):
            locus = f"machines[{mi}][{bi}]"
            fam = _int_field(rec, "family", locus)
            ops = _require(rec, "ops", locus)
            if (not isinstance(ops, list)
                    or any(not isinstance(i, int) or isinstance(i, bool)
                           for i in ops)):
                raise ParseError(f"{locus}: 'ops' must be a list of integers")
            batches.append(Batch(fam, tuple(ops)))
        rows.append(tuple(batches))
    return Schedule(tuple(rows))


def write_schedule(sched: Schedule, path: Union[str, Path]) -> None:
    Path(path).write_text(schedule_to_json(sched))


def read_schedule(path: Union[str, Path]) -> Schedule:
    return schedule_from_json(Path(path).read_text())
