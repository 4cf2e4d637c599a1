"""Time-boxed solving of batch models.

``solve`` runs the built-in branch-and-bound engine over the model's free
operations/slots (everything else pinned by ``mip.restrict_and_fix``),
honoring a wall-clock budget and/or a deterministic node budget, and never
returns anything worse than the warm start.  ``export_model`` writes the
model as CPLEX-LP text; ``parse_lp``/``solve_lp_with_highs`` form an optional
external-solver bridge through :func:`scipy.optimize.milp`.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Optional, Union

from . import core
from .core import Batch, Schedule
from .engine import (
    STATUS_FEASIBLE,
    STATUS_INFEASIBLE,
    STATUS_OPTIMAL,
    SubProblem,
    solve_subproblem,
)
from .mip import BatchModel, Incumbent, Restriction, schedule_to_slots, slots_to_schedule

__all__ = ["SolveStatus", "SolveRequest", "SolveResult", "solve",
           "export_model", "parse_lp", "solve_lp_with_highs"]


class SolveStatus(enum.Enum):
    Optimal = "Optimal"
    FeasibleTimeLimit = "FeasibleTimeLimit"
    InfeasibleProven = "InfeasibleProven"
    Unknown = "Unknown"


@dataclass(frozen=True)
class SolveRequest:
    model: BatchModel
    warm_start: Optional[Incumbent] = None
    time_limit: Optional[float] = 1.0
    node_limit: Optional[int] = None


@dataclass(frozen=True)
class SolveResult:
    status: SolveStatus
    incumbent: Optional[Schedule]
    objective: Optional[int]
    bound: int
    nodes: int
    slot_view: Optional[tuple[tuple[Optional[Batch], ...], ...]] = None


def _branching_rank(model: BatchModel) -> Mapping[int, int]:
    if model.prec is not None:
        return model.prec.rank
    return core.wspt_order(model.inst).rank


def _default_restriction(model: BatchModel) -> Restriction:
    inst = model.inst
    slot_content = tuple(tuple(() for _ in range(model.slots[m.id]))
                         for m in inst.machines)
    free_slots = frozenset((m.id, b) for m in inst.machines
                           for b in range(1, model.slots[m.id] + 1))
    free_ops = frozenset(o.id for o in inst.operations)
    return Restriction(slot_content, free_slots, free_ops)


def _build_subproblem(model: BatchModel,
                      warm: Optional[Incumbent]) -> SubProblem:
    inst = model.inst
    restr = model.restriction or _default_restriction(model)
    rank = _branching_rank(model)
    n = len(inst.operations)
    m = len(inst.machines)
    fixed_content: list[list[Optional[tuple[int, ...]]]] = []
    for mi in range(m):
        row: list[Optional[tuple[int, ...]]] = []
        for bi, ops in enumerate(restr.slot_content[mi]):
            if (mi + 1, bi + 1) in restr.free_slots:
                row.append(None)
            else:
                row.append(tuple(i - 1 for i in ops))
        fixed_content.append(row)
    free_ops = sorted(restr.free_ops, key=lambda i: rank[i])
    warm_placements = None
    if warm is not None:
        view = schedule_to_slots(inst, warm)
        place: dict[int, tuple[int, int, int]] = {}
        for mi, vrow in enumerate(view):
            for bi, batch in enumerate(vrow):
                if batch is None:
                    continue
                for pos, i in enumerate(batch.ops):
                    place[i] = (mi, bi, pos)
        warm_placements = []
        for i in free_ops:
            if i not in place:
                raise ValueError(f"warm start does not place op {i}")
            k, b, pos = place[i]
            if (k + 1, b + 1) not in restr.free_slots:
                raise ValueError(
                    f"warm start places free op {i} in fixed batch "
                    f"({k + 1}, {b + 1})")
            fixed_here = sum(1 for x in restr.slot_content[k][b]
                             if x not in restr.free_ops)
            warm_placements.append((k, b, pos - fixed_here))
    return SubProblem(
        n_ops=n,
        n_machines=m,
        p=[o.p for o in inst.operations],
        r=[o.r for o in inst.operations],
        load=[o.l for o in inst.operations],
        fam=[o.family - 1 for o in inst.operations],
        elig=[tuple(k - 1 for k in sorted(o.eligible)
                    if o.l <= inst.machine(k).q)
              for o in inst.operations],
        setup=[f.s for f in inst.families],
        mach_r=[mk.r for mk in inst.machines],
        mach_q=[mk.q for mk in inst.machines],
        job_w=[j.w for j in inst.jobs],
        job_ops=[tuple(i - 1 for i in sorted(j.ops)) for j in inst.jobs],
        fixed_content=fixed_content,
        free_ops=[i - 1 for i in free_ops],
        kind_s=(model.kind == "s"),
        rank=[rank[o.id] for o in inst.operations],
        warm=warm_placements,
    )


def solve(req: SolveRequest) -> SolveResult:
    """Branch-and-bound over the model's free placements."""
    model = req.model
    inst = model.inst
    sub = _build_subproblem(model, req.warm_start)
    status_code, best_slots, objective, bound, nodes = solve_subproblem(
        sub, req.time_limit, req.node_limit)
    if best_slots is None:
        status = (SolveStatus.InfeasibleProven
                  if status_code == STATUS_INFEASIBLE else SolveStatus.Unknown)
        return SolveResult(status, None, None, bound, nodes)
    restr = model.restriction or _default_restriction(model)
    rank = _branching_rank(model)
    view_rows: list[list[Optional[Batch]]] = []
    for mi in range(len(inst.machines)):
        row: list[Optional[Batch]] = []
        for bi in range(model.slots[mi + 1]):
            if (mi + 1, bi + 1) in restr.free_slots:
                ops = tuple(i + 1 for i in best_slots[(mi, bi)])
            else:
                ops = restr.slot_content[mi][bi]
            if model.kind == "wspt" and ops:
                ops = tuple(sorted(ops, key=lambda i: rank[i]))
            row.append(Batch(inst.op(ops[0]).family, ops) if ops else None)
        view_rows.append(row)
    view = tuple(tuple(r) for r in view_rows)
    sched = slots_to_schedule(view)
    status = (SolveStatus.Optimal if status_code == STATUS_OPTIMAL
              else SolveStatus.FeasibleTimeLimit)
    return SolveResult(status, sched, objective, bound, nodes, view)


# ----------------------------------------------------------------- LP export

def _lp_terms(terms, lead=False) -> str:
    parts = []
    for idx, (coef, var) in enumerate(terms):
        sign = "-" if coef < 0 else ("+" if (idx or not lead) else "")
        mag = abs(coef)
        body = var if mag == 1 else f"{mag} {var}"
        parts.append(f"{sign} {body}".strip() if sign else body)
    return " ".join(parts)


def export_model(model: BatchModel, path: Union[str, Path]) -> None:
    """Write the model in CPLEX-LP text format."""
    lines = [f"\\ batch scheduling model kind={model.kind} "
             f"big_m={model.big_m}"]
    obj = sorted(model.objective().items())
    lines.append("Minimize")
    lines.append(" obj: " + _lp_terms([(c, v) for v, c in obj], lead=True))
    lines.append("Subject To")
    sense_txt = {"<=": "<=", ">=": ">=", "==": "="}
    for con in model.constraints():
        lines.append(f" {con.name}: {_lp_terms(con.terms)} "
                     f"{sense_txt[con.sense]} {con.rhs}")
    lines.append("Bounds")
    binaries = []
    for name, info in sorted(model.variables().items()):
        if info.kind == "binary":
            binaries.append(name)
            if info.lb == info.ub:
                lines.append(f" {name} = {info.lb}")
        else:
            if info.ub is None:
                if info.lb != 0:
                    lines.append(f" {name} >= {info.lb}")
            else:
                lines.append(f" {info.lb} <= {name} <= {info.ub}")
    if binaries:
        lines.append("Binaries")
        for name in binaries:
            lines.append(f" {name}")
    lines.append("End")
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass
class ParsedLP:
    objective: dict[str, Fraction]
    constraints: list[tuple[str, dict[str, Fraction], str, Fraction]]
    bounds: dict[str, tuple[Fraction, Optional[Fraction]]]
    binaries: set[str]

    def variables(self) -> list[str]:
        seen = dict.fromkeys(self.objective)
        for _, coeffs, _, _ in self.constraints:
            seen.update(dict.fromkeys(coeffs))
        seen.update(dict.fromkeys(self.bounds))
        seen.update(dict.fromkeys(sorted(self.binaries)))
        return list(seen)


_TERM_RE = re.compile(r"([+-]?)\s*(\d+(?:\.\d+)?)?\s*([A-Za-z][A-Za-z0-9_]*)")


def _parse_terms(text: str) -> dict[str, Fraction]:
    out: dict[str, Fraction] = {}
    for sign, mag, var in _TERM_RE.findall(text):
        coef = Fraction(mag) if mag else Fraction(1)
        if sign == "-":
            coef = -coef
        out[var] = out.get(var, Fraction(0)) + coef
    return out


def parse_lp(path: Union[str, Path]) -> ParsedLP:
    """Parse the LP dialect written by :func:`export_model`."""
    objective: dict[str, Fraction] = {}
    constraints: list[tuple[str, dict[str, Fraction], str, Fraction]] = []
    bounds: dict[str, tuple[Fraction, Optional[Fraction]]] = {}
    binaries: set[str] = set()
    section = None
    for raw in Path(path).read_text().splitlines():
        line = raw.split("\\")[0].strip()
        if not line:
            continue
        low = line.lower()
        if low in ("minimize", "maximize"):
            section = "objective"
            continue
        if low in ("subject to", "st", "s.t."):
            section = "constraints"
            continue
        if low == "bounds":
            section = "bounds"
            continue
        if low in ("binaries", "binary", "generals", "general"):
            section = "binaries" if low.startswith("bin") else "generals"
            continue
        if low == "end":
            break
        if section == "objective":
            body = line.split(":", 1)[1] if ":" in line else line
            for var, coef in _parse_terms(body).items():
                objective[var] = objective.get(var, Fraction(0)) + coef
        elif section == "constraints":
            name, body = (line.split(":", 1) if ":" in line
                          else (f"c{len(constraints)}", line))
            mm = re.search(r"(<=|>=|=)\s*([+-]?\d+(?:\.\d+)?)\s*$", body)
            if not mm:
                raise ValueError(f"cannot parse constraint line: {raw!r}")
            sense = {"<=": "<=", ">=": ">=", "=": "=="}[mm.group(1)]
            rhs = Fraction(mm.group(2))
            constraints.append((name.strip(), _parse_terms(body[:mm.start()]),
                                sense, rhs))
        elif section == "bounds":
            mm = re.match(r"([+-]?\d+(?:\.\d+)?)\s*<=\s*(\w+)\s*<=\s*"
                          r"([+-]?\d+(?:\.\d+)?)$", line)
            if mm:
                bounds[mm.group(2)] = (Fraction(mm.group(1)),
                                       Fraction(mm.group(3)))
                continue
            mm = re.match(r"(\w+)\s*(<=|>=|=)\s*([+-]?\d+(?:\.\d+)?)$", line)
            if not mm:
                raise ValueError(f"cannot parse bounds line: {raw!r}")
            var, op, val = mm.group(1), mm.group(2), Fraction(mm.group(3))
            if op == "=":
                bounds[var] = (val, val)
            elif op == ">=":
                bounds[var] = (val, bounds.get(var, (None, None))[1])
            else:
                bounds[var] = (bounds.get(var, (Fraction(0), None))[0], val)
        elif section == "binaries":
            binaries.add(line)
    return ParsedLP(objective, constraints, bounds, binaries)


def solve_lp_with_highs(path: Union[str, Path],
                        time_limit: Optional[float] = None):
    """External bridge: re-import an exported LP file and solve it.

    Returns (objective_value, {var: value}).  Requires scipy's HiGHS MILP.
    """
    import numpy as np
    from scipy import optimize, sparse

    lp = parse_lp(path)
    variables = lp.variables()
    index = {v: i for i, v in enumerate(variables)}
    c = np.zeros(len(variables))
    for v, coef in lp.objective.items():
        c[index[v]] = float(coef)
    rows, cols, data, lo, hi = [], [], [], [], []
    for rix, (_, coeffs, sense, rhs) in enumerate(lp.constraints):
        for v, coef in coeffs.items():
            rows.append(rix)
            cols.append(index[v])
            data.append(float(coef))
        if sense == "<=":
            lo.append(-np.inf)
            hi.append(float(rhs))
        elif sense == ">=":
            lo.append(float(rhs))
            hi.append(np.inf)
        else:
            lo.append(float(rhs))
            hi.append(float(rhs))
    a = sparse.csr_matrix((data, (rows, cols)),
                          shape=(len(lp.constraints), len(variables)))
    lb = np.zeros(len(variables))
    ub = np.full(len(variables), np.inf)
    for v in lp.binaries:
        ub[index[v]] = 1.0
    for v, (vlo, vhi) in lp.bounds.items():
        if vlo is not None:
            lb[index[v]] = float(vlo)
        if vhi is not None:
            ub[index[v]] = float(vhi)
    integrality = np.array([1 if v in lp.binaries else 0 for v in variables])
    options = {}
    if time_limit is not None:
        options["time_limit"] = time_limit
    res = optimize.milp(
        c, constraints=optimize.LinearConstraint(a, np.array(lo), np.array(hi)),
        bounds=optimize.Bounds(lb, ub), integrality=integrality,
        options=options)
    if not res.success:
        raise RuntimeError(f"external MILP solve failed: {res.message}")
    values = {v: (round(res.x[index[v]]) if integrality[index[v]]
                  else res.x[index[v]]) for v in variables}
    return res.fun, values
