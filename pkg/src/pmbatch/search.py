"""MIP-based neighborhood searches and the ILS/GRASP matheuristic drivers.

Solutions travel through this module as *slot views* (per-machine tuples of
``Batch | None`` of fixed length |B_k|), so batch positions keep their
identity across sub-solves and the available-batch bookkeeping (``MB_k``)
stays positional.  Views compact to plain schedules only for evaluation and
at the public boundaries.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from time import perf_counter
from typing import Optional, Sequence, Union

from .construct import randomized_construct, wmct_wavga
from .core import Batch, Instance, Schedule, evaluate, theta_from_schedule, wspt_order
from .mip import (
    ModelConfig,
    SlotView,
    build_model,
    restrict_and_fix,
    schedule_to_slots,
    slots_to_schedule,
)
from .subsolve import SolveRequest, solve

__all__ = [
    "Params",
    "SearchState",
    "RunEvent",
    "RunLog",
    "FormulationContext",
    "window_ranges",
    "init_or_update_mb",
    "batch_windows",
    "multi_batches_relocate",
    "vnd",
    "apply_swaps",
    "random_batch_swap",
    "ils_math",
    "grasp_math",
    "run_variant",
    "VARIANT_KINDS",
]

# variant -> (main-loop formulation kind, intensification formulation kind)
VARIANT_KINDS = {1: ("wspt", "wspt"), 2: ("s", "s"), 3: ("wspt", "s")}


@dataclass(frozen=True)
class Params:
    """Search parameters; defaults follow the tuned configuration."""

    rho: float = 0.20           # windows fraction of the makespan
    phi: float = 0.30           # relocate fraction of available batches
    omega: float = 0.10         # swap fraction of available batches
    delta: float = 0.00         # worse-solution acceptance slack
    rcl_alpha: float = 0.10     # restricted-candidate-list greediness
    omega_max: int = 10         # max non-improving iterations
    sub_time_limit: Optional[float] = 1.0   # wall budget per sub-solve
    sub_node_limit: Optional[int] = None    # node budget (deterministic mode)

    def __post_init__(self):
        for name in ("rho", "phi", "omega", "delta", "rcl_alpha"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.omega_max < 1:
            raise ValueError("omega_max must be >= 1")


@dataclass
class RunEvent:
    t: float                # seconds since the log was created
    phase: str
    twct: Optional[int]
    detail: str = ""


class RunLog:
    """Timestamped trace of a matheuristic run (for evolution curves)."""

    def __init__(self):
        self.events: list[RunEvent] = []
        self._t0 = perf_counter()

    def record(self, phase: str, twct: Optional[int] = None,
               detail: str = "") -> None:
        self.events.append(RunEvent(perf_counter() - self._t0, phase, twct,
                                    detail))

    def phases(self) -> list[str]:
        return [e.phase for e in self.events]

    def best_curve(self) -> list[tuple[float, int]]:
        """(time, best-so-far twct) points; non-increasing in twct."""
        out: list[tuple[float, int]] = []
        best: Optional[int] = None
        for e in self.events:
            if e.twct is None:
                continue
            if best is None or e.twct < best:
                best = e.twct
                out.append((e.t, best))
        return out


class FormulationContext:
    """Builds (and caches where valid) batch models of one formulation kind.

    The "s" model is incumbent-independent and built once.  The "wspt" model
    embeds a precedence order derived from the current incumbent, so it is
    rebuilt per sub-solve.
    """

    def __init__(self, inst: Instance, kind: str):
        if kind not in ("wspt", "s"):
            raise ValueError(f"unknown formulation kind {kind!r}")
        self.inst = inst
        self.kind = kind
        self._s_model = (build_model(inst, ModelConfig("s"))
                         if kind == "s" else None)

    def model_for(self, view: SlotView):
        if self.kind == "s":
            return self._s_model
        theta = theta_from_schedule(slots_to_schedule(view))
        return build_model(self.inst, ModelConfig("wspt"),
                           wspt_order(self.inst, theta))


def _as_context(inst: Instance,
                formulation: Union[str, FormulationContext]):
    if isinstance(formulation, FormulationContext):
        return formulation
    return FormulationContext(inst, formulation)


@dataclass
class SearchState:
    """Per-run mutable search context: MB_k counters, RNG, parameters."""

    inst: Instance
    params: Params = field(default_factory=Params)
    rng: random.Random = field(default_factory=lambda: random.Random(0))
    mb: Optional[dict[int, int]] = None
    log: Optional[RunLog] = None

    def slots_of(self, k: int) -> int:
        return len(self.inst.ops_of_machine[k])

    def available_pairs(self) -> list[tuple[int, int]]:
        assert self.mb is not None, "MB_k not initialized"
        return [(m.id, b) for m in self.inst.machines
                for b in range(1, self.mb[m.id] + 1)]

    def reset_mb(self) -> None:
        self.mb = None


def _usage(view: SlotView) -> dict[int, int]:
    """Machine id -> number of used (non-empty) batches."""
    return {mi + 1: sum(1 for b in row if b is not None and b.ops)
            for mi, row in enumerate(view)}


def init_or_update_mb(state: SearchState, view: SlotView) -> dict[int, int]:
    """MB_k = 1 + (used batches), clamped to |B_k|.

    On first call every machine is (re)initialized; afterwards a machine is
    updated only when all its available batches are in use.
    """
    used = _usage(view)
    if state.mb is None:
        state.mb = {k: min(1 + used[k], state.slots_of(k))
                    for k in used}
    else:
        for k, n_used in used.items():
            if n_used == state.mb[k]:
                state.mb[k] = min(1 + n_used, state.slots_of(k))
    return state.mb


def _twct(inst: Instance, view: SlotView) -> int:
    return evaluate(inst, slots_to_schedule(view)).twct


def _slot_times(inst: Instance, view: SlotView) -> dict[tuple[int, int],
                                                        tuple[int, int]]:
    """(machine, slot) -> (S, C); empty slots collapse to the running time."""
    times: dict[tuple[int, int], tuple[int, int]] = {}
    for mi, row in enumerate(view):
        k = mi + 1
        t = inst.machine(k).r
        for bi, batch in enumerate(row):
            if batch is None or not batch.ops:
                times[(k, bi + 1)] = (t, t)
                continue
            start = max([t] + [inst.op(i).r for i in batch.ops])
            end = start + inst.family(batch.family).s
            end += sum(inst.op(i).p for i in batch.ops)
            times[(k, bi + 1)] = (start, end)
            t = end
    return times


def _optimize_slots(state: SearchState, view: SlotView,
                    free_slots: set[tuple[int, int]],
                    ctx: FormulationContext) -> tuple[SlotView, bool]:
    """Sub-solve the freed region; adopt the result only if strictly better."""
    free_ops = {i for (k, b) in free_slots
                for i in (view[k - 1][b - 1].ops
                          if view[k - 1][b - 1] is not None else ())}
    if not free_slots or not free_ops:
        return view, False
    model = ctx.model_for(view)
    restricted = restrict_and_fix(model, view, free_slots, free_ops)
    res = solve(SolveRequest(restricted, warm_start=view,
                             time_limit=state.params.sub_time_limit,
                             node_limit=state.params.sub_node_limit))
    if res.slot_view is None or res.objective is None:
        return view, False
    if res.objective < _twct(state.inst, view):
        if state.log is not None:
            state.log.record("improve", res.objective, ctx.kind)
        return res.slot_view, True
    return view, False


def window_ranges(cmax: int, rs: int) -> list[tuple[float, float]]:
    """The (R_begin, R_end) sequence slid from the schedule end to its start."""
    if cmax <= 0:
        return []
    rs = max(1, rs)
    ranges: list[tuple[float, float]] = []
    r_begin: float = math.inf
    r_end: float = cmax
    while r_begin > 0:
        r_begin = max(0.0, r_end - rs)
        ranges.append((r_begin, r_end))
        r_end = r_begin + rs / 2
    return ranges


def batch_windows(state: SearchState, view: SlotView,
                  formulation: Union[str, FormulationContext],
                  rho: Optional[float] = None) -> tuple[SlotView, bool]:
    """Slide a time window over the schedule and sub-solve its batches."""
    ctx = _as_context(state.inst, formulation)
    if rho is None:
        rho = state.params.rho
    init_or_update_mb(state, view)
    cmax = evaluate(state.inst, slots_to_schedule(view)).cmax
    rs = max(1, math.ceil(rho * cmax))
    improved_any = False
    for r_begin, r_end in window_ranges(cmax, rs):
        times = _slot_times(state.inst, view)
        free = {(k, b) for (k, b), (s, c) in times.items()
                if s <= r_end and c >= r_begin and b <= state.mb[k]}
        view, improved = _optimize_slots(state, view, free, ctx)
        improved_any |= improved
        init_or_update_mb(state, view)
    return view, improved_any


def multi_batches_relocate(state: SearchState, view: SlotView,
                           formulation: Union[str, FormulationContext],
                           phi: Optional[float] = None
                           ) -> tuple[SlotView, bool]:
    """Random draws over available batches; each optimized exactly once."""
    ctx = _as_context(state.inst, formulation)
    if phi is None:
        phi = state.params.phi
    init_or_update_mb(state, view)
    pool = state.available_pairs()
    nb = max(1, math.ceil(phi * len(pool)))
    improved_any = False
    while pool:
        chosen = state.rng.sample(pool, min(nb, len(pool)))
        for pair in chosen:
            pool.remove(pair)
        view, improved = _optimize_slots(state, view, set(chosen), ctx)
        improved_any |= improved
        init_or_update_mb(state, view)
    return view, improved_any


def vnd(state: SearchState, view: SlotView,
        formulation: Union[str, FormulationContext]) -> SlotView:
    """Relocate first, windows on failure, restart on any improvement."""
    ctx = _as_context(state.inst, formulation)
    while True:
        view, improved = multi_batches_relocate(state, view, ctx)
        if improved:
            continue
        view, improved = batch_windows(state, view, ctx)
        if not improved:
            return view


# ------------------------------------------------------------- perturbation

def apply_swaps(view: SlotView,
                pairs: Sequence[tuple[tuple[int, int], tuple[int, int]]]
                ) -> SlotView:
    """Exchange slot contents for each ((k,b),(k',b')) pair, in order.

    Applying the reversed sequence restores the original view (each swap is
    an involution).
    """
    rows = [list(r) for r in view]
    for (k1, b1), (k2, b2) in pairs:
        rows[k1 - 1][b1 - 1], rows[k2 - 1][b2 - 1] = (
            rows[k2 - 1][b2 - 1], rows[k1 - 1][b1 - 1])
    return tuple(tuple(r) for r in rows)


def _swap_feasible(inst: Instance, batch: Optional[Batch], k: int) -> bool:
    if batch is None or not batch.ops:
        return True
    q = inst.machine(k).q
    load = 0
    for i in batch.ops:
        op = inst.op(i)
        if k not in op.eligible:
            return False
        load += op.l
    return load <= q


def random_batch_swap(state: SearchState, view: SlotView,
                      omega: Optional[float] = None,
                      max_attempts: int = 50) -> SlotView:
    """Perturb by exchanging the contents of NS random available batch pairs.

    Two empty batches are never selected together; swaps that would break
    capacity or eligibility are redrawn (bounded), keeping the result
    feasible.  Returns the input unchanged when no swappable pair exists.
    """
    if omega is None:
        omega = state.params.omega
    init_or_update_mb(state, view)
    avail = state.available_pairs()
    if len(avail) < 2:
        return view
    ns = math.ceil(omega * len(avail))
    rows = [list(r) for r in view]
    for _ in range(ns):
        for _attempt in range(max_attempts):
            (k1, b1), (k2, b2) = state.rng.sample(avail, 2)
            first = rows[k1 - 1][b1 - 1]
            second = rows[k2 - 1][b2 - 1]
            if ((first is None or not first.ops)
                    and (second is None or not second.ops)):
                continue
            if not (_swap_feasible(state.inst, first, k2)
                    and _swap_feasible(state.inst, second, k1)):
                continue
            rows[k1 - 1][b1 - 1], rows[k2 - 1][b2 - 1] = second, first
            break
    return tuple(tuple(r) for r in rows)


# ------------------------------------------------------------ matheuristics

def _variant_contexts(inst: Instance, variant: int
                      ) -> tuple[FormulationContext, FormulationContext]:
    try:
        main_kind, intens_kind = VARIANT_KINDS[variant]
    except KeyError:
        raise ValueError(f"variant must be 1, 2 or 3, got {variant!r}")
    main = FormulationContext(inst, main_kind)
    intens = main if intens_kind == main_kind else FormulationContext(
        inst, intens_kind)
    return main, intens


def _intensify(state: SearchState, best: SlotView,
               main: FormulationContext, intens: FormulationContext,
               log: RunLog) -> SlotView:
    state.reset_mb()
    init_or_update_mb(state, best)
    if intens.kind != main.kind:
        log.record("formulation-switch", _twct(state.inst, best), intens.kind)
    best = vnd(state, best, intens)
    log.record("intensify", _twct(state.inst, best), intens.kind)
    return best


def ils_math(inst: Instance, params: Optional[Params] = None,
             variant: int = 1, seed: int = 0,
             log: Optional[RunLog] = None) -> Schedule:
    """Iterated local search: construct, VND, then perturb/VND cycles."""
    params = params if params is not None else Params()
    log = log if log is not None else RunLog()
    main, intens = _variant_contexts(inst, variant)
    state = SearchState(inst, params, random.Random(seed), log=log)

    s = schedule_to_slots(inst, wmct_wavga(inst))
    init_or_update_mb(state, s)
    log.record("construct", _twct(inst, s), main.kind)
    s = vnd(state, s, main)
    s_star, f_star = s, _twct(inst, s)
    log.record("vnd", f_star, main.kind)

    counter = 1
    while counter <= params.omega_max:
        counter += 1
        candidate = random_batch_swap(state, s)
        candidate = vnd(state, candidate, main)
        f_cand = _twct(inst, candidate)
        if f_cand < f_star * (1 + params.delta):
            s = candidate
            log.record("accept", f_cand, main.kind)
            if f_cand < f_star:
                s_star, f_star = candidate, f_cand
                counter = 1
                log.record("best", f_star, main.kind)
        else:
            s = s_star

    s_star = _intensify(state, s_star, main, intens, log)
    return slots_to_schedule(s_star)


def grasp_math(inst: Instance, params: Optional[Params] = None,
               variant: int = 1, seed: int = 0,
               log: Optional[RunLog] = None) -> Schedule:
    """Multi-start: randomized construction + VND per restart."""
    params = params if params is not None else Params()
    log = log if log is not None else RunLog()
    main, intens = _variant_contexts(inst, variant)
    state = SearchState(inst, params, random.Random(seed), log=log)

    s_star: Optional[SlotView] = None
    f_star = math.inf
    counter = 1
    while counter <= params.omega_max:
        counter += 1
        base = randomized_construct(inst, params.rcl_alpha, state.rng)
        s = schedule_to_slots(inst, base)
        state.reset_mb()
        init_or_update_mb(state, s)
        log.record("construct", _twct(inst, s), main.kind)
        s = vnd(state, s, main)
        f = _twct(inst, s)
        log.record("vnd", f, main.kind)
        if f < f_star:
            s_star, f_star = s, f
            counter = 1
            log.record("best", f, main.kind)

    assert s_star is not None
    s_star = _intensify(state, s_star, main, intens, log)
    return slots_to_schedule(s_star)


def run_variant(inst: Instance, method: str, variant: int,
                params: Optional[Params] = None,
                seed: int = 0) -> tuple[Schedule, RunLog]:
    """Run one of the six matheuristic configurations, returning its log."""
    log = RunLog()
    method = method.lower()
    if method == "ils":
        sched = ils_math(inst, params, variant, seed, log)
    elif method == "grasp":
        sched = grasp_math(inst, params, variant, seed, log)
    else:
        raise ValueError(f"method must be 'ils' or 'grasp', got {method!r}")
    log.record("done", evaluate(inst, sched).twct)
    return sched, log
