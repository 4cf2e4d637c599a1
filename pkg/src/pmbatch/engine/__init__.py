"""Branch-and-bound engine for restricted batch models.

The engine searches over placements of *free* operations into *free* batch
slots (fixed slots keep their incumbent content) and minimizes total weighted
job completion time with an admissible combinatorial lower bound: completed
placements keep their current completion times (later insertions only push
times back) and unplaced operations contribute
max(release, earliest machine release) + setup + processing.

Two interchangeable implementations exist: a compiled Cython kernel
(``pmbatch._kernel``) and a pure-Python fallback (``pmbatch.engine._pure``)
with identical search order, node counts, and results.  The compiled kernel
is used when importable unless ``PMBATCH_PURE=1`` is set.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional, Sequence

__all__ = ["SubProblem", "solve_subproblem", "COMPILED",
           "STATUS_OPTIMAL", "STATUS_FEASIBLE", "STATUS_INFEASIBLE",
           "STATUS_UNKNOWN"]

STATUS_OPTIMAL = 0
STATUS_FEASIBLE = 1      # interrupted with an incumbent
STATUS_INFEASIBLE = 2    # search exhausted, no feasible point
STATUS_UNKNOWN = 3       # interrupted, no incumbent


@dataclass
class SubProblem:
    """Plain-data search problem; every index is 0-based.

    ``fixed_content[k][b]`` is a tuple of op indices for a fixed slot or
    ``None`` for a free slot.  ``warm[level]`` gives the warm-start placement
    (machine, slot, inner position) of ``free_ops[level]`` or None.
    """

    n_ops: int
    n_machines: int
    p: Sequence[int]
    r: Sequence[int]
    load: Sequence[int]
    fam: Sequence[int]                  # 0-based family index
    elig: Sequence[Sequence[int]]       # allowed machines per op (sorted)
    setup: Sequence[int]
    mach_r: Sequence[int]
    mach_q: Sequence[int]
    job_w: Sequence[int]
    job_ops: Sequence[Sequence[int]]
    fixed_content: Sequence[Sequence[Optional[Sequence[int]]]]
    free_ops: Sequence[int]             # branching order
    kind_s: bool                        # False: inner order fixed by rank
    rank: Sequence[int]                 # total order used for 'wspt' batches
    warm: Optional[Sequence[tuple[int, int, int]]] = None


def _select_impl():
    if os.environ.get("PMBATCH_PURE") != "1":
        try:
            from pmbatch import _kernel
            return _kernel.solve_subproblem, True
        except ImportError:
            pass
    from . import _pure
    return _pure.solve_subproblem, False


solve_subproblem, COMPILED = _select_impl()
