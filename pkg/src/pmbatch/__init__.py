"""Parallel machine batch scheduling with non-anticipatory family setups.

Solver library and CLI minimizing total weighted completion time: domain
model and evaluator (:mod:`pmbatch.core`), instance generator and codec
(:mod:`pmbatch.instgen`), constructive heuristic (:mod:`pmbatch.construct`),
batch MIP formulations (:mod:`pmbatch.mip`), time-boxed sub-solver
(:mod:`pmbatch.subsolve`), MIP-based neighborhood search and matheuristics
(:mod:`pmbatch.search`), and the command line (:mod:`pmbatch.cli`).
"""

__version__ = "0.1.0"

from .core import (  # noqa: F401
    Batch,
    EvalResult,
    Family,
    Instance,
    Job,
    Machine,
    Operation,
    Schedule,
    check_feasibility,
    evaluate,
    validate_instance,
)
