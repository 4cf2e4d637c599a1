"""Command-line surface: gen, solve, eval, bench, gantt, export-lp.

Every solve-producing command verifies feasibility before emitting a
schedule.  Errors exit nonzero with a machine-readable category on stderr
(``error:<category>: <message>``).
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import dataclasses
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from . import core, instgen
from .construct import wmct_wavga
from .core import check_feasibility, evaluate, wspt_order
from .gantt import render_svg, render_text
from .instgen import GenParams, ParseError, generate, instance_name
from .mip import ModelConfig, build_model
from .search import Params, RunLog, grasp_math, ils_math, run_variant
from .subsolve import SolveRequest, SolveStatus, export_model, solve

__all__ = ["main", "rpd", "load_params", "METHODS"]

EXIT_PARSE = 3      # malformed input file
EXIT_IO = 4         # missing/unreadable file
EXIT_VALUE = 5      # invalid argument values
EXIT_INFEASIBLE = 6  # refused to emit an infeasible/unsolved result


class CliError(Exception):
    def __init__(self, category: str, message: str, code: int):
        super().__init__(message)
        self.category = category
        self.code = code


def rpd(twct_method: float, twct_bks: float) -> float:
    """Relative percentage deviation, two decimals; negative = improvement."""
    if twct_bks <= 0:
        raise ValueError(f"BKS must be positive, got {twct_bks}")
    return round(100.0 * (twct_method - twct_bks) / twct_bks, 2)


def load_params(path: Optional[str], time_limit: Optional[float] = None,
                node_limit: Optional[int] = None) -> Params:
    """Read key=value lines into Params; CLI limits override the file."""
    values: dict[str, object] = {}
    if path:
        field_types = {f.name: f for f in dataclasses.fields(Params)}
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
            line = raw.split("#")[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"{path}:{lineno}: expected key=value")
            key, _, val = line.partition("=")
            key = key.strip()
            if key not in field_types:
                raise ParseError(f"{path}:{lineno}: unknown parameter {key!r}")
            val = val.strip()
            if key in ("omega_max", "sub_node_limit"):
                values[key] = int(val)
            elif key == "sub_time_limit":
                values[key] = None if val.lower() == "none" else float(val)
            else:
                values[key] = float(val)
    if time_limit is not None:
        values["sub_time_limit"] = time_limit
    if node_limit is not None:
        values["sub_node_limit"] = node_limit
    return Params(**values)


def _read_instance(path: str) -> core.Instance:
    return instgen.read_instance(path)


def _read_schedule(path: str) -> core.Schedule:
    return instgen.read_schedule(path)


# -------------------------------------------------------------------- solve

METHODS = ("construct", "mip-wspt", "mip-s",
           "ils1", "ils2", "ils3", "grasp1", "grasp2", "grasp3")


def _solve_once(inst: core.Instance, method: str, seed: int,
                params: Params, mip_time_limit: float
                ) -> tuple[core.Schedule, Optional[RunLog]]:
    if method == "construct":
        return wmct_wavga(inst), None
    if method in ("mip-wspt", "mip-s"):
        kind = method.split("-", 1)[1]
        prec = wspt_order(inst) if kind == "wspt" else None
        model = build_model(inst, ModelConfig(kind), prec)
        warm = wmct_wavga(inst)
        res = solve(SolveRequest(model, warm_start=warm,
                                 time_limit=mip_time_limit,
                                 node_limit=params.sub_node_limit))
        if res.incumbent is None:
            raise CliError("infeasible",
                           f"no feasible solution found ({res.status.value})",
                           EXIT_INFEASIBLE)
        return res.incumbent, None
    family, variant = method[:-1], int(method[-1])
    sched, log = run_variant(inst, family, variant, params, seed)
    return sched, log


def cmd_gen(args) -> int:
    gp = GenParams(args.ops, args.machines,
                   release_factor=args.release_factor,
                   eligibility_factor=args.eligibility_factor,
                   job_assoc_factor=args.assoc_factor,
                   seed=args.seed)
    out = Path(args.out)
    if args.count == 1 and out.suffix == ".json":
        inst = generate(gp)
        instgen.write_instance(inst, out)
        print(out)
        return 0
    out.mkdir(parents=True, exist_ok=True)
    for rep in range(1, args.count + 1):
        inst = generate(dataclasses.replace(gp, seed=args.seed + rep - 1))
        name = instance_name(args.ops, args.machines, args.index, rep)
        path = out / f"{name}.json"
        instgen.write_instance(inst, path)
        print(path)
    return 0


def cmd_solve(args) -> int:
    inst = _read_instance(args.instance)
    params = load_params(args.params_file, args.time_limit, args.node_limit)
    t0 = time.perf_counter()
    sched, _ = _solve_once(inst, args.method, args.seed, params,
                           args.time_limit if args.time_limit else 60.0)
    elapsed = time.perf_counter() - t0
    violations = check_feasibility(inst, sched)
    if violations:
        raise CliError("infeasible",
                       "refusing to emit an infeasible schedule: "
                       + "; ".join(v.message for v in violations),
                       EXIT_INFEASIBLE)
    res = evaluate(inst, sched)
    print(f"method {args.method} twct {res.twct} cmax {res.cmax} "
          f"time {elapsed:.2f}s")
    if args.out:
        instgen.write_schedule(sched, args.out)
        print(args.out)
    return 0


def cmd_eval(args) -> int:
    inst = _read_instance(args.instance)
    sched = _read_schedule(args.schedule)
    violations = check_feasibility(inst, sched)
    if violations:
        for v in violations:
            print(f"violation {v.kind}: {v.message}", file=sys.stderr)
        raise CliError("infeasible", "schedule is infeasible",
                       EXIT_INFEASIBLE)
    res = evaluate(inst, sched)
    for j, c in sorted(res.job_completion.items()):
        print(f"job {j} completion {c}")
    print(f"twct {res.twct} cmax {res.cmax}")
    return 0


def cmd_gantt(args) -> int:
    inst = _read_instance(args.instance)
    sched = _read_schedule(args.schedule)
    try:
        text = (render_svg(inst, sched) if args.format == "svg"
                else render_text(inst, sched, width=args.width))
    except ValueError as exc:
        raise CliError("infeasible", str(exc), EXIT_INFEASIBLE)
    if args.out:
        Path(args.out).write_text(text + "\n")
        print(args.out)
    else:
        print(text)
    return 0


def cmd_export_lp(args) -> int:
    inst = _read_instance(args.instance)
    prec = wspt_order(inst) if args.formulation == "wspt" else None
    model = build_model(inst, ModelConfig(args.formulation), prec)
    export_model(model, args.out)
    print(args.out)
    return 0


# -------------------------------------------------------------------- bench

def _bench_one(job: tuple) -> dict:
    (inst_path, method, seed, params_kwargs, mip_limit, deterministic) = job
    inst = instgen.read_instance(inst_path)
    params = Params(**params_kwargs)
    t0 = time.perf_counter()
    sched, log = _solve_once(inst, method, seed, params, mip_limit)
    elapsed = time.perf_counter() - t0
    if check_feasibility(inst, sched):
        # plain exception: this may cross a process-pool boundary
        raise RuntimeError(f"{method} produced an infeasible schedule")
    twct = evaluate(inst, sched).twct
    curve = log.best_curve() if log is not None else [(elapsed, twct)]
    return {
        "instance": Path(inst_path).stem,
        "method": method,
        "seed": seed,
        "twct": twct,
        "time": None if deterministic else elapsed,
        "curve": [(None if deterministic else t, v) for t, v in curve],
    }


def _group_of(instance: str) -> str:
    parts = instance.split("_")
    return "_".join(parts[:2]) if len(parts) >= 2 else instance


def cmd_bench(args) -> int:
    import glob as globmod
    paths = []
    for pat in args.instances:
        if Path(pat).exists():
            paths.append(pat)
        else:
            paths.extend(sorted(globmod.glob(pat)))
    if not paths:
        raise CliError("io", f"no instances match {args.instances}", EXIT_IO)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in METHODS:
            raise CliError("value",
                           f"unknown method {m!r}; choose from "
                           f"{', '.join(METHODS)}", EXIT_VALUE)
    if args.runs < 1:
        raise CliError("value", "--runs must be >= 1", EXIT_VALUE)
    params = load_params(args.params_file, args.time_limit, args.node_limit)
    if args.deterministic:
        params = dataclasses.replace(
            params, sub_time_limit=None,
            sub_node_limit=(params.sub_node_limit
                            if params.sub_node_limit is not None else 20000))
    params_kwargs = dataclasses.asdict(params)
    bks = instgen.read_bks(args.bks) if args.bks else None

    mip_limit = (None if args.deterministic
                 else (args.time_limit if args.time_limit else 60.0))
    jobs = [(path, method, args.seed + run, params_kwargs, mip_limit,
             args.deterministic)
            for path in paths for method in methods
            for run in range(args.runs)]
    if args.workers > 1:
        with concurrent.futures.ProcessPoolExecutor(args.workers) as pool:
            rows = list(pool.map(_bench_one, jobs))
    else:
        rows = [_bench_one(job) for job in jobs]
    rows.sort(key=lambda r: (r["instance"], r["method"], r["seed"]))

    # reference per instance: BKS when available, else best found in batch
    ref: dict[str, int] = {}
    ref_source: dict[str, str] = {}
    for row in rows:
        name = row["instance"]
        if bks and name in bks:
            ref[name] = bks[name]
            ref_source[name] = "bks"
        elif name not in ref or row["twct"] < ref[name]:
            ref[name] = row["twct"]
            ref_source.setdefault(name, "best-of-batch")

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def fmt_time(t):
        return "" if t is None else f"{t:.3f}"

    with open(out_dir / "runs.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["instance", "method", "seed", "twct", "time_s",
                    "rpd", "reference", "reference_source"])
        for row in rows:
            name = row["instance"]
            w.writerow([name, row["method"], row["seed"], row["twct"],
                        fmt_time(row["time"]),
                        f"{rpd(row['twct'], ref[name]):.2f}",
                        ref[name], ref_source[name]])

    groups: dict[tuple[str, str], list[dict]] = {}
    for row in rows:
        groups.setdefault((_group_of(row["instance"]), row["method"]),
                          []).append(row)
    with open(out_dir / "aggregate.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["group", "method", "runs", "mean_rpd", "mean_time_s",
                    "reference_source"])
        for (group, method), rws in sorted(groups.items()):
            mean_rpd = sum(rpd(r["twct"], ref[r["instance"]])
                           for r in rws) / len(rws)
            times = [r["time"] for r in rws if r["time"] is not None]
            mean_t = f"{sum(times) / len(times):.3f}" if times else ""
            sources = sorted({ref_source[r["instance"]] for r in rws})
            w.writerow([group, method, len(rws), f"{mean_rpd:.2f}", mean_t,
                        "+".join(sources)])

    with open(out_dir / "evolution.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["instance", "method", "seed", "step", "time_s", "twct"])
        for row in rows:
            for step, (t, v) in enumerate(row["curve"]):
                w.writerow([row["instance"], row["method"], row["seed"],
                            step, fmt_time(t), v])

    print(out_dir / "runs.csv")
    print(out_dir / "aggregate.csv")
    print(out_dir / "evolution.csv")
    return 0


# ------------------------------------------------------------------- parser

def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0,
                        help="base random seed (default 0)")
    common.add_argument("--time-limit", type=float, default=None,
                        help="wall budget: per sub-solve for matheuristics, "
                             "total for mip methods")
    common.add_argument("--node-limit", type=int, default=None,
                        help="node budget per sub-solve (deterministic mode)")
    common.add_argument("--params-file", default=None,
                        help="key=value file overriding search parameters")

    ap = argparse.ArgumentParser(
        prog="pmbatch",
        description="Batch scheduling on parallel machines with family "
                    "setups, minimizing total weighted completion time.")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common],
                       help="generate random instances")
    g.add_argument("--ops", type=int, required=True)
    g.add_argument("--machines", type=int, required=True)
    g.add_argument("--release-factor", type=float, default=0.5)
    g.add_argument("--eligibility-factor", type=float, default=0.9)
    g.add_argument("--assoc-factor", type=float, default=0.15)
    g.add_argument("--count", type=int, default=1,
                   help="number of replicates (out becomes a directory)")
    g.add_argument("--index", type=int, default=1,
                   help="configuration index used in instance names")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", parents=[common], help="solve an instance")
    s.add_argument("instance")
    s.add_argument("--method", choices=METHODS, default="ils3")
    s.add_argument("--out", default=None, help="write the schedule as JSON")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("eval", parents=[common],
                       help="evaluate a schedule against an instance")
    e.add_argument("instance")
    e.add_argument("schedule")
    e.set_defaults(func=cmd_eval)

    b = sub.add_parser("bench", parents=[common],
                       help="run a benchmark batch and write CSV reports")
    b.add_argument("--instances", nargs="+", required=True,
                   help="instance files or glob patterns")
    b.add_argument("--methods", default="construct,ils3",
                   help="comma-separated method list")
    b.add_argument("--runs", type=int, default=10,
                   help="runs per instance/method (default 10)")
    b.add_argument("--bks", default=None, help="best-known-solutions CSV")
    b.add_argument("--out-dir", required=True)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--deterministic", action="store_true",
                   help="node-budget sub-solves and blank wall times for "
                        "byte-identical reports")
    b.set_defaults(func=cmd_bench)

    ga = sub.add_parser("gantt", parents=[common], help="render a schedule")
    ga.add_argument("instance")
    ga.add_argument("schedule")
    ga.add_argument("--format", choices=("text", "svg"), default="text")
    ga.add_argument("--width", type=int, default=100)
    ga.add_argument("--out", default=None)
    ga.set_defaults(func=cmd_gantt)

    x = sub.add_parser("export-lp", parents=[common],
                       help="write a model in CPLEX-LP format")
    x.add_argument("instance")
    x.add_argument("--formulation", choices=("wspt", "s"), default="s")
    x.add_argument("--out", required=True)
    x.set_defaults(func=cmd_export_lp)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error:{exc.category}: {exc}", file=sys.stderr)
        return exc.code
    except ParseError as exc:
        print(f"error:parse: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except FileNotFoundError as exc:
        print(f"error:io: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error:value: {exc}", file=sys.stderr)
        return EXIT_VALUE


if __name__ == "__main__":
    sys.exit(main())
