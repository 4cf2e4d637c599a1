"""CLI commands, RPD arithmetic, reports, and the chart renderers."""

import json

import pytest

from pmbatch import instgen
from pmbatch.cli import EXIT_INFEASIBLE, EXIT_VALUE, load_params, main, rpd
from pmbatch.core import Batch, Schedule
from pmbatch.gantt import layout, render_svg, render_text
from pmbatch.search import Params
from pmbatch.subsolve import parse_lp


# ---------------------------------------------------------------------- rpd

def test_rpd_values():
    assert rpd(7634, 7634) == 0.00
    assert rpd(90, 100) == -10.00
    assert rpd(11096, 10000) == 10.96


def test_rpd_rejects_nonpositive_bks():
    with pytest.raises(ValueError, match="positive"):
        rpd(100, 0)
    with pytest.raises(ValueError, match="positive"):
        rpd(100, -5)


# ------------------------------------------------------------------- params

def test_load_params_file(tmp_path):
    path = tmp_path / "p.cfg"
    path.write_text("rho = 0.4\nomega_max=3\nsub_time_limit=none\n"
                    "# comment\nsub_node_limit = 123\n")
    p = load_params(str(path))
    assert p == Params(rho=0.4, omega_max=3, sub_time_limit=None,
                       sub_node_limit=123)
    # CLI limits override the file
    p2 = load_params(str(path), time_limit=0.5, node_limit=9)
    assert p2.sub_time_limit == 0.5 and p2.sub_node_limit == 9


def test_load_params_unknown_key(tmp_path):
    path = tmp_path / "p.cfg"
    path.write_text("bogus=1\n")
    with pytest.raises(instgen.ParseError, match="bogus"):
        load_params(str(path))


# ------------------------------------------------------------------- gantt

def test_layout_machine4_batches(example_instance, reference_schedule):
    lay = layout(example_instance, reference_schedule)
    m4 = [s for s in lay.segments if s.machine == 4]
    assert [(s.kind, s.family, s.op) for s in m4] == [
        ("setup", 1, None), ("op", 1, 14),
        ("setup", 2, None), ("op", 2, 6),
        ("setup", 3, None), ("op", 3, 15), ("op", 3, 7)]
    assert lay.cmax == 90 and lay.twct == 7634
    assert lay.job_completions == {1: 35, 2: 60, 3: 68, 4: 54, 5: 90}


def test_renderers_share_boundaries(example_instance, reference_schedule):
    text = render_text(example_instance, reference_schedule)
    svg = render_svg(example_instance, reference_schedule)
    assert text.count("\n") + 1 == len(example_instance.machines) + 3
    assert "J5:90" in text and "7634" in text
    assert svg.startswith("<svg") and svg.endswith("</svg>")
    assert "J5=90" in svg and "twct 7634" in svg
    # one rect per segment
    lay = layout(example_instance, reference_schedule)
    assert svg.count("<rect") == len(lay.segments)


def test_single_op_rendering():
    from .test_core import single_op_instance
    inst = single_op_instance()
    sched = Schedule(((Batch(1, (1,)),),))
    lay = layout(inst, sched)
    assert [s.kind for s in lay.segments] == ["setup", "op"]
    assert "M1" in render_text(inst, sched)


def test_gantt_rejects_infeasible(example_instance, reference_schedule):
    # drop one batch -> coverage violation
    broken = Schedule(reference_schedule.machines[:3]
                      + ((reference_schedule.machines[3][0],),))
    with pytest.raises(ValueError, match="infeasible"):
        layout(example_instance, broken)


# ------------------------------------------------------------ CLI commands

@pytest.fixture(scope="module")
def inst_file(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    path = d / "inst.json"
    assert main(["gen", "--ops", "6", "--machines", "2", "--seed", "4",
                 "--out", str(path)]) == 0
    return path


def test_gen_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["gen", "--ops", "7", "--machines", "2", "--seed", "11"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_gen_batch_naming(tmp_path):
    out = tmp_path / "set"
    assert main(["gen", "--ops", "5", "--machines", "2", "--count", "3",
                 "--index", "2", "--out", str(out)]) == 0
    names = sorted(p.name for p in out.glob("*.json"))
    assert names == ["o5_m2_2_1.json", "o5_m2_2_2.json", "o5_m2_2_3.json"]


def test_solve_eval_roundtrip(inst_file, tmp_path, capsys):
    sched_file = tmp_path / "s.json"
    assert main(["solve", str(inst_file), "--method", "construct",
                 "--out", str(sched_file)]) == 0
    assert main(["eval", str(inst_file), str(sched_file)]) == 0
    out = capsys.readouterr().out
    assert "twct" in out and "cmax" in out


def test_solve_matheuristic_improves(inst_file, tmp_path, capsys):
    f1 = tmp_path / "c.json"
    f2 = tmp_path / "g.json"
    assert main(["solve", str(inst_file), "--method", "construct",
                 "--out", str(f1)]) == 0
    twct_c = int(capsys.readouterr().out.split("twct ")[1].split()[0])
    assert main(["solve", str(inst_file), "--method", "grasp2",
                 "--time-limit", "0.05", "--node-limit", "3000",
                 "--out", str(f2)]) == 0
    twct_g = int(capsys.readouterr().out.split("twct ")[1].split()[0])
    assert twct_g <= twct_c


def test_solve_mip_method(inst_file, capsys):
    assert main(["solve", str(inst_file), "--method", "mip-s",
                 "--node-limit", "200000"]) == 0
    assert "twct" in capsys.readouterr().out


def test_eval_rejects_infeasible(inst_file, tmp_path, capsys):
    inst = instgen.read_instance(inst_file)
    # all ops crammed into one oversized batch on machine 1
    bad = Schedule(((Batch(inst.op(1).family,
                           tuple(o.id for o in inst.operations)),),
                    ()))
    bad_file = tmp_path / "bad.json"
    instgen.write_schedule(bad, bad_file)
    assert main(["eval", str(inst_file), str(bad_file)]) == EXIT_INFEASIBLE
    assert "error:infeasible" in capsys.readouterr().err


def test_gantt_command(inst_file, tmp_path, capsys):
    sched_file = tmp_path / "s.json"
    main(["solve", str(inst_file), "--method", "construct",
          "--out", str(sched_file)])
    capsys.readouterr()
    assert main(["gantt", str(inst_file), str(sched_file)]) == 0
    assert "M1" in capsys.readouterr().out
    svg_file = tmp_path / "g.svg"
    assert main(["gantt", str(inst_file), str(sched_file), "--format", "svg",
                 "--out", str(svg_file)]) == 0
    assert svg_file.read_text().startswith("<svg")


def test_export_lp_command(inst_file, tmp_path):
    lp = tmp_path / "m.lp"
    assert main(["export-lp", str(inst_file), "--formulation", "wspt",
                 "--out", str(lp)]) == 0
    parsed = parse_lp(lp)
    assert any(v.startswith("X_") for v in parsed.binaries)


def test_unknown_method_rejected(inst_file, tmp_path, capsys):
    code = main(["bench", "--instances", str(inst_file),
                 "--methods", "magic", "--runs", "1",
                 "--out-dir", str(tmp_path / "r")])
    assert code == EXIT_VALUE
    assert "error:value" in capsys.readouterr().err


def test_missing_instance(tmp_path, capsys):
    code = main(["bench", "--instances", str(tmp_path / "nope*.json"),
                 "--runs", "1", "--out-dir", str(tmp_path / "r")])
    assert code == 4
    assert "error:io" in capsys.readouterr().err


# -------------------------------------------------------------------- bench

def _gen_grid(tmp_path):
    files = []
    for ops, mach, seed in ((5, 2, 1), (6, 2, 2)):
        p = tmp_path / f"o{ops}_m{mach}_1_1.json"
        main(["gen", "--ops", str(ops), "--machines", str(mach),
              "--seed", str(seed), "--out", str(p)])
        files.append(p)
    return files


def test_bench_report_shape(tmp_path, capsys):
    files = _gen_grid(tmp_path)
    out = tmp_path / "rep"
    assert main(["bench", "--instances", str(tmp_path / "o*_m*.json"),
                 "--methods", "construct,ils1", "--runs", "2",
                 "--deterministic", "--node-limit", "2000",
                 "--out-dir", str(out)]) == 0
    runs = (out / "runs.csv").read_text().splitlines()
    assert runs[0] == ("instance,method,seed,twct,time_s,rpd,"
                       "reference,reference_source")
    assert len(runs) == 1 + 2 * 2 * 2   # 2 instances x 2 methods x 2 runs
    agg = (out / "aggregate.csv").read_text().splitlines()
    assert len(agg) == 1 + 2 * 2        # 2 groups x 2 methods
    assert all("best-of-batch" in line for line in agg[1:])
    evo = (out / "evolution.csv").read_text().splitlines()
    assert evo[0] == "instance,method,seed,step,time_s,twct"
    assert len(evo) > 1
    # deterministic mode blanks wall times
    assert all(line.split(",")[4] == "" for line in runs[1:])


def test_bench_deterministic_byte_identical(tmp_path):
    _gen_grid(tmp_path)
    outs = []
    for name in ("r1", "r2"):
        out = tmp_path / name
        assert main(["bench", "--instances", str(tmp_path / "o*_m*.json"),
                     "--methods", "grasp1", "--runs", "2",
                     "--deterministic", "--node-limit", "1500",
                     "--out-dir", str(out)]) == 0
        outs.append(out)
    for fname in ("runs.csv", "aggregate.csv", "evolution.csv"):
        assert (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes()


def test_bench_with_bks_and_workers(tmp_path):
    files = _gen_grid(tmp_path)
    bks = tmp_path / "bks.csv"
    bks.write_text("instance,twct\n" + "\n".join(
        f"{f.stem},1000" for f in files) + "\n")
    out = tmp_path / "rep"
    assert main(["bench", "--instances", *map(str, files),
                 "--methods", "construct", "--runs", "1",
                 "--deterministic", "--bks", str(bks),
                 "--workers", "2", "--out-dir", str(out)]) == 0
    lines = (out / "runs.csv").read_text().splitlines()[1:]
    for line in lines:
        cells = line.split(",")
        assert cells[6] == "1000" and cells[7] == "bks"
        assert float(cells[5]) == rpd(int(cells[3]), 1000)
