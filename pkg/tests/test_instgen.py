"""Instance generator distributions, determinism, and codec round-trips."""

import numpy as np
import pytest

from pmbatch.core import check_feasibility, validate_instance
from pmbatch.instgen import (
    GenParams,
    ParseError,
    generate,
    instance_from_json,
    instance_name,
    instance_to_json,
    max_release,
    read_bks,
    schedule_from_json,
    schedule_to_json,
)

from .conftest import make_example_instance, make_reference_schedule


def test_job_and_family_counts():
    inst = generate(GenParams(num_ops=15, num_machines=4, seed=1))
    assert len(inst.jobs) == 5
    assert len(inst.families) == 3


def test_small_instance_has_one_job():
    inst = generate(GenParams(num_ops=2, num_machines=1, seed=5))
    assert len(inst.jobs) == 1


def test_max_release_formula():
    assert max_release(0.25, 400, 4) == 25
    assert max_release(0.5, 401, 4) == 51  # ceil(50.125)


def test_determinism_byte_identical():
    p = GenParams(num_ops=25, num_machines=4, release_factor=0.75,
                  eligibility_factor=0.7, job_assoc_factor=0.05, seed=123)
    a, b = instance_to_json(generate(p)), instance_to_json(generate(p))
    assert a == b
    c = instance_to_json(generate(GenParams(num_ops=25, num_machines=4,
                                            release_factor=0.75,
                                            eligibility_factor=0.7,
                                            job_assoc_factor=0.05, seed=124)))
    assert a != c


def test_generated_instances_valid():
    for seed in range(30):
        p = GenParams(num_ops=3 + seed % 20, num_machines=1 + seed % 4,
                      release_factor=0.25 + 0.25 * (seed % 3),
                      eligibility_factor=(0.7, 0.9)[seed % 2],
                      job_assoc_factor=(0.05, 0.15)[seed % 2], seed=seed)
        inst = generate(p)
        assert validate_instance(inst).ok
        for op in inst.operations:
            assert op.eligible
            assert all(inst.machine(k).q >= op.l for k in op.eligible)
            assert op.l % 10 == 0 and 10 <= op.l <= 100


def test_distribution_sanity():
    ps, ss = [], []
    for seed in range(20):
        inst = generate(GenParams(num_ops=500, num_machines=4, seed=seed))
        ps.extend(o.p for o in inst.operations)
        ss.extend(f.s for f in inst.families)
    assert len(ps) >= 10000
    assert abs(np.mean(ps) - 15.5) <= 0.05 * 15.5
    # family setups are few per instance; check over the pooled draws loosely
    assert 5 <= np.mean(ss) <= 10


def test_release_bounds():
    p = GenParams(num_ops=30, num_machines=3, release_factor=0.25, seed=7)
    inst = generate(p)
    total = sum(o.p + inst.family(o.family).s for o in inst.operations)
    mr = max_release(0.25, total, 3)
    assert all(0 <= o.r <= mr for o in inst.operations)
    assert all(0 <= m.r <= mr for m in inst.machines)


def test_instance_roundtrip_example():
    inst = make_example_instance()
    assert instance_from_json(instance_to_json(inst)) == inst


def test_instance_roundtrip_generated():
    inst = generate(GenParams(num_ops=50, num_machines=8, seed=11))
    assert instance_from_json(instance_to_json(inst)) == inst


def test_schedule_roundtrip():
    sched = make_reference_schedule()
    rt = schedule_from_json(schedule_to_json(sched))
    assert rt == sched
    assert check_feasibility(make_example_instance(), rt) == []


def test_empty_file_rejected():
    with pytest.raises(ParseError, match="empty"):
        instance_from_json("")


def test_duplicate_op_id_rejected():
    text = instance_to_json(make_example_instance())
    doc = text.replace('"id": 2,', '"id": 1,', 1)
    with pytest.raises(ParseError, match="1"):
        instance_from_json(doc)


def test_invalid_instance_surfaces_report():
    inst = make_example_instance()
    bad = instance_to_json(inst).replace('"q": 90', '"q": 5')
    with pytest.raises(ParseError, match="exceeds capacity"):
        instance_from_json(bad)


def test_bks_reader(tmp_path):
    f = tmp_path / "bks.csv"
    f.write_text("instance_name,twct\no15_m4_1_1,7634\no15_m4_1_2, 101\n")
    assert read_bks(f) == {"o15_m4_1_1": 7634, "o15_m4_1_2": 101}
    f.write_text("a,b,c\n")
    with pytest.raises(ParseError):
        read_bks(f)


def test_instance_name_scheme():
    assert instance_name(15, 4, 3, 2) == "o15_m4_3_2"


def test_bad_params_rejected():
    with pytest.raises(ValueError):
        GenParams(num_ops=0, num_machines=1)
    with pytest.raises(ValueError):
        GenParams(num_ops=5, num_machines=1, release_factor=1.5)
