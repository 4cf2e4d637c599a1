"""Shared fixtures: the 15-operation worked example and its reference schedule."""

import pytest

from pmbatch.core import Batch, Family, Instance, Job, Machine, Operation, Schedule


def _op(i, p, r, f, l, eligible):
    return Operation(id=i, p=p, r=r, l=l, family=f,
                     eligible=frozenset(eligible))


def make_example_instance() -> Instance:
    """15 ops / 5 jobs / 4 machines / 3 families golden instance."""
    ops = (
        _op(1, 23, 5, 1, 90, {1, 4}),
        _op(2, 5, 17, 1, 90, {1, 3, 4}),
        _op(3, 25, 16, 3, 70, {2, 3, 4}),
        _op(4, 10, 9, 2, 50, {1, 2, 3, 4}),
        _op(5, 4, 18, 1, 60, {1, 2, 3, 4}),
        _op(6, 8, 17, 2, 80, {2, 4}),
        _op(7, 29, 15, 3, 60, {1, 2, 3, 4}),
        _op(8, 8, 5, 3, 0, {2}),
        _op(9, 17, 9, 3, 40, {1, 2, 4}),
        _op(10, 25, 0, 1, 40, {1, 2, 3, 4}),
        _op(11, 4, 3, 1, 30, {1, 2, 3, 4}),
        _op(12, 15, 0, 1, 20, {1, 3, 4}),
        _op(13, 7, 16, 2, 60, {3, 4}),
        _op(14, 7, 7, 1, 90, {1, 4}),
        _op(15, 18, 15, 3, 20, {4}),
    )
    jobs = (
        Job(1, 46, frozenset({4, 6, 9, 12})),
        Job(2, 40, frozenset({3, 8, 10})),
        Job(3, 39, frozenset({3, 5, 6, 11, 12, 13, 15})),
        Job(4, 13, frozenset({3, 14})),
        Job(5, 3, frozenset({1, 2, 7, 9, 10, 14})),
    )
    machines = (
        Machine(1, 13, 90),
        Machine(2, 0, 80),
        Machine(3, 0, 90),
        Machine(4, 1, 90),
    )
    families = (Family(1, 5), Family(2, 7), Family(3, 9))
    return Instance(ops, jobs, machines, families)


def make_reference_schedule() -> Schedule:
    """Feasible reference schedule of the golden instance (TWCT = 7634)."""
    return Schedule((
        (Batch(2, (4,)), Batch(1, (10,)), Batch(1, (1,))),
        (Batch(3, (9, 8)), Batch(1, (11,)), Batch(1, (5,))),
        (Batch(1, (12,)), Batch(3, (3,)), Batch(2, (13,)), Batch(1, (2,))),
        (Batch(1, (14,)), Batch(2, (6,)), Batch(3, (15, 7))),
    ))


@pytest.fixture(scope="session")
def example_instance() -> Instance:
    return make_example_instance()


@pytest.fixture(scope="session")
def reference_schedule() -> Schedule:
    return make_reference_schedule()


GOLDEN_JOB_COMPLETIONS = {1: 35, 2: 60, 3: 68, 4: 54, 5: 90}
GOLDEN_TWCT = 7634
GOLDEN_CMAX = 90
