import itertools

import numpy as np
import pytest

from membin import _kernels
from membin.model import (AcceleratorSpec, Buffer, Constraints, CostModel, PackingSolution,
                          baseline_cost, bin_cost, solution_cost)
from membin.oracle import InstanceTooLarge, count_partitions, optimal_pack

from toys import random_spec


def set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for p in set_partitions(rest):
        yield [[first]] + p
        for k in range(len(p)):
            yield p[:k] + [[first] + p[k]] + p[k + 1:]


def brute_force(spec, cons, model):
    best = None
    for p in set_partitions(list(range(len(spec)))):
        if any(len(g) > cons.c_max for g in p):
            continue
        if cons.intra_layer_only and any(len({spec.buffers[i].layer_id for i in g}) > 1 for g in p):
            continue
        c = solution_cost(PackingSolution.from_groups(spec, p), model)
        best = c if best is None else min(best, c)
    return best


def test_two_half_brams_share_one(model):
    cost, sol = optimal_pack([Buffer(0, 18, 512), Buffer(1, 18, 512)], Constraints(c_max=2), model)
    assert cost == 1
    assert sol.canonical() == ((0, 1),)


def test_single_buffer(model):
    for w, d in [(32, 144), (1, 9000), (70, 3000)]:
        cost, _ = optimal_pack([(w, d)], Constraints(), model)
        assert cost == bin_cost([Buffer(0, w, d)], model).n_bram


def test_cmax_one_is_baseline(model):
    rng = np.random.default_rng(0)
    for _ in range(10):
        spec = random_spec(rng)
        assert optimal_pack(spec, Constraints(c_max=1), model)[0] == baseline_cost(spec, model)


def test_matches_independent_enumeration(model):
    rng = np.random.default_rng(42)
    for k in range(40):
        spec = random_spec(rng, 1, 7)
        cons = Constraints(c_max=int(rng.integers(1, 5)), intra_layer_only=bool(k % 2))
        cost, sol = optimal_pack(spec, cons, model)
        assert cost == brute_force(spec, cons, model)
        assert solution_cost(sol, model) == cost


def test_python_and_jit_agree(model):
    if not _kernels.HAVE_NUMBA:
        pytest.skip("numba missing")
    rng = np.random.default_rng(7)
    for _ in range(30):
        spec = random_spec(rng, 1, 9)
        args = (spec.widths, spec.depths, spec.layer_ids, 3, bool(rng.integers(2)),
                model.mode_widths, model.mode_depths)
        a = _kernels.oracle_search_py(*args)
        b = _kernels.oracle_search_jit(*args)
        assert a[0] == b[0] and a[2] == b[2]
        assert np.array_equal(a[1], b[1])


def test_partition_counts():
    # Bell numbers without a size limit, restricted counts with one
    assert [count_partitions(n, Constraints(c_max=99)) for n in range(1, 8)] == \
        [1, 2, 5, 15, 52, 203, 877]
    assert count_partitions(4, Constraints(c_max=2)) == 10


def test_renumbers_arbitrary_ids(model):
    cost, sol = optimal_pack([Buffer(7, 18, 512, 3), Buffer(2, 18, 512, 3)], Constraints(), model)
    assert cost == 1 and [b.id for b in sol.spec.buffers] == [0, 1]


def test_too_large():
    with pytest.raises(InstanceTooLarge):
        optimal_pack([(4, 10)] * 13)


def test_empty(model):
    assert optimal_pack([], Constraints(), model)[0] == 0
