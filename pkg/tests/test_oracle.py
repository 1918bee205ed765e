import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fairclust.geometry import Dataset
from fairclust.lp import GE, LE, LinearProgram
from fairclust.matroid import PartitionMatroid
from fairclust.matroid_fl import FLInstance, Infeasible, solve_lp_relaxation
from fairclust.oracle import (MAX_FACILITIES, TooLarge, oracle_fair_clustering, oracle_grid_min,
                              oracle_matroid_fl)

from conftest import datasets, random_dataset, random_fl_instance, two_clusters


def test_k_equals_n_costs_zero():
    ds = Dataset([5, 6, 7], coords=[[0.0], [1.0], [4.0]])
    res = oracle_fair_clustering(ds, 3, 1.0, p=2)
    assert res.value == 0.0
    assert set(res.witness) == {5, 6, 7}


def test_alpha_below_threshold_is_infeasible_marker():
    ds = Dataset(range(4), coords=[[0.0], [1.0], [10.0], [11.0]])
    res = oracle_fair_clustering(ds, 1, 0.5)
    assert not res.feasible
    assert res.value is None and res.witness is None
    assert res.to_dict()["feasible"] is False
    assert res.search_space == 4


def test_two_cluster_optimum():
    res = oracle_fair_clustering(two_clusters(), 2, 1.0, p=2)
    # one center per triangle at the right angle: two unit legs each
    assert res.value == 4.0
    assert sorted(res.witness) == [0, 3]
    assert oracle_fair_clustering(two_clusters(), 2, 1.0, objective="center").value == 1.0


def test_witness_reproduces_value():
    rng = np.random.default_rng(3)
    for _ in range(30):
        n = int(rng.integers(3, 9))
        ds = random_dataset(rng, n, weights=True)
        k = int(rng.integers(1, min(n, 4) + 1))
        res = oracle_fair_clustering(ds, k, 2.0, p=2)
        if res.feasible:
            near = ds.dist[:, [ds.index[c] for c in res.witness]].min(axis=1)
            assert res.value == pytest.approx(float(ds.weights @ near ** 2), rel=1e-12)


def test_size_caps():
    ds = Dataset(range(17), coords=np.arange(17.0)[:, None])
    with pytest.raises(TooLarge):
        oracle_fair_clustering(ds, 2, 1.0)
    with pytest.raises(TooLarge):
        oracle_fair_clustering(ds.subset(range(8)), 5, 1.0)
    xy = np.zeros((MAX_FACILITIES + 1, 2))
    xy[:, 0] = np.arange(len(xy))
    big = FLInstance.from_coordinates(xy, xy[:1], np.zeros(len(xy)), np.ones(1), 1.0,
                                      PartitionMatroid([list(range(len(xy)))], [1]))
    with pytest.raises(TooLarge):
        oracle_matroid_fl(big)


@given(datasets(min_n=3, max_n=7), st.data())
def test_permutation_invariance(ds, data):
    k = data.draw(st.integers(1, min(ds.n, 3)))
    alpha = data.draw(st.sampled_from([1.0, 1.5, 2.0]))
    perm = data.draw(st.permutations(range(ds.n)))
    shuffled = Dataset([ds.ids[i] + 100 for i in perm], coords=ds.coords[list(perm)])
    a = oracle_fair_clustering(ds, k, alpha, p=2)
    b = oracle_fair_clustering(shuffled, k, alpha, p=2)
    assert a.feasible == b.feasible
    if a.feasible:
        assert a.value == pytest.approx(b.value, rel=1e-12, abs=1e-15)


def test_matroid_fl_trivial_cases():
    xy = np.array([[0.0, 0.0], [3.0, 4.0]])
    free = FLInstance.from_coordinates(xy, xy, np.zeros(2), np.zeros(2), 1.0, PartitionMatroid([[0, 1]], [2]))
    assert oracle_matroid_fl(free).value == 0.0
    one = FLInstance.from_coordinates(xy, xy, np.array([2.0, 9.0]), np.ones(2), 2.0,
                                      PartitionMatroid([[0], [1]], [1, 0]))
    res = oracle_matroid_fl(one)
    assert res.witness == (0,) and res.value == 2.0 + 25.0
    none = FLInstance.from_coordinates(xy, xy, np.zeros(2), np.ones(2), 1.0, PartitionMatroid([[0, 1]], [0]))
    assert not oracle_matroid_fl(none).feasible


def test_lp_relaxation_lower_bounds_oracle():
    rng = np.random.default_rng(5)
    for _ in range(100):
        inst = random_fl_instance(rng, nf=(2, 10), nc=(1, 8))
        opt = oracle_matroid_fl(inst)
        z = solve_lp_relaxation(inst).z
        assert z <= opt.value * (1 + 1e-9) + 1e-12
        S = list(inst.facility_pos(opt.witness))
        assert opt.value == pytest.approx(inst.opening[S].sum() + inst.demand @ inst.cfp[:, S].min(axis=1))


def test_matroid_fl_matches_explicit_enumeration():
    rng = np.random.default_rng(6)
    for _ in range(20):
        inst = random_fl_instance(rng, nf=(2, 7), nc=(1, 6))
        best = min(inst.opening[list(S)].sum() + inst.demand @ inst.cfp[:, list(S)].min(axis=1)
                   for r in range(1, inst.nf + 1) for S in itertools.combinations(range(inst.nf), r)
                   if inst.matroid.is_independent(inst.facility_ids[j] for j in S))
        assert oracle_matroid_fl(inst).value == pytest.approx(best, rel=1e-12)


def test_grid_box_example():
    lp = LinearProgram()
    for _ in range(2):
        lp.add_variable(lo=0, hi=1, cost=1.0)
    res = oracle_grid_min(lp, "unit")
    assert res.value == 0.0 and res.witness.tolist() == [0.0, 0.0]
    assert res.search_space == 4


def test_grid_half_points_and_infeasible():
    lp = LinearProgram()
    for c in (1.0, 3.0):
        lp.add_variable(lo=0, hi=1, cost=c)
    lp.add_constraint({0: 1.0, 1: 1.0}, GE, 0.5)
    assert oracle_grid_min(lp, "half").value == 0.5
    assert oracle_grid_min(lp, "unit").value == 1.0
    lp.add_constraint({0: 1.0, 1: 1.0}, LE, 0.5)
    with pytest.raises(Infeasible):
        oracle_grid_min(lp, "unit")
    assert oracle_grid_min(lp, "half").witness.tolist() == [0.5, 0.0]


def test_grid_caps():
    lp = LinearProgram()
    for _ in range(13):
        lp.add_variable(lo=0, hi=1)
    with pytest.raises(TooLarge):
        oracle_grid_min(lp, "unit")
    lp = LinearProgram()
    lp.add_variable(lo=0)
    with pytest.raises(TooLarge):
        oracle_grid_min(lp, "half")
