import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fairclust.geometry import (CostParams, Dataset, DatasetError, ParseError, clustering_cost, distance,
                                format_dataset, kcenter_cost, parse_dataset, power_triangle_bound,
                                sum_power_bound, triangle_violation, two_hop_bound)

from conftest import datasets


def test_distance_identity_and_pythagoras():
    ds = Dataset([7, 9], coords=np.array([[0.0, 0.0], [3.0, 4.0]]))
    assert distance(7, 7, ds) == 0
    assert distance(7, 9, ds) == 5.0
    assert distance(9, 7, ds) == 5.0


def test_distance_explicit_matrix_readback():
    D = np.array([[0, 7, 5], [7, 0, 4], [5, 4, 0]], dtype=float)
    ds = Dataset([1, 2, 3], explicit_distances=D)
    assert distance(1, 2, ds) == 7
    assert ds.metric_kind == "explicit-matrix"


def test_distance_unknown_id():
    ds = Dataset([1], coords=[[0.0]])
    with pytest.raises(KeyError):
        distance(1, 2, ds)


def test_clustering_cost_examples():
    ds = Dataset([0, 1], coords=np.array([[0.0], [2.0]]))
    assert clustering_cost(ds, {0}, CostParams(p=2)) == 4.0
    assert clustering_cost(ds, {0, 1}, 3.0) == 0.0
    with pytest.raises(ValueError):
        clustering_cost(ds, set(), 1.0)


def test_clustering_cost_five_points_frozen():
    # per-point brute-force minimum, computed with math.dist
    pts = [(0.1, 0.2), (0.8, 0.3), (0.4, 0.9), (0.6, 0.5), (0.95, 0.05)]
    ds = Dataset(range(5), coords=np.array(pts))
    assert clustering_cost(ds, {1, 3}, 1.0) == pytest.approx(1.321856379726753, rel=1e-12)


def test_weighted_cost_and_kcenter():
    ds = Dataset([0, 1, 2], coords=[[0.0], [1.0], [3.0]], weights=[1.0, 2.0, 0.5])
    assert clustering_cost(ds, {0}, 2.0) == pytest.approx(2 * 1 + 0.5 * 9)
    assert kcenter_cost(ds, {0}) == 3.0


def test_cost_params_validation():
    with pytest.raises(ValueError):
        CostParams(p=0.5)
    with pytest.raises(ValueError):
        CostParams(lam=0)


def test_power_triangle_bound_examples():
    assert power_triangle_bound(1.5, 2.5, 1, 3) == 4.0
    assert power_triangle_bound(1, 1, 2, 1) == 4.0
    assert power_triangle_bound(1, 1, 2, 7) == pytest.approx(9.142857142857142, rel=1e-12)


def test_two_hop_bound_examples():
    assert two_hop_bound(1, 1, 1, 1) == 3
    assert two_hop_bound(1, 1, 1, 2) == 9
    # decimal arithmetic at 50 digits
    assert two_hop_bound(0.3, 1.7, 2.2, 3) == pytest.approx(140.292, rel=1e-12)


@given(datasets(min_n=3, max_n=8), st.sampled_from([1, 1.5, 2, 3]), st.sampled_from([0.5, 1, 2, 7]), st.data())
def test_power_triangle_inequality_holds(ds, p, lam, data):
    u, w, v = (data.draw(st.integers(0, ds.n - 1)) for _ in range(3))
    D = ds.dist
    assert D[u, v] ** p <= power_triangle_bound(D[u, w], D[w, v], p, lam) * (1 + 1e-9)


@given(datasets(min_n=4, max_n=8), st.sampled_from([1, 1.5, 2, 3]), st.data())
def test_two_hop_inequality_holds(ds, p, data):
    u, w, z, v = (data.draw(st.integers(0, ds.n - 1)) for _ in range(4))
    D = ds.dist
    assert D[u, v] ** p <= two_hop_bound(D[u, w], D[w, z], D[z, v], p) * (1 + 1e-9)


@given(st.floats(0, 10), st.lists(st.floats(0, 10), min_size=1, max_size=5),
       st.sampled_from([1, 1.5, 2, 3]), st.sampled_from([0.5, 1, 2, 7]))
def test_sum_power_bound(x, ys, p, lam):
    assert (x + sum(ys)) ** p <= sum_power_bound(x, ys, p, lam) * (1 + 1e-9) + 1e-12


@given(datasets(min_n=2, max_n=9), st.data())
def test_cost_monotone_under_center_growth(ds, data):
    C = data.draw(st.sets(st.integers(0, ds.n - 1), min_size=1))
    extra = data.draw(st.integers(0, ds.n - 1))
    for p in (1, 2, 3):
        assert clustering_cost(ds, C | {extra}, p) <= clustering_cost(ds, C, p)


# ---------------------------------------------------------------- datasets / IO

def test_dataset_rejects_bad_input():
    with pytest.raises(DatasetError):
        Dataset([1, 1], coords=[[0.0], [1.0]])
    with pytest.raises(DatasetError):
        Dataset([], coords=np.zeros((0, 2)))
    with pytest.raises(DatasetError):
        Dataset([1, 2], coords=[[0.0], [1.0]], weights=[1.0, -1.0])
    with pytest.raises(DatasetError):
        Dataset([1, 2], explicit_distances=[[0, 1], [2, 0]])
    with pytest.raises(DatasetError):
        Dataset([1, 2, 3], explicit_distances=[[0, 1, 5], [1, 0, 1], [5, 1, 0]])


def test_triangle_check_can_be_skipped():
    D = [[0, 1, 5], [1, 0, 1], [5, 1, 0]]
    ds = Dataset([1, 2, 3], explicit_distances=D, check_triangle=False)
    assert triangle_violation(ds.dist) is not None


def test_point_csv_roundtrip():
    text = "id,w,x1,x2\n3,1,0.0,0.0\n5,2.5,3.0,4.0\n"
    ds = parse_dataset(text)
    assert ds.ids == (3, 5)
    assert ds.weights.tolist() == [1.0, 2.5]
    assert ds.dist[0, 1] == 5.0
    again = parse_dataset(format_dataset(ds))
    assert again.ids == ds.ids and np.array_equal(again.coords, ds.coords)


def test_matrix_csv_roundtrip():
    text = "1,2,3\n0,7,5\n7,0,4\n5,4,0\n"
    ds = parse_dataset(text)
    assert ds.ids == (1, 2, 3)
    assert np.array_equal(parse_dataset(format_dataset(ds)).dist, ds.dist)


@pytest.mark.parametrize("text,line", [
    ("id,w,x1\n1,1,0\n2,1\n", 3),
    ("id,w,x1\n1,1,0\n2,abc,1\n", 3),
    ("1,2\n0,1\n1,zz\n", 3),
    ("a,b\n0,1\n1,0\n", 1),
])
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(ParseError) as exc:
        parse_dataset(text)
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)


def test_parse_empty():
    with pytest.raises(ParseError):
        parse_dataset("\n\n")


def test_dedup_merges_weights_keeps_lowest_id():
    text = "id,w,x1\n4,1,0.0\n2,2,0.0\n9,1,1.0\n"
    ds = parse_dataset(text, dedup=True)
    assert ds.ids == (2, 9)
    assert ds.weights.tolist() == [3.0, 1.0]
    assert ds.min_positive_gap == 1.0
    assert parse_dataset(text).min_positive_gap == 0.0


def test_subset_and_single_point():
    ds = Dataset([1, 2, 3], coords=[[0.0], [1.0], [3.0]])
    sub = ds.subset([3, 1])
    assert sub.ids == (3, 1) and sub.dist[0, 1] == 3.0
    one = Dataset([1], coords=[[0.0, 0.0]])
    assert one.dist.shape == (1, 1) and math.isinf(one.min_positive_gap)
