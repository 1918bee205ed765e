import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fairclust.fairness import (ParameterError, check_critical_regions, critical_regions, fair_radii,
                                fairness_audit, feasible_wrt_regions, is_alpha_fair)
from fairclust.geometry import Dataset

from conftest import datasets, random_dataset, two_clusters


def line(*xs) -> Dataset:
    return Dataset(range(len(xs)), coords=np.array(xs, dtype=float)[:, None])


def test_fair_radii_examples():
    ds = line(0, 1, 2, 3)
    fr = fair_radii(ds, 2)
    assert fr.threshold_count == 2
    assert fr.radii.tolist() == [1, 1, 1, 1]
    assert np.all(fair_radii(ds, 4).radii == 0)
    assert fair_radii(ds, 1).radii.tolist() == [3, 2, 2, 3]


@pytest.mark.parametrize("k", [0, 5, -1])
def test_fair_radii_rejects_bad_k(k):
    with pytest.raises(ParameterError):
        fair_radii(line(0, 1, 2, 3), k)


@given(datasets(min_n=1, max_n=12), st.data())
def test_fair_radius_is_minimal_ball_radius(ds, data):
    k = data.draw(st.integers(1, ds.n))
    fr = fair_radii(ds, k)
    t = fr.threshold_count
    assert t == math.ceil(ds.n / k)
    for v in range(ds.n):
        row = ds.dist[v]
        r = fr.radii[v]
        assert np.count_nonzero(row <= r) >= t
        assert np.count_nonzero(row < r) < t


@given(datasets(min_n=2, max_n=12), st.data())
def test_fair_radii_monotone_in_k(ds, data):
    k1 = data.draw(st.integers(1, ds.n))
    k2 = data.draw(st.integers(k1, ds.n))
    assert np.all(fair_radii(ds, k1).radii >= fair_radii(ds, k2).radii)


def _reference_regions(D, r, alpha):
    """Plain-loop rerun of the greedy covering, used as an oracle."""
    n = len(r)
    covered = [False] * n
    centers = []
    while not all(covered):
        c = min((i for i in range(n) if not covered[i]), key=lambda i: (r[i], i))
        centers.append(c)
        for x in range(n):
            if not covered[x] and D[x][c] <= 2 * alpha * r[x]:
                covered[x] = True
    return centers


def test_two_cluster_regions_frozen():
    ds = two_clusters()
    reg = critical_regions(ds, 2, 1.0)
    assert reg.centers == (0, 3)
    assert reg.radii == (1.0, 1.0)
    assert reg.m == 2
    assert reg.members(ds, 0) == [0, 1, 2]


def test_single_point_region():
    ds = Dataset([42], coords=[[1.0, 2.0]])
    reg = critical_regions(ds, 1, 1.0)
    assert reg.centers == (42,) and reg.radii == (0.0,)


def test_alpha_below_one_rejected():
    with pytest.raises(ParameterError):
        critical_regions(two_clusters(), 2, 0.5)


@given(datasets(min_n=1, max_n=14), st.data())
def test_regions_match_reference_and_properties(ds, data):
    k = data.draw(st.integers(1, ds.n))
    alpha = data.draw(st.sampled_from([1.0, 1.5, 2.0, 3.0]))
    reg = critical_regions(ds, k, alpha)
    ref = _reference_regions(ds.dist.tolist(), fair_radii(ds, k).radii.tolist(), alpha)
    assert list(reg.center_index) == ref
    assert check_critical_regions(ds, reg, k) == []
    assert reg.m <= k


def test_regions_with_duplicate_points():
    ds = Dataset(range(5), coords=[[0.0], [0.0], [0.0], [5.0], [5.0]])
    reg = critical_regions(ds, 2, 1.0)
    assert check_critical_regions(ds, reg, 2) == []


def test_audit_examples():
    ds = line(0, 1, 10, 11)
    audit = fairness_audit(ds, {0}, 2)
    assert audit.ratios.tolist() == [0, 1, 10, 11]
    assert audit.max_ratio == 11 and audit.worst_point == 3
    assert fairness_audit(ds, range(4), 2).max_ratio == 0
    with pytest.raises(ValueError):
        fairness_audit(ds, set(), 2)


def test_audit_zero_radius_uncovered_is_infinite():
    ds = line(0, 10)
    audit = fairness_audit(ds, {0}, 2)
    assert audit.ratios[0] == 0 and math.isinf(audit.ratios[1])
    assert audit.to_dict(ds)["max_ratio"] == "inf"


def test_feasibility_examples():
    ds = two_clusters()
    reg = critical_regions(ds, 2, 1.0)
    assert feasible_wrt_regions(ds, reg, reg.centers)
    assert not feasible_wrt_regions(ds, reg, [])
    assert feasible_wrt_regions(ds, reg, {2, 4})
    assert not feasible_wrt_regions(ds, reg, {1, 2})


def test_random_feasible_sets_are_3alpha_fair():
    rng = np.random.default_rng(7)
    for _ in range(200):
        n = int(rng.integers(2, 15))
        ds = random_dataset(rng, n)
        k = int(rng.integers(1, n + 1))
        alpha = float(rng.choice([1.0, 1.5, 2.0]))
        reg = critical_regions(ds, k, alpha)
        centers = {int(rng.choice(reg.member_index(ds, i))) for i in range(reg.m)}
        extra = rng.choice(n, size=int(rng.integers(0, k - len(centers) + 1)), replace=False)
        centers |= {int(x) for x in extra}
        assert feasible_wrt_regions(ds, reg, centers)
        assert fairness_audit(ds, centers, k, reg.fair).max_ratio <= 3 * alpha
        assert is_alpha_fair(ds, centers, reg.fair, 3 * alpha)
