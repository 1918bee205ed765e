"""Fair radii, critical regions and fairness audits."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .geometry import Dataset


class ParameterError(ValueError):
    pass


def _check_k(ds: Dataset, k: int) -> None:
    if not isinstance(k, (int, np.integer)) or k < 1 or k > ds.n:
        raise ParameterError(f"k must be an integer in [1, {ds.n}], got {k!r}")


@dataclass(frozen=True, eq=False)
class FairRadii:
    radii: np.ndarray  # indexed by dataset position
    threshold_count: int

    def of(self, ds: Dataset, pid: int) -> float:
        return float(self.radii[ds.idx(pid)])


def ball_threshold(n: int, k: int) -> int:
    return -(-n // k)


def fair_radii(ds: Dataset, k: int) -> FairRadii:
    """Distance from each point to its ceil(n/k)-th closest record (itself included)."""
    _check_k(ds, k)
    t = ball_threshold(ds.n, k)
    r = np.partition(ds.dist, t - 1, axis=1)[:, t - 1]
    return FairRadii(r.copy(), t)


@dataclass(frozen=True, eq=False)
class CriticalRegions:
    centers: tuple[int, ...]        # point ids, in selection order
    center_index: tuple[int, ...]   # dataset positions of the centers
    radii: tuple[float, ...]        # alpha * r(c_i)
    alpha: float
    fair: FairRadii

    @property
    def m(self) -> int:
        return len(self.centers)

    def members(self, ds: Dataset, i: int) -> list[int]:
        """Point ids of ball i: d(x, c_i) <= alpha r(c_i)."""
        row = ds.dist[self.center_index[i]]
        return [ds.ids[j] for j in np.flatnonzero(row <= self.radii[i])]

    def member_index(self, ds: Dataset, i: int) -> np.ndarray:
        return np.flatnonzero(ds.dist[self.center_index[i]] <= self.radii[i])


def critical_regions(ds: Dataset, k: int, alpha: float, fair: FairRadii | None = None) -> CriticalRegions:
    """Greedy construction of disjoint critical balls.

    Repeatedly take the uncovered point with the smallest fair radius
    (lowest position on ties), make it a center and mark every uncovered x
    with d(x, c) <= 2 alpha r(x) as covered.
    """
    if not alpha >= 1:
        raise ParameterError(f"alpha must be >= 1, got {alpha}")
    fair = fair if fair is not None else fair_radii(ds, k)
    r = fair.radii
    order = np.lexsort((np.arange(ds.n), r))  # by radius, then position
    covered = np.zeros(ds.n, dtype=bool)
    chosen: list[int] = []
    reach = 2 * alpha * r
    for c in order:
        if covered[c]:
            continue
        chosen.append(int(c))
        covered |= ds.dist[c] <= reach
    return CriticalRegions(
        centers=tuple(ds.ids[c] for c in chosen),
        center_index=tuple(chosen),
        radii=tuple(float(alpha * r[c]) for c in chosen),
        alpha=float(alpha),
        fair=fair,
    )


def check_critical_regions(ds: Dataset, regions: CriticalRegions, k: int) -> list[str]:
    """Exact re-check of both critical-region properties and m <= k."""
    problems = []
    r = regions.fair.radii
    a = regions.alpha
    C = list(regions.center_index)
    if regions.m > k:
        problems.append(f"m={regions.m} > k={k}")
    if not C:
        return problems + ["no regions"]
    dC = ds.dist[:, C].min(axis=1)
    bad = np.flatnonzero(dC > 2 * a * r)
    if bad.size:
        problems.append(f"property 1 fails at positions {bad.tolist()}")
    for s, ci in enumerate(C):
        for cj in C[s + 1:]:
            if not ds.dist[ci, cj] > 2 * a * max(r[ci], r[cj]):
                problems.append(f"property 2 fails for centers {ds.ids[ci]}, {ds.ids[cj]}")
    if any(r[C[i]] > r[C[i + 1]] for i in range(len(C) - 1)):
        problems.append("centers not in nondecreasing radius order")
    return problems


@dataclass(frozen=True, eq=False)
class FairnessAudit:
    ratios: np.ndarray  # per dataset position
    max_ratio: float
    worst_point: int

    def to_dict(self, ds: Dataset) -> dict:
        return {
            "max_ratio": _jsonable(self.max_ratio),
            "worst_point": self.worst_point,
            "ratios": {str(pid): _jsonable(float(x)) for pid, x in zip(ds.ids, self.ratios)},
        }


def _jsonable(x: float):
    return x if math.isfinite(x) else "inf"


def fairness_audit(ds: Dataset, centers: Iterable[int], k: int, fair: FairRadii | None = None) -> FairnessAudit:
    """Per-point ratio d(v, C) / r(v); +inf where r(v)=0 but v is not covered."""
    cols = ds.indices(set(centers))
    if not cols:
        raise ValueError("center set must be nonempty")
    fair = fair if fair is not None else fair_radii(ds, k)
    d = ds.dist[:, cols].min(axis=1)
    r = fair.radii
    ratios = np.zeros(ds.n)
    pos = r > 0
    ratios[pos] = d[pos] / r[pos]
    ratios[~pos & (d > 0)] = np.inf
    worst = int(np.argmax(ratios))
    return FairnessAudit(ratios, float(ratios[worst]), ds.ids[worst])


def is_alpha_fair(ds: Dataset, centers: Iterable[int], fair: FairRadii, alpha: float) -> bool:
    cols = ds.indices(set(centers))
    return bool(np.all(ds.dist[:, cols].min(axis=1) <= alpha * fair.radii))


def feasible_wrt_regions(ds: Dataset, regions: CriticalRegions, centers: Iterable[int]) -> bool:
    """True iff every critical ball holds at least one of ``centers``."""
    cols = ds.indices(set(centers))
    if not cols:
        return regions.m == 0
    for ci, rad in zip(regions.center_index, regions.radii):
        if not np.any(ds.dist[ci, cols] <= rad):
            return False
    return True
