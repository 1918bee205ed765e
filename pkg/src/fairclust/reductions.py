"""Reductions from alpha-fair clustering to facility location (and k-center)
under a partition matroid, plus mapping solutions back to centers."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .fairness import CriticalRegions, ParameterError, critical_regions, fairness_audit, feasible_wrt_regions
from .geometry import Dataset, clustering_cost, kcenter_cost, triangle_violation
from .matroid import PartitionMatroid
from .matroid_fl import FLInstance, Infeasible, evaluate_open_set, guarantee_factor, solve_matroid_fl

DEFAULT_EPSILON = 0.01
REPORT_VERSION = "1.0"
P_F = "P_F"


class DuplicatePoints(ValueError):
    pass


class InvalidSolution(ValueError):
    pass


def default_beta(p: float) -> float:
    """Guarantee of the implemented rounding, never below 16^p (22 at p = 1)."""
    return max(16.0 ** p, guarantee_factor(p))


@dataclass(eq=False)
class ReductionOutput:
    instance: FLInstance
    facility_copies: tuple[tuple[int, str], ...]  # facility position -> (point id, tag)
    client_copies: tuple[int, ...]                # client position -> point id
    delta: float
    epsilon: float
    beta: float
    self_distance: float
    regions: CriticalRegions
    k: int
    kind: str = "clustering"

    @property
    def m(self) -> int:
        return self.regions.m

    def copy_map(self) -> dict[str, tuple[int, str]]:
        out = {f"f{u}": c for u, c in zip(self.instance.facility_ids, self.facility_copies)}
        out.update({f"c{v}": (pid, "client") for v, pid in zip(self.instance.client_ids, self.client_copies)})
        return out

    def region_parts(self) -> list[np.ndarray]:
        """Facility positions of each B_{F,i}, in region order."""
        tags = [t for _, t in self.facility_copies]
        return [np.array([j for j, t in enumerate(tags) if t == f"B{i}"], dtype=int) for i in range(self.m)]

    def pool_part(self) -> np.ndarray:
        return np.array([j for j, (_, t) in enumerate(self.facility_copies) if t == P_F], dtype=int)


def copy_distance(ds: Dataset, k: int, epsilon: float, beta: float, p: float, kind: str = "clustering") -> float:
    delta = ds.min_positive_gap
    if kind == "kcenter":
        return epsilon * delta / beta
    n = ds.n
    return min((epsilon * (n - k) / (beta * k)) ** (1 / p), 1.0) * delta


def _build(ds: Dataset, k: int, alpha: float, epsilon: float, beta: float, p: float, kind: str,
           regions: CriticalRegions | None) -> ReductionOutput:
    if not isinstance(k, (int, np.integer)) or not 1 <= k <= ds.n:
        raise ParameterError(f"k must be an integer in [1, {ds.n}]")
    if k == ds.n:
        raise ParameterError("k = n is degenerate: every point is its own center")
    if not beta >= 1:
        raise ParameterError("beta must be >= 1")
    if ds.min_positive_gap == 0:
        raise DuplicatePoints("dataset has coincident points; load with dedup to merge them")
    regions = regions if regions is not None else critical_regions(ds, k, alpha)
    sigma = copy_distance(ds, k, epsilon, beta, p, kind)
    fac_orig = list(range(ds.n))
    tags = [P_F] * ds.n
    for i in range(regions.m):
        members = regions.member_index(ds, i)
        fac_orig += members.tolist()
        tags += [f"B{i}"] * len(members)
    nf = len(fac_orig)
    orig = np.array(fac_orig + list(range(ds.n)))
    D = ds.dist[np.ix_(orig, orig)].copy()
    same = orig[:, None] == orig[None, :]
    D[same] = sigma
    np.fill_diagonal(D, 0.0)
    parts = [[j for j in range(nf) if tags[j] == f"B{i}"] for i in range(regions.m)]
    parts.append([j for j in range(nf) if tags[j] == P_F])
    caps = [1] * regions.m + [k - regions.m]
    names = [f"B{i}" for i in range(regions.m)] + [P_F]
    M = PartitionMatroid(parts, caps, names)
    inst = FLInstance(range(nf), ds.ids, np.zeros(nf), ds.weights, D, float(p), M)
    copies = tuple((ds.ids[o], t) for o, t in zip(fac_orig, tags))
    return ReductionOutput(inst, copies, tuple(ds.ids), ds.min_positive_gap, epsilon, beta, sigma,
                           regions, k, kind)


def reduce_fair_to_fl(ds: Dataset, k: int, alpha: float, epsilon: float = DEFAULT_EPSILON,
                      beta: float | None = None, p: float = 1.0,
                      regions: CriticalRegions | None = None) -> ReductionOutput:
    if not 0 < epsilon < 1:
        raise ParameterError("epsilon must lie in (0, 1)")
    if not p >= 1:
        raise ParameterError("p must be >= 1")
    beta = default_beta(p) if beta is None else beta
    return _build(ds, k, alpha, epsilon, beta, p, "clustering", regions)


def reduce_kcenter(ds: Dataset, k: int, alpha: float, epsilon: float = DEFAULT_EPSILON, beta: float = 3.0,
                   regions: CriticalRegions | None = None) -> ReductionOutput:
    if not 0 < epsilon < 0.5:
        raise ParameterError("epsilon must lie in (0, 1/2)")
    return _build(ds, k, alpha, epsilon, beta, 1.0, "kcenter", regions)


def metric_violation(red: ReductionOutput):
    """First failure of identity, symmetry or the triangle inequality over
    all site triples of d', or None."""
    D = red.instance.dist
    off = ~np.eye(len(D), dtype=bool)
    if np.any(np.diag(D) != 0):
        return ("identity", int(np.flatnonzero(np.diag(D))[0]))
    if np.any(D[off] <= 0):
        return ("identity", tuple(map(int, np.argwhere((D <= 0) & off)[0])))
    if not np.array_equal(D, D.T):
        return ("symmetry", tuple(map(int, np.argwhere(D != D.T)[0])))
    bad = triangle_violation(D)
    return ("triangle", bad) if bad is not None else None


# ---------------------------------------------------------------- map back

def saturate(red: ReductionOutput, chosen: Sequence[int], objective: str = "sum") -> list[int]:
    """Extend an independent facility set so that every region part holds one
    facility and the pool part is full. Openings are free, so adding never
    hurts; each addition is the one that lowers the objective most (lowest
    position on ties)."""
    inst = red.instance
    S = sorted(set(int(j) for j in chosen))
    if not inst.matroid.is_independent(S):
        raise InvalidSolution("facility set is not independent")
    p = 1.0 if objective == "max" else inst.p
    Dp = inst.cf ** p
    w = inst.demand

    def score(extra: int) -> float:
        cols = S + [extra]
        near = Dp[:, cols].min(axis=1)
        return float(near.max()) if objective == "max" else float(w @ near)

    def fill(part: np.ndarray, need: int):
        for _ in range(need):
            cand = [int(j) for j in part if j not in S]
            if not cand:
                return
            best = min(cand, key=lambda j: (score(j), j))
            S.append(best)
            S.sort()

    for part in red.region_parts():
        fill(part, 1 - len(set(part.tolist()) & set(S)))
    pool = red.pool_part()
    fill(pool, (red.k - red.m) - len(set(pool.tolist()) & set(S)))
    return S


def map_back(red: ReductionOutput, chosen: Sequence[int]) -> list[int]:
    """Centers: the point behind each region pick, then the pool picks, deduplicated."""
    chosen = set(int(j) for j in chosen)
    if not red.instance.matroid.is_independent(chosen):
        raise InvalidSolution("facility set is not independent")
    centers: list[int] = []
    for i, part in enumerate(red.region_parts()):
        picks = [j for j in part if j in chosen]
        if not picks:
            raise InvalidSolution(f"no facility chosen in region {i}")
        centers.append(red.facility_copies[picks[0]][0])
    for j in red.pool_part():
        if j in chosen:
            centers.append(red.facility_copies[j][0])
    out = list(dict.fromkeys(centers))
    if len(out) > red.k:
        raise InvalidSolution(f"{len(out)} centers exceed k={red.k}")
    return out


# ---------------------------------------------------------------- reports

def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf") if not math.isnan(x) else "nan"


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    return obj


@dataclass(eq=False)
class SolveReport:
    mode: str
    centers: list[int]
    cost: float
    p: float | None
    alpha: float
    k: int
    n: int
    epsilon: float | None = None
    beta: float | None = None
    fairness_max_ratio: float = 0.0
    fairness_worst_point: int | None = None
    regions: list[dict] = field(default_factory=list)
    certificate_chain: dict | None = None
    extra: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def to_dict(self, include_timings: bool = False) -> dict:
        d = {
            "version": REPORT_VERSION,
            "mode": self.mode,
            "centers": sorted(self.centers),
            "cost": self.cost,
            "p": self.p,
            "alpha": self.alpha,
            "k": self.k,
            "n": self.n,
            "epsilon": self.epsilon,
            "beta": self.beta,
            "fairness_max_ratio": self.fairness_max_ratio,
            "fairness_worst_point": self.fairness_worst_point,
            "regions": self.regions,
            "certificate_chain": self.certificate_chain,
            "details": self.extra,
            "config": self.config,
        }
        if include_timings:
            d["timings"] = self.timings
        return _clean(d)

    def to_json(self, include_timings: bool = False) -> str:
        return json.dumps(self.to_dict(include_timings), indent=2, sort_keys=True) + "\n"


def _region_dicts(ds: Dataset, regions: CriticalRegions) -> list[dict]:
    return [{"center": c, "radius": r, "members": regions.members(ds, i)}
            for i, (c, r) in enumerate(zip(regions.centers, regions.radii))]


def _trivial_report(ds: Dataset, k: int, alpha: float, mode: str, p, epsilon, beta) -> SolveReport:
    return SolveReport(mode, list(ds.ids), 0.0, p, alpha, k, ds.n, epsilon, beta, 0.0, None,
                       extra={"trivial": "k = n"})


def solve_fair_clustering(ds: Dataset, k: int, alpha: float, epsilon: float = DEFAULT_EPSILON, p: float = 1.0,
                          exact: bool = False) -> SolveReport:
    """critical regions -> matroid FL reduction -> LP rounding -> centers."""
    beta = default_beta(p)
    if k == ds.n:
        fairness_audit(ds, ds.ids, k)  # validates k
        return _trivial_report(ds, k, alpha, "lp-round", p, epsilon, beta)
    clock = {}
    t = time.perf_counter()
    regions = critical_regions(ds, k, alpha)
    red = reduce_fair_to_fl(ds, k, alpha, epsilon, beta, p, regions)
    clock["reduce"] = time.perf_counter() - t
    t = time.perf_counter()
    res = solve_matroid_fl(red.instance, exact=exact)
    clock["rounding"] = time.perf_counter() - t
    chosen = saturate(red, red.instance.facility_pos(res.open_facilities))
    fl_cost, _ = evaluate_open_set(red.instance, chosen)
    centers = map_back(red, chosen)
    cost = clustering_cost(ds, centers, p)
    audit = fairness_audit(ds, centers, k, regions.fair)
    chain = res.chain.to_dict()
    return SolveReport(
        "lp-round", centers, cost, p, alpha, k, ds.n, epsilon, beta,
        audit.max_ratio, audit.worst_point, _region_dicts(ds, regions), chain,
        extra={
            "fl_cost_rounded": res.cost,
            "fl_cost_saturated": fl_cost,
            "self_distance": red.self_distance,
            "delta": red.delta,
            "approximation_factor": beta + epsilon,
            "regions_hit": feasible_wrt_regions(ds, regions, centers),
        },
        timings=clock,
    )


# ---------------------------------------------------------------- k-center

def kcenter_partition_matroid(inst: FLInstance) -> tuple[list[int], float]:
    """3-approximate k-center under the instance's partition matroid.

    For ascending thresholds R, greedily pick clients pairwise > 2R apart and
    match them to distinct parts holding a facility within R. The first R
    that matches everything yields covering radius <= 3R. Returns facility
    positions and the achieved radius.
    """
    M = inst.matroid
    cf = inst.cf
    part_of = np.array([M.part_of[u] for u in inst.facility_ids])
    slots = [j for j, c in enumerate(M.caps) for _ in range(c)]
    if not slots:
        raise Infeasible("all matroid capacities are zero")
    slot_part = np.array(slots)
    clients = sorted(range(inst.nc), key=lambda v: inst.client_ids[v])
    for R in np.unique(cf):
        sel: list[int] = []
        for v in clients:
            if all(inst.cc[v, s] > 2 * R for s in sel):
                sel.append(v)
        if len(sel) > len(slots):
            continue
        reach = cf[sel] <= R                       # selected x facilities
        part_ok = np.zeros((len(sel), len(M.caps)), dtype=bool)
        for j in range(len(M.caps)):
            part_ok[:, j] = reach[:, part_of == j].any(axis=1)
        adj = csr_matrix(part_ok[:, slot_part].astype(np.int8))
        match = maximum_bipartite_matching(adj, perm_type="column")
        if np.any(match < 0):
            continue
        chosen = []
        for a, v in enumerate(sel):
            j = slot_part[match[a]]
            cand = np.flatnonzero((part_of == j) & reach[a])
            chosen.append(int(cand[np.argmin(cf[v, cand])]))
        chosen = sorted(set(chosen))
        return chosen, float(cf[:, chosen].min(axis=1).max())
    raise Infeasible("no threshold admits a feasible matching")


def solve_fair_kcenter(ds: Dataset, k: int, alpha: float, epsilon: float = DEFAULT_EPSILON) -> SolveReport:
    if k == ds.n:
        fairness_audit(ds, ds.ids, k)
        return _trivial_report(ds, k, alpha, "kcenter", None, epsilon, 3.0)
    clock = {}
    t = time.perf_counter()
    regions = critical_regions(ds, k, alpha)
    red = reduce_kcenter(ds, k, alpha, epsilon, 3.0, regions)
    chosen, radius = kcenter_partition_matroid(red.instance)
    chosen = saturate(red, chosen, objective="max")
    centers = map_back(red, chosen)
    clock["solve"] = time.perf_counter() - t
    audit = fairness_audit(ds, centers, k, regions.fair)
    return SolveReport(
        "kcenter", centers, kcenter_cost(ds, centers), None, alpha, k, ds.n, epsilon, 3.0,
        audit.max_ratio, audit.worst_point, _region_dicts(ds, regions), None,
        extra={
            "reduced_radius": radius,
            "self_distance": red.self_distance,
            "delta": red.delta,
            "approximation_factor": 3.0 + epsilon,
            "regions_hit": feasible_wrt_regions(ds, regions, centers),
        },
        timings=clock,
    )
