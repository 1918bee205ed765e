"""Brute-force exact solvers for small instances. Slow on purpose: every
candidate is enumerated and checked directly."""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from typing import Any

import numpy as np

from .fairness import fair_radii
from .geometry import Dataset
from .lp import GE, LE, LinearProgram
from .matroid_fl import FLInstance, Infeasible

MAX_POINTS = 16
MAX_K = 4
MAX_FACILITIES = 14
MAX_GRID_VARS = 12


class TooLarge(ValueError):
    pass


@dataclass(frozen=True)
class OracleResult:
    value: float | None       # None when nothing is feasible
    witness: Any
    search_space: int
    elapsed: float

    @property
    def feasible(self) -> bool:
        return self.value is not None

    def to_dict(self) -> dict:
        w = self.witness
        if isinstance(w, np.ndarray):
            w = w.tolist()
        elif isinstance(w, tuple):
            w = list(w)
        return {"feasible": self.feasible, "value": self.value, "witness": w,
                "search_space": self.search_space}


def oracle_fair_clustering(ds: Dataset, k: int, alpha: float, p: float = 1.0,
                           objective: str = "lp") -> OracleResult:
    """Minimum cost over all alpha-fair center sets of size <= k.

    objective "lp": sum_v w(v) d(v, C)^p;  "center": max_v d(v, C).
    """
    if ds.n > MAX_POINTS or k > MAX_K:
        raise TooLarge(f"oracle limited to n <= {MAX_POINTS}, k <= {MAX_K} (got n={ds.n}, k={k})")
    t0 = time.perf_counter()
    D = ds.dist
    allow = alpha * fair_radii(ds, k).radii
    best, arg, count = math.inf, None, 0
    for size in range(1, k + 1):
        for C in itertools.combinations(range(ds.n), size):
            count += 1
            near = D[:, C].min(axis=1)
            if np.any(near > allow):
                continue
            val = float(near.max()) if objective == "center" else float(ds.weights @ near ** p)
            if val < best:
                best, arg = val, C
    elapsed = time.perf_counter() - t0
    if arg is None:
        return OracleResult(None, None, count, elapsed)
    return OracleResult(best, tuple(ds.ids[i] for i in arg), count, elapsed)


def oracle_matroid_fl(inst: FLInstance) -> OracleResult:
    """Minimum over all independent facility sets, clients sent to the nearest open facility."""
    if inst.nf > MAX_FACILITIES:
        raise TooLarge(f"oracle limited to {MAX_FACILITIES} facilities (got {inst.nf})")
    t0 = time.perf_counter()
    need = inst.demand > 0
    best, arg, count = math.inf, None, 0
    for mask in range(1 << inst.nf):
        S = [i for i in range(inst.nf) if mask >> i & 1]
        count += 1
        if not inst.matroid.is_independent(inst.facility_ids[i] for i in S):
            continue
        if not S:
            if need.any():
                continue
            val = 0.0
        else:
            val = float(inst.opening[S].sum() + inst.demand @ inst.cfp[:, S].min(axis=1))
        if val < best:
            best, arg = val, tuple(inst.facility_ids[i] for i in S)
    elapsed = time.perf_counter() - t0
    if arg is None:
        return OracleResult(None, None, count, elapsed)
    return OracleResult(best, arg, count, elapsed)


def oracle_grid_min(lp: LinearProgram, grid: str, tol: float = 1e-9) -> OracleResult:
    """Exhaustive minimum of lp's objective over grid points satisfying all
    of its rows and bounds. grid: "half" ({0, 1/2, 1, ...}) or "unit".
    Raises Infeasible when no grid point is feasible."""
    n = lp.num_vars
    if n > MAX_GRID_VARS:
        raise TooLarge(f"grid oracle limited to {MAX_GRID_VARS} variables (got {n})")
    step = {"half": 0.5, "unit": 1.0}[grid]
    axes = []
    for lo, hi in zip(lp.lower, lp.upper):
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise TooLarge("grid oracle needs finite bounds")
        axes.append(np.arange(math.ceil(lo / step), math.floor(hi / step) + 1) * step)
    t0 = time.perf_counter()
    pts = np.array(list(itertools.product(*axes)), dtype=float).reshape(-1, n)
    ok = np.ones(len(pts), dtype=bool)
    for con in lp.constraints:
        lhs = pts[:, con.index] @ con.coef.astype(float) if con.index.size else np.zeros(len(pts))
        if con.sense == LE:
            ok &= lhs <= con.rhs + tol
        elif con.sense == GE:
            ok &= lhs >= con.rhs - tol
        else:
            ok &= np.abs(lhs - con.rhs) <= tol
    if not ok.any():
        raise Infeasible(f"no feasible point on the {grid} grid")
    vals = pts[ok] @ np.asarray(lp.cost, dtype=float)
    i = int(np.argmin(vals))
    return OracleResult(float(vals[i]), pts[ok][i], len(pts), time.perf_counter() - t0)


__all__ = ["OracleResult", "TooLarge", "oracle_fair_clustering", "oracle_matroid_fl", "oracle_grid_min"]
