"""Facility location with l_p assignment cost under a partition matroid.

Pipeline: LP relaxation -> client consolidation -> neighborhoods ->
half-integral rounding (proxy T over polytope P) -> core clients ->
integral rounding (proxy H over polytope Q) -> evaluation on the original
demands. Every intermediate quantity is kept in a ``CertificateChain`` so the
approximation inequalities can be audited per run.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import lp as lpcore
from .lp import LinearProgram, snap, solve_to_vertex
from .matroid import PartitionMatroid

CHAIN_RTOL = 1e-6
CHAIN_ATOL = 1e-9
MASS_TOL = 1e-7
ASSIGN_TOL = 1e-9


class Infeasible(RuntimeError):
    pass


class InternalConsistencyError(AssertionError):
    pass


# ------------------------------------------------------------------ instance

@dataclass(eq=False)
class FLInstance:
    """Facilities occupy sites 0..F-1 and clients sites F..F+C-1 of ``dist``."""

    facility_ids: tuple[int, ...]
    client_ids: tuple[int, ...]
    opening: np.ndarray
    demand: np.ndarray
    dist: np.ndarray
    p: float
    matroid: PartitionMatroid

    def __post_init__(self):
        self.facility_ids = tuple(int(u) for u in self.facility_ids)
        self.client_ids = tuple(int(v) for v in self.client_ids)
        nf, nc = len(self.facility_ids), len(self.client_ids)
        self.opening = np.asarray(self.opening, dtype=float)
        self.demand = np.asarray(self.demand, dtype=float)
        self.dist = np.asarray(self.dist, dtype=float)
        if len(set(self.facility_ids)) != nf or len(set(self.client_ids)) != nc:
            raise ValueError("facility and client ids must be unique")
        if self.opening.shape != (nf,) or np.any(self.opening < 0):
            raise ValueError("opening costs must be F nonnegative reals")
        if self.demand.shape != (nc,) or np.any(self.demand < 0):
            raise ValueError("demands must be C nonnegative reals")
        if self.dist.shape != (nf + nc, nf + nc):
            raise ValueError("dist must cover facilities and clients")
        if not np.array_equal(self.dist, self.dist.T) or np.any(self.dist < 0):
            raise ValueError("dist must be symmetric and nonnegative")
        if not self.p >= 1:
            raise ValueError("p must be >= 1")
        if set(self.matroid.ground_set) != set(self.facility_ids):
            raise ValueError("matroid ground set must equal the facility set")

    @property
    def nf(self) -> int:
        return len(self.facility_ids)

    @property
    def nc(self) -> int:
        return len(self.client_ids)

    @property
    def cf(self) -> np.ndarray:
        """client x facility distances"""
        return self.dist[self.nf:, :self.nf]

    @property
    def cc(self) -> np.ndarray:
        return self.dist[self.nf:, self.nf:]

    @property
    def cfp(self) -> np.ndarray:
        if not hasattr(self, "_cfp"):
            self._cfp = self.cf ** self.p
        return self._cfp

    def facility_pos(self, ids) -> list[int]:
        look = {u: i for i, u in enumerate(self.facility_ids)}
        return [look[u] for u in ids]

    def independent(self, y: np.ndarray) -> bool:
        return self.matroid.is_independent(self.facility_ids[i] for i in np.flatnonzero(y > 0.5))

    @classmethod
    def from_coordinates(cls, fac_xy, cli_xy, opening, demand, p, matroid, facility_ids=None, client_ids=None):
        from scipy.spatial.distance import cdist
        pts = np.vstack([np.atleast_2d(fac_xy), np.atleast_2d(cli_xy)])
        D = cdist(pts, pts)
        D = np.triu(D, 1)
        D = D + D.T
        nf = len(fac_xy)
        return cls(facility_ids if facility_ids is not None else range(nf),
                   client_ids if client_ids is not None else range(len(cli_xy)),
                   opening, demand, D, p, matroid)

    # JSON: facilities (id, cost), clients (id, demand), matroid, distances, p
    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "facilities": [{"id": u, "cost": float(c)} for u, c in zip(self.facility_ids, self.opening)],
            "clients": [{"id": v, "demand": float(w)} for v, w in zip(self.client_ids, self.demand)],
            "matroid": self.matroid.to_dict(),
            "distances": {"matrix": self.dist.tolist()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FLInstance":
        fac = d["facilities"]
        cli = d["clients"]
        dist = d["distances"]
        if "matrix" in dist:
            D = np.array(dist["matrix"], dtype=float)
        else:
            from scipy.spatial.distance import cdist
            pts = np.array(dist["facility_coords"] + dist["client_coords"], dtype=float)
            D = cdist(pts, pts)
            D = np.triu(D, 1)
            D = D + D.T
        return cls([f["id"] for f in fac], [c["id"] for c in cli],
                   [f.get("cost", 0.0) for f in fac], [c.get("demand", 1.0) for c in cli],
                   D, float(d.get("p", 1.0)), PartitionMatroid.from_dict(d["matroid"]))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path) -> "FLInstance":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(eq=False)
class FractionalSolution:
    x: np.ndarray  # clients x facilities
    y: np.ndarray
    stage: str = "fractional"

    def check(self, inst: FLInstance, demand: np.ndarray, tol: float = MASS_TOL) -> list[str]:
        probs = []
        served = demand > 0
        rows = self.x[served].sum(axis=1)
        if np.any(np.abs(rows - 1) > tol):
            probs.append("assignment rows do not sum to 1")
        if np.any(self.x < -tol) or np.any(self.x > self.y[None, :] + tol):
            probs.append("x outside [0, y]")
        for part, cap in zip(inst.matroid.parts, inst.matroid.caps):
            if self.y[inst.facility_pos(part)].sum() > cap + tol:
                probs.append("matroid cap exceeded")
        grid = {"half-integral": 2, "integral": 1}.get(self.stage)
        if grid:
            for arr in (self.x, self.y):
                if np.any(np.abs(arr * grid - np.round(arr * grid)) > 0):
                    probs.append(f"values off the {self.stage} grid")
        return probs


def cost(inst: FLInstance, sol: FractionalSolution, demand: np.ndarray | None = None) -> float:
    w = inst.demand if demand is None else demand
    return float(inst.opening @ sol.y + w @ (inst.cfp * sol.x).sum(axis=1))


# ------------------------------------------------------------ LP relaxation

@dataclass(eq=False)
class LPRelaxation:
    solution: FractionalSolution
    z: float
    lp: LinearProgram
    iterations: int


def build_lp_relaxation(inst: FLInstance, demand: np.ndarray | None = None) -> tuple[LinearProgram, np.ndarray]:
    w = inst.demand if demand is None else np.asarray(demand, dtype=float)
    lp = LinearProgram()
    nf = inst.nf
    for i, u in enumerate(inst.facility_ids):
        lp.add_variable(f"y_{u}", 0.0, 1.0, float(inst.opening[i]))
    served = np.flatnonzero(w > 0)
    xvar = -np.ones((inst.nc, nf), dtype=int)
    for v in served:
        for i in range(nf):
            xvar[v, i] = lp.add_variable(f"x_{inst.client_ids[v]}_{inst.facility_ids[i]}", 0.0, 1.0,
                                         float(w[v] * inst.cfp[v, i]))
    for v in served:
        lp.add_constraint({int(j): 1.0 for j in xvar[v]}, lpcore.EQ, 1.0, f"assign_{inst.client_ids[v]}")
    for v in served:
        for i in range(nf):
            lp.add_constraint({int(xvar[v, i]): 1.0, i: -1.0}, lpcore.LE, 0.0)
    _add_matroid_rows(lp, inst)
    return lp, xvar


def _add_matroid_rows(lp: LinearProgram, inst: FLInstance) -> None:
    for row in inst.matroid.emit_lp_constraints():
        lp.add_constraint({i: 1.0 for i in inst.facility_pos(row.support)}, lpcore.LE, float(row.rhs), f"cap_{row.name}")


def solve_lp_relaxation(inst: FLInstance, demand: np.ndarray | None = None) -> LPRelaxation:
    lp, xvar = build_lp_relaxation(inst, demand)
    sol = solve_to_vertex(lp)
    if sol.status != "optimal":
        raise Infeasible(f"LP relaxation is {sol.status}")
    vals = sol.values
    y = vals[:inst.nf].copy()
    x = np.zeros((inst.nc, inst.nf))
    mask = xvar >= 0
    x[mask] = vals[xvar[mask]]
    frac = FractionalSolution(x, y, "fractional")
    return LPRelaxation(frac, cost(inst, frac, demand), lp, sol.iterations)


# ------------------------------------------------------------ consolidation

def separation_factor(p: float) -> float:
    return 2 ** ((p + 1) / p)


def fractional_distance(inst: FLInstance, x: np.ndarray) -> np.ndarray:
    return np.maximum((inst.cfp * x).sum(axis=1), 0.0) ** (1 / inst.p)


@dataclass(eq=False)
class ConsolidatedInstance:
    demand: np.ndarray         # w'
    support: tuple[int, ...]   # client positions with w' > 0
    R: np.ndarray              # fractional distance per client
    holder: np.ndarray         # client position now holding each client's demand (-1: none)
    order: tuple[int, ...]     # processing order


def consolidate(inst: FLInstance, sol: FractionalSolution) -> ConsolidatedInstance:
    """Move each client's demand onto an earlier (smaller R) client that is
    within 2^((p+1)/p) R of it, following the sorted double loop."""
    R = fractional_distance(inst, sol.x)
    active = np.flatnonzero(inst.demand > 0)
    ids = np.array(inst.client_ids)
    order = active[np.lexsort((ids[active], R[active]))]
    w = inst.demand.copy()
    holder = np.where(inst.demand > 0, np.arange(inst.nc), -1)
    thr = separation_factor(inst.p)
    for a, vi in enumerate(order[:-1]):
        if w[vi] <= 0:
            continue
        rest = order[a + 1:]
        hit = rest[(inst.cc[vi, rest] <= thr * R[rest]) & (w[rest] > 0)]
        if hit.size:
            w[vi] += w[hit].sum()
            w[hit] = 0.0
            holder[hit] = vi
    support = tuple(int(v) for v in order if w[v] > 0)
    return ConsolidatedInstance(w, support, R, holder, tuple(int(v) for v in order))


def check_well_separated(inst: FLInstance, cons: ConsolidatedInstance) -> list[tuple[int, int]]:
    thr = separation_factor(inst.p)
    bad = []
    S = cons.support
    for a, u in enumerate(S):
        for v in S[a + 1:]:
            if not inst.cc[u, v] > thr * max(cons.R[u], cons.R[v]):
                bad.append((u, v))
    return bad


# ------------------------------------------------------------ neighborhoods

@dataclass(eq=False)
class NeighborhoodStructure:
    owner: np.ndarray                 # facility -> client position (its F(v) owner)
    F: dict[int, np.ndarray]
    Fp: dict[int, np.ndarray]         # F'(v)
    G: dict[int, np.ndarray]
    gamma: dict[int, float]


def build_neighborhoods(inst: FLInstance, cons: ConsolidatedInstance, sol: FractionalSolution | None = None) -> NeighborhoodStructure:
    S = np.array(sorted(cons.support, key=lambda v: inst.client_ids[v]), dtype=int)
    if S.size == 0:
        raise InternalConsistencyError("consolidated support is empty")
    owner = S[np.argmin(inst.cf[S, :], axis=0)]  # first minimum = lowest client id
    p = inst.p
    F, Fp, G, gamma = {}, {}, {}, {}
    for v in S:
        v = int(v)
        mine = owner == v
        F[v] = np.flatnonzero(mine)
        others = inst.cf[v, ~mine]
        g = float(others.min()) if others.size else math.inf
        gamma[v] = g
        dv = inst.cf[v, F[v]]
        G[v] = F[v][dv <= g]
        Fp[v] = F[v][dv ** p <= 2 * cons.R[v] ** p]
    nb = NeighborhoodStructure(owner, F, Fp, G, gamma)
    probs = check_neighborhoods(inst, cons, nb, sol)
    if probs:
        raise InternalConsistencyError("; ".join(probs))
    return nb


def check_neighborhoods(inst, cons, nb: NeighborhoodStructure, sol: FractionalSolution | None = None) -> list[str]:
    probs = []
    seen = np.concatenate(list(nb.F.values())) if nb.F else np.array([], dtype=int)
    if sorted(seen.tolist()) != list(range(inst.nf)):
        probs.append("F(v) sets do not partition the facilities")
    for v in nb.F:
        if not set(nb.Fp[v]) <= set(nb.G[v]) <= set(nb.F[v]):
            probs.append(f"F'({v}) <= G({v}) <= F({v}) fails")
        if not nb.gamma[v] ** inst.p > 2 * cons.R[v] ** inst.p:
            probs.append(f"gamma too small at client {inst.client_ids[v]}")
        if sol is not None and sol.x[v, nb.Fp[v]].sum() < 0.5 - MASS_TOL:
            probs.append(f"half-mass bound fails at client {inst.client_ids[v]}")
    return probs


# ------------------------------------------------------------ assignment

def optimal_assignment(y: np.ndarray, w: np.ndarray, inst: FLInstance) -> np.ndarray:
    """Each client with positive demand fills one unit from its nearest
    facilities with remaining opening (ties: lower facility position)."""
    x = np.zeros((inst.nc, inst.nf))
    avail = np.flatnonzero(y > ASSIGN_TOL)
    for v in np.flatnonzero(w > 0):
        order = avail[np.argsort(inst.cf[v, avail], kind="stable")]
        need = 1.0
        for u in order:
            take = min(need, float(y[u]))
            x[v, u] = take
            need -= take
            if need <= ASSIGN_TOL:
                break
        if need > ASSIGN_TOL:
            raise Infeasible(f"client {inst.client_ids[v]} cannot be fully assigned (missing {need:g})")
    return x


# ------------------------------------------------------------ half-integral stage

def intermediate_y(inst: FLInstance, nb: NeighborhoodStructure, sol: FractionalSolution) -> np.ndarray:
    y1 = np.zeros(inst.nf)
    for v, Gv in nb.G.items():
        y1[Gv] = sol.x[v, Gv]
    return y1


def proxy_T(inst: FLInstance, cons: ConsolidatedInstance, nb: NeighborhoodStructure, y: np.ndarray) -> float:
    p = inst.p
    total = float(inst.opening @ y)
    for v, Gv in nb.G.items():
        mass = float(y[Gv].sum())
        term = float(inst.cfp[v, Gv] @ y[Gv])
        g = nb.gamma[v]
        if math.isfinite(g):
            term += 3 ** p * g ** p * (1 - mass)
        elif abs(1 - mass) > MASS_TOL:
            return math.inf
        total += cons.demand[v] * term
    return total


def build_P_polytope(inst: FLInstance, cons: ConsolidatedInstance, nb: NeighborhoodStructure) -> tuple[LinearProgram, float]:
    """LP over y whose objective plus the returned constant equals T."""
    p = inst.p
    coef = inst.opening.copy()
    const = 0.0
    for v, Gv in nb.G.items():
        wv = cons.demand[v]
        g = nb.gamma[v]
        if math.isfinite(g):
            pen = 3 ** p * g ** p
            const += wv * pen
            coef[Gv] += wv * (inst.cfp[v, Gv] - pen)
        else:
            coef[Gv] += wv * inst.cfp[v, Gv]
    lp = LinearProgram()
    for i, u in enumerate(inst.facility_ids):
        lp.add_variable(f"y_{u}", 0.0, 1.0, float(coef[i]))
    _add_matroid_rows(lp, inst)
    for v in sorted(nb.G, key=lambda v: inst.client_ids[v]):
        cid = inst.client_ids[v]
        if math.isfinite(nb.gamma[v]):
            lp.add_constraint({int(i): 1.0 for i in nb.Fp[v]}, lpcore.GE, 0.5, f"near_{cid}")
            lp.add_constraint({int(i): 1.0 for i in nb.G[v]}, lpcore.LE, 1.0, f"ball_{cid}")
        else:
            lp.add_constraint({int(i): 1.0 for i in nb.G[v]}, lpcore.EQ, 1.0, f"ball_{cid}")
    return lp, const


@dataclass(eq=False)
class HalfIntegralStage:
    y_intermediate: np.ndarray
    x_intermediate: np.ndarray
    solution: FractionalSolution
    T_intermediate: float
    T_half: float
    lp: LinearProgram
    lp_objective: float


def half_integral_round(inst: FLInstance, cons: ConsolidatedInstance, nb: NeighborhoodStructure,
                        sol: FractionalSolution, exact: bool = False) -> HalfIntegralStage:
    y1 = intermediate_y(inst, nb, sol)
    x1 = optimal_assignment(y1, cons.demand, inst)
    lp, const = build_P_polytope(inst, cons, nb)
    vert = solve_to_vertex(lp, exact=exact)
    if vert.status != "optimal":
        raise InternalConsistencyError(f"polytope P solve returned {vert.status}")
    y2 = np.array([float(g) for g in snap(vert.exact_values or vert.values, "half", lp=lp)])
    x2 = optimal_assignment(y2, cons.demand, inst)
    half = FractionalSolution(x2, y2, "half-integral")
    return HalfIntegralStage(y1, x1, half, proxy_T(inst, cons, nb, y1), proxy_T(inst, cons, nb, y2),
                             lp, vert.objective + const)


# ------------------------------------------------------------ core clients

@dataclass(eq=False)
class CoreStructure:
    core: tuple[int, ...]
    cr: dict[int, int]
    R2: dict[int, float]
    serving: dict[int, np.ndarray]
    primary: dict[int, int]
    secondary: dict[int, int]


def select_core_clients(inst: FLInstance, cons: ConsolidatedInstance, half: FractionalSolution) -> CoreStructure:
    p = inst.p
    P1 = list(cons.support)
    R2 = {v: float((inst.cfp[v] * half.x[v]).sum()) ** (1 / p) for v in P1}
    serving = {v: np.flatnonzero(half.x[v] > 0) for v in P1}
    primary, secondary = {}, {}
    for v in P1:
        s = serving[v][np.argsort(inst.cf[v, serving[v]], kind="stable")]
        primary[v] = int(s[0])
        secondary[v] = int(s[-1])
    remaining = sorted(P1, key=lambda v: (R2[v], inst.client_ids[v]))
    core, cr = [], {}
    while remaining:
        star = remaining.pop(0)
        core.append(star)
        cr[star] = star
        mine = set(serving[star].tolist())
        keep = []
        for v in remaining:
            if mine & set(serving[v].tolist()):
                cr[v] = star
            else:
                keep.append(v)
        remaining = keep
    return CoreStructure(tuple(core), cr, R2, serving, primary, secondary)


def check_core(inst: FLInstance, core: CoreStructure, tol: float = 1e-9) -> list[str]:
    probs = []
    p = inst.p
    used: set = set()
    for v in core.core:
        s = set(core.serving[v].tolist())
        if used & s:
            probs.append("core serving sets overlap")
        used |= s
    for v, c in core.cr.items():
        if core.R2[c] > core.R2[v] * (1 + tol) + tol:
            probs.append(f"R'' increases under cr at client {inst.client_ids[v]}")
        dp = inst.cfp[v, core.primary[v]]
        ds = inst.cfp[v, core.secondary[v]]
        r = core.R2[v] ** p
        if not (dp <= r * (1 + tol) + tol and r <= ds * (1 + tol) + tol and ds <= 2 * r * (1 + tol) + tol):
            probs.append(f"primary/secondary distance ordering fails at client {inst.client_ids[v]}")
        if abs(r - 0.5 * (dp + ds)) > tol * (1 + r):
            probs.append(f"R''^p is not the mean of primary/secondary at client {inst.client_ids[v]}")
    return probs


# ------------------------------------------------------------ integral stage

def intermediate_y_tilde(inst: FLInstance, core: CoreStructure, half: FractionalSolution) -> np.ndarray:
    y = half.y.copy()
    for v in core.core:
        S = core.serving[v]
        y[S] = half.x[v, S]
    return y


def H_coefficients(inst: FLInstance, cons: ConsolidatedInstance, core: CoreStructure) -> np.ndarray:
    coef = inst.opening.copy()
    for v, c in core.cr.items():
        S = core.serving[c]
        coef[S] += cons.demand[v] * inst.cfp[v, S]
    return coef


def proxy_H(inst: FLInstance, cons: ConsolidatedInstance, core: CoreStructure, y: np.ndarray) -> float:
    return float(H_coefficients(inst, cons, core) @ y)


def build_Q_polytope(inst: FLInstance, cons: ConsolidatedInstance, core: CoreStructure) -> LinearProgram:
    coef = H_coefficients(inst, cons, core)
    lp = LinearProgram()
    for i, u in enumerate(inst.facility_ids):
        lp.add_variable(f"y_{u}", 0.0, 1.0, float(coef[i]))
    _add_matroid_rows(lp, inst)
    for v in sorted(core.core, key=lambda v: inst.client_ids[v]):
        lp.add_constraint({int(i): 1.0 for i in core.serving[v]}, lpcore.EQ, 1.0, f"core_{inst.client_ids[v]}")
    return lp


@dataclass(eq=False)
class IntegralStage:
    y_intermediate: np.ndarray
    solution: FractionalSolution
    H_intermediate: float
    H_integral: float
    lp: LinearProgram


def integral_round(inst: FLInstance, cons: ConsolidatedInstance, core: CoreStructure,
                   half: FractionalSolution, exact: bool = False) -> IntegralStage:
    y1 = intermediate_y_tilde(inst, core, half)
    lp = build_Q_polytope(inst, cons, core)
    vert = solve_to_vertex(lp, exact=exact)
    if vert.status != "optimal":
        raise InternalConsistencyError(f"polytope Q solve returned {vert.status}")
    y2 = np.array([float(g) for g in snap(vert.exact_values or vert.values, "unit", lp=lp)])
    x2 = optimal_assignment(y2, cons.demand, inst)
    sol = FractionalSolution(x2, y2, "integral")
    return IntegralStage(y1, sol, proxy_H(inst, cons, core, y1), proxy_H(inst, cons, core, y2), lp)


# ------------------------------------------------------------ certificates

def _leq(a: float, b: float) -> bool:
    return a <= b + CHAIN_RTOL * max(abs(a), abs(b)) + CHAIN_ATOL


def guarantee_factor(p: float) -> float:
    """Product of the per-stage factors; below 16^p only for p above about 1.548."""
    return 4 * 16 ** (p - 1) + (8 / 7) ** (p - 1) * (4 * 3 ** (p - 1) + 2) * 3 ** p


@dataclass
class CertificateChain:
    p: float
    z_lp: float
    lp_cost_on_consolidated: float
    intermediate_cost: float
    T_intermediate: float
    T_half: float
    half_cost: float
    H_intermediate: float
    H_integral: float
    integral_cost: float
    final_cost: float
    z_lp_consolidated: float = math.nan  # LP optimum on w'

    @property
    def half_factor(self) -> float:
        return 3 ** self.p

    @property
    def integral_factor(self) -> float:
        return 4 * 3 ** (self.p - 1) + 2

    @property
    def conversion_bound(self) -> float:
        p = self.p
        return 4 * 16 ** (p - 1) * self.z_lp + (8 / 7) ** (p - 1) * self.integral_cost

    @property
    def guarantee(self) -> float:
        """Worst-case factor of the whole chain relative to z_lp."""
        return guarantee_factor(self.p)

    def inequalities(self) -> list[tuple[str, float, float]]:
        p = self.p
        rows = [
            ("lp_on_consolidated <= z_lp", self.lp_cost_on_consolidated, self.z_lp),
            ("z_lp <= cost(x',y')", self.z_lp, self.intermediate_cost),
            ("z_lp <= T(y')", self.z_lp, self.T_intermediate),
            ("z_lp(w') <= cost(x',y')", self.z_lp_consolidated, self.intermediate_cost),
            ("cost(x',y') <= T(y')", self.intermediate_cost, self.T_intermediate),
            ("T(y') <= 3^p z_lp", self.T_intermediate, self.half_factor * self.z_lp),
            ("cost(x'',y'') <= T(y'')", self.half_cost, self.T_half),
            ("T(y'') <= T(y')", self.T_half, self.T_intermediate),
            ("cost(x~,y~) <= H(y~)", self.integral_cost, self.H_integral),
            ("H(y~) <= H(y~')", self.H_integral, self.H_intermediate),
            ("H(y~') <= (4*3^(p-1)+2) cost(x'',y'')", self.H_intermediate, self.integral_factor * self.half_cost),
            ("final <= conversion bound", self.final_cost, self.conversion_bound),
            ("final <= guarantee * z_lp", self.final_cost, self.guarantee * self.z_lp),
        ]
        if self.guarantee <= 16 ** p:
            rows.append(("final <= 16^p z_lp", self.final_cost, 16 ** p * self.z_lp))
        return rows

    def failures(self, skip: Sequence[str] = ()) -> list[str]:
        return [f"{name}: {a!r} > {b!r}" for name, a, b in self.inequalities()
                if name not in skip and not _leq(a, b)]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["guarantee_factor"] = self.guarantee
        d["conversion_bound"] = self.conversion_bound
        d["checks"] = [{"name": n, "lhs": a, "rhs": b, "holds": _leq(a, b)} for n, a, b in self.inequalities()]
        return d


@dataclass(eq=False)
class MatroidFLResult:
    open_facilities: tuple[int, ...]    # facility ids
    assignment: dict[int, int]          # client id -> facility id
    cost: float
    chain: CertificateChain
    relaxation: LPRelaxation | None = None
    consolidated: ConsolidatedInstance | None = None
    neighborhoods: NeighborhoodStructure | None = None
    half: HalfIntegralStage | None = None
    core: CoreStructure | None = None
    integral: IntegralStage | None = None
    y: np.ndarray = field(default=None)  # type: ignore[assignment]


def evaluate_open_set(inst: FLInstance, open_pos: Sequence[int], demand: np.ndarray | None = None) -> tuple[float, np.ndarray]:
    """Cost of opening ``open_pos`` with every client sent to its nearest open
    facility; returns (cost, nearest facility position per client)."""
    w = inst.demand if demand is None else demand
    open_pos = np.asarray(sorted(open_pos), dtype=int)
    if open_pos.size == 0:
        if np.any(w > 0):
            return math.inf, np.full(inst.nc, -1)
        return 0.0, np.full(inst.nc, -1)
    sub = inst.cfp[:, open_pos]
    near = open_pos[np.argmin(sub, axis=1)]
    return float(inst.opening[open_pos].sum() + w @ sub.min(axis=1)), near


def solve_matroid_fl(inst: FLInstance, exact: bool = False, verify: bool = True) -> MatroidFLResult:
    """Round the LP relaxation to an integral independent facility set."""
    if not np.any(inst.demand > 0):
        zero = CertificateChain(inst.p, *([0.0] * 11))
        return MatroidFLResult((), {}, 0.0, zero, y=np.zeros(inst.nf))
    relax = solve_lp_relaxation(inst)
    sol = relax.solution
    cons = consolidate(inst, sol)
    nb = build_neighborhoods(inst, cons, sol)
    half = half_integral_round(inst, cons, nb, sol, exact=exact)
    core = select_core_clients(inst, cons, half.solution)
    integ = integral_round(inst, cons, core, half.solution, exact=exact)
    y = integ.solution.y
    open_pos = np.flatnonzero(y > 0.5)
    final, near = evaluate_open_set(inst, open_pos)
    chain = CertificateChain(
        p=inst.p,
        z_lp=relax.z,
        lp_cost_on_consolidated=cost(inst, sol, cons.demand),
        intermediate_cost=cost(inst, FractionalSolution(half.x_intermediate, half.y_intermediate), cons.demand),
        T_intermediate=half.T_intermediate,
        T_half=half.T_half,
        half_cost=cost(inst, half.solution, cons.demand),
        H_intermediate=integ.H_intermediate,
        H_integral=integ.H_integral,
        integral_cost=cost(inst, integ.solution, cons.demand),
        final_cost=final,
        z_lp_consolidated=solve_lp_relaxation(inst, cons.demand).z,
    )
    if verify:
        probs = check_core(inst, core)
        if probs:
            raise InternalConsistencyError("; ".join(probs))
        if not inst.independent(y):
            raise InternalConsistencyError("rounded facility set is not independent")
    assignment = {inst.client_ids[v]: inst.facility_ids[near[v]] for v in range(inst.nc) if near[v] >= 0}
    return MatroidFLResult(tuple(inst.facility_ids[i] for i in open_pos), assignment, final, chain,
                           relax, cons, nb, half, core, integ, y)
