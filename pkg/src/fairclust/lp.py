"""Dense bounded-variable primal simplex returning basic (vertex) solutions.

The solver keeps a full tableau and pivots with Bland's rule (lowest-index
eligible entering column, lowest-index leaving variable among ratio ties),
so identical inputs give identical vertices. With ``exact=True`` the same
code runs on ``fractions.Fraction`` entries with zero tolerances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

FEAS_TOL = 1e-7
SNAP_TOL = 1e-5
PIVOT_TOL = 1e-9
OPT_TOL = 1e-9
EXACT_VAR_LIMIT = 200

INF = math.inf

LE, GE, EQ = "<=", ">=", "="


class LPError(RuntimeError):
    pass


class SnapFailure(LPError):
    def __init__(self, offending: list[tuple[int, float]], grid: str, detail: str = ""):
        self.offending = offending
        msg = f"{len(offending)} coordinate(s) off the {grid} grid: {offending[:8]}"
        super().__init__(msg + (f"; {detail}" if detail else ""))


@dataclass
class Constraint:
    index: np.ndarray
    coef: np.ndarray
    sense: str
    rhs: float
    name: str = ""


class LinearProgram:
    """minimize c.x subject to linear rows and per-variable bounds."""

    def __init__(self):
        self.names: list[str] = []
        self.lower: list[float] = []
        self.upper: list[float] = []
        self.cost: list[float] = []
        self.constraints: list[Constraint] = []

    @property
    def num_vars(self) -> int:
        return len(self.names)

    def add_variable(self, name: str = "", lo: float = 0.0, hi: float = INF, cost: float = 0.0) -> int:
        if not lo <= hi:
            raise ValueError(f"inconsistent bounds [{lo}, {hi}] for {name!r}")
        if not (math.isfinite(cost) and not math.isnan(lo) and not math.isnan(hi)):
            raise ValueError(f"non-finite data for variable {name!r}")
        self.names.append(name or f"v{len(self.names)}")
        self.lower.append(lo)
        self.upper.append(hi)
        self.cost.append(cost)
        return len(self.names) - 1

    def add_constraint(self, coeffs: Mapping[int, float] | Iterable[tuple[int, float]], sense: str, rhs: float, name: str = "") -> int:
        if sense not in (LE, GE, EQ):
            raise ValueError(f"unknown relation {sense!r}")
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        merged: dict[int, float] = {}
        for j, a in items:
            if not 0 <= j < self.num_vars:
                raise IndexError(f"variable index {j} out of range")
            merged[j] = merged.get(j, 0.0) + a
        idx = np.array(sorted(merged), dtype=int)
        coef = np.array([merged[j] for j in idx], dtype=object if _has_fraction(merged.values()) else float)
        if not all(math.isfinite(float(a)) for a in coef) or not math.isfinite(float(rhs)):
            raise ValueError("constraint data must be finite")
        self.constraints.append(Constraint(idx, coef, sense, rhs, name or f"c{len(self.constraints)}"))
        return len(self.constraints) - 1

    def dense(self, dtype=float) -> tuple[np.ndarray, list[str], np.ndarray]:
        m = len(self.constraints)
        A = np.zeros((m, self.num_vars), dtype=dtype)
        if dtype is object:
            A[:] = Fraction(0)
        b = np.empty(m, dtype=dtype)
        for i, con in enumerate(self.constraints):
            for j, a in zip(con.index, con.coef):
                A[i, j] = _conv(a, dtype)
            b[i] = _conv(con.rhs, dtype)
        return A, [c.sense for c in self.constraints], b

    def objective_value(self, x: Sequence[float]) -> float:
        return float(np.dot(np.asarray(self.cost, dtype=float), np.asarray(x, dtype=float)))

    def residuals(self, x: Sequence[float]) -> np.ndarray:
        """Amount by which each row is violated (0 when satisfied)."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(len(self.constraints))
        for i, con in enumerate(self.constraints):
            lhs = float(np.dot(con.coef.astype(float), x[con.index]))
            if con.sense == LE:
                out[i] = max(0.0, lhs - con.rhs)
            elif con.sense == GE:
                out[i] = max(0.0, con.rhs - lhs)
            else:
                out[i] = abs(lhs - con.rhs)
        return out

    def is_feasible(self, x: Sequence[float], tol: float = FEAS_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        lo, hi = np.asarray(self.lower), np.asarray(self.upper)
        if np.any(x < lo - tol * (1 + np.abs(lo))) or np.any(x > hi + tol * (1 + np.abs(np.where(np.isfinite(hi), hi, 0)))):
            return False
        rhs = np.array([abs(float(c.rhs)) for c in self.constraints])
        return bool(np.all(self.residuals(x) <= tol * (1 + rhs)))

    def to_lp_format(self) -> str:
        """CPLEX LP text, for cross-checking with external solvers."""
        def expr(pairs):
            terms = []
            for j, a in pairs:
                a = float(a)
                if a == 0:
                    continue
                sign = "-" if a < 0 else "+"
                terms.append(f"{sign} {abs(a)!r} {self.names[j]}")
            if not terms:
                return "0 " + self.names[0] if self.names else "0"
            s = " ".join(terms)
            return s[2:] if s.startswith("+ ") else s

        lines = ["\\ generated by fairclust", "Minimize", " obj: " + expr(enumerate(self.cost)), "Subject To"]
        for con in self.constraints:
            lines.append(f" {con.name}: {expr(zip(con.index, con.coef))} {con.sense} {float(con.rhs)!r}")
        lines.append("Bounds")
        for name, lo, hi in zip(self.names, self.lower, self.upper):
            lo_s = "-inf" if lo == -INF else repr(float(lo))
            hi_s = "+inf" if hi == INF else repr(float(hi))
            lines.append(f" {lo_s} <= {name} <= {hi_s}")
        lines.append("End")
        return "\n".join(lines) + "\n"


def _has_fraction(values) -> bool:
    return any(isinstance(v, Fraction) for v in values)


def _conv(a, dtype):
    if dtype is object:
        return a if isinstance(a, Fraction) else Fraction(a)
    return float(a)


@dataclass
class LPSolution:
    values: np.ndarray
    objective: float
    status: str  # optimal | infeasible | unbounded
    is_vertex: bool = False
    iterations: int = 0
    basis: list[int] = field(default_factory=list)
    exact_values: list[Fraction] | None = None

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


# ------------------------------------------------------------------ simplex

class _Tableau:
    def __init__(self, T, beta, basis, ub, tol, piv_tol):
        self.T = T
        self.beta = beta
        self.basis = list(basis)
        N = T.shape[1]
        self.ub = ub
        self.is_basic = np.zeros(N, dtype=bool)
        self.is_basic[self.basis] = True
        self.at_upper = np.zeros(N, dtype=bool)
        self.tol = tol
        self.piv_tol = piv_tol
        self.iterations = 0

    def run(self, c, max_iter: int, opt_tol) -> str:
        T = self.T
        d = c - c[self.basis] @ T
        while True:
            if self.iterations >= max_iter:
                raise LPError(f"simplex iteration limit {max_iter} reached")
            nb = ~self.is_basic
            up = self.at_upper
            elig = nb & ((~up & _b(d < -opt_tol)) | (up & _b(d > opt_tol)))
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                return "optimal"
            q = int(cand[0])
            s = -1 if up[q] else 1
            alpha = T[:, q] * s
            tmin = self.ub[q]
            leave = -1
            pos = np.flatnonzero(_b(alpha > self.piv_tol))
            neg = np.flatnonzero(_b(alpha < -self.piv_tol))
            ub_B = self.ub[self.basis]
            lims, rows = [], []
            if pos.size:
                lims.append(np.maximum(self.beta[pos], 0) / alpha[pos] if T.dtype != object
                            else np.array([max(self.beta[i], 0) / alpha[i] for i in pos], dtype=object))
                rows.append(pos)
            if neg.size:
                fin = neg[np.array([ub_B[i] != INF for i in neg], dtype=bool)]
                if fin.size:
                    lims.append(np.array([max(ub_B[i] - self.beta[i], 0) / (-alpha[i]) for i in fin], dtype=T.dtype)
                                if T.dtype == object else np.maximum(ub_B[fin] - self.beta[fin], 0) / (-alpha[fin]))
                    rows.append(fin)
            if lims:
                lim = np.concatenate(lims)
                row = np.concatenate(rows)
                best = min(lim)
                if best < tmin:
                    slack = 0 if T.dtype == object else 1e-12 * (1 + abs(best))
                    ties = row[_b(lim <= best + slack)]
                    basis_arr = np.asarray(self.basis)
                    leave = int(ties[np.argmin(basis_arr[ties])])
                    tmin = best
            if tmin == INF:
                return "unbounded"
            self.iterations += 1
            if tmin != 0:
                self.beta = self.beta - alpha * tmin
            if leave < 0:
                self.at_upper[q] = not up[q]
                continue
            lvar = self.basis[leave]
            self.at_upper[lvar] = bool(alpha[leave] < 0)
            start = self.ub[q] if up[q] else (Fraction(0) if T.dtype == object else 0.0)
            self.beta[leave] = start + s * tmin
            self.at_upper[q] = False
            self._pivot(leave, q)
            d = d - d[q] * T[leave]
            d[q] = 0

    def _pivot(self, r, q):
        T = self.T
        T[r] = T[r] / T[r, q]
        col = T[:, q].copy()
        col[r] = 0
        nz = np.flatnonzero(_b(col != 0))
        if nz.size:
            T[nz] -= np.outer(col[nz], T[r])
        if T.dtype != object:
            T[nz, q] = 0.0
        self.is_basic[self.basis[r]] = False
        self.is_basic[q] = True
        self.basis[r] = q

    def values(self):
        N = self.T.shape[1]
        zero = Fraction(0) if self.T.dtype == object else 0.0
        x = np.array([self.ub[j] if self.at_upper[j] else zero for j in range(N)], dtype=self.T.dtype)
        x[self.basis] = self.beta
        return x


def _b(a) -> np.ndarray:
    return np.asarray(a, dtype=bool)


def solve_to_vertex(lp: LinearProgram, exact: bool = False, max_iter: int | None = None) -> LPSolution:
    """Optimal basic feasible solution of ``lp`` (minimization)."""
    if exact and lp.num_vars > EXACT_VAR_LIMIT:
        raise LPError(f"exact mode limited to {EXACT_VAR_LIMIT} variables")
    dtype = object if exact else float
    tol = Fraction(0) if exact else OPT_TOL
    piv_tol = Fraction(0) if exact else PIVOT_TOL
    conv = (lambda a: a if isinstance(a, Fraction) else Fraction(a)) if exact else float
    n0 = lp.num_vars
    A0, senses, b0 = lp.dense(dtype)
    m = len(senses)

    # column transformation: x = lo + x' (x' in [0, hi-lo]), x = hi - x', or x = x+ - x-
    cols, shift, ub = [], [], []  # (orig var, sign)
    c0 = [conv(c) for c in lp.cost]
    for j in range(n0):
        lo, hi = lp.lower[j], lp.upper[j]
        if lo != -INF:
            cols.append((j, 1)); shift.append((j, conv(lo))); ub.append(INF if hi == INF else conv(hi) - conv(lo))
        elif hi != INF:
            cols.append((j, -1)); shift.append((j, conv(hi))); ub.append(INF)
        else:
            cols.append((j, 1)); ub.append(INF)
            cols.append((j, -1)); ub.append(INF)
    nstruct = len(cols)
    A = np.empty((m, nstruct), dtype=dtype)
    c = np.empty(nstruct, dtype=dtype)
    for k, (j, sgn) in enumerate(cols):
        A[:, k] = A0[:, j] * sgn
        c[k] = c0[j] * sgn
    b = b0.copy()
    for j, s0 in shift:
        if s0 != 0:
            b = b - A0[:, j] * s0

    # slacks
    slack_cols = []
    for i, sense in enumerate(senses):
        if sense != EQ:
            slack_cols.append((i, 1 if sense == LE else -1))
    ns = len(slack_cols)
    zero = Fraction(0) if exact else 0.0
    S = np.zeros((m, ns), dtype=dtype)
    if exact:
        S[:] = zero
    for k, (i, sgn) in enumerate(slack_cols):
        S[i, k] = conv(sgn)
    A = np.hstack([A, S]) if ns else A
    ub = ub + [INF] * ns
    c = np.concatenate([c, np.array([zero] * ns, dtype=dtype)]) if ns else c
    N = A.shape[1]

    neg = np.array([bi < 0 for bi in b], dtype=bool)
    A[neg] = -A[neg]
    b[neg] = -b[neg]

    # starting basis: a +1 slack when available, an artificial otherwise
    basis = [-1] * m
    for k, (i, sgn) in enumerate(slack_cols):
        if (sgn == 1) != neg[i]:
            basis[i] = nstruct + k
    art_rows = [i for i in range(m) if basis[i] < 0]
    na = len(art_rows)
    if na:
        Aa = np.zeros((m, na), dtype=dtype)
        if exact:
            Aa[:] = zero
        for k, i in enumerate(art_rows):
            Aa[i, k] = conv(1)
            basis[i] = N + k
        T = np.hstack([A, Aa])
    else:
        T = A.copy()
    ub_all = np.array(ub + [INF] * na, dtype=object if exact else float)
    tab = _Tableau(T, b.copy(), basis, ub_all, tol, piv_tol)
    limit = max_iter or 200 * (m + N + na + 10)
    bscale = max([abs(float(v)) for v in b] + [1.0])

    if na:
        c1 = np.array([zero] * N + [conv(1)] * na, dtype=dtype)
        status = tab.run(c1, limit, tol)
        infeas = sum(max(float(v), 0.0) for j, v in zip(tab.basis, tab.beta) if j >= N)
        if infeas > FEAS_TOL * bscale:
            return LPSolution(np.full(n0, np.nan), math.nan, "infeasible", iterations=tab.iterations)
        _drive_out_artificials(tab, N)
        keep = np.arange(N)
        tab.T = tab.T[:, keep]
        tab.ub = tab.ub[keep]
        tab.is_basic = tab.is_basic[keep]
        tab.at_upper = tab.at_upper[keep]
        A = A[tab.kept_rows] if hasattr(tab, "kept_rows") else A
        b = b[tab.kept_rows] if hasattr(tab, "kept_rows") else b

    opt_tol = tol if exact else OPT_TOL * max(1.0, float(np.max(np.abs(c.astype(float)))) if N else 1.0)
    status = tab.run(c, limit, opt_tol)
    if status == "unbounded":
        return LPSolution(np.full(n0, np.nan), -math.inf, "unbounded", iterations=tab.iterations)

    if not exact:
        _refine(tab, A, b)
    xt = tab.values()
    x = [zero] * n0
    for j, s0 in shift:
        x[j] = s0
    for k, (j, sgn) in enumerate(cols):
        x[j] = x[j] + sgn * xt[k]
    if exact:
        xf = np.array([float(v) for v in x])
        obj = float(sum(conv(cj) * xj for cj, xj in zip(lp.cost, x)))
        return LPSolution(xf, obj, "optimal", True, tab.iterations, list(tab.basis), list(x))
    xf = np.array(x, dtype=float)
    lo, hi = np.asarray(lp.lower), np.asarray(lp.upper)
    xf = np.clip(xf, lo, hi)
    return LPSolution(xf, lp.objective_value(xf), "optimal", True, tab.iterations, list(tab.basis))


def _drive_out_artificials(tab: _Tableau, N: int) -> None:
    rows_keep = []
    for r in range(len(tab.basis)):
        if tab.basis[r] < N:
            rows_keep.append(r)
            continue
        row = tab.T[r, :N]
        cand = np.flatnonzero(_b(np.abs(row) > tab.piv_tol) & ~tab.is_basic[:N])
        if cand.size == 0:
            continue  # redundant row
        q = int(cand[0])
        art = tab.basis[r]
        tab.beta[r] = tab.ub[q] if tab.at_upper[q] else tab.beta[r] * 0
        tab.at_upper[q] = False
        tab._pivot(r, q)
        tab.at_upper[art] = False
        rows_keep.append(r)
    if len(rows_keep) < len(tab.basis):
        keep = np.array(rows_keep, dtype=int)
        tab.T = tab.T[keep]
        tab.beta = tab.beta[keep]
        tab.basis = [tab.basis[r] for r in rows_keep]
        tab.kept_rows = keep
    else:
        tab.kept_rows = np.arange(len(tab.basis))


def _refine(tab: _Tableau, A: np.ndarray, b: np.ndarray) -> None:
    """Recompute basic values from the original columns to shed pivot drift."""
    if not tab.basis:
        return
    xt = tab.values()
    B = A[:, tab.basis]
    nb = np.ones(A.shape[1], dtype=bool)
    nb[tab.basis] = False
    rhs = b - A[:, nb] @ xt[nb]
    try:
        xb = np.linalg.solve(B, rhs)
    except np.linalg.LinAlgError:
        return
    old = np.abs(B @ tab.beta - rhs).max()
    new = np.abs(B @ xb - rhs).max()
    if new <= old:
        ubB = tab.ub[tab.basis]
        tab.beta = np.clip(xb, 0, ubB)


def active_rank(lp: LinearProgram, x: Sequence[float], tol: float = FEAS_TOL) -> int:
    """Rank of the constraint rows (including bounds) tight at ``x``."""
    x = np.asarray(x, dtype=float)
    rows = []
    A, senses, b = lp.dense()
    for i in range(A.shape[0]):
        if abs(A[i] @ x - b[i]) <= tol * (1 + abs(b[i])):
            rows.append(A[i])
    for j in range(lp.num_vars):
        for bound in (lp.lower[j], lp.upper[j]):
            if math.isfinite(bound) and abs(x[j] - bound) <= tol * (1 + abs(bound)):
                e = np.zeros(lp.num_vars)
                e[j] = 1
                rows.append(e)
    if not rows:
        return 0
    return int(np.linalg.matrix_rank(np.array(rows)))


def snap(values: Sequence[float], grid: str, tol: float = SNAP_TOL, lp: LinearProgram | None = None) -> list[Fraction]:
    """Round each value to the nearest point of the half or unit grid.

    Raises SnapFailure if any value is farther than ``tol`` from the grid or,
    when ``lp`` is given, if the snapped point violates it by more than tol.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if grid == "half":
        step = 2
    elif grid == "unit":
        step = 1
    else:
        raise ValueError(f"grid must be 'half' or 'unit', got {grid!r}")
    out, bad = [], []
    for i, v in enumerate(values):
        v = float(v) if not isinstance(v, Fraction) else v
        g = Fraction(round(v * step), step)
        if abs(float(v) - float(g)) > tol:
            bad.append((i, float(v)))
        out.append(g)
    if bad:
        raise SnapFailure(bad, grid)
    if lp is not None and not lp.is_feasible([float(g) for g in out], tol):
        raise SnapFailure([], grid, "snapped point violates the constraints")
    return out
