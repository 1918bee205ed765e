"""Metric-space primitives: datasets, distances, l_p clustering cost and the
approximate triangle inequalities for powered distances."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial.distance import pdist, squareform

# relative slack used whenever a metric property is checked on floats
METRIC_RTOL = 1e-9
# explicit matrices above this size are only triangle-checked on request
TRIANGLE_CHECK_LIMIT = 500


class DatasetError(ValueError):
    """Malformed or inconsistent point data."""


class ParseError(DatasetError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class CostParams:
    p: float = 1.0
    lam: float = 1.0

    def __post_init__(self):
        if not self.p >= 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if not self.lam > 0:
            raise ValueError(f"lambda must be > 0, got {self.lam}")


@dataclass(frozen=True, eq=False)
class Dataset:
    """A finite point set with either euclidean coordinates or an explicit
    distance matrix. Point ids are arbitrary unique integers; internally
    everything is indexed by position."""

    ids: tuple[int, ...]
    coords: np.ndarray | None = None
    weights: np.ndarray = field(default=None)  # type: ignore[assignment]
    explicit_distances: np.ndarray | None = None
    check_triangle: bool | None = None

    def __post_init__(self):
        ids = tuple(int(i) for i in self.ids)
        object.__setattr__(self, "ids", ids)
        n = len(ids)
        if n < 1:
            raise DatasetError("dataset must contain at least one point")
        if len(set(ids)) != n:
            raise DatasetError("point ids must be unique")
        if (self.coords is None) == (self.explicit_distances is None):
            raise DatasetError("give exactly one of coords / explicit_distances")
        w = np.ones(n) if self.weights is None else np.asarray(self.weights, dtype=float)
        if w.shape != (n,) or np.any(w < 0) or not np.all(np.isfinite(w)):
            raise DatasetError("weights must be n finite nonnegative reals")
        object.__setattr__(self, "weights", w)
        if self.coords is not None:
            c = np.asarray(self.coords, dtype=float)
            if c.ndim == 1:
                c = c[:, None]
            if c.shape[0] != n or not np.all(np.isfinite(c)):
                raise DatasetError("coords must be an (n, d) array of finite reals")
            object.__setattr__(self, "coords", c)
        else:
            D = np.asarray(self.explicit_distances, dtype=float)
            _validate_matrix(D, n, self.check_triangle)
            object.__setattr__(self, "explicit_distances", D)

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def metric_kind(self) -> str:
        return "euclidean" if self.coords is not None else "explicit-matrix"

    @cached_property
    def index(self) -> dict[int, int]:
        return {pid: i for i, pid in enumerate(self.ids)}

    @cached_property
    def dist(self) -> np.ndarray:
        """Full pairwise distance matrix (exactly symmetric, zero diagonal)."""
        if self.explicit_distances is not None:
            D = self.explicit_distances.copy()
        elif self.n == 1:
            D = np.zeros((1, 1))
        else:
            D = squareform(pdist(self.coords))
        D.setflags(write=False)
        return D

    def idx(self, pid: int) -> int:
        try:
            return self.index[pid]
        except KeyError:
            raise KeyError(f"unknown point id {pid}") from None

    def indices(self, pids: Iterable[int]) -> list[int]:
        return [self.idx(p) for p in pids]

    @cached_property
    def min_positive_gap(self) -> float:
        """Smallest distance between two distinct records (0 with duplicates)."""
        if self.n < 2:
            return float("inf")
        iu = np.triu_indices(self.n, 1)
        return float(self.dist[iu].min())

    def deduplicated(self) -> "Dataset":
        """Merge records at distance 0, summing weights; the lowest id survives."""
        D = self.dist
        keep: list[int] = []
        owner = np.full(self.n, -1)
        for i in range(self.n):
            if owner[i] >= 0:
                continue
            owner[i] = i
            keep.append(i)
            for j in range(i + 1, self.n):
                if owner[j] < 0 and D[i, j] == 0.0:
                    owner[j] = i
        w = np.zeros(self.n)
        np.add.at(w, owner, self.weights)
        ids = [min(self.ids[j] for j in np.flatnonzero(owner == i)) for i in keep]
        if self.coords is not None:
            return Dataset(ids, coords=self.coords[keep], weights=w[keep])
        return Dataset(ids, explicit_distances=D[np.ix_(keep, keep)], weights=w[keep],
                       check_triangle=False)

    def subset(self, pids: Sequence[int]) -> "Dataset":
        ix = self.indices(pids)
        if self.coords is not None:
            return Dataset(pids, coords=self.coords[ix], weights=self.weights[ix])
        return Dataset(pids, explicit_distances=self.dist[np.ix_(ix, ix)],
                       weights=self.weights[ix], check_triangle=False)


def _validate_matrix(D: np.ndarray, n: int, check_triangle: bool | None) -> None:
    if D.shape != (n, n):
        raise DatasetError(f"distance matrix must be {n}x{n}, got {D.shape}")
    if not np.all(np.isfinite(D)) or np.any(D < 0):
        raise DatasetError("distances must be finite and nonnegative")
    if not np.array_equal(D, D.T):
        raise DatasetError("distance matrix is not symmetric")
    if np.any(np.diag(D) != 0):
        raise DatasetError("distance matrix must have a zero diagonal")
    if check_triangle is None:
        check_triangle = n <= TRIANGLE_CHECK_LIMIT
    if check_triangle:
        bad = triangle_violation(D)
        if bad is not None:
            i, j, l = bad
            raise DatasetError(f"triangle inequality fails for indices ({i}, {j}, {l})")


def triangle_violation(D: np.ndarray, rtol: float = METRIC_RTOL):
    """Return (i, j, l) with D[i,l] > D[i,j] + D[j,l] beyond slack, or None."""
    n = D.shape[0]
    for j in range(n):
        via = D[:, j][:, None] + D[j, :][None, :]
        viol = D > via * (1 + rtol) + rtol
        if viol.any():
            i, l = map(int, np.argwhere(viol)[0])
            return i, j, l
    return None


def distance(a: int, b: int, ds: Dataset) -> float:
    return float(ds.dist[ds.idx(a), ds.idx(b)])


def clustering_cost(ds: Dataset, centers: Iterable[int], params: CostParams | float = 1.0) -> float:
    """sum_v w(v) * min_c d(v, c)^p."""
    p = params.p if isinstance(params, CostParams) else float(params)
    cols = ds.indices(set(centers))
    if not cols:
        raise ValueError("center set must be nonempty")
    nearest = ds.dist[:, cols].min(axis=1)
    return float(np.dot(ds.weights, nearest ** p))


def kcenter_cost(ds: Dataset, centers: Iterable[int]) -> float:
    cols = ds.indices(set(centers))
    if not cols:
        raise ValueError("center set must be nonempty")
    return float(ds.dist[:, cols].min(axis=1).max())


def power_triangle_bound(du_w: float, dw_v: float, p: float, lam: float) -> float:
    """Upper bound on d(u,v)^p through one intermediate point w."""
    return (1 + lam) ** (p - 1) * du_w ** p + ((1 + lam) / lam) ** (p - 1) * dw_v ** p


def two_hop_bound(d1: float, d2: float, d3: float, p: float) -> float:
    """Upper bound on d(u,v)^p along a path u-w-z-v."""
    return 3 ** (p - 1) * (d1 ** p + d2 ** p + d3 ** p)


def sum_power_bound(x: float, ys: Sequence[float], p: float, lam: float) -> float:
    """(x + sum ys)^p <= (1+lam)^(p-1) x^p + ((1+lam) n / lam)^(p-1) sum ys^p."""
    n = len(ys)
    return (1 + lam) ** (p - 1) * x ** p + ((1 + lam) * n / lam) ** (p - 1) * sum(y ** p for y in ys)


# ---------------------------------------------------------------- CSV formats

def read_dataset(path: str | Path, dedup: bool = False, check_triangle: bool | None = None) -> Dataset:
    text = Path(path).read_text()
    return parse_dataset(text, dedup=dedup, check_triangle=check_triangle)


def parse_dataset(text: str, dedup: bool = False, check_triangle: bool | None = None) -> Dataset:
    """Parse either the point CSV (``id,w,x1,...``) or the explicit-matrix CSV
    (header row of ids followed by the matrix rows)."""
    rows = [(lineno, row) for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1)
            if row and any(c.strip() for c in row)]
    if not rows:
        raise ParseError("empty input")
    _, header = rows[0]
    header = [h.strip() for h in header]
    if len(header) >= 2 and header[0].lower() == "id" and header[1].lower() == "w":
        ds = _parse_points(header, rows[1:])
    else:
        ds = _parse_matrix(header, rows[1:], check_triangle)
    return ds.deduplicated() if dedup else ds


def _parse_points(header, rows) -> Dataset:
    dim = len(header) - 2
    if dim < 1:
        raise ParseError("point CSV needs at least one coordinate column", 1)
    ids, ws, xs = [], [], []
    for lineno, row in rows:
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", lineno)
        try:
            ids.append(int(row[0]))
            ws.append(float(row[1]))
            xs.append([float(c) for c in row[2:]])
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
    if not ids:
        raise ParseError("no data rows")
    try:
        return Dataset(ids, coords=np.array(xs), weights=np.array(ws))
    except DatasetError as exc:
        raise ParseError(str(exc)) from None


def _parse_matrix(header, rows, check_triangle) -> Dataset:
    try:
        ids = [int(h) for h in header]
    except ValueError as exc:
        raise ParseError(f"bad id in matrix header: {exc}", 1) from None
    n = len(ids)
    if len(rows) != n:
        raise ParseError(f"expected {n} matrix rows, got {len(rows)}")
    D = np.empty((n, n))
    for i, (lineno, row) in enumerate(rows):
        if len(row) != n:
            raise ParseError(f"expected {n} fields, got {len(row)}", lineno)
        try:
            D[i] = [float(c) for c in row]
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
    try:
        return Dataset(ids, explicit_distances=D, check_triangle=check_triangle)
    except DatasetError as exc:
        raise ParseError(str(exc)) from None


def format_dataset(ds: Dataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if ds.coords is not None:
        dim = ds.coords.shape[1]
        writer.writerow(["id", "w"] + [f"x{i + 1}" for i in range(dim)])
        for pid, w, x in zip(ds.ids, ds.weights, ds.coords):
            writer.writerow([pid, repr(float(w))] + [repr(float(c)) for c in x])
    else:
        writer.writerow(ds.ids)
        for row in ds.dist:
            writer.writerow([repr(float(c)) for c in row])
    return buf.getvalue()


def write_dataset(ds: Dataset, path: str | Path) -> None:
    Path(path).write_text(format_dataset(ds))
