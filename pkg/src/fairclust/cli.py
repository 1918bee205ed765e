"""Command-line driver.

    fairclust run DATA --mode lp-round --k 2 --alpha 1 --p 2 -o report.json
    fairclust generate --n 40 --clusters 2 --seed 7 -o points.csv
    fairclust sweep DATA --k 2 --alphas 1,1.5,2 -o sweep.csv

Exit codes: 0 success, 1 input or parameter error, 2 infeasible.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .fairness import ParameterError, fair_radii, fairness_audit
from .geometry import Dataset, DatasetError, format_dataset, read_dataset
from .lp import LPError
from .matroid_fl import Infeasible, build_lp_relaxation
from .oracle import TooLarge, oracle_fair_clustering
from .reductions import (DEFAULT_EPSILON, DuplicatePoints, InvalidSolution, SolveReport, reduce_fair_to_fl,
                         solve_fair_clustering, solve_fair_kcenter)

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE = 0, 1, 2
MODES = ("lp-round", "kcenter", "oracle", "audit")
DENSITY_RATIO = 8.0


@dataclass
class RunConfig:
    input: str
    mode: str
    k: int | None = None
    alpha: float = 1.0
    p: float = 1.0
    epsilon: float = DEFAULT_EPSILON
    output: str | None = None
    centers: str | None = None
    objective: str = "lp"
    dedup: bool = False
    exact: bool = False
    dump_lp: str | None = None
    timings: bool = False

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ParameterError(f"unknown mode {self.mode!r}")
        if self.k is None:
            raise ParameterError(f"--k is required for mode {self.mode}")
        if self.mode == "audit" and not self.centers:
            raise ParameterError("--centers is required for mode audit")
        if not self.alpha >= 1:
            raise ParameterError("--alpha must be >= 1")
        if not self.p >= 1:
            raise ParameterError("--p must be >= 1")
        upper = 0.5 if self.mode == "kcenter" else 1.0
        if not 0 < self.epsilon < upper:
            raise ParameterError(f"--epsilon must lie in (0, {upper:g})")
        if self.objective not in ("lp", "center"):
            raise ParameterError("--objective must be lp or center")

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("output")
        d.pop("timings")
        return d


def load_centers(path: str) -> list[int]:
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        data = data.get("centers")
    if not isinstance(data, list) or not data or not all(isinstance(c, int) for c in data):
        raise ParameterError(f"{path}: expected a nonempty JSON list of point ids (or {{\"centers\": [...]}})")
    return data


def execute(cfg: RunConfig) -> tuple[SolveReport, int]:
    """Run one configuration; returns the report and the exit code."""
    cfg.validate()
    ds = read_dataset(cfg.input, dedup=cfg.dedup)
    if not 1 <= cfg.k <= ds.n:
        raise ParameterError(f"--k must lie in [1, {ds.n}]")
    if cfg.dump_lp and cfg.mode == "lp-round" and cfg.k < ds.n:
        red = reduce_fair_to_fl(ds, cfg.k, cfg.alpha, cfg.epsilon, p=cfg.p)
        Path(cfg.dump_lp).write_text(build_lp_relaxation(red.instance)[0].to_lp_format())
    code = EXIT_OK
    if cfg.mode == "lp-round":
        rep = solve_fair_clustering(ds, cfg.k, cfg.alpha, cfg.epsilon, cfg.p, exact=cfg.exact)
    elif cfg.mode == "kcenter":
        rep = solve_fair_kcenter(ds, cfg.k, cfg.alpha, cfg.epsilon)
    elif cfg.mode == "oracle":
        res = oracle_fair_clustering(ds, cfg.k, cfg.alpha, cfg.p, cfg.objective)
        if res.feasible:
            centers = list(res.witness)
            audit = fairness_audit(ds, centers, cfg.k)
            rep = SolveReport("oracle", centers, res.value, cfg.p if cfg.objective == "lp" else None,
                              cfg.alpha, cfg.k, ds.n, fairness_max_ratio=audit.max_ratio,
                              fairness_worst_point=audit.worst_point,
                              extra={"objective": cfg.objective, "feasible": True, "search_space": res.search_space})
        else:
            rep = SolveReport("oracle", [], None, cfg.p, cfg.alpha, cfg.k, ds.n, fairness_max_ratio=None,
                              extra={"objective": cfg.objective, "feasible": False, "search_space": res.search_space})
            code = EXIT_INFEASIBLE
        rep.timings = {"oracle": res.elapsed}
    else:
        centers = load_centers(cfg.centers)
        audit = fairness_audit(ds, centers, cfg.k, fair_radii(ds, cfg.k))
        rep = SolveReport("audit", centers, None, cfg.p, cfg.alpha, cfg.k, ds.n,
                          fairness_max_ratio=audit.max_ratio, fairness_worst_point=audit.worst_point,
                          extra={"ratios": audit.to_dict(ds)["ratios"],
                                 "alpha_fair": bool(audit.max_ratio <= cfg.alpha)})
    rep.config = cfg.echo()
    return rep, code


# ---------------------------------------------------------------- generate

def generate_synthetic(n: int, dims: int = 2, clusters: int = 2, spread: float = 0.5, seed: int = 0) -> Dataset:
    """Gaussian blobs whose scales grow by DENSITY_RATIO per cluster, so
    dense and sparse regions coexist."""
    if n < 1 or dims < 1 or clusters < 1 or not spread > 0:
        raise ParameterError("need n, dims, clusters >= 1 and spread > 0")
    rng = np.random.default_rng(seed)
    centers = rng.uniform(0, 10 * clusters, size=(clusters, dims))
    label = np.arange(n) % clusters
    scale = spread * DENSITY_RATIO ** label
    pts = centers[label] + rng.normal(size=(n, dims)) * scale[:, None]
    return Dataset(range(n), coords=pts)


# ---------------------------------------------------------------- sweep

def _sweep_point(args) -> dict:
    cfg = RunConfig(**args)
    try:
        rep, _ = execute(cfg)
        return {"alpha": cfg.alpha, "status": "ok", "cost": rep.cost, "fairness_max_ratio": rep.fairness_max_ratio,
                "m": len(rep.regions), "centers": " ".join(map(str, sorted(rep.centers)))}
    except Infeasible:
        return {"alpha": cfg.alpha, "status": "infeasible", "cost": "", "fairness_max_ratio": "", "m": "", "centers": ""}


def sweep(cfg: RunConfig, alphas: list[float], jobs: int = 1) -> str:
    base = asdict(cfg)
    base.update(output=None, dump_lp=None, timings=False)
    tasks = [dict(base, alpha=a) for a in alphas]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_point, tasks))
    else:
        rows = [_sweep_point(t) for t in tasks]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["alpha", "status", "cost", "fairness_max_ratio", "m", "centers"],
                            lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------- argparse

def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("input", help="point CSV (id,w,x1,...) or distance-matrix CSV")
    sp.add_argument("--mode", choices=MODES, default="lp-round")
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.add_argument("--p", type=float, default=1.0)
    sp.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    sp.add_argument("--objective", choices=("lp", "center"), default="lp", help="oracle objective")
    sp.add_argument("--dedup", action="store_true", help="merge coincident points, summing weights")
    sp.add_argument("--exact", action="store_true", help="rational arithmetic for the rounding polytopes")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fairclust", description="Individually fair clustering via matroid facility location")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="solve, oracle or audit one instance")
    _add_common(run)
    run.add_argument("--centers", help="JSON list of center ids (audit mode)")
    run.add_argument("--dump-lp", metavar="PATH", help="write the LP relaxation in LP format")
    run.add_argument("--timings", action="store_true", help="include wall-clock timings in the report")
    run.add_argument("-o", "--output", help="report path (default: stdout)")

    gen = sub.add_parser("generate", help="write a synthetic point CSV")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--dims", type=int, default=2)
    gen.add_argument("--clusters", type=int, default=2)
    gen.add_argument("--spread", type=float, default=0.5)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("-o", "--output")

    sw = sub.add_parser("sweep", help="CSV of cost and fairness versus alpha")
    _add_common(sw)
    sw.add_argument("--alphas", required=True, help="comma-separated alpha values")
    sw.add_argument("--jobs", type=int, default=1)
    sw.add_argument("-o", "--output")
    return ap


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "generate":
            ds = generate_synthetic(args.n, args.dims, args.clusters, args.spread, args.seed)
            _emit(format_dataset(ds), args.output)
            return EXIT_OK
        cfg = RunConfig(args.input, args.mode, args.k, args.alpha, args.p, args.epsilon,
                        getattr(args, "output", None), getattr(args, "centers", None), args.objective,
                        args.dedup, args.exact, getattr(args, "dump_lp", None), getattr(args, "timings", False))
        if args.command == "sweep":
            try:
                alphas = [float(a) for a in args.alphas.split(",") if a.strip()]
            except ValueError:
                raise ParameterError(f"bad --alphas list {args.alphas!r}") from None
            cfg.validate()
            _emit(sweep(cfg, alphas, args.jobs), args.output)
            return EXIT_OK
        rep, code = execute(cfg)
        _emit(rep.to_json(include_timings=cfg.timings), cfg.output)
        return code
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (DatasetError, ParameterError, DuplicatePoints, TooLarge, InvalidSolution, LPError,
            FileNotFoundError, IsADirectoryError, PermissionError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
