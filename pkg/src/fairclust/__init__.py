"""Individually fair k-clustering with l_p cost via facility location under
a partition matroid."""

from importlib.resources import files

from .fairness import critical_regions, fair_radii, fairness_audit
from .geometry import CostParams, Dataset, clustering_cost, read_dataset
from .matroid import PartitionMatroid
from .matroid_fl import FLInstance, guarantee_factor, solve_matroid_fl
from .oracle import oracle_fair_clustering, oracle_matroid_fl
from .reductions import SolveReport, solve_fair_clustering, solve_fair_kcenter

__version__ = "0.1.0"

__all__ = [
    "CostParams", "Dataset", "FLInstance", "PartitionMatroid", "SolveReport", "clustering_cost",
    "critical_regions", "fair_radii", "fairness_audit", "fixture_path", "guarantee_factor",
    "oracle_fair_clustering", "oracle_matroid_fl", "read_dataset", "report_schema", "solve_fair_clustering",
    "solve_fair_kcenter", "solve_matroid_fl",
]


def fixture_path(name: str = "eight_points.csv"):
    """Path of a bundled example dataset."""
    return files(__package__) / "data" / name


def report_schema() -> dict:
    import json
    return json.loads((files(__package__) / "data" / "report_schema.json").read_text())
