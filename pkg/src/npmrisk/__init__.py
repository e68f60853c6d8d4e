"""Security-risk metrics over the dependency graph of a package registry."""
from .ingest import Corpus, IngestError, IngestReport, load_corpus, parse_advisories, parse_registry
from .model import (
    Advisory,
    NotFoundError,
    Release,
    Snapshot,
    UndefinedStatisticError,
)
from .reach import ReachIndex, build_reach_index, implicitly_trusted_packages, package_reach
from .semver import RangeConstraint, Version, range_satisfies, version_compare
from .snapshot import build_snapshot, snapshot_series

__version__ = "0.1.0"
