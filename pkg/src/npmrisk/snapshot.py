"""Materializing the dependency graph at a given instant."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from typing import Literal, Optional

from .ingest import Corpus
from .model import MaintainerId, PackageName, Snapshot

MaintainerMode = Literal["at-time", "lifetime-union"]
Cadence = Literal["yearly", "monthly"]

MAINTAINER_MODES = ("at-time", "lifetime-union")
CADENCES = ("yearly", "monthly")


def build_snapshot(
    corpus: Corpus, t: datetime, maintainer_mode: MaintainerMode = "at-time"
) -> Snapshot:
    """Graph of every package with a release at or before ``t``.

    Each package contributes the dependencies of its latest release at ``t``
    (ties on timestamp go to the highest version). Dependencies on names that
    are not yet published at ``t`` produce no edge.
    """
    if maintainer_mode not in MAINTAINER_MODES:
        raise ValueError(f"unknown maintainer mode {maintainer_mode!r}")
    latest = {}
    maintainers_of: dict[PackageName, frozenset[MaintainerId]] = {}
    for name in corpus.package_index:
        rels = corpus.releases_until(name, t)
        if not rels:
            continue
        latest[name] = rels[-1]
        if maintainer_mode == "at-time":
            maintainers_of[name] = rels[-1].maintainers
        else:
            union: set[MaintainerId] = set()
            for r in rels:
                union |= r.maintainers
            maintainers_of[name] = frozenset(union)

    packages = frozenset(latest)
    edges = set()
    dev_edges = set()
    for name, rel in latest.items():
        edges.update((name, dep) for dep in rel.deps if dep in packages and dep != name)
        dev_edges.update((name, dep) for dep in rel.dev_deps if dep in packages and dep != name)
    return Snapshot(
        at=t,
        packages=packages,
        edges=frozenset(edges),
        dev_edges=frozenset(dev_edges),
        maintainers_of=maintainers_of,
    )


def _as_utc(t: datetime) -> datetime:
    return t.replace(tzinfo=timezone.utc) if t.tzinfo is None else t.astimezone(timezone.utc)


def boundaries(cadence: Cadence, t0: datetime, t1: datetime) -> list[datetime]:
    """Interval starts (Jan 1 or the 1st of a month, 00:00 UTC) within ``[t0, t1]``."""
    if cadence not in CADENCES:
        raise ValueError(f"unknown cadence {cadence!r}")
    t0, t1 = _as_utc(t0), _as_utc(t1)
    if t0 > t1:
        raise ValueError("range start after range end")
    if cadence == "yearly":
        cur = datetime(t0.year, 1, 1, tzinfo=timezone.utc)
    else:
        cur = datetime(t0.year, t0.month, 1, tzinfo=timezone.utc)
    out = []
    while cur <= t1:
        if cur >= t0:
            out.append(cur)
        cur = next_boundary(cur, cadence)
    return out


def next_boundary(t: datetime, cadence: Cadence) -> datetime:
    if cadence == "yearly":
        return datetime(t.year + 1, 1, 1, tzinfo=timezone.utc)
    if t.month == 12:
        return datetime(t.year + 1, 1, 1, tzinfo=timezone.utc)
    return datetime(t.year, t.month + 1, 1, tzinfo=timezone.utc)


def default_range(corpus: Corpus, cadence: Cadence) -> Optional[tuple[datetime, datetime]]:
    """From the first boundary after the first release to the first boundary after the last."""
    if not corpus.releases:
        return None
    first = next_boundary(_floor(corpus.start, cadence), cadence)
    last = next_boundary(_floor(corpus.end, cadence), cadence)
    return first, last


def _floor(t: datetime, cadence: Cadence) -> datetime:
    t = _as_utc(t)
    if cadence == "yearly":
        return datetime(t.year, 1, 1, tzinfo=timezone.utc)
    return datetime(t.year, t.month, 1, tzinfo=timezone.utc)


def snapshot_series(
    corpus: Corpus,
    cadence: Cadence,
    t0: datetime,
    t1: datetime,
    maintainer_mode: MaintainerMode = "at-time",
    threads: int = 1,
) -> list[Snapshot]:
    instants = boundaries(cadence, t0, t1)
    if threads <= 1:
        return [build_snapshot(corpus, t, maintainer_mode) for t in instants]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda t: build_snapshot(corpus, t, maintainer_mode), instants))
