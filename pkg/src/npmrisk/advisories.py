"""When packages are vulnerable, and how far vulnerable code reaches.

Two readings of "vulnerable at t" are supported:

* ``retroactive`` (default): an advisory marks its package vulnerable at
  every instant before the patch, including instants before the advisory was
  published. This is how the ecosystem looks in hindsight.
* ``strict``: additionally requires the advisory to be public at ``t``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import datetime
from fractions import Fraction
from typing import Iterable, Literal, Mapping, Optional, Sequence

from .ingest import Corpus
from .model import Advisory, PackageName, Snapshot, UndefinedStatisticError
from .reach import ReachIndex
from .snapshot import Cadence, boundaries

log = logging.getLogger(__name__)

Mode = Literal["retroactive", "strict"]
MODES = ("retroactive", "strict")

PatchTimes = Mapping[str, Optional[datetime]]


def resolve_patch_time(a: Advisory, corpus: Optional[Corpus] = None) -> Optional[datetime]:
    """Explicit patch time, else the first release matching the patched range."""
    if a.patched_at is not None:
        return a.patched_at
    if a.patched_range is None or corpus is None:
        return None
    rels = corpus.package_index.get(a.package)
    if not rels:
        log.info("advisory %s: package %r has no releases; treated as unpatched", a.id, a.package)
        return None
    for r in rels:  # oldest first
        if r.version is not None and a.patched_range.satisfied_by(r.version):
            return r.published_at
    return None


def resolve_all(advisories: Iterable[Advisory], corpus: Optional[Corpus] = None) -> dict[str, Optional[datetime]]:
    return {a.id: resolve_patch_time(a, corpus) for a in advisories}


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"unknown advisory mode {mode!r}")


def vulnerable_at(
    a: Advisory,
    t: datetime,
    corpus: Optional[Corpus] = None,
    mode: Mode = "retroactive",
    patch_time: Optional[datetime] = None,
    resolved: bool = False,
) -> bool:
    """No patch released at any moment strictly before ``t`` (and, in strict mode, ``a`` public at ``t``)."""
    _check_mode(mode)
    if mode == "strict" and a.published_at > t:
        return False
    patch = patch_time if resolved else resolve_patch_time(a, corpus)
    return patch is None or patch >= t


def vulnerable_packages(
    s: Snapshot,
    advisories: Sequence[Advisory],
    corpus: Optional[Corpus] = None,
    mode: Mode = "retroactive",
    patch_times: Optional[PatchTimes] = None,
) -> set[PackageName]:
    if patch_times is None:
        patch_times = resolve_all(advisories, corpus)
    out = set()
    for a in advisories:
        if a.package in s.packages and a.package not in out:
            if vulnerable_at(a, s.at, mode=mode, patch_time=patch_times[a.id], resolved=True):
                out.add(a.package)
    return out


@dataclass(frozen=True)
class VulnerabilityReach:
    packages: frozenset[PackageName]
    fraction: Fraction


def vulnerability_reach(
    idx: ReachIndex,
    s: Snapshot,
    advisories: Sequence[Advisory],
    mode: Mode = "retroactive",
    corpus: Optional[Corpus] = None,
    patch_times: Optional[PatchTimes] = None,
) -> VulnerabilityReach:
    """Union of package reach over every package vulnerable at ``s.at``."""
    acc = 0
    for p in sorted(vulnerable_packages(s, advisories, corpus, mode, patch_times)):
        acc |= idx.pr_bits(idx.id(p))
    n = len(s.packages)
    return VulnerabilityReach(
        frozenset(idx.to_names(acc)),
        Fraction(acc.bit_count(), n) if n else Fraction(0),
    )


def vrr(
    s: Snapshot,
    advisories: Sequence[Advisory],
    mode: Mode = "retroactive",
    corpus: Optional[Corpus] = None,
    patch_times: Optional[PatchTimes] = None,
) -> Fraction:
    if not s.packages:
        raise UndefinedStatisticError("vulnerability reporting rate of an empty snapshot")
    return Fraction(len(vulnerable_packages(s, advisories, corpus, mode, patch_times)), len(s.packages))


@dataclass(frozen=True)
class AdvisoryCounts:
    at: datetime
    total: int
    unpatched: int


def advisory_counts(
    advisories: Sequence[Advisory], t: datetime, patch_times: PatchTimes
) -> AdvisoryCounts:
    public = [a for a in advisories if a.published_at <= t]
    unpatched = sum(1 for a in public if patch_times[a.id] is None or patch_times[a.id] > t)
    return AdvisoryCounts(t, len(public), unpatched)


def advisory_evolution(
    corpus: Corpus,
    cadence: Cadence,
    t0: datetime,
    t1: datetime,
    advisories: Optional[Sequence[Advisory]] = None,
) -> list[AdvisoryCounts]:
    """Published and still-unpatched advisory counts at each interval start.

    An advisory counts as published once ``published_at <= t`` and as patched
    once its resolved patch time is ``<= t``.
    """
    advisories = corpus.advisories if advisories is None else advisories
    patch_times = resolve_all(advisories, corpus)
    return [advisory_counts(advisories, t, patch_times) for t in boundaries(cadence, t0, t1)]
