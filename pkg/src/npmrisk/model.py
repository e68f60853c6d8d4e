"""Domain records shared across the package."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Mapping, Optional

from .semver import RangeConstraint, Version, range_satisfies, version_compare

__all__ = [
    "PackageName",
    "MaintainerId",
    "Release",
    "Snapshot",
    "Advisory",
    "Version",
    "RangeConstraint",
    "version_compare",
    "range_satisfies",
    "is_valid_package_name",
    "parse_timestamp",
    "format_timestamp",
    "NotFoundError",
    "UndefinedStatisticError",
]

PackageName = str
MaintainerId = str

_NAME_RE = re.compile(r"^(?:@[^\s/@]+/)?[^\s/@][^\s/]*$")


class NotFoundError(KeyError):
    """A package (or other key) is not part of the snapshot being queried."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "not found"


class UndefinedStatisticError(ValueError):
    """An average, rate or correlation has no defined value (empty input, zero variance)."""


def is_valid_package_name(name: object) -> bool:
    return isinstance(name, str) and bool(_NAME_RE.match(name))


def parse_timestamp(text: str) -> datetime:
    """RFC 3339 to an aware UTC datetime truncated to whole seconds."""
    if not isinstance(text, str) or not text:
        raise ValueError(f"invalid timestamp: {text!r}")
    s = text.strip()
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    dt = datetime.fromisoformat(s)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc).replace(microsecond=0)


def format_timestamp(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class Release:
    """One published version of a package.

    ``version`` is ``None`` when ``version_raw`` is not readable as SemVer even
    after normalization; such releases still count for package existence and
    maintainers but are left out of anything that orders versions.
    """

    package: PackageName
    version_raw: str
    published_at: datetime
    deps: Mapping[PackageName, RangeConstraint] = field(default_factory=dict)
    dev_deps: Mapping[PackageName, RangeConstraint] = field(default_factory=dict)
    maintainers: frozenset[MaintainerId] = frozenset()
    version: Optional[Version] = None

    @property
    def version_key(self) -> tuple:
        if self.version is None:
            return (0, self.version_raw)
        return (1, self.version.sort_key)

    @property
    def order_key(self) -> tuple:
        return (self.published_at, self.package, self.version_key)


@dataclass(frozen=True)
class Snapshot:
    """Name-level dependency graph at instant ``at``.

    ``edges`` holds ``(dependent, dependee)`` pairs from regular dependencies,
    ``dev_edges`` the same from dev dependencies.
    """

    at: datetime
    packages: frozenset[PackageName]
    edges: frozenset[tuple[PackageName, PackageName]]
    dev_edges: frozenset[tuple[PackageName, PackageName]]
    maintainers_of: Mapping[PackageName, frozenset[MaintainerId]]

    def __post_init__(self) -> None:
        for a, b in self.edges | self.dev_edges:
            if a == b:
                raise ValueError(f"self-edge on {a!r}")
            if a not in self.packages or b not in self.packages:
                raise ValueError(f"edge ({a!r}, {b!r}) leaves the package set")

    @property
    def maintainers(self) -> frozenset[MaintainerId]:
        out: set[MaintainerId] = set()
        for ms in self.maintainers_of.values():
            out |= ms
        return frozenset(out)

    def packages_of(self) -> dict[MaintainerId, set[PackageName]]:
        owned: dict[MaintainerId, set[PackageName]] = {}
        for p, ms in self.maintainers_of.items():
            for m in ms:
                owned.setdefault(m, set()).add(p)
        return owned


@dataclass(frozen=True)
class Advisory:
    id: str
    package: PackageName
    published_at: datetime
    affected: RangeConstraint = field(default_factory=RangeConstraint.any)
    patched_at: Optional[datetime] = None
    patched_range: Optional[RangeConstraint] = None
