"""Reading registry and advisory dumps into a :class:`Corpus`.

Both inputs are newline-delimited JSON. Registry lines look like::

    {"name": "a", "version": "1.0.0", "time": "2015-01-01T00:00:00Z",
     "dependencies": {"b": "^1.0.0"}, "devDependencies": {}, "maintainers": ["alice"]}

and advisory lines like::

    {"id": "A1", "package": "b", "published": "2016-03-01T00:00:00Z",
     "affected": "<1.2.0", "patched": ">=1.2.0", "patched_time": null}
"""
from __future__ import annotations

import hashlib
import io
import json
import logging
from bisect import bisect_right
from dataclasses import dataclass, field
from datetime import datetime
from typing import IO, Iterable, Iterator, Optional

from .model import (
    Advisory,
    MaintainerId,
    PackageName,
    Release,
    format_timestamp,
    is_valid_package_name,
    parse_timestamp,
)
from .semver import RangeConstraint, RangeParseError, normalize_version

log = logging.getLogger(__name__)

CORPUS_MAGIC = "npmrisk-corpus"
CORPUS_FORMAT_VERSION = 1
MALFORMED_WARN_FRACTION = 0.10


class IngestError(Exception):
    """Fatal problem reading an input stream."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass
class IngestReport:
    lines: int = 0
    releases: int = 0
    malformed: int = 0
    missing_time: int = 0
    duplicates: int = 0
    self_deps_dropped: int = 0
    invalid_dep_names: int = 0
    non_range_specs: int = 0
    unparseable_versions: int = 0
    external_names: list[str] = field(default_factory=list)
    advisory_lines: int = 0
    advisories: int = 0
    advisories_skipped: int = 0
    advisory_duplicates: int = 0
    warnings: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "lines": self.lines,
            "releases": self.releases,
            "malformed": self.malformed,
            "missing_time": self.missing_time,
            "duplicates": self.duplicates,
            "self_deps_dropped": self.self_deps_dropped,
            "invalid_dep_names": self.invalid_dep_names,
            "non_range_specs": self.non_range_specs,
            "unparseable_versions": self.unparseable_versions,
            "external_names": len(self.external_names),
            "external_name_list": list(self.external_names),
            "advisory_lines": self.advisory_lines,
            "advisories": self.advisories,
            "advisories_skipped": self.advisories_skipped,
            "advisory_duplicates": self.advisory_duplicates,
            "warnings": list(self.warnings),
        }


class Corpus:
    """All releases ever seen, in canonical order, plus advisories."""

    def __init__(self, releases: Iterable[Release] = (), advisories: Iterable[Advisory] = ()):
        self.releases: list[Release] = sorted(releases, key=lambda r: r.order_key)
        self.advisories: list[Advisory] = list(advisories)
        self.package_index: dict[PackageName, list[Release]] = {}
        for r in self.releases:
            self.package_index.setdefault(r.package, []).append(r)
        for rels in self.package_index.values():
            rels.sort(key=lambda r: (r.published_at, r.version_key))
        self._times = {
            name: [r.published_at for r in rels] for name, rels in self.package_index.items()
        }

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Corpus):
            return NotImplemented
        return self.releases == other.releases and self.advisories == other.advisories

    def __len__(self) -> int:
        return len(self.releases)

    @property
    def start(self) -> Optional[datetime]:
        return self.releases[0].published_at if self.releases else None

    @property
    def end(self) -> Optional[datetime]:
        return self.releases[-1].published_at if self.releases else None

    def releases_until(self, package: PackageName, t: datetime) -> list[Release]:
        """Releases of ``package`` published at or before ``t``, oldest first."""
        rels = self.package_index.get(package)
        if not rels:
            return []
        return rels[: bisect_right(self._times[package], t)]

    def external_names(self) -> list[PackageName]:
        seen: set[PackageName] = set()
        for r in self.releases:
            seen.update(r.deps)
            seen.update(r.dev_deps)
        return sorted(seen - self.package_index.keys())


def _lines(stream: IO) -> Iterator[tuple[int, str]]:
    # Decode line by line from the byte buffer so errors carry the right line number.
    stream = getattr(stream, "buffer", stream)
    n = 0
    while True:
        n += 1
        try:
            line = stream.readline()
        except (OSError, UnicodeDecodeError) as exc:
            raise IngestError(f"unreadable input ({exc})", line=n) from exc
        if not line:
            return
        if isinstance(line, bytes):
            try:
                line = line.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise IngestError(f"unreadable input ({exc})", line=n) from exc
        yield n, line


def parse_dependency_spec(spec: object) -> tuple[RangeConstraint, bool]:
    """Return ``(range, is_real_range)``; git/file/URL/tag specs become wildcards."""
    if not isinstance(spec, str):
        return RangeConstraint.any(str(spec)), False
    try:
        return RangeConstraint.parse(spec), True
    except RangeParseError:
        return RangeConstraint.any(spec), False


def _maintainer_names(raw: object) -> frozenset[MaintainerId]:
    if not isinstance(raw, list):
        return frozenset()
    out = set()
    for entry in raw:
        if isinstance(entry, dict):
            entry = entry.get("name")
        if isinstance(entry, str) and entry.strip():
            out.add(entry.strip())
    return frozenset(out)


def _dep_map(raw: object, owner: str, report: IngestReport) -> dict[PackageName, RangeConstraint]:
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ValueError("dependency field is not an object")
    deps: dict[PackageName, RangeConstraint] = {}
    for name in sorted(raw):
        if name == owner:
            report.self_deps_dropped += 1
            continue
        if not is_valid_package_name(name):
            report.invalid_dep_names += 1
            continue
        rng, ok = parse_dependency_spec(raw[name])
        if not ok:
            report.non_range_specs += 1
        deps[name] = rng
    return deps


def release_from_doc(doc: dict, report: IngestReport) -> Optional[Release]:
    """Build a release from one registry document; ``None`` when it lacks a timestamp.

    Raises ``ValueError`` for malformed documents.
    """
    if not isinstance(doc, dict):
        raise ValueError("record is not an object")
    name, version = doc.get("name"), doc.get("version")
    if not is_valid_package_name(name):
        raise ValueError(f"invalid package name {name!r}")
    if not isinstance(version, str) or not version.strip():
        raise ValueError("missing version")
    if not doc.get("time"):
        return None
    published = parse_timestamp(doc["time"])
    deps = _dep_map(doc.get("dependencies"), name, report)
    dev_deps = _dep_map(doc.get("devDependencies"), name, report)
    parsed = normalize_version(version)
    if parsed is None:
        report.unparseable_versions += 1
    return Release(
        package=name,
        version_raw=version.strip(),
        published_at=published,
        deps=deps,
        dev_deps=dev_deps,
        maintainers=_maintainer_names(doc.get("maintainers")),
        version=parsed,
    )


def parse_registry(stream: IO, report: Optional[IngestReport] = None) -> Corpus:
    report = report if report is not None else IngestReport()
    by_key: dict[tuple[str, str], Release] = {}
    for n, line in _lines(stream):
        if not line.strip():
            continue
        report.lines += 1
        try:
            rel = release_from_doc(json.loads(line), report)
        except (ValueError, TypeError) as exc:
            report.malformed += 1
            log.debug("line %d skipped: %s", n, exc)
            continue
        if rel is None:
            report.missing_time += 1
            continue
        key = (rel.package, rel.version_raw)
        prev = by_key.get(key)
        if prev is not None:
            report.duplicates += 1
            if prev.published_at <= rel.published_at:
                continue
        by_key[key] = rel
    corpus = Corpus(by_key.values())
    report.releases = len(corpus.releases)
    report.external_names = corpus.external_names()
    if report.lines and report.malformed / report.lines > MALFORMED_WARN_FRACTION:
        msg = f"{report.malformed} of {report.lines} registry lines malformed"
        report.warnings.append(msg)
        log.warning(msg)
    return corpus


def advisory_from_doc(doc: dict) -> Advisory:
    if not isinstance(doc, dict):
        raise ValueError("record is not an object")
    adv_id, package, published = doc.get("id"), doc.get("package"), doc.get("published")
    if not isinstance(adv_id, (str, int)) or adv_id == "":
        raise ValueError("missing id")
    if not is_valid_package_name(package):
        raise ValueError("missing package")
    if not published:
        raise ValueError("missing published")
    affected = doc.get("affected")
    patched = doc.get("patched")
    patched_time = doc.get("patched_time")
    return Advisory(
        id=str(adv_id),
        package=package,
        published_at=parse_timestamp(published),
        affected=RangeConstraint.parse(affected) if affected else RangeConstraint.any(),
        patched_at=parse_timestamp(patched_time) if patched_time else None,
        patched_range=RangeConstraint.parse(patched) if patched else None,
    )


def parse_advisories(stream: IO, report: Optional[IngestReport] = None) -> list[Advisory]:
    report = report if report is not None else IngestReport()
    seen: set[str] = set()
    out: list[Advisory] = []
    for n, line in _lines(stream):
        if not line.strip():
            continue
        report.advisory_lines += 1
        try:
            adv = advisory_from_doc(json.loads(line))
        except (ValueError, TypeError) as exc:
            report.advisories_skipped += 1
            log.debug("advisory line %d skipped: %s", n, exc)
            continue
        if adv.id in seen:
            report.advisory_duplicates += 1
            continue
        seen.add(adv.id)
        out.append(adv)
    report.advisories = len(out)
    return out


def _range_text(r: Optional[RangeConstraint]) -> Optional[str]:
    return None if r is None else r.raw


def _release_record(r: Release) -> dict:
    return {
        "kind": "release",
        "name": r.package,
        "version": r.version_raw,
        "time": format_timestamp(r.published_at),
        "dependencies": {k: v.raw for k, v in r.deps.items()},
        "devDependencies": {k: v.raw for k, v in r.dev_deps.items()},
        "maintainers": sorted(r.maintainers),
    }


def _advisory_record(a: Advisory) -> dict:
    return {
        "kind": "advisory",
        "id": a.id,
        "package": a.package,
        "published": format_timestamp(a.published_at),
        "affected": a.affected.raw,
        "patched": _range_text(a.patched_range),
        "patched_time": format_timestamp(a.patched_at) if a.patched_at else None,
    }


def dump_corpus(corpus: Corpus, stream: IO[str]) -> None:
    """Write the canonical line-delimited corpus form (header line first)."""
    header = {"format": CORPUS_MAGIC, "version": CORPUS_FORMAT_VERSION,
              "releases": len(corpus.releases), "advisories": len(corpus.advisories)}
    stream.write(json.dumps(header, sort_keys=True) + "\n")
    for r in corpus.releases:
        stream.write(json.dumps(_release_record(r), sort_keys=True, separators=(",", ":")) + "\n")
    for a in sorted(corpus.advisories, key=lambda a: a.id):
        stream.write(json.dumps(_advisory_record(a), sort_keys=True, separators=(",", ":")) + "\n")


def dumps_corpus(corpus: Corpus) -> str:
    buf = io.StringIO()
    dump_corpus(corpus, buf)
    return buf.getvalue()


class CorpusFormatError(IngestError):
    pass


def load_corpus(stream: IO[str]) -> Corpus:
    first = stream.readline()
    try:
        header = json.loads(first)
    except ValueError:
        header = None
    if not isinstance(header, dict) or header.get("format") != CORPUS_MAGIC:
        raise CorpusFormatError("not a corpus file (missing header)", line=1)
    if header.get("version") != CORPUS_FORMAT_VERSION:
        raise CorpusFormatError(
            f"unsupported corpus format version {header.get('version')!r}", line=1
        )
    scratch = IngestReport()
    releases: list[Release] = []
    advisories: list[Advisory] = []
    for n, line in enumerate(stream, start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            kind = rec.pop("kind")
            if kind == "release":
                rel = release_from_doc(rec, scratch)
                if rel is None:
                    raise ValueError("release without time")
                releases.append(rel)
            elif kind == "advisory":
                advisories.append(advisory_from_doc(rec))
            else:
                raise ValueError(f"unknown record kind {kind!r}")
        except (ValueError, KeyError, TypeError) as exc:
            raise CorpusFormatError(str(exc), line=n) from exc
    return Corpus(releases, advisories)


def file_checksum(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
