from __future__ import annotations

import io
import json
import sys
from datetime import datetime, timezone

import pytest

from npmrisk.ingest import Corpus, parse_advisories, parse_registry
from oracles import make_snapshot

UTC = timezone.utc


def ts(year, month=1, day=1, hour=0):
    return datetime(year, month, day, hour, tzinfo=UTC)


def jsonl(records) -> io.StringIO:
    return io.StringIO("".join(json.dumps(r) + "\n" for r in records))


def corpus_from(records, advisories=()) -> Corpus:
    c = parse_registry(jsonl(records))
    return Corpus(c.releases, parse_advisories(jsonl(advisories)) if advisories else [])


def rec(name, version, time, deps=None, dev=None, maintainers=("alice",)):
    return {"name": name, "version": version, "time": time, "dependencies": deps or {},
            "devDependencies": dev or {}, "maintainers": list(maintainers)}


# Six packages: p2..p6 all depend on p1 (fan-in), or p4 sits on a diamond above p1.
FAN_IN_EDGES = [("p2", "p1"), ("p3", "p1"), ("p4", "p1"), ("p5", "p1"), ("p6", "p1")]
DIAMOND_EDGES = [("p2", "p1"), ("p3", "p1"), ("p4", "p2"), ("p4", "p3")]
SIX = [f"p{i}" for i in range(1, 7)]


@pytest.fixture
def fan_in():
    return make_snapshot(SIX, FAN_IN_EDGES, {p: {f"m_{p}"} for p in SIX})


@pytest.fixture
def diamond():
    return make_snapshot(SIX, DIAMOND_EDGES, {p: {f"m_{p}"} for p in SIX})


@pytest.fixture
def chain():
    """a -> b -> c, each with its own sole maintainer."""
    return make_snapshot("abc", [("a", "b"), ("b", "c")], {"a": {"m_a"}, "b": {"m_b"}, "c": {"m_c"}})


def six_package_records(edges, year=2017):
    deps = {}
    for a, b in edges:
        deps.setdefault(a, {})[b] = "^1.0.0"
    return [rec(p, "1.0.0", f"{year}-06-01T00:00:00Z", deps.get(p), maintainers=[f"m_{p}"])
            for p in SIX]


# Four advisories, one per patch situation, on packages first released in 2012.
#   u: never patched              (published 2015-03-01)
#   q: patched before publication (patched 2013-01-01, published 2014-06-01)
#   r: patched after publication  (published 2014-02-01, patched 2016-03-01)
#   s: patch derived from a range (published 2013-06-01, ">=1.2.0" first released 2015-05-01)
ADVISORY_RECORDS = [
    rec("u", "1.0.0", "2012-01-01T00:00:00Z", maintainers=["mu"]),
    rec("q", "1.0.0", "2012-01-01T00:00:00Z", maintainers=["mq"]),
    rec("r", "1.0.0", "2012-01-01T00:00:00Z", maintainers=["mr"]),
    rec("s", "1.0.0", "2012-01-01T00:00:00Z", maintainers=["ms"]),
    rec("s", "1.1.0", "2014-01-01T00:00:00Z", maintainers=["ms"]),
    rec("s", "1.2.0", "2015-05-01T00:00:00Z", maintainers=["ms"]),
    rec("s", "1.3.0", "2017-05-01T00:00:00Z", maintainers=["ms"]),
    rec("app", "1.0.0", "2012-01-01T00:00:00Z", {"u": "^1", "s": "^1"}, maintainers=["ma"]),
    rec("web", "1.0.0", "2012-01-01T00:00:00Z", {"app": "^1"}, maintainers=["mw"]),
]
ADVISORIES = [
    {"id": "ADV-U", "package": "u", "published": "2015-03-01T00:00:00Z"},
    {"id": "ADV-Q", "package": "q", "published": "2014-06-01T00:00:00Z", "patched_time": "2013-01-01T00:00:00Z"},
    {"id": "ADV-R", "package": "r", "published": "2014-02-01T00:00:00Z", "patched_time": "2016-03-01T00:00:00Z"},
    {"id": "ADV-S", "package": "s", "published": "2013-06-01T00:00:00Z", "patched": ">=1.2.0"},
]
ADVISORY_YEARS = list(range(2012, 2019))
# Hand-computed: years (Jan 1) at which each advisory marks its package vulnerable.
VULNERABLE_YEARS = {
    "retroactive": {"ADV-U": set(ADVISORY_YEARS), "ADV-Q": {2012, 2013},
                    "ADV-R": {2012, 2013, 2014, 2015, 2016}, "ADV-S": {2012, 2013, 2014, 2015}},
    "strict": {"ADV-U": {2016, 2017, 2018}, "ADV-Q": set(),
               "ADV-R": {2015, 2016}, "ADV-S": {2014, 2015}},
}
# (published so far, still unpatched) at each Jan 1.
EVOLUTION = {2012: (0, 0), 2013: (0, 0), 2014: (1, 1), 2015: (3, 2), 2016: (4, 2), 2017: (4, 1), 2018: (4, 1)}


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
