import random

import pytest

from npmrisk.ingest import Corpus
from npmrisk.snapshot import boundaries, build_snapshot, default_range, snapshot_series

from conftest import corpus_from, rec, ts
from oracles import brute_force_snapshot


def two_step():
    return corpus_from([
        rec("a", "1.0.0", "2015-01-01T00:00:00Z", {"b": "^1.0.0"}),
        rec("b", "1.0.0", "2016-01-01T00:00:00Z"),
    ])


def test_dependency_not_yet_published():
    s = build_snapshot(two_step(), ts(2015, 6))
    assert s.packages == {"a"} and s.edges == frozenset()


def test_dependency_published():
    s = build_snapshot(two_step(), ts(2016, 6))
    assert s.packages == {"a", "b"} and s.edges == {("a", "b")}


def test_latest_release_wins():
    c = corpus_from([
        rec("b", "1.0.0", "2014-01-01T00:00:00Z"),
        rec("a", "1.0.0", "2015-01-01T00:00:00Z", {"b": "*"}),
        rec("a", "2.0.0", "2015-06-01T00:00:00Z"),
    ])
    assert build_snapshot(c, ts(2015, 3)).edges == {("a", "b")}
    assert build_snapshot(c, ts(2016)).edges == frozenset()


def test_same_instant_tie_goes_to_highest_version():
    c = corpus_from([
        rec("b", "1.0.0", "2014-01-01T00:00:00Z"),
        rec("a", "1.10.0", "2015-01-01T00:00:00Z", {"b": "*"}),
        rec("a", "1.9.0", "2015-01-01T00:00:00Z"),
    ])
    assert build_snapshot(c, ts(2016)).edges == {("a", "b")}


def test_before_first_release_is_empty():
    s = build_snapshot(two_step(), ts(2010))
    assert s.packages == frozenset() and s.edges == frozenset()


def test_release_at_exact_instant_included():
    assert build_snapshot(two_step(), ts(2016)).packages == {"a", "b"}


def test_dev_edges_follow_latest_release():
    c = corpus_from([
        rec("t", "1.0.0", "2014-01-01T00:00:00Z"),
        rec("a", "1.0.0", "2015-01-01T00:00:00Z", dev={"t": "^1"}),
    ])
    s = build_snapshot(c, ts(2016))
    assert s.dev_edges == {("a", "t")} and s.edges == frozenset()


def test_maintainer_modes():
    c = corpus_from([
        rec("a", "1.0.0", "2015-01-01T00:00:00Z", maintainers=["ann"]),
        rec("a", "1.1.0", "2016-01-01T00:00:00Z", maintainers=["bo"]),
    ])
    assert build_snapshot(c, ts(2017)).maintainers_of["a"] == {"bo"}
    assert build_snapshot(c, ts(2017), "lifetime-union").maintainers_of["a"] == {"ann", "bo"}
    with pytest.raises(ValueError):
        build_snapshot(c, ts(2017), "sometimes")


def test_yearly_boundaries_2011_2018():
    got = boundaries("yearly", ts(2011), ts(2018))
    assert got == [ts(y) for y in range(2011, 2019)]


def test_monthly_boundaries_one_year():
    got = boundaries("monthly", ts(2015), ts(2015, 12))
    assert got == [ts(2015, m) for m in range(1, 13)]


def test_boundaries_skip_partial_start():
    assert boundaries("yearly", ts(2011, 3), ts(2013)) == [ts(2012), ts(2013)]


def test_series_on_empty_corpus():
    series = snapshot_series(Corpus([], []), "yearly", ts(2011), ts(2018))
    assert len(series) == 8
    assert all(not s.packages for s in series)


def test_default_range():
    assert default_range(two_step(), "yearly") == (ts(2016), ts(2017))
    assert default_range(Corpus([], []), "yearly") is None


def random_corpus(rng, n_packages=25, n_releases=120):
    names = [f"pkg{i}" for i in range(n_packages)]
    records = []
    for _ in range(n_releases):
        name = rng.choice(names)
        deps = {d: "*" for d in rng.sample(names, rng.randint(0, 4))}
        dev = {d: "*" for d in rng.sample(names, rng.randint(0, 2))}
        when = f"{rng.randint(2010, 2018)}-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}T00:00:00Z"
        version = f"{rng.randint(0, 3)}.{rng.randint(0, 9)}.{rng.randint(0, 9)}"
        owners = rng.sample(["u1", "u2", "u3", "u4", "u5"], rng.randint(1, 2))
        records.append(rec(name, version, when, deps, dev, owners))
    return corpus_from(records)


@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("mode", ["at-time", "lifetime-union"])
def test_matches_brute_force(seed, mode):
    c = random_corpus(random.Random(seed))
    for t in boundaries("monthly", ts(2010), ts(2019)):
        s = build_snapshot(c, t, mode)
        packages, edges, maint = brute_force_snapshot(c.releases, t, mode)
        assert s.packages == packages
        assert s.edges == edges
        assert {p: set(m) for p, m in s.maintainers_of.items()} == maint


def test_package_count_non_decreasing():
    c = random_corpus(random.Random(42))
    sizes = [len(s.packages) for s in snapshot_series(c, "monthly", ts(2010), ts(2019))]
    assert sizes == sorted(sizes)


def test_series_thread_independent():
    c = random_corpus(random.Random(7))
    one = snapshot_series(c, "yearly", ts(2010), ts(2019), threads=1)
    many = snapshot_series(c, "yearly", ts(2010), ts(2019), threads=4)
    assert one == many
