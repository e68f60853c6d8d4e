import random
from fractions import Fraction

import pytest

from npmrisk.model import NotFoundError, UndefinedStatisticError
from npmrisk.reach import (
    average_itp,
    average_package_reach,
    build_reach_index,
    direct_and_transitive_averages,
    implicitly_trusted_packages,
    package_reach,
    reach_distribution,
    strongly_connected_components,
    top_packages,
)

from oracles import make_snapshot, oracle_itp, oracle_modified_pr, oracle_pr, random_digraph


def test_fan_in(fan_in):
    idx = build_reach_index(fan_in)
    assert package_reach(idx, "p1") == {"p2", "p3", "p4", "p5", "p6"}
    assert max(idx.pr_sizes()) == 5 and max(idx.itp_sizes()) == 1
    assert average_package_reach(idx) == Fraction(5, 6) == average_itp(idx)


def test_diamond(diamond):
    idx = build_reach_index(diamond)
    assert package_reach(idx, "p1") == {"p2", "p3", "p4"}
    assert implicitly_trusted_packages(idx, "p4") == {"p1", "p2", "p3"}
    assert max(idx.pr_sizes()) == 3 and max(idx.itp_sizes()) == 3
    assert average_package_reach(idx) == Fraction(5, 6) == average_itp(idx)


def test_isolated_and_leaf():
    idx = build_reach_index(make_snapshot(["solo"]))
    assert package_reach(idx, "solo") == set()
    assert implicitly_trusted_packages(idx, "solo") == set()
    assert average_package_reach(idx) == 0


def test_two_cycle_excludes_self():
    idx = build_reach_index(make_snapshot("ab", [("a", "b"), ("b", "a")]))
    assert package_reach(idx, "a") == {"b"}
    assert package_reach(idx, "b") == {"a"}
    assert implicitly_trusted_packages(idx, "a") == {"b"}


def test_unknown_package(chain):
    idx = build_reach_index(chain)
    with pytest.raises(NotFoundError):
        package_reach(idx, "zzz")
    with pytest.raises(NotFoundError):
        implicitly_trusted_packages(idx, "zzz")


def test_empty_snapshot_average_undefined():
    idx = build_reach_index(make_snapshot([]))
    with pytest.raises(UndefinedStatisticError):
        average_package_reach(idx)
    with pytest.raises(UndefinedStatisticError):
        direct_and_transitive_averages(make_snapshot([]), idx)


def test_distribution(fan_in):
    idx = build_reach_index(fan_in)
    assert reach_distribution(idx, [1, 5]) == {1: 1, 5: 1}
    edgeless = build_reach_index(make_snapshot("xyz"))
    assert reach_distribution(edgeless, [1, 2]) == {1: 0, 2: 0}
    with pytest.raises(ValueError):
        reach_distribution(idx, [0])


def test_top_packages(fan_in):
    idx = build_reach_index(fan_in)
    assert top_packages(idx, 3) == [("p1", 5), ("p2", 0), ("p3", 0)]


def test_direct_and_transitive(fan_in, chain):
    assert direct_and_transitive_averages(fan_in, build_reach_index(fan_in)) == (
        Fraction(5, 6), Fraction(5, 6))
    assert direct_and_transitive_averages(chain, build_reach_index(chain)) == (Fraction(2, 3), Fraction(1))
    edgeless = make_snapshot("xyz")
    assert direct_and_transitive_averages(edgeless, build_reach_index(edgeless)) == (0, 0)


def test_scc_sinks_first():
    # 0 -> 1 <-> 2 -> 3
    comps = strongly_connected_components([[1], [2], [1, 3], []])
    assert comps == [[3], [1, 2], [0]]


def graphs(count, seed=1234, max_n=30):
    rng = random.Random(seed)
    for i in range(count):
        n = rng.randint(1, max_n)
        density = 0.01 + (0.49 * i / max(count - 1, 1))
        yield random_digraph(rng, n, density)


@pytest.mark.parametrize("budget", [None, 0], ids=["bitset", "bfs"])
def test_closure_oracle(budget):
    for nodes, edges in graphs(60):
        kw = {} if budget is None else {"bit_budget": budget}
        idx = build_reach_index(make_snapshot(nodes, edges), **kw)
        assert idx.bitset is (budget is None)
        pr, itp = oracle_pr(nodes, edges), oracle_itp(nodes, edges)
        for p in nodes:
            assert package_reach(idx, p) == pr[p]
            assert implicitly_trusted_packages(idx, p) == itp[p]


def test_handshake_duality_bounds():
    for nodes, edges in graphs(60, seed=99):
        idx = build_reach_index(make_snapshot(nodes, edges))
        assert sum(idx.pr_sizes()) == sum(idx.itp_sizes())
        for p in nodes:
            pr = package_reach(idx, p)
            assert 0 <= len(pr) < len(nodes)
            for q in pr:
                assert p in implicitly_trusted_packages(idx, q)


def dev_graphs(count, seed=5):
    rng = random.Random(seed)
    for _ in range(count):
        nodes, edges = random_digraph(rng, rng.randint(2, 25), rng.uniform(0.02, 0.3))
        dev = [(a, b) for a in nodes for b in nodes if a != b and rng.random() < 0.08]
        yield nodes, edges, dev


@pytest.mark.parametrize("budget", [None, 0], ids=["bitset", "bfs"])
def test_modified_reach_oracle(budget):
    for nodes, edges, dev in dev_graphs(50):
        kw = {} if budget is None else {"bit_budget": budget}
        idx = build_reach_index(make_snapshot(nodes, edges, dev_edges=dev), "regular-plus-direct-dev", **kw)
        want = oracle_modified_pr(nodes, edges, dev)
        for p in nodes:
            assert package_reach(idx, p) == want[p]
        assert sum(idx.pr_sizes()) == sum(idx.itp_sizes())
        for q in nodes:
            for p in implicitly_trusted_packages(idx, q):
                assert q in want[p]


def test_dev_edge_used_only_as_first_step():
    # linter -> tokenizer (dev), app -> linter (regular), tool -> app (dev)
    s = make_snapshot(["app", "linter", "tokenizer", "tool"], [("app", "linter")],
                      dev_edges=[("linter", "tokenizer"), ("tool", "app")])
    idx = build_reach_index(s, "regular-plus-direct-dev")
    assert package_reach(idx, "tokenizer") == {"linter", "app"}
    assert package_reach(build_reach_index(s), "tokenizer") == set()


def test_unknown_edge_kind(chain):
    with pytest.raises(ValueError):
        build_reach_index(chain, "optional")
