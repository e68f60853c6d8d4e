import random
from fractions import Fraction
from itertools import combinations

import pytest

from npmrisk.maintainers import (
    average_itm,
    greedy_collusion,
    implicitly_trusted_maintainers,
    maintainer_influence_order,
    maintainer_reach,
    packages_per_maintainer_stats,
)
from npmrisk.model import NotFoundError, UndefinedStatisticError
from npmrisk.reach import build_reach_index, package_reach

from oracles import best_pair, make_snapshot, naive_greedy, oracle_itm, oracle_mr, random_digraph


def test_mr_single_package(fan_in):
    idx = build_reach_index(fan_in)
    assert maintainer_reach(idx, fan_in, "m_p1") == package_reach(idx, "p1")
    assert maintainer_reach(idx, fan_in, "m_p2") == set()
    assert maintainer_reach(idx, fan_in, "nobody") == set()


def test_mr_excludes_own_packages(chain):
    s = make_snapshot("abc", [("a", "b"), ("b", "c")], {"a": {"m"}, "b": {"m"}, "c": {"z"}})
    assert maintainer_reach(build_reach_index(s), s, "m") == {"a"}


def test_itm_chain(chain):
    idx = build_reach_index(chain)
    assert implicitly_trusted_maintainers(idx, chain, "a") == {"m_b", "m_c"}
    assert implicitly_trusted_maintainers(idx, chain, "c") == set()
    with pytest.raises(NotFoundError):
        implicitly_trusted_maintainers(idx, chain, "nope")


def test_itm_diamond(diamond):
    idx = build_reach_index(diamond)
    assert len(implicitly_trusted_maintainers(idx, diamond, "p4")) == 3


def test_average_itm(chain, fan_in):
    assert average_itm(build_reach_index(chain), chain) == 1
    edgeless = make_snapshot("xy", maintainers={"x": {"u"}, "y": {"v"}})
    assert average_itm(build_reach_index(edgeless), edgeless) == 0
    assert average_itm(build_reach_index(fan_in), fan_in, 1) == 0
    with pytest.raises(UndefinedStatisticError):
        empty = make_snapshot([])
        average_itm(build_reach_index(empty), empty)
    with pytest.raises(ValueError):
        average_itm(build_reach_index(chain), chain, 0)


def test_packages_per_maintainer():
    s = make_snapshot("abcd", maintainers={"a": {"x"}, "b": {"y"}, "c": {"y"}, "d": {"y"}})
    assert packages_per_maintainer_stats(s) == (Fraction(2), {1: 1, 3: 1})
    solo = make_snapshot("abc", maintainers={p: {f"u{p}"} for p in "abc"})
    assert packages_per_maintainer_stats(solo)[0] == 1
    with pytest.raises(UndefinedStatisticError):
        packages_per_maintainer_stats(make_snapshot("ab"))


def test_packages_per_maintainer_recount():
    rng = random.Random(3)
    pkgs = [f"p{i}" for i in range(40)]
    owners = {p: set(rng.sample(["a", "b", "c", "d", "e", "f"], rng.randint(1, 3))) for p in pkgs}
    avg, hist = packages_per_maintainer_stats(make_snapshot(pkgs, maintainers=owners))
    counts = {m: sum(m in o for o in owners.values()) for m in "abcdef"}
    counts = {m: c for m, c in counts.items() if c}
    assert avg == Fraction(sum(counts.values()), len(counts))
    assert hist == {c: list(counts.values()).count(c) for c in set(counts.values())}


def random_instance(rng, max_m=30, max_p=60):
    nodes, edges = random_digraph(rng, rng.randint(2, max_p), rng.uniform(0.01, 0.15))
    maint_ids = [f"m{i:02d}" for i in range(rng.randint(1, max_m))]
    owners = {p: set(rng.sample(maint_ids, rng.randint(1, min(3, len(maint_ids))))) for p in nodes}
    return nodes, edges, owners


def test_itm_and_mr_against_oracles():
    rng = random.Random(11)
    for _ in range(40):
        nodes, edges, owners = random_instance(rng, max_p=50)
        s = make_snapshot(nodes, edges, owners)
        idx = build_reach_index(s)
        itm, mr = oracle_itm(nodes, edges, owners), oracle_mr(nodes, edges, owners)
        for p in nodes:
            assert implicitly_trusted_maintainers(idx, s, p) == itm[p]
        for m, reach in mr.items():
            assert maintainer_reach(idx, s, m) == reach
            for p in nodes:
                assert (m in itm[p]) == (p in reach)


@pytest.mark.parametrize("seed", range(5))
def test_greedy_matches_naive(seed):
    rng = random.Random(seed)
    for _ in range(25):
        nodes, edges, owners = random_instance(rng)
        s = make_snapshot(nodes, edges, owners)
        idx = build_reach_index(s)
        mr = {m: maintainer_reach(idx, s, m) for m in s.maintainers}
        n = rng.randint(1, len(mr) + 2)
        plan = greedy_collusion(idx, s, n)
        chosen, cumulative = naive_greedy(mr, n)
        assert plan.chosen == chosen and plan.cumulative_coverage == cumulative
        gains = plan.marginal_gains
        assert all(a >= b for a, b in zip(gains, gains[1:]))
        assert plan.truncated == (n > len(mr))
        assert all(0 <= f <= 1 for f in plan.covered_fraction)


def suboptimal_instance():
    """m_a covers {1..4}; m_b covers {1,2,5}; m_c covers {3,4,6}: greedy takes m_a first."""
    targets = {"t1": {"m_a", "m_b"}, "t2": {"m_a", "m_b"}, "t3": {"m_a", "m_c"}, "t4": {"m_a", "m_c"},
               "t5": {"m_b"}, "t6": {"m_c"}}
    # Each target depends on one package per covering maintainer.
    nodes = list(targets) + ["lib_a", "lib_b", "lib_c"]
    edges = [(t, f"lib_{m[-1]}") for t, ms in targets.items() for m in ms]
    owners = {"lib_a": {"m_a"}, "lib_b": {"m_b"}, "lib_c": {"m_c"}}
    return make_snapshot(nodes, edges, owners)


def test_greedy_not_optimal_for_two():
    s = suboptimal_instance()
    idx = build_reach_index(s)
    mr = {m: maintainer_reach(idx, s, m) for m in s.maintainers}
    plan = greedy_collusion(idx, s, 2)
    assert (plan.chosen, plan.cumulative_coverage) == naive_greedy(mr, 2)
    assert plan.chosen[0] == "m_a" and plan.cumulative_coverage[-1] == 5
    assert best_pair(mr) == 6
    assert max(len(mr[a] | mr[b]) for a, b in combinations(sorted(mr), 2)) == 6


def test_single_maintainer_owns_everything(chain):
    s = make_snapshot("abc", [("a", "b"), ("b", "c")], {p: {"solo"} for p in "abc"})
    plan = greedy_collusion(build_reach_index(s), s, 5)
    assert plan.chosen == ["solo"] and plan.cumulative_coverage == [2]
    assert plan.truncated


def test_greedy_rejects_non_positive(chain):
    with pytest.raises(ValueError):
        greedy_collusion(build_reach_index(chain), chain, 0)


def test_greedy_threads_identical():
    rng = random.Random(77)
    nodes, edges, owners = random_instance(rng)
    s = make_snapshot(nodes, edges, owners)
    idx = build_reach_index(s)
    assert greedy_collusion(idx, s, 10, threads=1) == greedy_collusion(idx, s, 10, threads=4)


def test_influence_order(diamond):
    order = maintainer_influence_order(build_reach_index(diamond), diamond)
    assert order[:3] == ["m_p1", "m_p2", "m_p3"]
