"""Maintainer reach, implicitly trusted maintainers and the greedy collusion plan."""
from __future__ import annotations

import heapq
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .model import MaintainerId, PackageName, Snapshot, UndefinedStatisticError
from .reach import ReachIndex, iter_bits, top_packages


class MaintainerTable:
    """Dense maintainer ids for one snapshot, plus per-package maintainer bitsets."""

    def __init__(self, idx: ReachIndex, s: Snapshot):
        self.ids: list[MaintainerId] = sorted(s.maintainers)
        self.id_of = {m: i for i, m in enumerate(self.ids)}
        self.pkg_bits: list[int] = [0] * len(idx)
        self.owned: list[list[int]] = [[] for _ in self.ids]
        for p, ms in s.maintainers_of.items():
            pi = idx.id_of.get(p)
            if pi is None:
                continue
            for m in ms:
                mi = self.id_of[m]
                self.pkg_bits[pi] |= 1 << mi
                self.owned[mi].append(pi)
        for lst in self.owned:
            lst.sort()

    def names(self, bits: int) -> set[MaintainerId]:
        return {self.ids[i] for i in iter_bits(bits)}


def _table(idx: ReachIndex, s: Snapshot) -> MaintainerTable:
    cached = getattr(idx, "_maintainer_table", None)
    if cached is None:
        cached = MaintainerTable(idx, s)
        idx._maintainer_table = cached  # type: ignore[attr-defined]
    return cached


def mr_bits_all(idx: ReachIndex, s: Snapshot) -> list[int]:
    """MR(m) as package bitsets, indexed by the maintainer table's ids."""
    cached = getattr(idx, "_mr_bits", None)
    if cached is not None:
        return cached
    table = _table(idx, s)
    out = []
    for owned in table.owned:
        acc = 0
        for p in owned:
            acc |= idx.pr_bits(p)
        out.append(acc)
    idx._mr_bits = out  # type: ignore[attr-defined]
    return out


def maintainer_reach(idx: ReachIndex, s: Snapshot, m: MaintainerId) -> set[PackageName]:
    table = _table(idx, s)
    mi = table.id_of.get(m)
    if mi is None:
        return set()
    return idx.to_names(mr_bits_all(idx, s)[mi])


def itm_bits_all(idx: ReachIndex, s: Snapshot) -> list[int]:
    """ITM(p) as maintainer bitsets for every package id."""
    cached = getattr(idx, "_itm_bits", None)
    if cached is not None:
        return cached
    table = _table(idx, s)
    mb = table.pkg_bits
    if idx.edge_kind == "regular":
        out = _itm_via_condensation(idx, mb)
    else:
        out = []
        for i in range(len(idx)):
            acc = 0
            for q in iter_bits(idx.itp_bits(i)):
                acc |= mb[q]
            out.append(acc)
    idx._itm_bits = out  # type: ignore[attr-defined]
    return out


def _itm_via_condensation(idx: ReachIndex, mb: list[int]) -> list[int]:
    # closed[c]: maintainers of every package reachable from component c, c included
    closed = [0] * len(idx.components)
    out = [0] * len(idx)
    for c, members in enumerate(idx.components):
        acc = 0
        for d in idx.comp_succ[c]:
            acc |= closed[d]
        own = 0
        for v in members:
            own |= mb[v]
        closed[c] = acc | own
        if len(members) == 1:
            out[members[0]] = acc
            continue
        # p's own component minus p itself: prefix/suffix ORs
        k = len(members)
        prefix = [0] * (k + 1)
        for j, v in enumerate(members):
            prefix[j + 1] = prefix[j] | mb[v]
        suffix = 0
        for j in range(k - 1, -1, -1):
            v = members[j]
            out[v] = acc | prefix[j] | suffix
            suffix |= mb[v]
    return out


def implicitly_trusted_maintainers(idx: ReachIndex, s: Snapshot, p: PackageName) -> set[MaintainerId]:
    i = idx.id(p)
    return _table(idx, s).names(itm_bits_all(idx, s)[i])


Scope = Union[str, int]


def average_itm(idx: ReachIndex, s: Snapshot, scope: Scope = "all") -> Fraction:
    """Mean |ITM| over all packages, or over the ``scope`` packages with largest reach."""
    sizes = [b.bit_count() for b in itm_bits_all(idx, s)]
    if scope == "all":
        chosen = range(len(sizes))
    elif isinstance(scope, int) and scope > 0:
        chosen = [idx.id_of[name] for name, _ in top_packages(idx, scope)]
    else:
        raise ValueError(f"invalid scope {scope!r}")
    if not len(chosen):
        raise UndefinedStatisticError("average ITM over an empty scope")
    return Fraction(sum(sizes[i] for i in chosen), len(chosen))


def packages_per_maintainer_stats(s: Snapshot) -> tuple[Fraction, dict[int, int]]:
    counts = Counter()
    for ms in s.maintainers_of.values():
        for m in ms:
            counts[m] += 1
    if not counts:
        raise UndefinedStatisticError("snapshot has no maintainers")
    histogram = Counter(counts.values())
    return Fraction(sum(counts.values()), len(counts)), dict(sorted(histogram.items()))


def maintainer_influence_order(idx: ReachIndex, s: Snapshot) -> list[MaintainerId]:
    """Maintainers by |MR| descending, ties by id."""
    table = _table(idx, s)
    sizes = [b.bit_count() for b in mr_bits_all(idx, s)]
    order = sorted(range(len(sizes)), key=lambda i: (-sizes[i], table.ids[i]))
    return [table.ids[i] for i in order]


@dataclass(frozen=True)
class CollusionPlan:
    chosen: list[MaintainerId]
    cumulative_coverage: list[int]
    covered_fraction: list[Fraction]
    universe: int
    truncated: bool = False

    @property
    def marginal_gains(self) -> list[int]:
        prev, out = 0, []
        for c in self.cumulative_coverage:
            out.append(c - prev)
            prev = c
        return out


def greedy_collusion(idx: ReachIndex, s: Snapshot, n: int, threads: int = 1) -> CollusionPlan:
    """Hill climbing over maintainers: each step adds the largest marginal MR gain.

    Lazy (CELF) evaluation: a stale heap entry's gain is an upper bound on its
    current gain, so a fresh entry at the top of a ``(-gain, id)`` heap is the
    same pick a full re-evaluation would make, ties included.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    table = _table(idx, s)
    mr = mr_bits_all(idx, s)
    m_count = len(table.ids)
    limit = min(n, m_count)

    def gain0(j: int) -> int:
        return mr[j].bit_count()

    if threads > 1 and m_count > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            gains = list(pool.map(gain0, range(m_count)))
    else:
        gains = [gain0(j) for j in range(m_count)]
    heap = [(-g, table.ids[j], j, 0) for j, g in enumerate(gains)]
    heapq.heapify(heap)

    covered = 0
    step = 0
    chosen: list[MaintainerId] = []
    cumulative: list[int] = []
    while step < limit:
        neg, name, j, stamp = heapq.heappop(heap)
        if stamp == step:
            covered |= mr[j]
            chosen.append(name)
            cumulative.append(covered.bit_count())
            step += 1
        else:
            heapq.heappush(heap, (-(mr[j] & ~covered).bit_count(), name, j, step))
    universe = len(idx)
    fractions = [Fraction(c, universe) if universe else Fraction(0) for c in cumulative]
    return CollusionPlan(chosen, cumulative, fractions, universe, truncated=n > m_count)

