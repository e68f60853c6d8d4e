"""Package reach (who depends on p) and implicitly trusted packages (what p depends on).

Reach sets are Python ints used as bitsets over a dense, name-sorted id
space. Strongly connected components are collapsed first so that the
closure is a single pass over the condensation DAG in each direction.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Iterator, Literal, Optional, Sequence

from .model import NotFoundError, PackageName, Snapshot, UndefinedStatisticError

EdgeKind = Literal["regular", "regular-plus-direct-dev"]
EDGE_KINDS = ("regular", "regular-plus-direct-dev")

# 2**33 bits is 1 GiB of closure bitsets.
DEFAULT_BIT_BUDGET = 1 << 33


def iter_bits(x: int) -> Iterator[int]:
    s = bin(x)[:1:-1]
    i = s.find("1")
    while i != -1:
        yield i
        i = s.find("1", i + 1)


def strongly_connected_components(succ: Sequence[Sequence[int]]) -> list[list[int]]:
    """Iterative Tarjan. Components come out sinks-first (reverse topological order)."""
    n = len(succ)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, i = work[-1]
            nbrs = succ[v]
            if i < len(nbrs):
                work[-1] = (v, i + 1)
                w = nbrs[i]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w] and index[w] < low[v]:
                    low[v] = index[w]
                continue
            work.pop()
            if work:
                u = work[-1][0]
                if low[v] < low[u]:
                    low[u] = low[v]
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comp.sort()
                comps.append(comp)
    return comps


class ReachIndex:
    """Answers PR/ITP queries for one snapshot.

    When the closure bitsets would exceed ``bit_budget`` bits the index keeps
    only adjacency lists and answers each query by BFS; results are the same.
    """

    def __init__(self, snapshot: Snapshot, edge_kind: EdgeKind = "regular",
                 bit_budget: int = DEFAULT_BIT_BUDGET):
        if edge_kind not in EDGE_KINDS:
            raise ValueError(f"unknown edge kind {edge_kind!r}")
        self.snapshot = snapshot
        self.edge_kind = edge_kind
        self.names: list[PackageName] = sorted(snapshot.packages)
        self.id_of: dict[PackageName, int] = {p: i for i, p in enumerate(self.names)}
        n = len(self.names)
        self.succ: list[list[int]] = [[] for _ in range(n)]
        self.pred: list[list[int]] = [[] for _ in range(n)]
        for a, b in snapshot.edges:
            ia, ib = self.id_of[a], self.id_of[b]
            self.succ[ia].append(ib)
            self.pred[ib].append(ia)
        # dev_pred[p]: packages with a direct dev dependency on p
        self.dev_pred: list[list[int]] = [[] for _ in range(n)]
        self.dev_succ: list[list[int]] = [[] for _ in range(n)]
        if edge_kind == "regular-plus-direct-dev":
            for a, b in snapshot.dev_edges:
                ia, ib = self.id_of[a], self.id_of[b]
                self.dev_pred[ib].append(ia)
                self.dev_succ[ia].append(ib)
        for adj in (self.succ, self.pred, self.dev_pred, self.dev_succ):
            for lst in adj:
                lst.sort()

        self.components = strongly_connected_components(self.succ)
        self.comp_of = [0] * n
        for c, members in enumerate(self.components):
            for v in members:
                self.comp_of[v] = c
        self.comp_succ: list[list[int]] = []
        for c, members in enumerate(self.components):
            out = {self.comp_of[w] for v in members for w in self.succ[v]}
            out.discard(c)
            self.comp_succ.append(sorted(out))

        self.bitset = 2 * len(self.components) * n <= bit_budget
        self._fwd: list[int] = []
        self._bwd: list[int] = []
        if self.bitset:
            self._build_closures()
        self._pr_cache: dict[int, int] = {}
        self._itp_cache: dict[int, int] = {}
        self._pr_sizes: Optional[list[int]] = None
        self._itp_sizes: Optional[list[int]] = None

    def __len__(self) -> int:
        return len(self.names)

    def _build_closures(self) -> None:
        comps = self.components
        members_bits = [sum(1 << v for v in members) for members in comps]
        fwd = [0] * len(comps)
        for c in range(len(comps)):  # sinks first
            acc = members_bits[c]
            for d in self.comp_succ[c]:
                acc |= fwd[d]
            fwd[c] = acc
        comp_pred: list[list[int]] = [[] for _ in comps]
        for c, outs in enumerate(self.comp_succ):
            for d in outs:
                comp_pred[d].append(c)
        bwd = [0] * len(comps)
        for c in reversed(range(len(comps))):
            acc = members_bits[c]
            for d in comp_pred[c]:
                acc |= bwd[d]
            bwd[c] = acc
        self._fwd, self._bwd = fwd, bwd

    def _bfs(self, start: int, adj: list[list[int]]) -> int:
        seen = 0
        frontier = [start]
        while frontier:
            nxt = []
            for v in frontier:
                for w in adj[v]:
                    bit = 1 << w
                    if not seen & bit:
                        seen |= bit
                        nxt.append(w)
            frontier = nxt
        return seen & ~(1 << start)

    def _regular_pr(self, i: int) -> int:
        if self.bitset:
            return self._bwd[self.comp_of[i]] & ~(1 << i)
        return self._bfs(i, self.pred)

    def _regular_itp(self, i: int) -> int:
        if self.bitset:
            return self._fwd[self.comp_of[i]] & ~(1 << i)
        return self._bfs(i, self.succ)

    def id(self, p: PackageName) -> int:
        try:
            return self.id_of[p]
        except KeyError:
            raise NotFoundError(f"package {p!r} is not in the snapshot") from None

    def pr_bits(self, i: int) -> int:
        if self.edge_kind == "regular":
            return self._regular_pr(i)
        hit = self._pr_cache.get(i)
        if hit is not None:
            return hit
        acc = self._regular_pr(i)
        for d in self.dev_pred[i]:
            acc |= (1 << d) | self._regular_pr(d)
        acc &= ~(1 << i)
        self._pr_cache[i] = acc
        return acc

    def itp_bits(self, i: int) -> int:
        if self.edge_kind == "regular":
            return self._regular_itp(i)
        hit = self._itp_cache.get(i)
        if hit is not None:
            return hit
        base = self._regular_itp(i)
        acc = base
        for d in [i, *iter_bits(base)]:
            for p in self.dev_succ[d]:
                acc |= 1 << p
        acc &= ~(1 << i)
        self._itp_cache[i] = acc
        return acc

    def pr_sizes(self) -> list[int]:
        if self._pr_sizes is None:
            self._pr_sizes = [self.pr_bits(i).bit_count() for i in range(len(self.names))]
        return self._pr_sizes

    def itp_sizes(self) -> list[int]:
        if self._itp_sizes is None:
            self._itp_sizes = [self.itp_bits(i).bit_count() for i in range(len(self.names))]
        return self._itp_sizes

    def to_names(self, bits: int) -> set[PackageName]:
        return {self.names[i] for i in iter_bits(bits)}

    def bits_of(self, packages: Iterable[PackageName]) -> int:
        acc = 0
        for p in packages:
            acc |= 1 << self.id(p)
        return acc


def build_reach_index(s: Snapshot, edge_kind: EdgeKind = "regular",
                      bit_budget: int = DEFAULT_BIT_BUDGET) -> ReachIndex:
    return ReachIndex(s, edge_kind, bit_budget)


def package_reach(idx: ReachIndex, p: PackageName) -> set[PackageName]:
    return idx.to_names(idx.pr_bits(idx.id(p)))


def implicitly_trusted_packages(idx: ReachIndex, p: PackageName) -> set[PackageName]:
    return idx.to_names(idx.itp_bits(idx.id(p)))


def average_package_reach(idx: ReachIndex) -> Fraction:
    if not len(idx):
        raise UndefinedStatisticError("average reach of an empty snapshot")
    return Fraction(sum(idx.pr_sizes()), len(idx))


def average_itp(idx: ReachIndex) -> Fraction:
    if not len(idx):
        raise UndefinedStatisticError("average ITP of an empty snapshot")
    return Fraction(sum(idx.itp_sizes()), len(idx))


def reach_distribution(idx: ReachIndex, thresholds: Iterable[int]) -> dict[int, int]:
    sizes = idx.pr_sizes()
    out = {}
    for t in thresholds:
        if t <= 0:
            raise ValueError(f"threshold must be positive, got {t}")
        out[t] = sum(1 for s in sizes if s >= t)
    return out


def top_packages(idx: ReachIndex, k: int) -> list[tuple[PackageName, int]]:
    """The ``k`` packages with the largest reach, ties broken by name."""
    sizes = idx.pr_sizes()
    order = sorted(range(len(sizes)), key=lambda i: (-sizes[i], idx.names[i]))
    return [(idx.names[i], sizes[i]) for i in order[:k]]


def direct_and_transitive_averages(s: Snapshot, idx: ReachIndex) -> tuple[Fraction, Fraction]:
    if not s.packages:
        raise UndefinedStatisticError("averages of an empty snapshot")
    return Fraction(len(s.edges), len(s.packages)), average_itp(idx)
