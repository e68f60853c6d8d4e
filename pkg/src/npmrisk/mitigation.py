"""Vetting simulations and the ITP-vs-advisories correlation.

Residual averages use two counting identities instead of re-walking every
ITP/ITM set for every k:

    sum_p |ITP(p) - T| = sum_p |ITP(p)| - sum_{q in T} |PR(q)|
    sum_p |ITM(p) - T| = sum_p |ITM(p)| - sum_{m in T} |MR(m)|

Both hold because q is in ITP(p) exactly when p is in PR(q), and m is in
ITM(p) exactly when p is in MR(m).
"""
from __future__ import annotations

import statistics
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal, Optional, Sequence

from .maintainers import (
    _table,
    greedy_collusion,
    itm_bits_all,
    maintainer_influence_order,
    mr_bits_all,
)
from .model import Advisory, MaintainerId, Snapshot, UndefinedStatisticError
from .reach import ReachIndex, iter_bits, top_packages

MaintainerStrategy = Literal["by-mr-influence", "greedy-coverage"]
MAINTAINER_STRATEGIES = ("by-mr-influence", "greedy-coverage")


@dataclass(frozen=True)
class CurvePoint:
    k: int
    trusted: Optional[str]  # entity added at this k; None for the baseline
    residual_average: Fraction


def trusted_package_curve(
    idx: ReachIndex, s: Snapshot, k_max: int, strategy: str = "by-itp-influence"
) -> list[CurvePoint]:
    """Average |ITP \\ trusted| as the top-k packages by reach become trusted.

    The most depended-upon packages (largest |PR|, ties by name) are vetted first.
    """
    if strategy != "by-itp-influence":
        raise ValueError(f"unknown strategy {strategy!r}")
    n = len(idx)
    if n == 0:
        raise UndefinedStatisticError("vetting curve of an empty snapshot")
    if not 0 <= k_max <= n:
        raise ValueError(f"k_max must be in [0, {n}], got {k_max}")
    ranked = top_packages(idx, k_max)
    remaining = sum(idx.itp_sizes())
    out = [CurvePoint(0, None, Fraction(remaining, n))]
    for k, (name, reach_size) in enumerate(ranked, start=1):
        remaining -= reach_size
        out.append(CurvePoint(k, name, Fraction(remaining, n)))
    return out


def maintainer_order(idx: ReachIndex, s: Snapshot, strategy: MaintainerStrategy, k: int) -> list[MaintainerId]:
    if strategy == "by-mr-influence":
        return maintainer_influence_order(idx, s)[:k]
    if strategy == "greedy-coverage":
        return greedy_collusion(idx, s, k).chosen if k else []
    raise ValueError(f"unknown strategy {strategy!r}")


def trusted_maintainer_curve(
    idx: ReachIndex, s: Snapshot, k_max: int, strategy: MaintainerStrategy = "by-mr-influence"
) -> list[CurvePoint]:
    """Average |ITM \\ trusted| as maintainers are vetted in a fixed global order."""
    n = len(idx)
    if n == 0:
        raise UndefinedStatisticError("vetting curve of an empty snapshot")
    table = _table(idx, s)
    if not 0 <= k_max <= len(table.ids):
        raise ValueError(f"k_max must be in [0, {len(table.ids)}], got {k_max}")
    mr = mr_bits_all(idx, s)
    remaining = sum(b.bit_count() for b in itm_bits_all(idx, s))
    out = [CurvePoint(0, None, Fraction(remaining, n))]
    for k, m in enumerate(maintainer_order(idx, s, strategy, k_max), start=1):
        remaining -= mr[table.id_of[m]].bit_count()
        out.append(CurvePoint(k, m, Fraction(remaining, n)))
    return out


PAIRING_RULE = (
    "x = |ITP(p)|; y = number of advisories whose package is p or in ITP(p); "
    "one sample per package in the snapshot"
)


@dataclass(frozen=True)
class Correlation:
    pearson_r: float
    samples: int
    rule: str = PAIRING_RULE


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    if len(xs) != len(ys):
        raise ValueError("paired samples differ in length")
    if len(xs) < 2:
        raise UndefinedStatisticError("correlation needs at least two samples")
    try:
        return statistics.correlation(xs, ys)
    except statistics.StatisticsError as exc:
        raise UndefinedStatisticError(str(exc)) from exc


def itp_vulnerability_samples(
    idx: ReachIndex, advisories: Sequence[Advisory]
) -> tuple[list[int], list[int]]:
    per_package = [0] * len(idx)
    flagged = 0
    for a in advisories:
        i = idx.id_of.get(a.package)
        if i is not None:
            per_package[i] += 1
            flagged |= 1 << i
    sizes = idx.itp_sizes()
    ys = []
    for i in range(len(idx)):
        hits = (idx.itp_bits(i) | (1 << i)) & flagged
        ys.append(sum(per_package[q] for q in iter_bits(hits)))
    return list(sizes), ys


def itp_vulnerability_correlation(
    idx: ReachIndex, s: Snapshot, advisories: Sequence[Advisory]
) -> Correlation:
    xs, ys = itp_vulnerability_samples(idx, advisories)
    return Correlation(pearson(xs, ys), len(xs))
