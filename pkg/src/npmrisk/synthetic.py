"""Seeded synthetic registries for benchmarks and demos.

Packages appear over several years with super-linear growth; dependencies
are drawn with preferential attachment so a few packages end up with very
large reach, as in real registries. Later releases may add dependencies on
newer packages, which occasionally closes a cycle.
"""
from __future__ import annotations

import json
import random
from datetime import datetime, timedelta, timezone
from typing import IO, Iterator

from .model import format_timestamp


def _timestamps(rng: random.Random, n: int, start_year: int, end_year: int) -> list[datetime]:
    start = datetime(start_year, 1, 1, tzinfo=timezone.utc)
    span = (datetime(end_year, 1, 1, tzinfo=timezone.utc) - start).total_seconds()
    # u**0.5 puts more arrivals late in the window
    return sorted(start + timedelta(seconds=int(span * rng.random() ** 0.5)) for _ in range(n))


def generate(
    n_packages: int = 1000,
    seed: int = 0,
    start_year: int = 2010,
    end_year: int = 2018,
    mean_deps: float = 2.5,
    advisory_rate: float = 0.01,
) -> tuple[list[dict], list[dict]]:
    """Registry records and advisory records, ready to serialize as JSON lines."""
    rng = random.Random(seed)
    created = _timestamps(rng, n_packages, start_year, end_year)
    names = [f"pkg{i:05d}" for i in range(n_packages)]
    n_maint = max(1, n_packages // 3)
    maint_names = [f"dev{i:05d}" for i in range(n_maint)]
    end = datetime(end_year, 1, 1, tzinfo=timezone.utc)

    popularity: list[int] = []  # package index repeated once per inbound edge
    records: list[dict] = []
    for i, name in enumerate(names):
        if rng.random() < 0.3:
            # heavy tail: a handful of low-numbered accounts own many packages
            owner = min(int(rng.paretovariate(1.2)) - 1, n_maint - 1)
        else:
            owner = rng.randrange(n_maint)
        owners = {maint_names[owner]}
        if rng.random() < 0.25:
            owners.add(rng.choice(maint_names))
        t = created[i]
        n_releases = 1 + min(int(rng.expovariate(0.7)), 6)
        deps: dict[str, str] = {}
        for r in range(n_releases):
            if r:
                t = t + timedelta(days=rng.randint(1, 200))
                if t >= end:
                    break
            if i and (r == 0 or rng.random() < 0.4):
                k = min(int(rng.expovariate(1 / mean_deps)), i)
                for _ in range(k):
                    if popularity and rng.random() < 0.8:
                        j = rng.choice(popularity)
                    else:
                        j = rng.randrange(i)
                    if j != i and names[j] not in deps:
                        deps[names[j]] = f"^{rng.randint(0, 3)}.{rng.randint(0, 9)}.0"
                        popularity.append(j)
                if r and rng.random() < 0.05:
                    # forward reference to a newer package: may close a cycle
                    deps[names[rng.randrange(i, n_packages)]] = "*"
                    deps.pop(name, None)
            dev = {}
            if i and rng.random() < 0.3:
                dev[names[rng.randrange(i)]] = "latest"
            if rng.random() < 0.1:
                owners.add(rng.choice(maint_names))
            records.append({
                "name": name,
                "version": f"1.{r}.0",
                "time": format_timestamp(t),
                "dependencies": dict(sorted(deps.items())),
                "devDependencies": dev,
                "maintainers": sorted(owners),
            })

    advisories = []
    for i, name in enumerate(names):
        if rng.random() >= advisory_rate:
            continue
        published = created[i] + timedelta(days=rng.randint(30, 900))
        rec = {"id": f"ADV-{len(advisories) + 1:04d}", "package": name,
               "published": format_timestamp(published), "affected": "<1.1.0",
               "patched": None, "patched_time": None}
        roll = rng.random()
        if roll < 0.3:
            rec["patched_time"] = format_timestamp(published + timedelta(days=rng.randint(-60, 400)))
        elif roll < 0.6:
            rec["patched"] = ">=1.1.0"
        advisories.append(rec)
    records.sort(key=lambda r: (r["time"], r["name"], r["version"]))
    return records, advisories


def write_jsonl(records: list[dict], stream: IO[str]) -> None:
    for rec in records:
        stream.write(json.dumps(rec, sort_keys=True) + "\n")


def iter_lines(records: list[dict]) -> Iterator[str]:
    for rec in records:
        yield json.dumps(rec, sort_keys=True) + "\n"
