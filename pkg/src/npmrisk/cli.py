"""Command-line entry point: ``npmrisk <command> ...``.

Exit codes: 0 ok, 1 fetch failure, 2 usage or parse error, 3 unknown package,
4 statistic undefined (e.g. averages over an empty snapshot).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from fractions import Fraction
from typing import Callable, Optional, Sequence

from . import advisories as adv
from .fetch import FetchError, fetch_registry
from .ingest import (
    Corpus,
    IngestError,
    IngestReport,
    dump_corpus,
    file_checksum,
    load_corpus,
    parse_advisories,
    parse_registry,
)
from .maintainers import (
    average_itm,
    greedy_collusion,
    packages_per_maintainer_stats,
)
from .mitigation import trusted_maintainer_curve, trusted_package_curve
from .model import NotFoundError, Snapshot, UndefinedStatisticError, format_timestamp, parse_timestamp
from .reach import (
    ReachIndex,
    average_itp,
    average_package_reach,
    build_reach_index,
    reach_distribution,
    top_packages,
)
from .snapshot import CADENCES, MAINTAINER_MODES, boundaries, build_snapshot, default_range
from . import synthetic

log = logging.getLogger("npmrisk")

EXIT_OK, EXIT_FETCH, EXIT_USAGE, EXIT_NOT_FOUND, EXIT_UNDEFINED = 0, 1, 2, 3, 4


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE):
        self.code = code
        super().__init__(message)


def parse_instant(text: str) -> datetime:
    """``YYYY`` (Jan 1 00:00 UTC), ``YYYY-MM-DD`` or full RFC 3339."""
    text = text.strip()
    try:
        if len(text) == 4 and text.isdigit():
            return datetime(int(text), 1, 1, tzinfo=timezone.utc)
        return parse_timestamp(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid timestamp {text!r}") from None


def fixed6(x: Fraction | float | int) -> str:
    """Exact decimal rendering with six places (round half to even)."""
    q = round(Fraction(x) * 1_000_000)
    sign = "-" if q < 0 else ""
    q = abs(q)
    return f"{sign}{q // 1_000_000}.{q % 1_000_000:06d}"


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (Fraction, float)):
        return fixed6(value)
    return str(value)


def _load(path: str) -> tuple[Corpus, str]:
    try:
        with open(path, encoding="utf-8") as fh:
            corpus = load_corpus(fh)
    except OSError as exc:
        raise CliError(f"cannot read corpus {path}: {exc.strerror or exc}") from exc
    except IngestError as exc:
        raise CliError(f"{path}: {exc}") from exc
    return corpus, file_checksum(path)


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(comment: str, header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    buf.write(f"# {comment}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _flags(args, *names: str) -> str:
    return " ".join(f"{n}={getattr(args, n.replace('-', '_'))}" for n in names)


def _snapshot_at(corpus: Corpus, args) -> Snapshot:
    at = args.at
    if at is None:
        if corpus.end is None:
            raise CliError("empty corpus and no --at given", EXIT_UNDEFINED)
        at = corpus.end
    return build_snapshot(corpus, at, args.maintainer_mode)


# -- ingest / fetch / synth ---------------------------------------------------

def cmd_ingest(args) -> int:
    report = IngestReport()
    try:
        with open(args.registry, encoding="utf-8") as fh:
            corpus = parse_registry(fh, report)
    except OSError as exc:
        raise CliError(f"cannot read {args.registry}: {exc.strerror or exc}") from exc
    except IngestError as exc:
        raise CliError(f"{args.registry}: {exc}") from exc
    advisories = []
    if args.advisories:
        try:
            with open(args.advisories, encoding="utf-8") as fh:
                advisories = parse_advisories(fh, report)
        except OSError as exc:
            raise CliError(f"cannot read {args.advisories}: {exc.strerror or exc}") from exc
        except IngestError as exc:
            raise CliError(f"{args.advisories}: {exc}") from exc
    corpus = Corpus(corpus.releases, advisories)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        dump_corpus(corpus, fh)
    summary = report.as_dict()
    report_path = args.report or args.out + ".report.json"
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    brief = {k: v for k, v in summary.items() if k != "external_name_list"}
    print(" ".join(f"{k}={v}" for k, v in brief.items() if not isinstance(v, list)), file=sys.stderr)
    return EXIT_OK


def cmd_fetch(args) -> int:
    try:
        res = fetch_registry(args.endpoint, args.out, since_sequence=args.since,
                             mode=args.feed, batch_size=args.batch_size)
    except FetchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FETCH
    print(f"docs={res.docs} lines={res.lines} last_seq={res.last_seq}")
    return EXIT_OK


def cmd_synth(args) -> int:
    records, advisories = synthetic.generate(args.packages, seed=args.seed)
    with open(args.registry_out, "w", encoding="utf-8") as fh:
        synthetic.write_jsonl(records, fh)
    if args.advisories_out:
        with open(args.advisories_out, "w", encoding="utf-8") as fh:
            synthetic.write_jsonl(advisories, fh)
    print(f"releases={len(records)} advisories={len(advisories)}")
    return EXIT_OK


# -- evolve -------------------------------------------------------------------

class _Frame:
    """Lazily computed per-snapshot state shared by the metric functions."""

    def __init__(self, corpus: Corpus, s: Snapshot, args, patch_times):
        self.corpus, self.s, self.args, self.patch_times = corpus, s, args, patch_times
        self._idx: Optional[ReachIndex] = None
        self._vr: Optional[adv.VulnerabilityReach] = None

    @property
    def idx(self) -> ReachIndex:
        if self._idx is None:
            self._idx = build_reach_index(self.s)
        return self._idx

    def vulnerable(self):
        return adv.vulnerable_packages(self.s, self.corpus.advisories, mode=self.args.advisory_mode,
                                       patch_times=self.patch_times)

    def vr(self) -> adv.VulnerabilityReach:
        if self._vr is None:
            self._vr = adv.vulnerability_reach(self.idx, self.s, self.corpus.advisories,
                                               mode=self.args.advisory_mode, patch_times=self.patch_times)
        return self._vr


def _per_10k(f: _Frame) -> Fraction:
    return adv.vrr(f.s, f.corpus.advisories, f.args.advisory_mode, patch_times=f.patch_times) * 10_000


METRICS: dict[str, Callable[[_Frame], object]] = {
    "packages": lambda f: len(f.s.packages),
    "maintainers": lambda f: len(f.s.maintainers),
    "edges": lambda f: len(f.s.edges),
    "avg-direct": lambda f: Fraction(len(f.s.edges), len(f.s.packages)),
    "avg-itp": lambda f: average_itp(f.idx),
    "avg-pr": lambda f: average_package_reach(f.idx),
    "avg-itm": lambda f: average_itm(f.idx, f.s),
    "avg-itm-top": lambda f: average_itm(f.idx, f.s, max(1, min(f.args.top_k, len(f.idx)))),
    "pkgs-per-maintainer": lambda f: packages_per_maintainer_stats(f.s)[0],
    "vulnerable": lambda f: len(f.vulnerable()),
    "vrr": lambda f: adv.vrr(f.s, f.corpus.advisories, f.args.advisory_mode, patch_times=f.patch_times),
    "vrr-per-10k": _per_10k,
    "vr-size": lambda f: len(f.vr().packages),
    "vr-fraction": lambda f: f.vr().fraction,
    "advisories": lambda f: adv.advisory_counts(f.corpus.advisories, f.s.at, f.patch_times).total,
    "unpatched": lambda f: adv.advisory_counts(f.corpus.advisories, f.s.at, f.patch_times).unpatched,
}
DEFAULT_METRICS = "packages,maintainers,avg-direct,avg-itp,avg-itm,vrr,vr-fraction"


def _evolve_row(corpus: Corpus, t: datetime, metrics: list[str], args, patch_times) -> list:
    s = build_snapshot(corpus, t, args.maintainer_mode)
    frame = _Frame(corpus, s, args, patch_times)
    row: list = [format_timestamp(t)]
    for name in metrics:
        try:
            row.append(METRICS[name](frame))
        except (UndefinedStatisticError, ZeroDivisionError):
            row.append(None)
    return row


def cmd_evolve(args) -> int:
    metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
    unknown = [m for m in metrics if m not in METRICS]
    if unknown or not metrics:
        raise CliError(f"unknown metric(s) {', '.join(unknown) or '(none)'}; "
                       f"valid: {', '.join(METRICS)}")
    corpus, checksum = _load(args.corpus)
    span = default_range(corpus, args.cadence)
    t0 = args.start or (span[0] if span else None)
    t1 = args.end or (span[1] if span else None)
    instants = boundaries(args.cadence, t0, t1) if t0 and t1 else []
    patch_times = adv.resolve_all(corpus.advisories, corpus)
    work = lambda t: _evolve_row(corpus, t, metrics, args, patch_times)  # noqa: E731
    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            rows = list(pool.map(work, instants))
    else:
        rows = [work(t) for t in instants]
    span_txt = f"{format_timestamp(t0)}..{format_timestamp(t1)}" if t0 and t1 else "empty"
    comment = (f"corpus_sha256={checksum} at={span_txt} cadence={args.cadence} "
               + _flags(args, "maintainer-mode", "advisory-mode"))
    _emit(args, _csv(comment, ["at", *metrics], rows))
    return EXIT_OK


# -- reach / collude / mitigate ----------------------------------------------

def cmd_reach(args) -> int:
    corpus, checksum = _load(args.corpus)
    s = _snapshot_at(corpus, args)
    idx = build_reach_index(s, "regular-plus-direct-dev" if args.dev else "regular")
    comment = (f"corpus_sha256={checksum} at={format_timestamp(s.at)} "
               f"edge_kind={idx.edge_kind} maintainer_mode={args.maintainer_mode}")
    blocks = []
    if args.package:
        try:
            i = idx.id(args.package)
        except NotFoundError as exc:
            raise CliError(str(exc), EXIT_NOT_FOUND) from exc
        row = [args.package, idx.pr_bits(i).bit_count(), idx.itp_bits(i).bit_count()]
        header = ["package", "reach", "itp"]
        if args.show_set:
            header.append("reach_set")
            row.append(" ".join(sorted(idx.to_names(idx.pr_bits(i)))))
        blocks.append(_csv(comment, header, [row]))
    if args.top:
        rows = [[r, name, size] for r, (name, size) in enumerate(top_packages(idx, args.top), 1)]
        blocks.append(_csv(comment, ["rank", "package", "reach"], rows))
    if args.distribution:
        try:
            thresholds = [int(x) for x in args.distribution.split(",") if x.strip()]
            dist = reach_distribution(idx, thresholds)
        except ValueError as exc:
            raise CliError(f"bad --distribution: {exc}") from exc
        blocks.append(_csv(comment, ["threshold", "packages"], sorted(dist.items())))
    if not blocks:
        try:
            avg = average_package_reach(idx)
        except UndefinedStatisticError as exc:
            raise CliError(str(exc), EXIT_UNDEFINED) from exc
        blocks.append(_csv(comment, ["packages", "avg_reach"], [[len(idx), avg]]))
    _emit(args, "\n".join(blocks))
    return EXIT_OK


def cmd_collude(args) -> int:
    if args.n <= 0:
        raise CliError("-n must be positive")
    corpus, checksum = _load(args.corpus)
    s = _snapshot_at(corpus, args)
    idx = build_reach_index(s)
    plan = greedy_collusion(idx, s, args.n, threads=args.threads)
    if plan.truncated:
        print(f"warning: only {len(plan.chosen)} maintainers at this instant", file=sys.stderr)
    rows = [[i, m, c, f] for i, (m, c, f) in
            enumerate(zip(plan.chosen, plan.cumulative_coverage, plan.covered_fraction), 1)]
    comment = (f"corpus_sha256={checksum} at={format_timestamp(s.at)} n={args.n} "
               f"universe={plan.universe} truncated={str(plan.truncated).lower()} "
               f"maintainer_mode={args.maintainer_mode}")
    _emit(args, _csv(comment, ["step", "maintainer", "cumulative_coverage", "covered_fraction"], rows))
    return EXIT_OK


def cmd_mitigate(args) -> int:
    if args.k_max < 0:
        raise CliError("--k-max must be non-negative")
    corpus, checksum = _load(args.corpus)
    s = _snapshot_at(corpus, args)
    idx = build_reach_index(s)
    try:
        if args.mode == "packages":
            curve = trusted_package_curve(idx, s, args.k_max)
        else:
            strategy = {"influence": "by-mr-influence", "greedy": "greedy-coverage"}[args.strategy]
            curve = trusted_maintainer_curve(idx, s, args.k_max, strategy)
    except UndefinedStatisticError as exc:
        raise CliError(str(exc), EXIT_UNDEFINED) from exc
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    comment = (f"corpus_sha256={checksum} at={format_timestamp(s.at)} mode={args.mode} "
               f"strategy={args.strategy if args.mode == 'maintainers' else 'by-reach'} "
               f"maintainer_mode={args.maintainer_mode}")
    rows = [[p.k, p.trusted or "", p.residual_average] for p in curve]
    _emit(args, _csv(comment, ["k", "trusted", "residual_average"], rows))
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="npmrisk", description="Dependency-graph risk metrics for package registries")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse registry/advisory dumps into a corpus file")
    p.add_argument("--registry", required=True)
    p.add_argument("--advisories")
    p.add_argument("--out", required=True)
    p.add_argument("--report", help="ingestion report path (default: <out>.report.json)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("fetch", help="mirror a CouchDB-style registry into a dump file")
    p.add_argument("--endpoint", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--since", type=int, help="resume from this change sequence")
    p.add_argument("--feed", choices=("changes", "all_docs"), default="changes")
    p.add_argument("--batch-size", type=int, default=500)
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("synth", help="write a seeded synthetic registry")
    p.add_argument("--packages", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--registry-out", required=True)
    p.add_argument("--advisories-out")
    p.set_defaults(func=cmd_synth)

    def common(p, at=True):
        p.add_argument("--corpus", required=True)
        if at:
            p.add_argument("--at", type=parse_instant, help="YYYY or RFC 3339 (default: last release)")
        p.add_argument("--maintainer-mode", choices=MAINTAINER_MODES, default="at-time")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--out")

    p = sub.add_parser("evolve", help="metric time series, one row per interval start")
    common(p, at=False)
    p.add_argument("--cadence", choices=CADENCES, default="yearly")
    p.add_argument("--metrics", default=DEFAULT_METRICS)
    p.add_argument("--from", dest="start", type=parse_instant)
    p.add_argument("--to", dest="end", type=parse_instant)
    p.add_argument("--advisory-mode", choices=adv.MODES, default="retroactive")
    p.add_argument("--top-k", type=int, default=10_000, help="package count for avg-itm-top")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("reach", help="package reach at one instant")
    common(p)
    p.add_argument("--package")
    p.add_argument("--dev", action="store_true", help="add one inbound direct dev-dependency step")
    p.add_argument("--top", type=int)
    p.add_argument("--distribution", help="comma-separated reach thresholds")
    p.add_argument("--show-set", action="store_true")
    p.set_defaults(func=cmd_reach)

    p = sub.add_parser("collude", help="greedy maintainer collusion plan")
    common(p)
    p.add_argument("-n", type=int, required=True)
    p.set_defaults(func=cmd_collude)

    p = sub.add_parser("mitigate", help="vetting curves for trusted packages or maintainers")
    common(p)
    p.add_argument("--mode", choices=("packages", "maintainers"), required=True)
    p.add_argument("--k-max", type=int, required=True)
    p.add_argument("--strategy", choices=("influence", "greedy"), default="influence")
    p.set_defaults(func=cmd_mitigate)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors this way
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
