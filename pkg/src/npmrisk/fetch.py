"""Mirroring registry metadata from a CouchDB-style endpoint to a local dump.

The output is the newline-delimited release format read by
:func:`npmrisk.ingest.parse_registry`, one line per published version. Progress
is checkpointed next to the output file so an interrupted run can resume.
"""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from typing import Any, Iterator, Literal, Optional

import requests

log = logging.getLogger(__name__)

FeedMode = Literal["changes", "all_docs"]


class FetchError(Exception):
    def __init__(self, message: str, status: Optional[int] = None):
        self.status = status
        super().__init__(message)


@dataclass
class FetchResult:
    docs: int
    lines: int
    last_seq: Any


def checkpoint_path(out_path: str) -> str:
    return out_path + ".checkpoint"


def read_checkpoint(out_path: str) -> Optional[dict]:
    try:
        with open(checkpoint_path(out_path), encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        return None


def _write_checkpoint(out_path: str, state: dict) -> None:
    tmp = checkpoint_path(out_path) + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(state, fh, sort_keys=True)
    os.replace(tmp, checkpoint_path(out_path))


def _maintainer_names(raw: Any) -> list[str]:
    names = []
    for m in raw or []:
        name = m.get("name") if isinstance(m, dict) else m
        if isinstance(name, str) and name:
            names.append(name)
    return sorted(set(names))


def flatten_document(doc: dict) -> list[dict]:
    """One release record per entry of a registry document's ``versions`` map."""
    name = doc.get("name") or doc.get("_id")
    versions = doc.get("versions") or {}
    times = doc.get("time") or {}
    records = []
    for version, manifest in versions.items():
        manifest = manifest if isinstance(manifest, dict) else {}
        maintainers = manifest.get("maintainers", doc.get("maintainers"))
        records.append({
            "name": name,
            "version": version,
            "time": times.get(version),
            "dependencies": manifest.get("dependencies") or {},
            "devDependencies": manifest.get("devDependencies") or {},
            "maintainers": _maintainer_names(maintainers),
        })
    records.sort(key=lambda r: (r["time"] or "", r["version"]))
    return records


def _get(session: requests.Session, url: str, params: dict, timeout: float) -> dict:
    try:
        resp = session.get(url, params=params, timeout=timeout)
    except requests.RequestException as exc:
        raise FetchError(f"request to {url} failed: {exc}") from exc
    if resp.status_code >= 400:
        raise FetchError(f"{url} returned HTTP {resp.status_code}", status=resp.status_code)
    try:
        return resp.json()
    except ValueError as exc:
        raise FetchError(f"{url} returned invalid JSON") from exc


def _changes_batches(session, base, since, batch_size, timeout) -> Iterator[tuple[list[dict], Any]]:
    while True:
        body = _get(session, f"{base}/_changes",
                    {"since": since, "include_docs": "true", "limit": batch_size}, timeout)
        results = body.get("results") or []
        if not results:
            return
        since = body.get("last_seq", results[-1].get("seq"))
        docs = [r.get("doc") for r in results if not r.get("deleted") and r.get("doc")]
        yield docs, since


def _all_docs_batches(session, base, startkey, batch_size, timeout) -> Iterator[tuple[list[dict], Any]]:
    while True:
        params = {"include_docs": "true", "limit": batch_size + 1}
        if startkey is not None:
            params["startkey"] = json.dumps(startkey)
        rows = _get(session, f"{base}/_all_docs", params, timeout).get("rows") or []
        more = len(rows) > batch_size
        page = rows[:batch_size]
        if not page:
            return
        docs = [r.get("doc") for r in page if r.get("doc")]
        startkey = rows[batch_size]["key"] if more else None
        yield docs, startkey
        if not more:
            return


def fetch_registry(
    endpoint: str,
    out_path: str,
    since_sequence: Optional[Any] = None,
    mode: FeedMode = "changes",
    batch_size: int = 500,
    timeout: float = 60.0,
    session: Optional[requests.Session] = None,
) -> FetchResult:
    """Stream registry documents into ``out_path``.

    With ``since_sequence`` the dump is appended to (resume); otherwise it is
    rewritten from sequence 0. In ``all_docs`` mode a resume continues from
    the checkpointed start key instead.
    """
    base = endpoint.rstrip("/")
    session = session or requests.Session()
    resuming = since_sequence is not None
    if mode == "changes":
        cursor = since_sequence if resuming else 0
        batches = _changes_batches(session, base, cursor, batch_size, timeout)
    elif mode == "all_docs":
        state = read_checkpoint(out_path) if resuming else None
        cursor = state.get("startkey") if state else None
        if state and state.get("complete"):
            batches = iter(())
        else:
            batches = _all_docs_batches(session, base, cursor, batch_size, timeout)
    else:
        raise ValueError(f"unknown feed mode {mode!r}")

    docs = lines = 0
    with open(out_path, "a" if resuming else "w", encoding="utf-8") as out:
        if not resuming:
            _write_checkpoint(out_path, {"mode": mode, "seq": cursor, "docs": 0})
        for batch, cursor in batches:
            for doc in batch:
                if str(doc.get("_id", "")).startswith("_design/"):
                    continue
                docs += 1
                for rec in flatten_document(doc):
                    out.write(json.dumps(rec, sort_keys=True) + "\n")
                    lines += 1
            out.flush()
            if mode == "changes":
                _write_checkpoint(out_path, {"mode": mode, "seq": cursor, "docs": docs})
            else:
                _write_checkpoint(out_path, {"mode": mode, "startkey": cursor, "docs": docs,
                                             "complete": cursor is None})
            log.info("fetched %d documents (cursor %r)", docs, cursor)
    return FetchResult(docs=docs, lines=lines, last_seq=cursor)
