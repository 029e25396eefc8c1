"""Gerrit REST ingestion: fetch change data and normalize it into ChangeRecords.

The transport layer speaks the Gerrit changes REST protocol (XSSI guard,
`_more_changes` pagination, detail endpoint with ALL_REVISIONS / ALL_COMMITS /
ALL_FILES / MESSAGES / DETAILED_ACCOUNTS options).  Normalization turns the raw
JSON documents into :class:`ChangeRecord` values; :func:`crawl_project` streams
them into a JSONL dataset with idempotent resume by change number.
"""

from __future__ import annotations

import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Iterator, Sequence

import requests

from .errors import HttpError, MalformedJsonError, NotFoundError, SchemaError

XSSI_GUARD = b")]}'"
RETRY_BACKOFF_SECONDS = 0.25
AUTH_USER_ENV = "GERRIT_HTTP_USER"
AUTH_PASSWORD_ENV = "GERRIT_HTTP_PASSWORD"

DEFAULT_BOT_ACCOUNTS = ("bot", "CI", "Jenkins", "Zuul", "SonarQube")

DETAIL_OPTIONS = (
    "ALL_REVISIONS",
    "ALL_COMMITS",
    "ALL_FILES",
    "MESSAGES",
    "DETAILED_ACCOUNTS",
)

PSEUDO_FILES = ("/COMMIT_MSG", "/MERGE_LIST")

RESTORE_MARKER = "Restored"


class ChangeStatus(str, Enum):
    MERGED = "MERGED"
    ABANDONED = "ABANDONED"
    NEW = "NEW"


@dataclass(frozen=True)
class CrawlConfig:
    base_url: str
    query: str = "status:merged OR status:abandoned"
    page_size: int = 100
    max_changes: int | None = None
    request_timeout: float = 30.0
    max_retries: int = 3
    min_request_interval_ms: float = 0.0
    bot_accounts: tuple[str, ...] = DEFAULT_BOT_ACCOUNTS
    fetch_file_diffs: bool = True

    def __post_init__(self):
        if self.page_size < 1:
            raise ValueError("page_size must be >= 1")
        if self.min_request_interval_ms < 0:
            raise ValueError("min_request_interval_ms must be >= 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if not (self.base_url.startswith("http://") or self.base_url.startswith("https://")):
            raise ValueError("base_url must be an absolute http(s) URL")
        if self.max_changes is not None and self.max_changes < 1:
            raise ValueError("max_changes must be >= 1 when set")
        object.__setattr__(self, "bot_accounts", tuple(self.bot_accounts))


@dataclass(frozen=True)
class RawChange:
    data: dict
    fetched_at: datetime

    def __post_init__(self):
        if not isinstance(self.data, dict):
            raise SchemaError("raw change payload is not a JSON object")
        for key in ("_number", "status", "created"):
            if key not in self.data:
                raise SchemaError(f"raw change missing required key {key!r}")


@dataclass(frozen=True)
class FileDiff:
    path: str
    lines_inserted: int
    lines_deleted: int
    # per-file edit segment counts (added, deleted, modified) parsed from the
    # revision diff; None when diff content was not fetched
    segments: tuple[int, int, int] | None = None

    def __post_init__(self):
        if not self.path:
            raise SchemaError("file path must be non-empty")
        if self.lines_inserted < 0 or self.lines_deleted < 0:
            raise SchemaError("negative line counts")


@dataclass(frozen=True)
class ReviewMessage:
    author_id: int
    author_name: str
    posted_at: datetime
    text: str
    revision_number: int | None = None
    from_bot: bool = False


@dataclass(frozen=True)
class ChangeRecord:
    change_id: str
    number: int
    project: str
    branch: str
    status: ChangeStatus
    created_at: datetime
    closed_at: datetime | None
    owner_id: int
    owner_name: str
    owner_tz_offset_minutes: int
    subject: str
    message_body: str
    files: tuple[FileDiff, ...]
    messages: tuple[ReviewMessage, ...]
    reopened: bool
    insertions_total: int
    deletions_total: int
    tz_offset_missing: bool = False

    def __post_init__(self):
        closed = self.status in (ChangeStatus.MERGED, ChangeStatus.ABANDONED)
        if closed and self.closed_at is None:
            raise SchemaError(f"change {self.number}: closed status without closed_at")
        if not closed and self.closed_at is not None:
            raise SchemaError(f"change {self.number}: closed_at on open change")
        if self.closed_at is not None and self.closed_at < self.created_at:
            raise SchemaError(f"change {self.number}: closed_at precedes created_at")


def parse_gerrit_json(body: bytes | str) -> Any:
    """Parse a Gerrit REST response, stripping the XSSI guard when present."""
    if isinstance(body, str):
        body = body.encode("utf-8")
    if body.startswith(XSSI_GUARD):
        body = body[len(XSSI_GUARD):]
        if body.startswith(b"\n"):
            body = body[1:]
    try:
        return json.loads(body)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedJsonError(f"response is not valid JSON: {exc}") from exc


def parse_gerrit_timestamp(value: str) -> datetime:
    """Parse Gerrit's 'YYYY-MM-DD HH:MM:SS.nnnnnnnnn' UTC format.

    Nanosecond digits beyond microseconds are truncated, not rounded.
    """
    main, _, frac = value.partition(".")
    dt = datetime.strptime(main, "%Y-%m-%d %H:%M:%S")
    micros = int(frac[:6].ljust(6, "0")) if frac else 0
    return dt.replace(microsecond=micros, tzinfo=timezone.utc)


def is_bot_account(name: str, bot_accounts: Sequence[str]) -> bool:
    return any(marker in name for marker in bot_accounts)


def parse_diff_segments(diff_doc: dict) -> tuple[int, int, int]:
    """Count maximal contiguous edit hunks in a revision file diff document.

    The diff content is a list of blocks: ``ab`` runs are unchanged context;
    blocks carrying ``a`` (removed lines) and/or ``b`` (inserted lines) are
    edits.  A segment with only insertions counts as added, only deletions as
    deleted, both as modified.
    """
    added = deleted = modified = 0
    for block in diff_doc.get("content", []):
        has_a = bool(block.get("a"))
        has_b = bool(block.get("b"))
        if has_a and has_b:
            modified += 1
        elif has_b:
            added += 1
        elif has_a:
            deleted += 1
    return added, deleted, modified


class GerritClient:
    """Paced, retrying HTTP client for the Gerrit changes REST API."""

    def __init__(self, config: CrawlConfig, session: requests.Session | None = None):
        self.config = config
        self.session = session or requests.Session()
        user = os.environ.get(AUTH_USER_ENV)
        password = os.environ.get(AUTH_PASSWORD_ENV)
        if user and password:
            self.session.auth = (user, password)
        self.request_log: list[float] = []
        self._pace_lock = threading.Lock()
        self._last_request_start: float | None = None

    def _pace(self):
        interval = self.config.min_request_interval_ms / 1000.0
        with self._pace_lock:
            now = time.monotonic()
            if self._last_request_start is not None and interval > 0:
                earliest = self._last_request_start + interval
                if now < earliest:
                    time.sleep(earliest - now)
                    now = time.monotonic()
            self._last_request_start = now
            self.request_log.append(now)

    def _get(self, path: str, params: dict | None = None) -> Any:
        url = self.config.base_url.rstrip("/") + path
        last_exc: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            self._pace()
            try:
                resp = self.session.get(url, params=params, timeout=self.config.request_timeout)
            except requests.RequestException as exc:
                last_exc = HttpError(f"transport failure for {url}: {exc}")
            else:
                if resp.status_code == 404:
                    raise NotFoundError(f"not found: {url}", status=404)
                if resp.status_code >= 500 or resp.status_code == 429:
                    last_exc = HttpError(f"server error {resp.status_code} for {url}",
                                         status=resp.status_code)
                elif resp.status_code >= 400:
                    raise HttpError(f"request failed ({resp.status_code}) for {url}",
                                    status=resp.status_code)
                else:
                    return parse_gerrit_json(resp.content)
            if attempt < self.config.max_retries:
                time.sleep(RETRY_BACKOFF_SECONDS * (2 ** attempt))
        raise last_exc  # type: ignore[misc]

    def fetch_change_page(self, start_offset: int) -> tuple[list[RawChange], bool]:
        if start_offset < 0:
            raise ValueError("start_offset must be >= 0")
        payload = self._get(
            "/changes/",
            params={"q": self.config.query, "n": self.config.page_size, "start": start_offset},
        )
        if not isinstance(payload, list):
            raise MalformedJsonError("change listing is not a JSON array")
        now = datetime.now(timezone.utc)
        changes = [RawChange(data=doc, fetched_at=now) for doc in payload]
        more = bool(payload and payload[-1].get("_more_changes"))
        return changes, more

    def fetch_change_detail(self, change_number: int) -> RawChange:
        doc = self._get(
            f"/changes/{change_number}/detail",
            params={"o": list(DETAIL_OPTIONS)},
        )
        if not isinstance(doc, dict):
            raise MalformedJsonError("change detail is not a JSON object")
        if self.config.fetch_file_diffs:
            doc = dict(doc)
            doc["_file_diffs"] = self._fetch_revision_diffs(doc)
        return RawChange(data=doc, fetched_at=datetime.now(timezone.utc))

    def _fetch_revision_diffs(self, doc: dict) -> dict[str, dict]:
        revision = _first_revision(doc)
        if revision is None:
            return {}
        number = doc.get("_number")
        diffs: dict[str, dict] = {}
        for path in revision.get("files", {}):
            if path in PSEUDO_FILES:
                continue
            quoted = requests.utils.quote(path, safe="")
            try:
                diffs[path] = self._get(
                    f"/changes/{number}/revisions/1/files/{quoted}/diff"
                )
            except (HttpError, MalformedJsonError):
                continue  # fall back to per-file segment classification
        return diffs

    def iter_changes(self, max_changes: int | None = None) -> Iterator[dict]:
        """Yield change-listing documents across pages, bounded by max_changes."""
        limit = max_changes if max_changes is not None else self.config.max_changes
        offset = 0
        yielded = 0
        while True:
            page, more = self.fetch_change_page(offset)
            for raw in page:
                yield raw.data
                yielded += 1
                if limit is not None and yielded >= limit:
                    return
            if not more or not page:
                return
            offset += len(page)


def fetch_change_page(config: CrawlConfig, start_offset: int) -> tuple[list[RawChange], bool]:
    return GerritClient(config).fetch_change_page(start_offset)


def fetch_change_detail(config: CrawlConfig, change_number: int) -> RawChange:
    return GerritClient(config).fetch_change_detail(change_number)


def _first_revision(doc: dict) -> dict | None:
    revisions = doc.get("revisions") or {}
    best = None
    for rev in revisions.values():
        num = rev.get("_number")
        if num == 1:
            return rev
        if best is None or (num is not None and num < best.get("_number", 1 << 30)):
            best = rev
    return best


def _require(doc: dict, key: str):
    if key not in doc:
        raise SchemaError(f"change document missing required key {key!r}")
    return doc[key]


def normalize_change(raw: RawChange, config: CrawlConfig) -> ChangeRecord:
    """Normalize a raw Gerrit change document into a ChangeRecord."""
    doc = raw.data
    number = int(_require(doc, "_number"))
    status = ChangeStatus(_require(doc, "status"))
    created_at = parse_gerrit_timestamp(_require(doc, "created"))
    owner = _require(doc, "owner")
    owner_id = int(_require(owner, "_account_id"))
    owner_name = owner.get("name", "")
    subject = doc.get("subject", "")

    closed_at = None
    if status in (ChangeStatus.MERGED, ChangeStatus.ABANDONED):
        closed_raw = doc.get("submitted") if status is ChangeStatus.MERGED else None
        if closed_raw is None:
            closed_raw = doc.get("updated")
        if closed_raw is None:
            raise SchemaError(f"change {number}: no submitted/updated timestamp")
        closed_at = parse_gerrit_timestamp(closed_raw)

    revision = _first_revision(doc)
    tz_offset = 0
    tz_missing = True
    message_body = ""
    files: list[FileDiff] = []
    if revision is not None:
        commit = revision.get("commit") or {}
        author = commit.get("author") or {}
        if "tz" in author:
            tz_offset = int(author["tz"])
            tz_missing = False
        message_body = commit.get("message", "")
        file_diffs = doc.get("_file_diffs") or {}
        for path in sorted(revision.get("files", {})):
            if path in PSEUDO_FILES:
                continue
            info = revision["files"][path]
            segments = None
            if path in file_diffs:
                segments = parse_diff_segments(file_diffs[path])
            files.append(FileDiff(
                path=path,
                lines_inserted=int(info.get("lines_inserted", 0)),
                lines_deleted=int(info.get("lines_deleted", 0)),
                segments=segments,
            ))

    messages: list[ReviewMessage] = []
    for msg in doc.get("messages", []):
        author = msg.get("author") or {}
        name = author.get("name", "")
        messages.append(ReviewMessage(
            author_id=int(author.get("_account_id", -1)),
            author_name=name,
            posted_at=parse_gerrit_timestamp(_require(msg, "date")),
            text=msg.get("message", ""),
            revision_number=msg.get("_revision_number"),
            from_bot=is_bot_account(name, config.bot_accounts),
        ))

    reopened = any(m.text.startswith(RESTORE_MARKER) for m in messages)

    return ChangeRecord(
        change_id=doc.get("change_id", doc.get("id", str(number))),
        number=number,
        project=doc.get("project", ""),
        branch=doc.get("branch", ""),
        status=status,
        created_at=created_at,
        closed_at=closed_at,
        owner_id=owner_id,
        owner_name=owner_name,
        owner_tz_offset_minutes=tz_offset,
        subject=subject,
        message_body=message_body,
        files=tuple(files),
        messages=tuple(messages),
        reopened=reopened,
        insertions_total=sum(f.lines_inserted for f in files),
        deletions_total=sum(f.lines_deleted for f in files),
        tz_offset_missing=tz_missing,
    )


def crawl_project(config: CrawlConfig, output_path: str | Path, jobs: int = 1):
    """Crawl all changes matching the config query into a JSONL dataset.

    Appends incrementally and skips change numbers already present in the
    output file, so an interrupted crawl can be resumed by re-running.  Detail
    fetches may run concurrently (``jobs``); writes are serialized.
    Returns the final DatasetManifest.
    """
    from . import dataset as ds

    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    seen = ds.existing_change_numbers(output_path)
    segments_from_diff = config.fetch_file_diffs

    client = GerritClient(config)
    manifest = ds.DatasetManifest(
        project="",
        crawl_query=config.query,
        created_at=datetime.now(timezone.utc),
        count=len(seen),
        schema_version=ds.SCHEMA_VERSION,
        complete=False,
        segments_from_diff=segments_from_diff,
    )
    ds.write_manifest(manifest, output_path)

    def fetch_and_normalize(number: int) -> ChangeRecord:
        return normalize_change(client.fetch_change_detail(number), config)

    numbers = (doc["_number"] for doc in client.iter_changes())
    pending = (n for n in numbers if n not in seen)
    exhausted = False
    try:
        with ds.dataset_appender(output_path) as append:
            if jobs > 1:
                with ThreadPoolExecutor(max_workers=jobs) as pool:
                    for record in pool.map(fetch_and_normalize, pending):
                        append(record)
                        seen.add(record.number)
                        manifest = replace(manifest, count=len(seen),
                                           project=record.project or manifest.project)
            else:
                for number in pending:
                    record = fetch_and_normalize(number)
                    append(record)
                    seen.add(record.number)
                    manifest = replace(manifest, count=len(seen),
                                       project=record.project or manifest.project)
        exhausted = True
    finally:
        manifest = replace(manifest, count=len(seen), complete=exhausted)
        ds.write_manifest(manifest, output_path)
    return manifest
