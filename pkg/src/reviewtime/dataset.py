"""Dataset persistence, the completion-time target, and training-data filters.

Records are stored as one JSON object per line (UTF-8) with a `manifest.json`
document next to the data file.  Filtering drops incomplete, reopened,
self-reviewed, too-short (<= min_hours) and too-long (> max_hours) reviews,
attributing each dropped record to the first matching rule.
"""

from __future__ import annotations

import json
from contextlib import contextmanager
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from .errors import NotCompletedError, SchemaError
from .gerrit import (
    DEFAULT_BOT_ACCOUNTS,
    ChangeRecord,
    ChangeStatus,
    FileDiff,
    ReviewMessage,
    is_bot_account,
)

SCHEMA_VERSION = "1"
MANIFEST_NAME = "manifest.json"


@dataclass(frozen=True)
class FilterPolicy:
    min_hours: float = 24.0
    max_hours: float = 504.0  # 3 weeks
    drop_reopened: bool = True
    drop_self_reviewed: bool = True

    def __post_init__(self):
        if not (0 <= self.min_hours < self.max_hours):
            raise ValueError("require 0 <= min_hours < max_hours")


@dataclass(frozen=True)
class FilterReport:
    kept: int = 0
    dropped_reopened: int = 0
    dropped_self: int = 0
    dropped_short: int = 0
    dropped_long: int = 0
    dropped_incomplete: int = 0

    @property
    def total(self) -> int:
        return (self.kept + self.dropped_reopened + self.dropped_self
                + self.dropped_short + self.dropped_long + self.dropped_incomplete)


@dataclass(frozen=True)
class DatasetManifest:
    project: str
    crawl_query: str
    created_at: datetime
    count: int
    schema_version: str = SCHEMA_VERSION
    complete: bool = True
    filter_policy: FilterPolicy | None = None
    segments_from_diff: bool = False


def completion_time_hours(record: ChangeRecord) -> float:
    """Elapsed hours from change creation to merge or abandonment."""
    if record.closed_at is None:
        raise NotCompletedError(f"change {record.number} has no closing timestamp")
    return (record.closed_at - record.created_at).total_seconds() / 3600.0


def is_self_reviewed(record: ChangeRecord,
                     bot_accounts: Sequence[str] = DEFAULT_BOT_ACCOUNTS) -> bool:
    """True when no message comes from a human other than the owner."""
    for msg in record.messages:
        if msg.author_id == record.owner_id:
            continue
        if msg.from_bot or is_bot_account(msg.author_name, bot_accounts):
            continue
        return False
    return True


def apply_filters(records: Sequence[ChangeRecord], policy: FilterPolicy,
                  bot_accounts: Sequence[str] = DEFAULT_BOT_ACCOUNTS,
                  ) -> tuple[list[ChangeRecord], FilterReport]:
    """Drop irrelevant records, counting each under its first matching rule."""
    kept: list[ChangeRecord] = []
    incomplete = reopened = self_reviewed = short = long_ = 0
    for record in records:
        if record.closed_at is None:
            incomplete += 1
            continue
        if policy.drop_reopened and record.reopened:
            reopened += 1
            continue
        if policy.drop_self_reviewed and is_self_reviewed(record, bot_accounts):
            self_reviewed += 1
            continue
        duration = completion_time_hours(record)
        if duration <= policy.min_hours:
            short += 1
            continue
        if duration > policy.max_hours:
            long_ += 1
            continue
        kept.append(record)
    report = FilterReport(
        kept=len(kept),
        dropped_reopened=reopened,
        dropped_self=self_reviewed,
        dropped_short=short,
        dropped_long=long_,
        dropped_incomplete=incomplete,
    )
    return kept, report


def sort_by_creation(records: Sequence[ChangeRecord]) -> list[ChangeRecord]:
    """Stable ascending sort by creation time, ties broken by change number."""
    return sorted(records, key=lambda r: (r.created_at, r.number))


# --- serialization ---

def _dt_to_str(dt: datetime | None) -> str | None:
    if dt is None:
        return None
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


def _dt_from_str(value: str | None) -> datetime | None:
    if value is None:
        return None
    return datetime.strptime(value, "%Y-%m-%dT%H:%M:%S.%fZ").replace(tzinfo=timezone.utc)


def record_to_json(record: ChangeRecord) -> dict:
    return {
        "change_id": record.change_id,
        "number": record.number,
        "project": record.project,
        "branch": record.branch,
        "status": record.status.value,
        "created_at": _dt_to_str(record.created_at),
        "closed_at": _dt_to_str(record.closed_at),
        "owner_id": record.owner_id,
        "owner_name": record.owner_name,
        "owner_tz_offset_minutes": record.owner_tz_offset_minutes,
        "subject": record.subject,
        "message_body": record.message_body,
        "files": [
            {
                "path": f.path,
                "lines_inserted": f.lines_inserted,
                "lines_deleted": f.lines_deleted,
                "segments": list(f.segments) if f.segments is not None else None,
            }
            for f in record.files
        ],
        "messages": [
            {
                "author_id": m.author_id,
                "author_name": m.author_name,
                "posted_at": _dt_to_str(m.posted_at),
                "text": m.text,
                "revision_number": m.revision_number,
                "from_bot": m.from_bot,
            }
            for m in record.messages
        ],
        "reopened": record.reopened,
        "insertions_total": record.insertions_total,
        "deletions_total": record.deletions_total,
        "tz_offset_missing": record.tz_offset_missing,
    }


def record_from_json(doc: dict) -> ChangeRecord:
    try:
        return ChangeRecord(
            change_id=doc["change_id"],
            number=doc["number"],
            project=doc["project"],
            branch=doc["branch"],
            status=ChangeStatus(doc["status"]),
            created_at=_dt_from_str(doc["created_at"]),
            closed_at=_dt_from_str(doc["closed_at"]),
            owner_id=doc["owner_id"],
            owner_name=doc["owner_name"],
            owner_tz_offset_minutes=doc["owner_tz_offset_minutes"],
            subject=doc["subject"],
            message_body=doc["message_body"],
            files=tuple(
                FileDiff(
                    path=f["path"],
                    lines_inserted=f["lines_inserted"],
                    lines_deleted=f["lines_deleted"],
                    segments=tuple(f["segments"]) if f.get("segments") is not None else None,
                )
                for f in doc["files"]
            ),
            messages=tuple(
                ReviewMessage(
                    author_id=m["author_id"],
                    author_name=m["author_name"],
                    posted_at=_dt_from_str(m["posted_at"]),
                    text=m["text"],
                    revision_number=m["revision_number"],
                    from_bot=m["from_bot"],
                )
                for m in doc["messages"]
            ),
            reopened=doc["reopened"],
            insertions_total=doc["insertions_total"],
            deletions_total=doc["deletions_total"],
            tz_offset_missing=doc.get("tz_offset_missing", False),
        )
    except KeyError as exc:
        raise SchemaError(f"record missing key {exc.args[0]!r}") from exc


def manifest_path(data_path: Path) -> Path:
    return Path(data_path).parent / MANIFEST_NAME


def write_manifest(manifest: DatasetManifest, data_path: str | Path) -> None:
    doc = {
        "project": manifest.project,
        "crawl_query": manifest.crawl_query,
        "created_at": _dt_to_str(manifest.created_at),
        "count": manifest.count,
        "schema_version": manifest.schema_version,
        "complete": manifest.complete,
        "filter_policy": asdict(manifest.filter_policy) if manifest.filter_policy else None,
        "segments_from_diff": manifest.segments_from_diff,
    }
    path = manifest_path(Path(data_path))
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def read_manifest(data_path: str | Path) -> DatasetManifest:
    path = manifest_path(Path(data_path))
    doc = json.loads(path.read_text(encoding="utf-8"))
    if doc["schema_version"] != SCHEMA_VERSION:
        raise SchemaError(
            f"unsupported dataset schema version {doc['schema_version']!r}"
        )
    policy = FilterPolicy(**doc["filter_policy"]) if doc.get("filter_policy") else None
    return DatasetManifest(
        project=doc["project"],
        crawl_query=doc["crawl_query"],
        created_at=_dt_from_str(doc["created_at"]),
        count=doc["count"],
        schema_version=doc["schema_version"],
        complete=doc["complete"],
        filter_policy=policy,
        segments_from_diff=doc.get("segments_from_diff", False),
    )


@contextmanager
def dataset_appender(path: str | Path):
    """Single-consumer append channel for a JSONL dataset file."""
    path = Path(path)
    with path.open("a", encoding="utf-8") as fh:
        def append(record: ChangeRecord) -> None:
            fh.write(json.dumps(record_to_json(record), sort_keys=True) + "\n")
            fh.flush()
        yield append


def existing_change_numbers(path: str | Path) -> set[int]:
    path = Path(path)
    if not path.exists():
        return set()
    numbers: set[int] = set()
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                numbers.add(json.loads(line)["number"])
    return numbers


def write_dataset(records: Iterable[ChangeRecord], path: str | Path, *,
                  project: str = "", query: str = "", complete: bool = True,
                  filter_policy: FilterPolicy | None = None,
                  segments_from_diff: bool = False) -> DatasetManifest:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    first_project = project
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record_to_json(record), sort_keys=True) + "\n")
            count += 1
            if not first_project:
                first_project = record.project
    manifest = DatasetManifest(
        project=first_project,
        crawl_query=query,
        created_at=datetime.now(timezone.utc),
        count=count,
        complete=complete,
        filter_policy=filter_policy,
        segments_from_diff=segments_from_diff,
    )
    write_manifest(manifest, path)
    return manifest


def read_dataset(path: str | Path) -> tuple[list[ChangeRecord], DatasetManifest]:
    path = Path(path)
    records: list[ChangeRecord] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"corrupted dataset line {lineno}: {exc}") from exc
            records.append(record_from_json(doc))
    manifest = read_manifest(path)
    return records, manifest
