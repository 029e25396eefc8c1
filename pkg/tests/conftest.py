"""Shared fixtures and record builders for the test suite."""

from __future__ import annotations

from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from reviewtime.features import FEATURE_NAMES, FeatureMatrix
from reviewtime.gerrit import ChangeRecord, ChangeStatus, FileDiff, ReviewMessage

BASE_TIME = datetime(2021, 4, 26, 10, 0, 0, tzinfo=timezone.utc)  # a Monday


def make_message(author_id: int, hours: float = 1.0, text: str = "LGTM",
                 name: str | None = None, from_bot: bool = False,
                 created: datetime = BASE_TIME) -> ReviewMessage:
    return ReviewMessage(
        author_id=author_id,
        author_name=name if name is not None else f"dev-{author_id}",
        posted_at=created + timedelta(hours=hours),
        text=text,
        revision_number=1,
        from_bot=from_bot,
    )


def make_record(number: int = 1, owner: int = 100,
                created: datetime = BASE_TIME,
                duration_hours: float | None = 48.0,
                status: ChangeStatus | None = None,
                files: tuple[FileDiff, ...] = (FileDiff("core/a.c", 10, 2),),
                messages: tuple[ReviewMessage, ...] | None = None,
                reopened: bool = False,
                subject: str = "Fix crash",
                message_body: str = "Fix crash\n\nDetails.",
                tz_offset: int = 0) -> ChangeRecord:
    if status is None:
        status = ChangeStatus.MERGED if duration_hours is not None else ChangeStatus.NEW
    closed = created + timedelta(hours=duration_hours) \
        if duration_hours is not None else None
    if messages is None:
        messages = (make_message(owner + 1, created=created),)
    return ChangeRecord(
        change_id=f"I{number:06d}",
        number=number,
        project="fixture/project",
        branch="main",
        status=status,
        created_at=created,
        closed_at=closed,
        owner_id=owner,
        owner_name=f"dev-{owner}",
        owner_tz_offset_minutes=tz_offset,
        subject=subject,
        message_body=message_body,
        files=files,
        messages=messages,
        reopened=reopened,
        insertions_total=sum(f.lines_inserted for f in files),
        deletions_total=sum(f.lines_deleted for f in files),
    )


def synthetic_matrix(n: int = 120, n_features: int = 50, seed: int = 0,
                     signal_col: int = 10, signal_scale: float = 30.0,
                     noise: float = 2.0, names=None) -> FeatureMatrix:
    """A planted-signal feature matrix with strictly increasing timestamps."""
    rng = np.random.default_rng(seed)
    names = tuple(names) if names is not None else FEATURE_NAMES[:n_features]
    X = rng.uniform(0.0, 1.0, size=(n, len(names)))
    y = 50.0 + signal_scale * X[:, signal_col % len(names)] \
        + rng.normal(0.0, noise, n)
    y = np.maximum(y, 1.0)
    base = datetime(2021, 1, 1, tzinfo=timezone.utc)
    created = [base + timedelta(hours=3 * i) for i in range(n)]
    return FeatureMatrix(names, X, y, np.arange(n), created)


@pytest.fixture(scope="session")
def fixture_corpus():
    from reviewtime.gerrit_fixture import generate_corpus

    return generate_corpus(25, seed=3)


@pytest.fixture()
def fixture_server(fixture_corpus):
    from reviewtime.gerrit_fixture import FixtureGerritServer

    with FixtureGerritServer(fixture_corpus) as server:
        yield server
