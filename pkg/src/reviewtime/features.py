"""Extraction of the 50 socio-technical features for one change.

Features span six dimensions: date, collaboration, code, text, owner
experience and file history.  Extraction is pure: values depend only on the
change itself, the strictly-earlier completed history, and the interaction
graph snapshot taken at the change's creation time.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from . import collab
from .dataset import completion_time_hours, sort_by_creation
from .errors import EmptyInputError, SchemaError
from .gerrit import ChangeRecord, ChangeStatus

DIMENSIONS = ("date", "collaboration", "code", "text", "owner", "file_history")

_QUAD = ("min", "max", "avg", "std")

FEATURE_DIMENSIONS: dict[str, str] = {}


def _register(dimension: str, *names: str) -> tuple[str, ...]:
    for name in names:
        FEATURE_DIMENSIONS[name] = dimension
    return names

DATE_FEATURES = _register(
    "date",
    "days_of_the_weeks_of_date_created",
    "is_created_date_a_weekend",
    "author_timezone",
)
COLLABORATION_FEATURES = _register(
    "collaboration",
    "degree_centrality",
    "closeness_centrality",
    "betweenness_centrality",
    "eigenvector_centrality",
    "clustering_coefficient",
    "core_number",
)
CODE_FEATURES = _register(
    "code",
    "#lines_added",
    "#lines_deleted",
    "Code_churn",
    "#files",
    "#files_type",
    "#directory",
    "#segs_added",
    "#segs_deleted",
    "#segs_modify",
    "change_entropy",
)
TEXT_FEATURES = _register(
    "text",
    "subject_length",
    "subject_word_count",
    "msg_length",
    "msg_word_count",
    "is_non_fonctional",
    "is_perfective",
    "is_refactoring",
)
OWNER_FEATURES = _register(
    "owner",
    "#owner_prior_changes",
    "#prior_merged_changes",
    "#prior_abandoned_changes",
    "merge_ratio",
    "#prior_subsystem_changes",
    *(f"prior_code_reviews_duration_{s}" for s in _QUAD),
    "#prior_owner_subsystem_changes",
    "prior_owner_subsystem_changes_ratio",
    "#reviewed_changes_owner",
    "#owner_previous_message",
    "#owner_exchanged_messages",
    *(f"#owner_messages_avg_per_changes_{s}" for s in _QUAD),
)
FILE_HISTORY_FEATURES = _register(
    "file_history",
    *(f"files_changes_duration_{s}" for s in _QUAD),
    "#developers_file",
    "#prior_changes_files",
)

FEATURE_NAMES: tuple[str, ...] = (
    DATE_FEATURES + COLLABORATION_FEATURES + CODE_FEATURES
    + TEXT_FEATURES + OWNER_FEATURES + FILE_HISTORY_FEATURES
)
assert len(FEATURE_NAMES) == 50

DEFAULT_REFACTORING_KEYWORDS = (
    "refactor", "refactoring", "restructure", "cleanup", "clean up",
    "rename", "move code",
)
DEFAULT_PERFECTIVE_KEYWORDS = (
    "improve", "enhancement", "polish", "simplify", "optimize",
)
DEFAULT_NON_FUNCTIONAL_KEYWORDS = (
    "doc", "documentation", "typo", "license", "copyright", "comment",
    "format", "style",
)


@dataclass(frozen=True)
class KeywordPolicy:
    refactoring_keywords: tuple[str, ...] = DEFAULT_REFACTORING_KEYWORDS
    perfective_keywords: tuple[str, ...] = DEFAULT_PERFECTIVE_KEYWORDS
    non_functional_keywords: tuple[str, ...] = DEFAULT_NON_FUNCTIONAL_KEYWORDS

    def __post_init__(self):
        for name in ("refactoring_keywords", "perfective_keywords",
                     "non_functional_keywords"):
            terms = tuple(getattr(self, name))
            if not terms:
                raise ValueError(f"{name} must be non-empty")
            if any(t != t.lower() for t in terms):
                raise ValueError(f"{name} must be lowercase")
            object.__setattr__(self, name, terms)


@dataclass(frozen=True)
class FeatureVector:
    change_number: int
    created_at: datetime
    target_hours: float
    values: dict[str, float]

    def __post_init__(self):
        if tuple(self.values.keys()) != FEATURE_NAMES:
            raise ValueError("feature values must carry the 50 canonical names in order")
        for name, value in self.values.items():
            if not math.isfinite(value):
                raise ValueError(f"non-finite value for feature {name}")


@dataclass
class FeatureMatrix:
    feature_names: tuple[str, ...]
    X: np.ndarray          # shape (n, len(feature_names))
    y: np.ndarray          # target hours, shape (n,)
    change_numbers: np.ndarray
    created_at: list[datetime]

    @classmethod
    def from_vectors(cls, rows: Sequence[FeatureVector]) -> "FeatureMatrix":
        rows = sorted(rows, key=lambda r: (r.created_at, r.change_number))
        X = np.array([[r.values[name] for name in FEATURE_NAMES] for r in rows],
                     dtype=float).reshape(len(rows), len(FEATURE_NAMES))
        y = np.array([r.target_hours for r in rows], dtype=float)
        numbers = np.array([r.change_number for r in rows], dtype=int)
        created = [r.created_at for r in rows]
        return cls(FEATURE_NAMES, X, y, numbers, created)

    def __len__(self) -> int:
        return self.X.shape[0]

    def restrict(self, names: Sequence[str]) -> "FeatureMatrix":
        index = {n: i for i, n in enumerate(self.feature_names)}
        missing = [n for n in names if n not in index]
        if missing:
            raise KeyError(f"unknown features: {missing}")
        cols = [index[n] for n in names]
        return FeatureMatrix(tuple(names), self.X[:, cols], self.y,
                             self.change_numbers, self.created_at)

    def slice_rows(self, start: int, stop: int) -> "FeatureMatrix":
        return FeatureMatrix(self.feature_names, self.X[start:stop],
                             self.y[start:stop], self.change_numbers[start:stop],
                             self.created_at[start:stop])

    def to_csv(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["change_number", "created_at", "target_hours",
                             *self.feature_names])
            for i in range(len(self)):
                created = self.created_at[i].strftime("%Y-%m-%dT%H:%M:%S.%fZ")
                writer.writerow([int(self.change_numbers[i]), created,
                                 repr(float(self.y[i])),
                                 *[repr(float(v)) for v in self.X[i]]])

    @classmethod
    def from_csv(cls, path: str | Path) -> "FeatureMatrix":
        path = Path(path)
        with path.open("r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header[:3] != ["change_number", "created_at", "target_hours"]:
                raise SchemaError(f"unexpected feature CSV header in {path}")
            names = tuple(header[3:])
            numbers, created, ys, rows = [], [], [], []
            for row in reader:
                numbers.append(int(row[0]))
                created.append(datetime.strptime(row[1], "%Y-%m-%dT%H:%M:%S.%fZ")
                               .replace(tzinfo=timezone.utc))
                ys.append(float(row[2]))
                rows.append([float(v) for v in row[3:]])
        X = np.array(rows, dtype=float).reshape(len(rows), len(names))
        return cls(names, X, np.array(ys, dtype=float),
                   np.array(numbers, dtype=int), created)


def dimension_features(dimension: str) -> tuple[str, ...]:
    if dimension not in DIMENSIONS:
        raise KeyError(f"unknown dimension {dimension!r}")
    return tuple(n for n in FEATURE_NAMES if FEATURE_DIMENSIONS[n] == dimension)


def _quadruple(values: Sequence[float]) -> tuple[float, float, float, float]:
    """(min, max, mean, population std); all zeros on empty support."""
    if not values:
        return 0.0, 0.0, 0.0, 0.0
    arr = np.asarray(values, dtype=float)
    return float(arr.min()), float(arr.max()), float(arr.mean()), float(arr.std())


def subsystem_of(path: str) -> str:
    return path.split("/", 1)[0]


def extract_date_features(record: ChangeRecord) -> dict[str, float]:
    local = record.created_at + timedelta(minutes=record.owner_tz_offset_minutes)
    day = local.weekday()  # Monday = 0
    return {
        "days_of_the_weeks_of_date_created": float(day),
        "is_created_date_a_weekend": 1.0 if day >= 5 else 0.0,
        "author_timezone": float(record.owner_tz_offset_minutes),
    }


def change_entropy(file_churns: Sequence[float]) -> float:
    """Normalized Shannon entropy of the churn distribution over files."""
    if len(file_churns) == 0:
        raise EmptyInputError("change_entropy needs at least one churn value")
    positive = [c for c in file_churns if c > 0]
    total = sum(positive)
    if total == 0 or len(positive) < 2:
        return 0.0
    entropy = 0.0
    for churn in positive:
        p = churn / total
        entropy -= p * math.log2(p)
    return entropy / math.log2(len(positive))


def _file_segments(f) -> tuple[int, int, int]:
    if f.segments is not None:
        return f.segments
    # no diff content: one segment per file, classified by its line counts
    if f.lines_inserted > 0 and f.lines_deleted > 0:
        return 0, 0, 1
    if f.lines_inserted > 0:
        return 1, 0, 0
    if f.lines_deleted > 0:
        return 0, 1, 0
    return 0, 0, 0


def extract_code_features(record: ChangeRecord) -> dict[str, float]:
    files = record.files
    added = sum(f.lines_inserted for f in files)
    deleted = sum(f.lines_deleted for f in files)
    extensions = {
        (f.path.rsplit("/", 1)[-1].rsplit(".", 1)[1]
         if "." in f.path.rsplit("/", 1)[-1] else "")
        for f in files
    }
    directories = {
        (f.path.rsplit("/", 1)[0] if "/" in f.path else ".")
        for f in files
    }
    segs = [_file_segments(f) for f in files]
    churns = [f.lines_inserted + f.lines_deleted for f in files]
    entropy = change_entropy(churns) if files else 0.0
    return {
        "#lines_added": float(added),
        "#lines_deleted": float(deleted),
        "Code_churn": float(added + deleted),
        "#files": float(len(files)),
        "#files_type": float(len(extensions)),
        "#directory": float(len(directories)),
        "#segs_added": float(sum(s[0] for s in segs)),
        "#segs_deleted": float(sum(s[1] for s in segs)),
        "#segs_modify": float(sum(s[2] for s in segs)),
        "change_entropy": entropy,
    }


def extract_text_features(record: ChangeRecord,
                          policy: KeywordPolicy = KeywordPolicy()) -> dict[str, float]:
    description = record.message_body.lower()

    def has_any(terms: Sequence[str]) -> float:
        return 1.0 if any(t in description for t in terms) else 0.0

    return {
        "subject_length": float(len(record.subject)),
        "subject_word_count": float(len(record.subject.split())),
        "msg_length": float(len(record.message_body)),
        "msg_word_count": float(len(record.message_body.split())),
        "is_non_fonctional": has_any(policy.non_functional_keywords),
        "is_perfective": has_any(policy.perfective_keywords),
        "is_refactoring": has_any(policy.refactoring_keywords),
    }


def _prior_completed(record: ChangeRecord,
                     history: Sequence[ChangeRecord]) -> list[ChangeRecord]:
    return [
        c for c in history
        if c.created_at < record.created_at and c.closed_at is not None
        and c.number != record.number
    ]


def _human_messages(change: ChangeRecord):
    return [m for m in change.messages if not m.from_bot]


def extract_owner_experience(record: ChangeRecord,
                             prior_history: Sequence[ChangeRecord]) -> dict[str, float]:
    prior = _prior_completed(record, prior_history)
    owner = record.owner_id
    own = [c for c in prior if c.owner_id == owner]
    merged = sum(1 for c in own if c.status is ChangeStatus.MERGED)
    abandoned = sum(1 for c in own if c.status is ChangeStatus.ABANDONED)

    subsystems = {subsystem_of(f.path) for f in record.files}

    def touches_subsystem(change: ChangeRecord) -> bool:
        return any(subsystem_of(f.path) in subsystems for f in change.files)

    subsystem_changes = [c for c in prior if touches_subsystem(c)] if subsystems else []
    own_subsystem = [c for c in subsystem_changes if c.owner_id == owner]

    durations = [completion_time_hours(c) for c in own]
    dur_quad = _quadruple(durations)

    reviewed = sum(
        1 for c in prior
        if c.owner_id != owner and any(m.author_id == owner for m in c.messages)
    )
    own_messages = sum(
        1 for c in own for m in _human_messages(c) if m.author_id == owner
    )
    exchanged_per_change = [len(_human_messages(c)) for c in own]
    msg_quad = _quadruple(exchanged_per_change)

    values = {
        "#owner_prior_changes": float(len(own)),
        "#prior_merged_changes": float(merged),
        "#prior_abandoned_changes": float(abandoned),
        "merge_ratio": merged / len(own) if own else 0.0,
        "#prior_subsystem_changes": float(len(subsystem_changes)),
        "#prior_owner_subsystem_changes": float(len(own_subsystem)),
        "prior_owner_subsystem_changes_ratio":
            len(own_subsystem) / len(own) if own else 0.0,
        "#reviewed_changes_owner": float(reviewed),
        "#owner_previous_message": float(own_messages),
        "#owner_exchanged_messages": float(sum(exchanged_per_change)),
    }
    for suffix, value in zip(_QUAD, dur_quad):
        values[f"prior_code_reviews_duration_{suffix}"] = value
    for suffix, value in zip(_QUAD, msg_quad):
        values[f"#owner_messages_avg_per_changes_{suffix}"] = value
    return {name: values[name] for name in OWNER_FEATURES}


def extract_file_history(record: ChangeRecord,
                         prior_history: Sequence[ChangeRecord]) -> dict[str, float]:
    prior = _prior_completed(record, prior_history)
    paths = {f.path for f in record.files}
    overlapping = [
        c for c in prior if any(f.path in paths for f in c.files)
    ] if paths else []
    quad = _quadruple([completion_time_hours(c) for c in overlapping])
    values = {f"files_changes_duration_{s}": v for s, v in zip(_QUAD, quad)}
    values["#developers_file"] = float(len({c.owner_id for c in overlapping}))
    values["#prior_changes_files"] = float(len(overlapping))
    return {name: values[name] for name in FILE_HISTORY_FEATURES}


def extract_all(record: ChangeRecord, history: Sequence[ChangeRecord],
                graph: collab.InteractionGraph,
                policy: KeywordPolicy = KeywordPolicy()) -> FeatureVector:
    """Assemble the full 50-value vector in canonical order."""
    prior = _prior_completed(record, history)
    cf = collab.collab_features(graph, record.owner_id)
    values: dict[str, float] = {}
    values.update(extract_date_features(record))
    values.update({
        "degree_centrality": cf.degree_centrality,
        "closeness_centrality": cf.closeness_centrality,
        "betweenness_centrality": cf.betweenness_centrality,
        "eigenvector_centrality": cf.eigenvector_centrality,
        "clustering_coefficient": cf.clustering_coefficient,
        "core_number": float(cf.core_number),
    })
    values.update(extract_code_features(record))
    values.update(extract_text_features(record, policy))
    values.update(extract_owner_experience(record, prior))
    values.update(extract_file_history(record, prior))
    ordered = {name: float(values[name]) for name in FEATURE_NAMES}
    return FeatureVector(
        change_number=record.number,
        created_at=record.created_at,
        target_hours=completion_time_hours(record),
        values=ordered,
    )


def featurize(records: Sequence[ChangeRecord],
              history: Sequence[ChangeRecord] | None = None,
              window_days: int = collab.DEFAULT_WINDOW_DAYS,
              policy: KeywordPolicy = KeywordPolicy()) -> FeatureMatrix:
    """Extract features for every completed record, chronologically sorted.

    ``history`` defaults to the records themselves; pass the unfiltered
    dataset so short/long/self-reviewed changes still count as experience.
    """
    history = list(history) if history is not None else list(records)
    ordered = sort_by_creation(records)
    vectors = []
    for record in ordered:
        if record.closed_at is None:
            continue
        graph = collab.build_graph(history, as_of=record.created_at,
                                   window_days=window_days)
        vectors.append(extract_all(record, history, graph, policy))
    return FeatureMatrix.from_vectors(vectors)
