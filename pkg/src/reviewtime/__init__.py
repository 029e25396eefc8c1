"""Predict code review completion time from Gerrit review histories."""

__version__ = "0.1.0"

from .dataset import FilterPolicy, FilterReport, apply_filters, completion_time_hours
from .features import FEATURE_NAMES, FeatureMatrix, FeatureVector
from .gerrit import ChangeRecord, ChangeStatus, CrawlConfig

__all__ = [
    "ChangeRecord",
    "ChangeStatus",
    "CrawlConfig",
    "FEATURE_NAMES",
    "FeatureMatrix",
    "FeatureVector",
    "FilterPolicy",
    "FilterReport",
    "apply_filters",
    "completion_time_hours",
    "__version__",
]
