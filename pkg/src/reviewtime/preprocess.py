"""Feature normalization and selection, fitted exclusively on training rows.

Inner validation for selection (and for hyperparameter grids, see
``regressors.grid_search``) uses a chronological last-20% holdout of the
training data: rows are assumed sorted by creation time, so random splits
would leak future information.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import EmptyTrainingSetError, UnsupportedEstimatorError


class NormalizerKind(str, Enum):
    NONE = "none"
    MINMAX = "minmax"
    ZSCORE = "zscore"


@dataclass(frozen=True)
class NormalizerSpec:
    kind: NormalizerKind
    low: np.ndarray | None = None    # per-feature min (MINMAX)
    span: np.ndarray | None = None   # per-feature max - min (MINMAX)
    mean: np.ndarray | None = None   # per-feature mean (ZSCORE)
    std: np.ndarray | None = None    # per-feature population std (ZSCORE)


@dataclass(frozen=True)
class SelectionResult:
    selected: tuple[str, ...]
    scores: tuple[tuple[int, float], ...]  # (cardinality, validation MAE) per step

    def __post_init__(self):
        if not self.selected:
            raise ValueError("selection must keep at least one feature")

    def to_json(self) -> dict:
        return {
            "selected": list(self.selected),
            "scores": [{"n_features": n, "validation_mae": m} for n, m in self.scores],
        }


def fit_normalizer(kind: NormalizerKind, X: np.ndarray) -> NormalizerSpec:
    if X.shape[0] == 0:
        raise EmptyTrainingSetError("cannot fit a normalizer on an empty training set")
    if kind is NormalizerKind.NONE:
        return NormalizerSpec(kind)
    if kind is NormalizerKind.MINMAX:
        low = X.min(axis=0)
        span = X.max(axis=0) - low
        return NormalizerSpec(kind, low=low, span=span)
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    return NormalizerSpec(kind, mean=mean, std=std)


def apply_normalizer(spec: NormalizerSpec, X: np.ndarray) -> np.ndarray:
    if spec.kind is NormalizerKind.NONE:
        return X
    if spec.kind is NormalizerKind.MINMAX:
        span = np.where(spec.span == 0, 1.0, spec.span)
        out = (X - spec.low) / span
        # constant training columns map to 0 everywhere
        return np.where(spec.span == 0, 0.0, out)
    std = np.where(spec.std == 0, 1.0, spec.std)
    out = (X - spec.mean) / std
    return np.where(spec.std == 0, 0.0, out)


def chronological_split(n: int, holdout_fraction: float = 0.2) -> tuple[slice, slice]:
    """Split [0, n) into a leading fit part and a trailing holdout part."""
    if n < 2:
        raise EmptyTrainingSetError("need at least 2 rows for a chronological split")
    holdout = max(1, int(n * holdout_fraction))
    holdout = min(holdout, n - 1)
    return slice(0, n - holdout), slice(n - holdout, n)


def _validation_mae(spec, X: np.ndarray, y: np.ndarray) -> float:
    from .regressors import fit

    fit_part, val_part = chronological_split(X.shape[0])
    model = fit(spec, X[fit_part], y[fit_part])
    pred = model.predict(X[val_part])
    return float(np.mean(np.abs(pred - y[val_part])))


def rfe_select(estimator_spec, X: np.ndarray, y: np.ndarray,
               feature_names: Sequence[str], min_features: int = 1) -> SelectionResult:
    """Recursive feature elimination driven by model importance.

    Removes the lowest-importance feature each round, scoring every
    cardinality on the chronological holdout; returns the best-scoring set
    (ties resolved toward fewer features).
    """
    from .regressors import fit, supports_importance

    if X.shape[0] == 0:
        raise EmptyTrainingSetError("empty training set")
    if not supports_importance(estimator_spec.algorithm):
        raise UnsupportedEstimatorError(
            f"{estimator_spec.algorithm.value} exposes no per-feature importance; "
            "use sequential selection instead"
        )
    names = list(feature_names)
    current = list(range(len(names)))
    steps: list[tuple[int, float]] = []
    best_sets: dict[int, list[int]] = {}
    fit_part, _ = chronological_split(X.shape[0])
    while len(current) >= max(1, min_features):
        cols = np.array(current)
        steps.append((len(current), _validation_mae(estimator_spec, X[:, cols], y)))
        best_sets[len(current)] = list(current)
        if len(current) == max(1, min_features):
            break
        model = fit(estimator_spec, X[fit_part][:, cols], y[fit_part])
        importance = model.importance
        weakest = int(np.argmin(importance))
        current.pop(weakest)
    best_n, _ = min(steps, key=lambda s: (s[1], s[0]))
    selected = tuple(names[i] for i in best_sets[best_n])
    return SelectionResult(selected=selected, scores=tuple(steps))


def sequential_forward_select(estimator_spec, X: np.ndarray, y: np.ndarray,
                              feature_names: Sequence[str],
                              max_features: int | None = None,
                              min_relative_improvement: float = 0.1,
                              ) -> SelectionResult:
    """Greedy forward selection on chronological-holdout MAE.

    Picking the best of many candidates is biased toward spurious holdout
    gains, so an addition must beat the current score by the relative margin
    to count as an improvement; otherwise (or at ``max_features``) selection
    stops.  Candidate ties go to canonical order.
    """
    if X.shape[0] == 0:
        raise EmptyTrainingSetError("empty training set")
    names = list(feature_names)
    limit = max_features if max_features is not None else len(names)
    chosen: list[int] = []
    remaining = list(range(len(names)))
    best_mae = np.inf
    steps: list[tuple[int, float]] = []
    while remaining and len(chosen) < limit:
        candidate_scores = []
        for j in remaining:
            cols = np.array(chosen + [j])
            candidate_scores.append((_validation_mae(estimator_spec, X[:, cols], y), j))
        mae, j = min(candidate_scores, key=lambda s: (s[0], s[1]))
        if np.isfinite(best_mae) and mae >= best_mae * (1.0 - min_relative_improvement):
            break
        best_mae = mae
        chosen.append(j)
        remaining.remove(j)
        steps.append((len(chosen), mae))
    selected = tuple(names[i] for i in sorted(chosen))
    return SelectionResult(selected=selected, scores=tuple(steps))
