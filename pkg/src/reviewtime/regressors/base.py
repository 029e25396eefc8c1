"""Uniform fit/predict contract for the eleven regression algorithms.

All randomness flows from ``RegressorSpec.seed``; identical (spec, data)
always yields bit-identical predictions.  Predictions are clipped below at 0
since the target is a duration in hours.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping, Sequence

import numpy as np

from ..errors import (
    AllPointsFailedError,
    EmptyTrainingSetError,
    FeatureMismatchError,
)


class Algorithm(str, Enum):
    LR = "LR"
    LaR = "LaR"
    RR = "RR"
    BLaR = "BLaR"
    SVM = "SVM"
    KNN = "KNN"
    DT = "DT"
    NN = "NN"
    RF = "RF"
    AdaDT = "AdaDT"
    GB = "GB"


# hyperparameter names accepted per algorithm, with defaults
ALGORITHM_PARAMS: dict[Algorithm, dict[str, object]] = {
    Algorithm.LR: {},
    Algorithm.LaR: {"alpha": 0.01},
    Algorithm.RR: {"alpha": 1.0},
    Algorithm.BLaR: {"max_iter": 300},
    Algorithm.SVM: {"C": 1.0, "epsilon": 0.1, "epochs": 500},
    Algorithm.KNN: {"k": 5},
    Algorithm.DT: {"max_depth": None, "min_samples_leaf": 1},
    Algorithm.NN: {"hidden_units": 16, "epochs": 100, "learning_rate": 0.01,
                   "batch_size": 32},
    Algorithm.RF: {"n_trees": 100, "min_samples_leaf": 1},
    Algorithm.AdaDT: {"rounds": 50, "max_depth": 4},
    Algorithm.GB: {"rounds": 100, "learning_rate": 0.1, "max_depth": 3},
}

DEFAULT_GRIDS: dict[Algorithm, dict[str, list]] = {
    Algorithm.LR: {},
    Algorithm.LaR: {"alpha": [0.001, 0.01, 0.1, 1.0]},
    Algorithm.RR: {"alpha": [0.1, 1.0, 10.0]},
    Algorithm.BLaR: {},
    Algorithm.SVM: {"C": [0.1, 1.0, 10.0], "epsilon": [0.01, 0.1]},
    Algorithm.KNN: {"k": [1, 3, 5, 10, 20]},
    Algorithm.DT: {"max_depth": [4, 8, 16, None], "min_samples_leaf": [1, 5, 20]},
    Algorithm.RF: {"n_trees": [100, 300]},
    Algorithm.AdaDT: {"rounds": [50, 100]},
    Algorithm.GB: {"learning_rate": [0.05, 0.1], "rounds": [100, 300]},
    Algorithm.NN: {"hidden_units": [16, 64], "epochs": [100]},
}

# algorithms whose fit involves no randomness: one run represents all repeats
DETERMINISTIC_ALGORITHMS = frozenset({
    Algorithm.LR, Algorithm.LaR, Algorithm.RR, Algorithm.BLaR,
    Algorithm.SVM, Algorithm.KNN, Algorithm.DT, Algorithm.GB,
})

# algorithms exposing a per-feature importance vector after fitting
IMPORTANCE_ALGORITHMS = frozenset({
    Algorithm.LR, Algorithm.LaR, Algorithm.RR, Algorithm.BLaR, Algorithm.SVM,
    Algorithm.DT, Algorithm.RF, Algorithm.AdaDT, Algorithm.GB,
})


@dataclass(frozen=True)
class RegressorSpec:
    algorithm: Algorithm
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        algorithm = Algorithm(self.algorithm)
        object.__setattr__(self, "algorithm", algorithm)
        allowed = ALGORITHM_PARAMS[algorithm]
        unknown = set(self.hyperparameters) - set(allowed)
        if unknown:
            raise ValueError(
                f"unknown hyperparameters for {algorithm.value}: {sorted(unknown)}"
            )
        merged = {**allowed, **self.hyperparameters}
        object.__setattr__(self, "hyperparameters", merged)

    def with_seed(self, seed: int) -> "RegressorSpec":
        return RegressorSpec(self.algorithm, dict(self.hyperparameters), seed)


@dataclass(frozen=True)
class HyperGrid:
    algorithm: Algorithm
    values: dict[str, list]

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        for name, candidates in self.values.items():
            if name not in ALGORITHM_PARAMS[self.algorithm]:
                raise ValueError(
                    f"unknown hyperparameter {name!r} for {self.algorithm.value}"
                )
            if not candidates:
                raise ValueError(f"empty candidate list for {name!r}")

    def points(self) -> list[dict]:
        if not self.values:
            return [{}]
        names = list(self.values)
        combos = itertools.product(*(self.values[n] for n in names))
        return [dict(zip(names, combo)) for combo in combos]

    @classmethod
    def default(cls, algorithm: Algorithm) -> "HyperGrid":
        algorithm = Algorithm(algorithm)
        return cls(algorithm, {k: list(v) for k, v in DEFAULT_GRIDS[algorithm].items()})


class TrainedModel:
    """A fitted predictor with the feature ordering used at fit time."""

    def __init__(self, spec: RegressorSpec, feature_names: Sequence[str],
                 predict_raw: Callable[[np.ndarray], np.ndarray],
                 importance: np.ndarray | None = None,
                 flags: tuple[str, ...] = (),
                 state: Mapping | None = None):
        self.spec = spec
        self.feature_names = tuple(feature_names)
        self._predict_raw = predict_raw
        self.importance = importance
        self.flags = flags
        self.state = dict(state or {})

    def predict(self, X: np.ndarray, clip: bool = True) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(self.feature_names):
            raise FeatureMismatchError(
                f"expected {len(self.feature_names)} features, got "
                f"{X.shape[1] if X.ndim == 2 else 'non-matrix input'}"
            )
        pred = np.asarray(self._predict_raw(X), dtype=float)
        if clip:
            pred = np.maximum(pred, 0.0)
        return pred


def supports_importance(algorithm: Algorithm) -> bool:
    return Algorithm(algorithm) in IMPORTANCE_ALGORITHMS


def is_deterministic(algorithm: Algorithm) -> bool:
    return Algorithm(algorithm) in DETERMINISTIC_ALGORITHMS


def check_training_inputs(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be a 2-d array")
    if X.shape[0] != y.shape[0]:
        raise ValueError("X and y row counts differ")
    if X.shape[0] < 2:
        raise EmptyTrainingSetError("need at least 2 training rows")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ValueError("training data must be finite")
    return X, y


def grid_search(algorithm: Algorithm, grid: HyperGrid, X: np.ndarray,
                y: np.ndarray, seed: int = 0) -> RegressorSpec:
    """Pick the grid point with the lowest chronological-holdout MAE.

    Rows are assumed chronologically sorted; each point fits on the leading
    80% and scores on the trailing 20%.  Ties keep the first point in grid
    iteration order; points whose fit raises are skipped.
    """
    from . import fit
    from ..preprocess import chronological_split
    from ..errors import EmptyTrainingSetError

    algorithm = Algorithm(algorithm)
    if grid.algorithm is not algorithm:
        raise ValueError("grid is for a different algorithm")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    try:
        fit_part, val_part = chronological_split(X.shape[0])
    except EmptyTrainingSetError as exc:
        raise AllPointsFailedError(f"cannot split training data: {exc}") from exc
    best: tuple[float, int, RegressorSpec] | None = None
    failures: list[str] = []
    for order, params in enumerate(grid.points()):
        spec = RegressorSpec(algorithm, params, seed)
        try:
            model = fit(spec, X[fit_part], y[fit_part])
            pred = model.predict(X[val_part])
        except Exception as exc:  # noqa: BLE001 - per-point failures are skipped
            failures.append(f"{params}: {exc}")
            continue
        mae = float(np.mean(np.abs(pred - y[val_part])))
        if best is None or mae < best[0]:
            best = (mae, order, spec)
    if best is None:
        raise AllPointsFailedError(
            f"every grid point failed for {algorithm.value}: {failures}"
        )
    return best[2]
