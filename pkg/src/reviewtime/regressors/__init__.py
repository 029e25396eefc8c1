"""The eleven regression algorithms behind a uniform fit/predict contract."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .base import (
    ALGORITHM_PARAMS,
    DEFAULT_GRIDS,
    Algorithm,
    HyperGrid,
    RegressorSpec,
    TrainedModel,
    grid_search,
    is_deterministic,
    supports_importance,
)
from .ensemble import fit_adaboost, fit_gradient_boosting, fit_random_forest
from .linear import fit_bayesian_ridge, fit_lasso, fit_linear, fit_ridge
from .mlp import fit_mlp
from .neighbors import fit_knn, fit_svr
from .tree import RegressionTree, fit_decision_tree

_FITTERS = {
    Algorithm.LR: fit_linear,
    Algorithm.LaR: fit_lasso,
    Algorithm.RR: fit_ridge,
    Algorithm.BLaR: fit_bayesian_ridge,
    Algorithm.SVM: fit_svr,
    Algorithm.KNN: fit_knn,
    Algorithm.DT: fit_decision_tree,
    Algorithm.NN: fit_mlp,
    Algorithm.RF: fit_random_forest,
    Algorithm.AdaDT: fit_adaboost,
    Algorithm.GB: fit_gradient_boosting,
}


def fit(spec: RegressorSpec, X: np.ndarray, y: np.ndarray,
        feature_names: Sequence[str] | None = None) -> TrainedModel:
    X = np.asarray(X, dtype=float)
    if feature_names is None:
        feature_names = tuple(f"f{i}" for i in range(X.shape[1]))
    return _FITTERS[Algorithm(spec.algorithm)](spec, X, y, tuple(feature_names))


def predict(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    return model.predict(X)


__all__ = [
    "ALGORITHM_PARAMS",
    "DEFAULT_GRIDS",
    "Algorithm",
    "HyperGrid",
    "RegressionTree",
    "RegressorSpec",
    "TrainedModel",
    "fit",
    "grid_search",
    "is_deterministic",
    "predict",
    "supports_importance",
]
