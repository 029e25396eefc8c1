"""Versioned JSON persistence for trained models.

A saved document carries the spec, feature ordering, importance, and enough
fitted state to reconstruct predictions exactly; loading rebuilds a
TrainedModel whose outputs are bit-identical to the original's.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import SchemaError
from .base import Algorithm, RegressorSpec, TrainedModel
from .tree import RegressionTree

MODEL_SCHEMA_VERSION = "1"

_LINEAR = (Algorithm.LR, Algorithm.LaR, Algorithm.RR, Algorithm.BLaR)


def _tree_to_doc(tree: RegressionTree) -> dict:
    return {
        "feature": list(tree.feature),
        "threshold": list(tree.threshold),
        "left": list(tree.left),
        "right": list(tree.right),
        "value": list(tree.value),
    }


def _tree_from_doc(doc: dict) -> RegressionTree:
    tree = RegressionTree()
    tree.feature = [int(v) for v in doc["feature"]]
    tree.threshold = [float(v) for v in doc["threshold"]]
    tree.left = [int(v) for v in doc["left"]]
    tree.right = [int(v) for v in doc["right"]]
    tree.value = [float(v) for v in doc["value"]]
    return tree


def _state_to_doc(algorithm: Algorithm, state: dict) -> dict:
    if algorithm in _LINEAR:
        return {"coef": state["coef"].tolist(), "intercept": state["intercept"]}
    if algorithm is Algorithm.SVM:
        return {"w": state["w"].tolist(), "b": state["b"],
                "y_std": state["y_std"], "y_mean": state["y_mean"]}
    if algorithm is Algorithm.KNN:
        return {"k": state["k"], "train_X": state["train_X"].tolist(),
                "train_y": state["train_y"].tolist()}
    if algorithm is Algorithm.DT:
        return {"tree": _tree_to_doc(state["tree"])}
    if algorithm is Algorithm.RF:
        return {"trees": [_tree_to_doc(t) for t in state["trees"]]}
    if algorithm is Algorithm.AdaDT:
        return {"trees": [_tree_to_doc(t) for t in state["trees"]],
                "weights": np.asarray(state["weights"]).tolist()}
    if algorithm is Algorithm.GB:
        return {"trees": [_tree_to_doc(t) for t in state["trees"]],
                "base": state["base"],
                "learning_rate": state["learning_rate"]}
    if algorithm is Algorithm.NN:
        return {key: value.tolist() for key, value in state["params"].items()}
    raise SchemaError(f"cannot serialize algorithm {algorithm}")


def _predictor_from_doc(algorithm: Algorithm, doc: dict):
    if algorithm in _LINEAR:
        coef = np.asarray(doc["coef"])
        intercept = float(doc["intercept"])
        return lambda X: X @ coef + intercept
    if algorithm is Algorithm.SVM:
        w = np.asarray(doc["w"])
        b = float(doc["b"])
        y_std = float(doc["y_std"])
        y_mean = float(doc["y_mean"])
        return lambda X: (X @ w + b) * y_std + y_mean
    if algorithm is Algorithm.KNN:
        train_X = np.asarray(doc["train_X"])
        train_y = np.asarray(doc["train_y"])
        k = int(doc["k"])

        def predict(Q: np.ndarray) -> np.ndarray:
            d2 = ((Q[:, None, :] - train_X[None, :, :]) ** 2).sum(axis=2)
            out = np.empty(Q.shape[0])
            for i in range(Q.shape[0]):
                order = np.lexsort((np.arange(train_X.shape[0]), d2[i]))
                out[i] = train_y[order[:k]].mean()
            return out

        return predict
    if algorithm is Algorithm.DT:
        tree = _tree_from_doc(doc["tree"])
        return tree.predict
    if algorithm is Algorithm.RF:
        trees = [_tree_from_doc(d) for d in doc["trees"]]

        def predict(Q: np.ndarray) -> np.ndarray:
            preds = np.zeros(Q.shape[0])
            for tree in trees:
                preds += tree.predict(Q)
            return preds / len(trees)

        return predict
    if algorithm is Algorithm.AdaDT:
        trees = [_tree_from_doc(d) for d in doc["trees"]]
        weights = np.asarray(doc["weights"])

        def predict(Q: np.ndarray) -> np.ndarray:
            preds = np.column_stack([tree.predict(Q) for tree in trees])
            if preds.shape[1] == 1:
                return preds[:, 0]
            order = np.argsort(preds, axis=1)
            cdf = np.cumsum(weights[order], axis=1)
            half = 0.5 * cdf[:, -1]
            pick = (cdf >= half[:, None]).argmax(axis=1)
            rows = np.arange(Q.shape[0])
            return preds[rows, order[rows, pick]]

        return predict
    if algorithm is Algorithm.GB:
        trees = [_tree_from_doc(d) for d in doc["trees"]]
        base = float(doc["base"])
        learning_rate = float(doc["learning_rate"])

        def predict(Q: np.ndarray) -> np.ndarray:
            preds = np.full(Q.shape[0], base)
            for tree in trees:
                preds += learning_rate * tree.predict(Q)
            return preds

        return predict
    if algorithm is Algorithm.NN:
        from .mlp import forward

        params = {key: np.asarray(value) for key, value in doc.items()}
        return lambda X: forward(params, X)
    raise SchemaError(f"cannot deserialize algorithm {algorithm}")


def model_to_doc(model: TrainedModel) -> dict:
    return {
        "schema_version": MODEL_SCHEMA_VERSION,
        "algorithm": model.spec.algorithm.value,
        "hyperparameters": {k: v for k, v in model.spec.hyperparameters.items()},
        "seed": model.spec.seed,
        "feature_names": list(model.feature_names),
        "importance": None if model.importance is None
        else np.asarray(model.importance).tolist(),
        "flags": list(model.flags),
        "state": _state_to_doc(model.spec.algorithm, model.state),
    }


def model_from_doc(doc: dict) -> TrainedModel:
    if doc.get("schema_version") != MODEL_SCHEMA_VERSION:
        raise SchemaError(
            f"unsupported model schema version {doc.get('schema_version')!r}")
    algorithm = Algorithm(doc["algorithm"])
    spec = RegressorSpec(algorithm, dict(doc["hyperparameters"]), doc["seed"])
    importance = None if doc["importance"] is None else np.asarray(doc["importance"])
    return TrainedModel(
        spec,
        doc["feature_names"],
        _predictor_from_doc(algorithm, doc["state"]),
        importance=importance,
        flags=tuple(doc["flags"]),
    )


def save_model(model: TrainedModel, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(model_to_doc(model), sort_keys=True) + "\n",
                    encoding="utf-8")


def load_model(path: str | Path) -> TrainedModel:
    return model_from_doc(json.loads(Path(path).read_text(encoding="utf-8")))
