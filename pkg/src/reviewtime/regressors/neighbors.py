"""k-nearest-neighbor regression and linear support-vector regression."""

from __future__ import annotations

import numpy as np

from .base import RegressorSpec, TrainedModel, check_training_inputs


def fit_knn(spec: RegressorSpec, X: np.ndarray, y: np.ndarray,
            feature_names) -> TrainedModel:
    """Brute-force Euclidean kNN; uniform mean of the k nearest targets.

    Distance ties are broken by training-row index, so predictions are
    independent of any floating-point sort instability.
    """
    X, y = check_training_inputs(X, y)
    k = min(int(spec.hyperparameters["k"]), X.shape[0])
    train_X = X.copy()
    train_y = y.copy()

    def predict_raw(Q: np.ndarray) -> np.ndarray:
        d2 = ((Q[:, None, :] - train_X[None, :, :]) ** 2).sum(axis=2)
        out = np.empty(Q.shape[0])
        for i in range(Q.shape[0]):
            order = np.lexsort((np.arange(train_X.shape[0]), d2[i]))
            out[i] = train_y[order[:k]].mean()
        return out

    return TrainedModel(spec, feature_names, predict_raw,
                        state={"k": k, "train_X": train_X, "train_y": train_y})


def fit_svr(spec: RegressorSpec, X: np.ndarray, y: np.ndarray,
            feature_names) -> TrainedModel:
    """Linear epsilon-insensitive SVR by averaged full-batch subgradient descent.

    Targets are standardized internally so the epsilon tube and the C grid
    keep their meaning across datasets; the regularization strength is
    1/(C*n) in the mean-loss objective with a Pegasos step schedule for the
    weights.  Returned parameters average the second half of the iterates.
    Inputs are assumed normalized (the pipeline enforces it for this learner).
    """
    X, y = check_training_inputs(X, y)
    C = float(spec.hyperparameters["C"])
    epsilon = float(spec.hyperparameters["epsilon"])
    epochs = int(spec.hyperparameters["epochs"])
    n, p = X.shape
    y_mean = float(y.mean())
    y_std = float(y.std()) or 1.0
    target = (y - y_mean) / y_std
    lam = 1.0 / (C * n)
    w = np.zeros(p)
    b = 0.0
    w_sum = np.zeros(p)
    b_sum = 0.0
    averaged = 0
    radius = 1.0 / np.sqrt(lam)  # the optimum lies within this ball
    for t in range(epochs):
        residual = target - (X @ w + b)
        sign = np.sign(residual) * (np.abs(residual) > epsilon)
        step_w = 1.0 / (lam * (t + 1))
        w = (1.0 - 1.0 / (t + 1)) * w + step_w * (sign @ X) / n
        norm = np.linalg.norm(w)
        if norm > radius:
            w *= radius / norm
        b += sign.mean() / (t + 1) ** 0.5
        if t >= epochs // 2:
            w_sum += w
            b_sum += b
            averaged += 1
    w = w_sum / averaged
    b = b_sum / averaged

    def predict_raw(Q: np.ndarray) -> np.ndarray:
        return (Q @ w + b) * y_std + y_mean

    return TrainedModel(spec, feature_names, predict_raw,
                        importance=np.abs(w),
                        state={"coef": w * y_std,
                               "intercept": b * y_std + y_mean,
                               "w": w, "b": b, "y_std": y_std, "y_mean": y_mean})
