"""Logistic regression and linear SVM trained by gradient methods."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import ModelSpec, check_training_inputs, rng_for

__all__ = ["LogRegModel", "LinearSVMModel", "train_logreg", "train_linear_svm"]


def sigmoid(z: np.ndarray) -> np.ndarray:
    # tanh form is stable for large |z|
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass
class LogRegModel:
    spec: ModelSpec
    weights: np.ndarray
    bias: float
    converged: bool
    loss_history: np.ndarray
    schema_fingerprint: str | None = None

    def decision_values(self, X: np.ndarray) -> np.ndarray:
        return self.probabilities(X) - 0.5

    def probabilities(self, X: np.ndarray) -> np.ndarray:
        return sigmoid(X @ self.weights + self.bias)

    def _params_doc(self) -> dict:
        from .bundle import encode_array

        return {
            "weights": encode_array(self.weights),
            "bias": self.bias,
            "loss_final": float(self.loss_history[-1]) if len(self.loss_history) else 0.0,
        }

    @classmethod
    def _from_params(cls, doc, spec, converged, fingerprint):
        from .bundle import decode_array

        return cls(
            spec=spec,
            weights=decode_array(doc["weights"]),
            bias=float(doc["bias"]),
            converged=converged,
            loss_history=np.array([doc.get("loss_final", 0.0)]),
            schema_fingerprint=fingerprint,
        )


def _logistic_loss(z: np.ndarray, y: np.ndarray) -> float:
    # mean of softplus(z) - y*z, stable for any magnitude
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def train_logreg(spec: ModelSpec, X: np.ndarray, y: np.ndarray,
                 schema_fingerprint: str | None = None) -> LogRegModel:
    """Full-batch gradient descent on mean cross-entropy plus (lam/2)||w||^2.

    The default step size 1/L uses the Lipschitz bound
    L = ||X||_F^2 / (4n) + lam, which guarantees the recorded loss never
    increases. Stops when the gradient infinity norm drops below tol.
    """
    check_training_inputs(X, y)
    hp = spec.hyperparameters
    lam, tol, max_epochs = hp["lam"], hp["tol"], hp["max_epochs"]
    n, d = X.shape
    lr = hp["lr"]
    if lr is None:
        lr = 1.0 / (float(np.sum(X * X)) / (4.0 * n) + lam + 1e-12)

    w = np.zeros(d)
    b = 0.0
    yf = y.astype(float)
    history = []
    converged = False
    for _ in range(max_epochs):
        z = X @ w + b
        history.append(_logistic_loss(z, yf) + 0.5 * lam * float(w @ w))
        p = sigmoid(z)
        gw = X.T @ (p - yf) / n + lam * w
        gb = float(np.mean(p - yf))
        if max(float(np.max(np.abs(gw))) if d else 0.0, abs(gb)) < tol:
            converged = True
            break
        w -= lr * gw
        b -= lr * gb
    return LogRegModel(spec, w, b, converged, np.array(history), schema_fingerprint)


@dataclass
class LinearSVMModel:
    spec: ModelSpec
    weights: np.ndarray
    bias: float
    converged: bool
    loss_history: np.ndarray
    schema_fingerprint: str | None = None

    def decision_values(self, X: np.ndarray) -> np.ndarray:
        return X @ self.weights + self.bias

    def _params_doc(self) -> dict:
        from .bundle import encode_array

        return {
            "weights": encode_array(self.weights),
            "bias": self.bias,
            "loss_final": float(self.loss_history[-1]) if len(self.loss_history) else 0.0,
        }

    @classmethod
    def _from_params(cls, doc, spec, converged, fingerprint):
        from .bundle import decode_array

        return cls(
            spec=spec,
            weights=decode_array(doc["weights"]),
            bias=float(doc["bias"]),
            converged=converged,
            loss_history=np.array([doc.get("loss_final", 0.0)]),
            schema_fingerprint=fingerprint,
        )


def svm_objective(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, C: float) -> float:
    margins = (2.0 * y - 1.0) * (X @ w + b)
    hinge = np.maximum(0.0, 1.0 - margins)
    return float(np.mean(hinge) + (w @ w) / (2.0 * C))


def train_linear_svm(spec: ModelSpec, X: np.ndarray, y: np.ndarray,
                     schema_fingerprint: str | None = None) -> LinearSVMModel:
    """Per-sample subgradient descent on the hinge objective
    mean(hinge) + ||w||^2 / (2C) with step 1/(lam*t), lam = 1/C.

    Samples are visited in a freshly shuffled order each epoch; the
    recorded history holds the per-epoch average of the stochastic
    objective seen at each step.
    """
    check_training_inputs(X, y)
    hp = spec.hyperparameters
    C, epochs = hp["C"], hp["epochs"]
    lam = 1.0 / C
    n, d = X.shape
    ys = 2.0 * y.astype(float) - 1.0
    rng = rng_for(spec.seed, "linear_svm", "shuffle")

    w = np.zeros(d)
    b = 0.0
    t = 0
    history = []
    for _ in range(epochs):
        order = rng.permutation(n)
        epoch_sum = 0.0
        for i in order:
            t += 1
            step = 1.0 / (lam * t)
            margin = ys[i] * (float(X[i] @ w) + b)
            epoch_sum += max(0.0, 1.0 - margin) + 0.5 * lam * float(w @ w)
            w *= 1.0 - step * lam
            if margin < 1.0:
                w += step * ys[i] * X[i]
                b += step * ys[i]
        history.append(epoch_sum / n)
    return LinearSVMModel(spec, w, b, True, np.array(history), schema_fingerprint)
