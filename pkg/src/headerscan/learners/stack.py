"""Stacked ensemble: base decision values feed a logistic meta-learner.

Meta-features are produced out-of-fold so the meta-learner never sees a
base decision value computed by a model that trained on that row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import (ModelSpec, check_training_inputs, derive_seed,
                   stratified_fold_ids, validate_spec)
from .linear import LogRegModel, train_logreg

__all__ = ["StackModel", "train_stack"]

_STACK_FOLDS = 5


@dataclass
class StackModel:
    spec: ModelSpec          # algorithm "stack"; hyperparameters empty
    base_models: list        # refit on all of X, in base_specs order
    meta: LogRegModel
    converged: bool = True
    schema_fingerprint: str | None = None

    def meta_features(self, X: np.ndarray) -> np.ndarray:
        cols = [m.decision_values(X) for m in self.base_models]
        return np.column_stack(cols)

    def probabilities(self, X: np.ndarray) -> np.ndarray:
        return self.meta.probabilities(self.meta_features(X))

    def decision_values(self, X: np.ndarray) -> np.ndarray:
        return self.probabilities(X) - 0.5

    def _params_doc(self) -> dict:
        from .bundle import model_to_doc

        return {
            "bases": [model_to_doc(m) for m in self.base_models],
            "meta": model_to_doc(self.meta),
        }

    @classmethod
    def _from_params(cls, doc, spec, converged, fingerprint):
        from .bundle import model_from_doc

        bases = [model_from_doc(d) for d in doc["bases"]]
        meta = model_from_doc(doc["meta"])
        return cls(spec, bases, meta, converged, fingerprint)


def train_stack(base_specs: list[ModelSpec], meta_spec: ModelSpec,
                X: np.ndarray, y: np.ndarray,
                schema_fingerprint: str | None = None) -> StackModel:
    from . import train  # dispatch table lives in the package root

    if len(base_specs) < 2:
        raise ValueError("stacking needs at least 2 base specs")
    if meta_spec.algorithm != "logreg":
        raise ValueError("meta-learner must be logreg")
    meta_spec = validate_spec(meta_spec)
    check_training_inputs(X, y)

    n = len(y)
    seed = derive_seed(meta_spec.seed, "stack", "folds")
    fold_of = stratified_fold_ids(y, _STACK_FOLDS, seed)
    meta_X = np.zeros((n, len(base_specs)))
    for fold in range(_STACK_FOLDS):
        holdout = fold_of == fold
        if not holdout.any():
            continue
        for b, spec in enumerate(base_specs):
            model = train(spec, X[~holdout], y[~holdout])
            meta_X[holdout, b] = model.decision_values(X[holdout])

    meta = train_logreg(meta_spec, meta_X, y)
    bases = [train(spec, X, y) for spec in base_specs]
    stack_spec = ModelSpec("stack", {}, meta_spec.seed)
    return StackModel(stack_spec, bases, meta, meta.converged, schema_fingerprint)
