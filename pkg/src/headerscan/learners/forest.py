"""Random forest: bagged Gini trees with per-node feature subsets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import ModelSpec, check_training_inputs, derive_seed
from .tree import TreeArrays, apply_tree, build_tree, tree_from_doc, tree_to_doc

__all__ = ["RandomForestModel", "train_random_forest"]


@dataclass
class RandomForestModel:
    spec: ModelSpec
    trees: list[TreeArrays]
    tree_seeds: list[int]
    converged: bool = True
    schema_fingerprint: str | None = None

    def probabilities(self, X: np.ndarray) -> np.ndarray:
        acc = np.zeros(len(X))
        for tree in self.trees:
            acc += apply_tree(tree, X)
        return acc / len(self.trees)

    def decision_values(self, X: np.ndarray) -> np.ndarray:
        # mean leaf P(anomalous) - 0.5; ties at exactly 0 read anomalous
        return self.probabilities(X) - 0.5

    def _params_doc(self) -> dict:
        return {
            "trees": [tree_to_doc(t) for t in self.trees],
            "tree_seeds": self.tree_seeds,
        }

    @classmethod
    def _from_params(cls, doc, spec, converged, fingerprint):
        return cls(spec, [tree_from_doc(t) for t in doc["trees"]],
                   [int(s) for s in doc["tree_seeds"]], converged, fingerprint)


def train_random_forest(spec: ModelSpec, X: np.ndarray, y: np.ndarray,
                        schema_fingerprint: str | None = None) -> RandomForestModel:
    """Each tree gets its own generator seeded from (spec.seed, tree index);
    it draws the bootstrap rows first, then the per-node feature bags, so
    serial and parallel training agree."""
    check_training_inputs(X, y)
    hp = spec.hyperparameters
    n, d = X.shape
    if hp["max_features"] == "sqrt":
        mtry = max(1, int(np.sqrt(d)))
    else:
        mtry = d
    target = y.astype(np.float64)
    trees = []
    seeds = []
    for t in range(hp["n_trees"]):
        seed = derive_seed(spec.seed, "forest", t)
        seeds.append(seed)
        rng = np.random.default_rng(seed)
        rows = rng.integers(0, n, size=n)
        trees.append(build_tree(
            X[rows], target[rows], criterion="gini",
            max_depth=hp["max_depth"],
            min_samples_leaf=hp["min_samples_leaf"],
            max_features=mtry if mtry < d else None,
            rng=rng,
        ))
    return RandomForestModel(spec, trees, seeds, True, schema_fingerprint)
